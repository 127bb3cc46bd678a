#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "dadin/model.hpp"
#include "dadin/tensor.hpp"

namespace dadin {

inline constexpr double kProbabilityEpsilon = 1e-12;

// L = λ1·L_y + λ2·L_d† + λ3·(α·L_d⁰ + (1−α)·L_d¹)
struct LossWeights {
  double lambda1 = 1.0;
  double lambda2 = 1.0;
  double lambda3 = 1.0;
  double alpha = 0.5;

  void validate() const;
};

// How each intra-class loss is normalised: by its own branch size (1/ρ, 1/τ)
// or by the whole batch (1/n).
enum class IntraNormalizer { kBranch, kBatch };

struct LossBreakdown {
  double ctr = 0.0;      // L_y
  double global = 0.0;   // L_d†
  double intra0 = 0.0;   // L_d⁰
  double intra1 = 0.0;   // L_d¹
  double total = 0.0;
  std::size_t rho = 0;   // routed to class 1
  std::size_t tau = 0;   // routed to class 0
  std::size_t n = 0;
};

// Mean binary cross-entropy of click predictions. Empty input is a DegenerateInputError.
double ctr_loss(std::span<const double> probs, std::span<const double> labels);
Tensor ctr_loss(const Tensor& probs, std::span<const double> labels);

// Same form over domain labels (target = 1, source = 0).
double global_confusion_loss(std::span<const double> probs, std::span<const double> domains);
Tensor global_confusion_loss(const Tensor& probs, std::span<const double> domains);

struct IntraClassLosses {
  double class0 = 0.0;
  double class1 = 0.0;
};

// An empty branch contributes 0.
IntraClassLosses intra_class_losses(std::span<const double> probs0, std::span<const double> domains0,
                                    std::span<const double> probs1, std::span<const double> domains1);

// Numeric combination of the four components.
double total_loss(const LossBreakdown& parts, const LossWeights& weights);

struct Objective {
  Tensor total;
  LossBreakdown breakdown;
};

// Builds the differentiable objective for one forward pass. Terms whose
// weight is zero (or whose variant switch is off) are left out of the graph
// entirely, so their classifier parameters receive exactly zero gradient;
// their values are still reported in the breakdown. L_y only counts
// labelled instances.
Objective compute_objective(const ForwardOutputs& outputs, std::span<const Instance* const> batch,
                            const LossWeights& weights, const VariantConfig& variant,
                            IntraNormalizer normalizer = IntraNormalizer::kBranch);

}  // namespace dadin
