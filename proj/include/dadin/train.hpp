#pragma once

#include <cstddef>
#include <cstdint>
#include <iosfwd>
#include <optional>
#include <span>
#include <vector>

#include "dadin/loss.hpp"
#include "dadin/model.hpp"

namespace dadin {

enum class OptimizerKind { kSgd, kAdam };

struct OptimizerConfig {
  OptimizerKind kind = OptimizerKind::kAdam;
  double learning_rate = 1e-4;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
};

// θ ← θ − μ·∂L/∂θ for every parameter. Gradients must already be populated.
void sgd_step(ParamStore& params, double learning_rate);

struct AdamState {
  std::vector<std::vector<double>> m;
  std::vector<std::vector<double>> v;
  std::uint64_t step = 0;
};

// Bias-corrected Adam; moment buffers are created on the first call.
void adam_step(ParamStore& params, AdamState& state, const OptimizerConfig& config);

class Optimizer {
 public:
  explicit Optimizer(OptimizerConfig config) : config_(config) {}
  void step(ParamStore& params);
  const OptimizerConfig& config() const { return config_; }
  const AdamState& adam_state() const { return adam_; }

 private:
  OptimizerConfig config_;
  AdamState adam_;
};

// Rescales all gradients so their joint L2 norm is at most max_norm. Returns the norm before clipping.
double clip_grad_norm(ParamStore& params, double max_norm);

struct TrainConfig {
  std::size_t batch_size = 2000;
  std::size_t epochs = 10;
  // Evaluations without improvement tolerated before stopping.
  std::size_t patience = 5;
  std::size_t eval_every = 1;
  OptimizerConfig optimizer;
  double max_grad_norm = 0.0;  // 0 disables clipping
  IntraNormalizer intra_normalizer = IntraNormalizer::kBranch;

  void validate() const;
};

struct IterationRecord {
  std::size_t iteration = 0;
  std::size_t epoch = 0;
  LossBreakdown loss;
};

struct EvalRecord {
  std::size_t epoch = 0;
  std::size_t iteration = 0;
  double auc = 0.0;
  double logloss = 0.0;
};

struct TrainResult {
  std::vector<IterationRecord> iterations;
  std::vector<EvalRecord> evaluations;
  std::size_t epochs_run = 0;
  // Epoch whose parameters were returned; nullopt when no validation was possible.
  std::optional<std::size_t> best_epoch;
  double best_valid_auc = 0.0;
};

// Mini-batch training over the shuffled union of both domains. Parameters
// end at the best validation-AUC checkpoint when validation is possible,
// otherwise at the final iterate. rng drives shuffling and dropout.
TrainResult train(DadinModel& model, std::span<const Instance> train_set,
                  std::span<const Instance> valid_set, const TrainConfig& config,
                  const LossWeights& weights, Rng& rng);

// Evaluation-mode click predictions, in input order.
std::vector<double> predict(const DadinModel& model, std::span<const Instance> instances,
                            std::size_t batch_size = 4096);

// Evaluation-mode pass that keeps the intermediate states.
struct CollectedStates {
  std::size_t n = 0;
  std::size_t dim = 0;
  std::vector<double> y_hat;
  std::vector<double> d_hat;
  std::vector<double> h_spec;  // n × dim
  std::vector<double> h_da;
  std::vector<double> v_u, v_s, v_t;  // empty for dense models
};

CollectedStates collect_states(const DadinModel& model, std::span<const Instance> instances,
                               std::size_t batch_size = 4096);

// One JSON object per line: iteration records, then evaluation records.
void write_training_log(std::ostream& os, const TrainResult& result);

}  // namespace dadin
