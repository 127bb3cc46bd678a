#include "dadin/loss.hpp"

#include <cmath>

#include "dadin/errors.hpp"

namespace dadin {

void LossWeights::validate() const {
  if (lambda1 < 0.0 || lambda2 < 0.0 || lambda3 < 0.0) throw ConfigError("loss weights λ1..λ3 must be nonnegative");
  if (!(alpha >= 0.0 && alpha <= 1.0)) throw ConfigError("alpha must lie in [0, 1]");
}

double ctr_loss(std::span<const double> probs, std::span<const double> labels) {
  return binary_cross_entropy_value(probs, labels, kProbabilityEpsilon);
}

Tensor ctr_loss(const Tensor& probs, std::span<const double> labels) {
  return binary_cross_entropy(probs, labels, kProbabilityEpsilon);
}

double global_confusion_loss(std::span<const double> probs, std::span<const double> domains) {
  return binary_cross_entropy_value(probs, domains, kProbabilityEpsilon);
}

Tensor global_confusion_loss(const Tensor& probs, std::span<const double> domains) {
  return binary_cross_entropy(probs, domains, kProbabilityEpsilon);
}

IntraClassLosses intra_class_losses(std::span<const double> probs0, std::span<const double> domains0,
                                    std::span<const double> probs1, std::span<const double> domains1) {
  IntraClassLosses out;
  if (!probs0.empty() || !domains0.empty()) out.class0 = binary_cross_entropy_value(probs0, domains0, kProbabilityEpsilon);
  if (!probs1.empty() || !domains1.empty()) out.class1 = binary_cross_entropy_value(probs1, domains1, kProbabilityEpsilon);
  return out;
}

double total_loss(const LossBreakdown& parts, const LossWeights& weights) {
  return weights.lambda1 * parts.ctr + weights.lambda2 * parts.global +
         weights.lambda3 * (weights.alpha * parts.intra0 + (1.0 - weights.alpha) * parts.intra1);
}

Objective compute_objective(const ForwardOutputs& outputs, std::span<const Instance* const> batch,
                            const LossWeights& weights, const VariantConfig& variant,
                            IntraNormalizer normalizer) {
  weights.validate();
  const std::size_t n = batch.size();
  if (outputs.size() != n) {
    throw DimensionError("objective: " + std::to_string(outputs.size()) + " outputs for " +
                         std::to_string(n) + " instances");
  }
  Objective obj;
  obj.breakdown.n = n;
  obj.breakdown.rho = outputs.intra.rows1.size();
  obj.breakdown.tau = outputs.intra.rows0.size();

  std::vector<std::size_t> labeled;
  std::vector<double> clicks;
  std::vector<double> domains(n);
  for (std::size_t i = 0; i < n; ++i) {
    domains[i] = static_cast<double>(batch[i]->domain);
    if (batch[i]->labeled) {
      labeled.push_back(i);
      clicks.push_back(batch[i]->y);
    }
  }
  if (labeled.empty()) throw DegenerateInputError("objective: batch has no labelled instances");

  // Cross-entropy on logits when the forward pass provides them; values are
  // identical to the probability form.
  auto cross_entropy = [](const Tensor& logits, const Tensor& probs, std::span<const double> targets) {
    return logits.defined() ? binary_cross_entropy_with_logits(logits, targets, kProbabilityEpsilon)
                            : binary_cross_entropy(probs, targets, kProbabilityEpsilon);
  };
  auto labeled_rows = [&](const Tensor& t) { return !t.defined() || labeled.size() == n ? t : gather_rows(t, labeled); };
  const Tensor l_y = cross_entropy(labeled_rows(outputs.y_logit), labeled_rows(outputs.y_hat), clicks);
  const Tensor l_global = cross_entropy(outputs.d_logit, outputs.d_hat, domains);

  auto branch_loss = [&](const Tensor& logits, const Tensor& probs, const std::vector<std::size_t>& rows) -> Tensor {
    if (rows.empty()) return {};
    std::vector<double> d;
    d.reserve(rows.size());
    for (auto r : rows) d.push_back(domains[r]);
    Tensor l = cross_entropy(logits, probs, d);
    if (normalizer == IntraNormalizer::kBatch) {
      l = mul_scalar(l, static_cast<double>(rows.size()) / static_cast<double>(n));
    }
    return l;
  };
  const Tensor l0 = branch_loss(outputs.intra.logit0, outputs.intra.d_hat0, outputs.intra.rows0);
  const Tensor l1 = branch_loss(outputs.intra.logit1, outputs.intra.d_hat1, outputs.intra.rows1);

  obj.breakdown.ctr = l_y.item();
  obj.breakdown.global = l_global.item();
  obj.breakdown.intra0 = l0.defined() ? l0.item() : 0.0;
  obj.breakdown.intra1 = l1.defined() ? l1.item() : 0.0;

  const double w2 = variant.use_global_confusion ? weights.lambda2 : 0.0;
  const double w3 = variant.use_intra_confusion ? weights.lambda3 : 0.0;

  // λ1·L_y always stays in the graph so the objective is differentiable even
  // when every weight is zero.
  Tensor total = mul_scalar(l_y, weights.lambda1);
  if (w2 != 0.0) total = add(total, mul_scalar(l_global, w2));
  if (w3 != 0.0) {
    if (l0.defined() && weights.alpha != 0.0) total = add(total, mul_scalar(l0, w3 * weights.alpha));
    if (l1.defined() && weights.alpha != 1.0) total = add(total, mul_scalar(l1, w3 * (1.0 - weights.alpha)));
  }
  obj.total = total;
  obj.breakdown.total = total.item();
  return obj;
}

}  // namespace dadin
