#pragma once

// Small hand-built inputs shared by the unit tests and the acceptance suite.

#include <cmath>
#include <limits>
#include <random>
#include <span>
#include <string>
#include <vector>

#include "dadin/instance.hpp"
#include "dadin/loss.hpp"
#include "dadin/model.hpp"
#include "dadin/tensor.hpp"
#include "oracles.hpp"

namespace fixture {

inline dadin::ModelConfig tiny_config(std::size_t d = 4, std::size_t seqlen = 2) {
  dadin::ModelConfig c;
  c.embed_dim = d;
  c.seqlen = seqlen;
  c.profile_vocab = 9;
  c.target_item_vocab = 7;
  c.source_item_vocab = 8;
  c.dnn_hidden = {5};
  c.label_hidden = 6;
  c.dropout = 0.0;
  return c;
}

// Random categorical instances alternating target and source domain. Histories
// have between 0 and seqlen entries; ids stay above the reserved ones.
inline std::vector<dadin::Instance> tiny_instances(std::size_t n, const dadin::ModelConfig& c, dadin::Rng& rng) {
  auto id = [&](std::size_t vocab) {
    return static_cast<std::uint32_t>(std::uniform_int_distribution<std::size_t>(2, vocab - 1)(rng));
  };
  std::uniform_int_distribution<std::size_t> len(0, c.seqlen);
  std::vector<dadin::Instance> out(n);
  for (std::size_t i = 0; i < n; ++i) {
    auto& x = out[i];
    x.record_id = i;
    x.user = static_cast<std::uint32_t>(i);
    x.domain = i % 2 == 0 ? dadin::kTargetDomain : dadin::kSourceDomain;
    x.profile_ids = {id(c.profile_vocab), id(c.profile_vocab)};
    if (x.domain == dadin::kTargetDomain) x.target_item = {id(c.target_item_vocab)};
    else x.source_item = {id(c.source_item_vocab)};
    for (std::size_t k = len(rng); k > 0; --k) x.target_history.push_back(id(c.target_item_vocab));
    for (std::size_t k = len(rng); k > 0; --k) x.source_history.push_back(id(c.source_item_vocab));
    x.y = i % 3 == 0 ? 1.0 : 0.0;
  }
  return out;
}

// Replaces every parameter with draws of the given scale so that gradients
// are not dominated by the tiny embedding initialisation.
inline void scramble(dadin::ParamStore& params, dadin::Rng& rng, double scale = 0.5) {
  std::normal_distribution<double> n(0.0, scale);
  for (auto& e : params.entries())
    for (auto& v : e.value.mutable_values()) v = n(rng);
}

inline std::vector<const dadin::Instance*> pointers(std::span<const dadin::Instance> batch) {
  std::vector<const dadin::Instance*> out;
  for (const auto& x : batch) out.push_back(&x);
  return out;
}

inline dadin::Objective objective(const dadin::DadinModel& model, std::span<const dadin::Instance> batch,
                                  const dadin::LossWeights& w) {
  dadin::Rng unused(0);
  const auto ptrs = pointers(batch);
  const auto out = model.forward(batch, false, unused);
  return dadin::compute_objective(out, ptrs, w, model.config().variant);
}

struct ParamCheck {
  std::string name;
  dadin::Partition partition;
  double worst = 0.0;
};

struct ModelGradCheck {
  std::vector<ParamCheck> params;
  double worst = 0.0;
  // Smallest |ŷ − T| over the batch; finite differences are only meaningful
  // when no perturbation can flip an instance between intra-class branches.
  double routing_margin = 0.0;
};

// The domain classifiers sit after the reversal layer, everything else before it.
inline bool downstream_of_reversal(dadin::Partition p) {
  return p == dadin::Partition::kGlobalDomain || p == dadin::Partition::kIntraDomain0 ||
         p == dadin::Partition::kIntraDomain1;
}

// Analytic gradient of the total objective against central differences for
// every parameter, in evaluation mode so dropout plays no part. Backward
// through the reversal layer yields ∂(λ1·L_y)/∂θ − ∂L_dom/∂θ upstream of it
// and ∂L_dom/∂θ downstream, so the two parts are differenced separately and
// recombined with that sign.
inline ModelGradCheck check_model_gradients(dadin::DadinModel& model, std::span<const dadin::Instance> batch,
                                            const dadin::LossWeights& w, double step = 1e-4) {
  ModelGradCheck out;
  dadin::Rng unused(0);
  const auto fo = model.forward(batch, false, unused);
  out.routing_margin = std::numeric_limits<double>::infinity();
  for (double y : fo.y_hat.values()) out.routing_margin = std::min(out.routing_margin, std::abs(y - model.config().threshold));

  model.params().zero_grad();
  objective(model, batch, w).total.backward();
  auto parts = [&] {
    const auto b = objective(model, batch, w).breakdown;
    const double click = w.lambda1 * b.ctr;
    return std::pair{click, b.total - click};
  };
  for (auto& e : model.params().entries()) {
    const double sign = downstream_of_reversal(e.partition) ? 1.0 : -1.0;
    auto values = e.value.mutable_values();
    const auto grad = e.value.grad();
    ParamCheck pc{e.name, e.partition, 0.0};
    for (std::size_t i = 0; i < values.size(); ++i) {
      const double saved = values[i];
      values[i] = saved + step;
      const auto up = parts();
      values[i] = saved - step;
      const auto down = parts();
      values[i] = saved;
      const double fd = (up.first - down.first + sign * (up.second - down.second)) / (2.0 * step);
      pc.worst = std::max(pc.worst, oracle::rel_err(grad[i], fd));
    }
    out.worst = std::max(out.worst, pc.worst);
    out.params.push_back(pc);
  }
  return out;
}

}  // namespace fixture
