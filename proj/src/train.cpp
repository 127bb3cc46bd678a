#include "dadin/train.hpp"

#include <algorithm>
#include <cmath>
#include "json.hpp"
#include <numeric>
#include <ostream>

#include "dadin/errors.hpp"
#include "dadin/metrics.hpp"

namespace dadin {

namespace {

void require_gradients(const ParamStore& params) {
  for (const auto& e : params.entries()) {
    if (!e.value.has_grad()) throw ContractError("parameter '" + e.name + "' has no gradient buffer; run backward first");
  }
}

}  // namespace

void sgd_step(ParamStore& params, double learning_rate) {
  require_gradients(params);
  for (auto& e : params.entries()) {
    auto theta = e.value.mutable_values();
    auto g = e.value.grad();
    for (std::size_t i = 0; i < theta.size(); ++i) theta[i] -= learning_rate * g[i];
  }
}

void adam_step(ParamStore& params, AdamState& state, const OptimizerConfig& config) {
  require_gradients(params);
  auto& entries = params.entries();
  if (state.m.empty()) {
    for (const auto& e : entries) {
      state.m.emplace_back(e.value.size(), 0.0);
      state.v.emplace_back(e.value.size(), 0.0);
    }
  }
  if (state.m.size() != entries.size()) throw ContractError("Adam state does not match the parameter set");
  ++state.step;
  const double t = static_cast<double>(state.step);
  const double correct1 = 1.0 - std::pow(config.beta1, t);
  const double correct2 = 1.0 - std::pow(config.beta2, t);
  for (std::size_t k = 0; k < entries.size(); ++k) {
    auto theta = entries[k].value.mutable_values();
    auto g = entries[k].value.grad();
    auto& m = state.m[k];
    auto& v = state.v[k];
    for (std::size_t i = 0; i < theta.size(); ++i) {
      m[i] = config.beta1 * m[i] + (1.0 - config.beta1) * g[i];
      v[i] = config.beta2 * v[i] + (1.0 - config.beta2) * g[i] * g[i];
      const double m_hat = m[i] / correct1;
      const double v_hat = v[i] / correct2;
      theta[i] -= config.learning_rate * m_hat / (std::sqrt(v_hat) + config.epsilon);
    }
  }
}

void Optimizer::step(ParamStore& params) {
  if (config_.kind == OptimizerKind::kSgd) {
    sgd_step(params, config_.learning_rate);
  } else {
    adam_step(params, adam_, config_);
  }
}

double clip_grad_norm(ParamStore& params, double max_norm) {
  double sq = 0.0;
  for (const auto& e : params.entries()) {
    for (double g : e.value.grad()) sq += g * g;
  }
  const double norm = std::sqrt(sq);
  if (max_norm > 0.0 && norm > max_norm) {
    const double s = max_norm / norm;
    for (auto& e : params.entries()) {
      for (double& g : e.value.mutable_grad()) g *= s;
    }
  }
  return norm;
}

void TrainConfig::validate() const {
  if (batch_size == 0) throw ConfigError("batch-size must be positive");
  if (epochs == 0) throw ConfigError("epochs must be positive");
  if (eval_every == 0) throw ConfigError("eval-every must be positive");
  if (!(optimizer.learning_rate > 0.0)) throw ConfigError("learning-rate must be positive");
  if (max_grad_norm < 0.0) throw ConfigError("max-grad-norm must be nonnegative");
}

std::vector<double> predict(const DadinModel& model, std::span<const Instance> instances,
                            std::size_t batch_size) {
  std::vector<double> out;
  out.reserve(instances.size());
  Rng unused(0);
  for (std::size_t start = 0; start < instances.size(); start += batch_size) {
    const auto count = std::min(batch_size, instances.size() - start);
    auto fo = model.forward(instances.subspan(start, count), false, unused);
    auto v = fo.y_hat.values();
    out.insert(out.end(), v.begin(), v.end());
  }
  return out;
}

CollectedStates collect_states(const DadinModel& model, std::span<const Instance> instances,
                               std::size_t batch_size) {
  CollectedStates s;
  s.n = instances.size();
  s.dim = model.config().rep_dim();
  Rng unused(0);
  auto append = [](std::vector<double>& dst, const Tensor& t) {
    if (t.defined()) dst.insert(dst.end(), t.values().begin(), t.values().end());
  };
  for (std::size_t start = 0; start < instances.size(); start += batch_size) {
    const auto count = std::min(batch_size, instances.size() - start);
    auto fo = model.forward(instances.subspan(start, count), false, unused);
    append(s.y_hat, fo.y_hat);
    append(s.d_hat, fo.d_hat);
    append(s.h_spec, fo.h_spec);
    append(s.h_da, fo.h_da);
    if (model.config().input == InputKind::kCategorical) {
      append(s.v_u, fo.v_u);
      append(s.v_s, fo.v_s);
      append(s.v_t, fo.v_t);
    }
  }
  return s;
}

TrainResult train(DadinModel& model, std::span<const Instance> train_set,
                  std::span<const Instance> valid_set, const TrainConfig& config,
                  const LossWeights& weights, Rng& rng) {
  config.validate();
  weights.validate();
  if (train_set.empty()) throw DataError("training split is empty");

  std::vector<double> valid_labels;
  for (const auto& inst : valid_set) valid_labels.push_back(inst.y);
  const bool can_validate =
      std::any_of(valid_labels.begin(), valid_labels.end(), [](double y) { return y != 0.0; }) &&
      std::any_of(valid_labels.begin(), valid_labels.end(), [](double y) { return y == 0.0; });

  ParamStore& params = model.params();
  Optimizer optimizer(config.optimizer);
  std::vector<std::size_t> order(train_set.size());
  std::iota(order.begin(), order.end(), std::size_t{0});

  TrainResult result;
  std::vector<std::vector<double>> best;
  std::size_t stale = 0;
  std::size_t iteration = 0;
  std::vector<const Instance*> batch;

  for (std::size_t epoch = 1; epoch <= config.epochs; ++epoch) {
    std::shuffle(order.begin(), order.end(), rng);
    for (std::size_t start = 0; start < order.size(); start += config.batch_size) {
      const auto stop = std::min(order.size(), start + config.batch_size);
      batch.clear();
      for (auto k = start; k < stop; ++k) batch.push_back(&train_set[order[k]]);
      // A batch of unlabelled instances only (dense toy data) has no CTR term.
      if (std::none_of(batch.begin(), batch.end(), [](const Instance* i) { return i->labeled; })) continue;

      params.zero_grad();
      auto outputs = model.forward(batch, true, rng);
      auto objective = compute_objective(outputs, batch, weights, model.config().variant, config.intra_normalizer);
      ++iteration;
      if (!std::isfinite(objective.breakdown.total)) {
        throw DivergenceError("non-finite loss at iteration " + std::to_string(iteration) + " (epoch " +
                              std::to_string(epoch) + ")");
      }
      objective.total.backward();
      if (config.max_grad_norm > 0.0) clip_grad_norm(params, config.max_grad_norm);
      optimizer.step(params);
      result.iterations.push_back({iteration, epoch, objective.breakdown});
    }
    result.epochs_run = epoch;

    const bool eval_now = epoch % config.eval_every == 0 || epoch == config.epochs;
    if (!can_validate || !eval_now) continue;
    const auto scores = predict(model, valid_set);
    EvalRecord rec{epoch, iteration, auc(scores, valid_labels), logloss(scores, valid_labels)};
    result.evaluations.push_back(rec);
    if (!result.best_epoch || rec.auc > result.best_valid_auc) {
      result.best_epoch = epoch;
      result.best_valid_auc = rec.auc;
      best = params.snapshot();
      stale = 0;
    } else if (++stale >= config.patience) {
      break;
    }
  }
  if (result.best_epoch) params.restore(best);
  return result;
}

void write_training_log(std::ostream& os, const TrainResult& result) {
  std::size_t next_eval = 0;
  auto flush_evals = [&](std::size_t upto_iteration) {
    while (next_eval < result.evaluations.size() && result.evaluations[next_eval].iteration <= upto_iteration) {
      const auto& e = result.evaluations[next_eval++];
      nlohmann::json j{{"type", "eval"}, {"epoch", e.epoch}, {"iteration", e.iteration},
                       {"valid_auc", e.auc}, {"valid_logloss", e.logloss}};
      os << j.dump() << '\n';
    }
  };
  for (const auto& r : result.iterations) {
    nlohmann::json j{{"type", "iter"},          {"iteration", r.iteration},  {"epoch", r.epoch},
                     {"L_y", r.loss.ctr},       {"L_d_global", r.loss.global}, {"L_d_intra0", r.loss.intra0},
                     {"L_d_intra1", r.loss.intra1}, {"total", r.loss.total}, {"rho", r.loss.rho},
                     {"tau", r.loss.tau},       {"n", r.loss.n}};
    os << j.dump() << '\n';
    flush_evals(r.iteration);
  }
  flush_evals(static_cast<std::size_t>(-1));
}

}  // namespace dadin
