#include "dadin/metrics.hpp"

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <numeric>

#include "dadin/errors.hpp"

namespace dadin {

double auc(std::span<const double> scores, std::span<const double> labels) {
  if (scores.size() != labels.size()) {
    throw DimensionError("auc: " + std::to_string(scores.size()) + " scores vs " +
                         std::to_string(labels.size()) + " labels");
  }
  const std::size_t n = scores.size();
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return scores[a] < scores[b]; });

  // Twice the rank sum of the positives, so tied average ranks stay integral.
  std::uint64_t n_pos = 0;
  std::uint64_t twice_rank_sum = 0;
  std::size_t i = 0;
  while (i < n) {
    std::size_t j = i;
    while (j + 1 < n && scores[order[j + 1]] == scores[order[i]]) ++j;
    // Positions i..j (0-based) share the average 1-based rank (i + j + 2) / 2.
    const std::uint64_t twice_rank = i + j + 2;
    for (std::size_t k = i; k <= j; ++k) {
      if (labels[order[k]] != 0.0) {
        ++n_pos;
        twice_rank_sum += twice_rank;
      }
    }
    i = j + 1;
  }
  const std::uint64_t n_neg = n - n_pos;
  if (n_pos == 0 || n_neg == 0) {
    throw UndefinedMetricError("auc needs at least one positive and one negative label");
  }
  // 2·U = 2·R_pos − n_pos·(n_pos + 1); each correctly ordered pair contributes 2, a tie 1.
  const std::uint64_t twice_u = twice_rank_sum - n_pos * (n_pos + 1);
  return static_cast<double>(twice_u) / (2.0 * static_cast<double>(n_pos) * static_cast<double>(n_neg));
}

double logloss(std::span<const double> scores, std::span<const double> labels) {
  return binary_cross_entropy_value(scores, labels, 1e-12);
}

RunMetrics evaluate_scores(std::span<const double> scores, std::span<const double> labels) {
  RunMetrics m;
  m.auc = auc(scores, labels);
  m.logloss = logloss(scores, labels);
  for (double y : labels) (y != 0.0 ? m.n_pos : m.n_neg)++;
  return m;
}

double mean(std::span<const double> xs) {
  if (xs.empty()) throw DegenerateInputError("mean of an empty list");
  double s = 0.0;
  for (double x : xs) s += x;
  return s / static_cast<double>(xs.size());
}

double population_std(std::span<const double> xs) {
  const double mu = mean(xs);
  double s = 0.0;
  for (double x : xs) s += (x - mu) * (x - mu);
  return std::sqrt(s / static_cast<double>(xs.size()));
}

MetricReport repeat_experiment(const std::function<RunMetrics(std::uint64_t)>& runner,
                               std::span<const std::uint64_t> seeds) {
  if (seeds.empty()) throw ConfigError("repeat_experiment needs at least one seed");
  MetricReport report;
  std::vector<double> aucs, losses;
  for (auto seed : seeds) {
    RunMetrics m;
    try {
      m = runner(seed);
    } catch (const Error& e) {
      // Keep the original category so callers still see e.g. a DivergenceError.
      const std::string msg = "seed " + std::to_string(seed) + ": " + e.what();
      if (dynamic_cast<const DivergenceError*>(&e)) throw DivergenceError(msg);
      if (dynamic_cast<const DataError*>(&e)) throw DataError(msg);
      if (dynamic_cast<const ConfigError*>(&e)) throw ConfigError(msg);
      if (dynamic_cast<const UndefinedMetricError*>(&e)) throw UndefinedMetricError(msg);
      throw Error(msg);
    }
    if (report.per_seed.empty()) {
      report.n_pos = m.n_pos;
      report.n_neg = m.n_neg;
    }
    report.per_seed.push_back({seed, m.auc, m.logloss});
    aucs.push_back(m.auc);
    losses.push_back(m.logloss);
  }
  report.auc = mean(aucs);
  report.logloss = mean(losses);
  report.auc_std = population_std(aucs);
  report.logloss_std = population_std(losses);
  return report;
}

ProjectionReport pca_project(std::span<const double> states, std::size_t n, std::size_t dim) {
  if (n < 2) throw DegenerateInputError("pca_project needs at least two rows");
  if (dim == 0 || states.size() != n * dim) {
    throw DimensionError("pca_project: " + std::to_string(states.size()) + " values for " +
                         std::to_string(n) + " x " + std::to_string(dim));
  }
  using Matrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
  Eigen::Map<const Matrix> x(states.data(), static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(dim));
  const Eigen::RowVectorXd mu = x.colwise().mean();
  const Matrix centered = x.rowwise() - mu;
  const Eigen::MatrixXd cov = (centered.transpose() * centered) / static_cast<double>(n - 1);

  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> solver(cov);
  const Eigen::VectorXd evals = solver.eigenvalues();  // ascending
  const Eigen::MatrixXd evecs = solver.eigenvectors();
  const double total = std::max(evals.sum(), 0.0);

  ProjectionReport r;
  r.n = n;
  r.center.assign(mu.data(), mu.data() + dim);
  r.components.assign(2 * dim, 0.0);
  const double tol = 1e-12 * std::max(1.0, std::abs(evals(static_cast<Eigen::Index>(dim) - 1)));
  for (std::size_t c = 0; c < 2; ++c) {
    if (c >= dim) {
      r.rank_deficient = true;
      break;
    }
    const auto idx = static_cast<Eigen::Index>(dim - 1 - c);
    const double lambda = evals(idx);
    if (c == 1 && lambda <= tol) {
      r.rank_deficient = true;
      break;
    }
    Eigen::VectorXd v = evecs.col(idx);
    Eigen::Index arg = 0;
    v.cwiseAbs().maxCoeff(&arg);
    if (v(arg) < 0) v = -v;
    for (std::size_t k = 0; k < dim; ++k) r.components[c * dim + k] = v(static_cast<Eigen::Index>(k));
    r.explained[c] = total > 0.0 ? std::max(lambda, 0.0) / total : 0.0;
  }

  r.coords.assign(2 * n, 0.0);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t c = 0; c < 2; ++c) {
      double s = 0.0;
      for (std::size_t k = 0; k < dim; ++k) {
        s += centered(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(k)) * r.components[c * dim + k];
      }
      r.coords[2 * i + c] = s;
    }
  }
  return r;
}

Point2 centroid(const ProjectionReport& proj, std::span<const std::size_t> rows) {
  if (rows.empty()) throw DegenerateInputError("centroid of an empty selection");
  Point2 c;
  for (auto i : rows) {
    c.x += proj.x(i);
    c.y += proj.y(i);
  }
  c.x /= static_cast<double>(rows.size());
  c.y /= static_cast<double>(rows.size());
  return c;
}

double distance(Point2 a, Point2 b) { return std::hypot(a.x - b.x, a.y - b.y); }

AttentionSummary attention_summary(std::span<const double> v_u, std::span<const double> v_s,
                                   std::span<const double> v_t, std::span<const double> labels) {
  const std::size_t n = labels.size();
  if (v_u.size() != n || v_s.size() != n || v_t.size() != n) {
    throw DimensionError("attention_summary: weight columns do not match " + std::to_string(n) + " labels");
  }
  if (n == 0) throw DegenerateInputError("attention_summary over no instances");
  AttentionSummary s;
  auto accumulate = [&](AttentionClassMeans& m, std::size_t i) {
    m.v_u += v_u[i];
    m.v_s += v_s[i];
    m.v_t += v_t[i];
    ++m.count;
  };
  for (std::size_t i = 0; i < n; ++i) {
    accumulate(labels[i] != 0.0 ? s.positive : s.negative, i);
    accumulate(s.overall, i);
  }
  for (auto* m : {&s.positive, &s.negative, &s.overall}) {
    if (m->count == 0) continue;
    const double c = static_cast<double>(m->count);
    m->v_u /= c;
    m->v_s /= c;
    m->v_t /= c;
  }
  return s;
}

AttentionSummary attention_summary(const ForwardOutputs& outputs, std::span<const double> labels) {
  if (!outputs.v_u.defined() || !outputs.v_s.defined() || !outputs.v_t.defined()) {
    throw NotApplicableError("attention_summary: outputs carry no interest weights");
  }
  return attention_summary(outputs.v_u.values(), outputs.v_s.values(), outputs.v_t.values(), labels);
}

}  // namespace dadin
