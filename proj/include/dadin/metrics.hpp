#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <map>
#include <span>
#include <string>
#include <vector>

#include "dadin/model.hpp"

namespace dadin {

// Area under the ROC curve as the Mann-Whitney statistic: the fraction of
// (positive, negative) pairs ranked correctly, ties counting one half.
// Computed from average ranks in O(n log n). Labels are 0/1 (anything
// nonzero counts as positive). Single-class input is an UndefinedMetricError.
double auc(std::span<const double> scores, std::span<const double> labels);

// −(1/n)·Σ[y·log ŷ + (1−y)·log(1−ŷ)] with the same clamping as the training loss.
double logloss(std::span<const double> scores, std::span<const double> labels);

struct SeedMetrics {
  std::uint64_t seed = 0;
  double auc = 0.0;
  double logloss = 0.0;
};

struct MetricReport {
  double auc = 0.0;       // mean over seeds
  double logloss = 0.0;
  double auc_std = 0.0;   // population standard deviation
  double logloss_std = 0.0;
  std::size_t n_pos = 0;  // from the first seed
  std::size_t n_neg = 0;
  std::vector<SeedMetrics> per_seed;
};

struct RunMetrics {
  double auc = 0.0;
  double logloss = 0.0;
  std::size_t n_pos = 0;
  std::size_t n_neg = 0;
};

RunMetrics evaluate_scores(std::span<const double> scores, std::span<const double> labels);

// Runs `runner` once per seed and aggregates mean and population std.
// Errors from the runner are rethrown with the seed in the message.
MetricReport repeat_experiment(const std::function<RunMetrics(std::uint64_t)>& runner,
                               std::span<const std::uint64_t> seeds);

double mean(std::span<const double> xs);
double population_std(std::span<const double> xs);

struct ProjectionReport {
  std::size_t n = 0;
  std::vector<double> coords;          // n × 2, row-major
  std::vector<double> components;      // 2 × dim, row-major, orthonormal rows
  std::vector<double> center;          // column means, dim
  double explained[2] = {0.0, 0.0};    // share of total variance per component
  bool rank_deficient = false;         // second component zeroed

  double x(std::size_t i) const { return coords[2 * i]; }
  double y(std::size_t i) const { return coords[2 * i + 1]; }
};

// Top-2 principal components of the row-centred states [n × dim]. Each
// component's largest-magnitude entry is made positive.
ProjectionReport pca_project(std::span<const double> states, std::size_t n, std::size_t dim);

struct Point2 {
  double x = 0.0;
  double y = 0.0;
};

// Mean projected point of the selected rows.
Point2 centroid(const ProjectionReport& proj, std::span<const std::size_t> rows);
double distance(Point2 a, Point2 b);

struct AttentionClassMeans {
  double v_u = 0.0;
  double v_s = 0.0;
  double v_t = 0.0;
  std::size_t count = 0;
};

struct AttentionSummary {
  AttentionClassMeans positive;
  AttentionClassMeans negative;
  AttentionClassMeans overall;
};

// Per-class means of the interest weights. NotApplicableError when the
// outputs carry no interest weights.
AttentionSummary attention_summary(const ForwardOutputs& outputs, std::span<const double> labels);
// Same, accumulated from weight columns collected over several batches.
AttentionSummary attention_summary(std::span<const double> v_u, std::span<const double> v_s,
                                   std::span<const double> v_t, std::span<const double> labels);

}  // namespace dadin
