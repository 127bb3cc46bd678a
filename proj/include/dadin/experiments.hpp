#pragma once

// Experiment drivers shared by the CLI, the C API and the acceptance suite.
// Each returns plain result structs; file export is separate so tests can
// inspect results without touching the filesystem.

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "dadin/data.hpp"
#include "dadin/loss.hpp"
#include "dadin/metrics.hpp"
#include "dadin/model.hpp"
#include "dadin/train.hpp"

namespace dadin {

// --- toy moons -----------------------------------------------------------------------------

struct ToyConfig {
  MoonsConfig moons;
  std::vector<std::size_t> widths{16, 16, 8};
  std::size_t label_hidden = 16;
  double dropout = 0.0;
  double threshold = 0.5;
  std::size_t epochs = 300;
  std::size_t batch_size = 64;
  double learning_rate = 1e-3;
  LossWeights weights;
  std::size_t grid = 200;  // boundary mesh resolution per axis

  void validate() const;
};

struct ToyModelResult {
  double target_accuracy = 0.0;     // all target points, threshold 0.5
  double domain_accuracy = 0.0;     // global domain classifier on source ∪ target
  std::vector<double> target_scores;
  std::vector<double> grid_scores;  // grid × grid, row-major, y outer
  std::vector<double> grid_domain;
  CollectedStates states;           // over source then all target points
};

struct ToyResult {
  MoonsData data;
  ToyModelResult dadin;
  ToyModelResult baseline;  // same network, domain terms weighted zero
  ProjectionReport pca_spec;
  ProjectionReport pca_da;
  double centroid_distance_spec = 0.0;  // source-positive vs target-positive clusters
  double centroid_distance_da = 0.0;
  double grid_x0 = 0.0, grid_x1 = 0.0, grid_y0 = 0.0, grid_y1 = 0.0;
};

ToyResult run_toy(const ToyConfig& config, std::uint64_t seed);

// Tab-separated exports: boundary grids, PCA coordinates, per-point scores.
void export_toy(const ToyResult& result, const ToyConfig& config, const std::filesystem::path& dir);

// --- cross-domain pipeline ------------------------------------------------------------------

struct DatasetPaths {
  std::filesystem::path target_csv;
  std::filesystem::path source_csv;
  std::filesystem::path schema;
};

// Ingested log plus model-ready instances, parallel to log.records.
struct Dataset {
  Vocabulary vocab;
  InteractionLog log;
  std::vector<Instance> instances;
  std::vector<std::string> warnings;
};

Dataset load_dataset(const DatasetPaths& paths, std::size_t seqlen, const IngestOptions& options = {});

struct SplitData {
  std::vector<Instance> train;
  std::vector<Instance> valid;
  std::vector<Instance> test;
  std::vector<Instance> test_cold;  // test instances of cold-start users
};

SplitData materialize_split(const Dataset& data, const SplitManifest& manifest);

// Vocabulary sizes copied into a model configuration.
void size_model_to(ModelConfig& model, const Vocabulary& vocab);

struct RunSpec {
  ModelConfig model;
  TrainConfig train;
  LossWeights weights;
};

struct RunOutcome {
  TrainResult training;
  RunMetrics test;
  // Unset when the cold-start cohort is empty or single-class.
  std::optional<RunMetrics> test_cold;
  std::vector<double> test_scores;
  std::shared_ptr<DadinModel> model;  // parameters at the best validation epoch
};

// Fresh model from `seed`, trained on split.train with early stopping on
// split.valid, evaluated on split.test.
RunOutcome run_once(const RunSpec& spec, const SplitData& split, std::uint64_t seed);

RunMetrics evaluate_model(const DadinModel& model, std::span<const Instance> instances);

struct AblationRow {
  std::string variant;
  MetricReport report;
  AttentionSummary attention;  // from the first seed's test pass, if available
  bool has_attention = false;
};

struct AblationTable {
  std::vector<AblationRow> rows;
  std::string reference;  // variant the improvements are measured against
};

// Each variant trained under identical seeds and hyperparameters.
AblationTable run_ablation(const RunSpec& base, std::span<const std::string> variants, const SplitData& split,
                           std::span<const std::uint64_t> seeds);

// Relative and absolute AUC improvement of `row` over `reference`, in percent.
struct Improvement {
  double relative_percent = 0.0;
  double absolute_points = 0.0;
};
Improvement auc_improvement(const MetricReport& row, const MetricReport& reference);

void write_ablation_table(std::ostream& os, const AblationTable& table);

struct LambdaPoint {
  double lambda2 = 1.0;
  double lambda3 = 1.0;
};

// "1:1,0.5:1" → {(1,1), (0.5,1)}.
std::vector<LambdaPoint> parse_lambda_grid(const std::string& text);

}  // namespace dadin
