#include <algorithm>
#include <cmath>
#include <iomanip>
#include <ostream>
#include <sstream>
#include <unordered_set>

#include "dadin/errors.hpp"
#include "dadin/experiments.hpp"

namespace dadin {

Dataset load_dataset(const DatasetPaths& paths, std::size_t seqlen, const IngestOptions& options) {
  Dataset d;
  IngestOptions opts = options;
  if (opts.warnings == nullptr) opts.warnings = &d.warnings;
  const auto schema = Schema::load(paths.schema);
  d.log = ingest_csv({paths.target_csv, paths.source_csv}, schema, d.vocab, opts);
  d.vocab.freeze();
  const auto histories = build_histories(d.log, seqlen);
  d.instances = make_instances(d.log, histories);
  return d;
}

SplitData materialize_split(const Dataset& data, const SplitManifest& manifest) {
  SplitData s;
  s.train = select_records(data.instances, manifest.train);
  s.valid = select_records(data.instances, manifest.valid);
  s.test = select_records(data.instances, manifest.test);
  const std::unordered_set<std::uint32_t> cold(manifest.cold_start_users.begin(), manifest.cold_start_users.end());
  for (const auto& inst : s.test) {
    if (cold.count(inst.user)) s.test_cold.push_back(inst);
  }
  return s;
}

void size_model_to(ModelConfig& model, const Vocabulary& vocab) {
  model.profile_vocab = vocab.size(Vocabulary::kProfile);
  model.target_item_vocab = vocab.size(Vocabulary::kTargetItem);
  model.source_item_vocab = vocab.size(Vocabulary::kSourceItem);
}

namespace {

std::vector<double> labels_of(std::span<const Instance> instances) {
  std::vector<double> y;
  y.reserve(instances.size());
  for (const auto& inst : instances) y.push_back(inst.y);
  return y;
}

bool has_both_classes(std::span<const double> labels) {
  const bool pos = std::any_of(labels.begin(), labels.end(), [](double y) { return y != 0.0; });
  const bool neg = std::any_of(labels.begin(), labels.end(), [](double y) { return y == 0.0; });
  return pos && neg;
}

}  // namespace

RunMetrics evaluate_model(const DadinModel& model, std::span<const Instance> instances) {
  const auto scores = predict(model, instances);
  return evaluate_scores(scores, labels_of(instances));
}

RunOutcome run_once(const RunSpec& spec, const SplitData& split, std::uint64_t seed) {
  if (split.test.empty()) throw DataError("test split is empty");
  Rng rng(seed);
  auto model = std::make_shared<DadinModel>(spec.model, rng);
  RunOutcome out;
  out.training = train(*model, split.train, split.valid, spec.train, spec.weights, rng);
  out.test_scores = predict(*model, split.test);
  out.test = evaluate_scores(out.test_scores, labels_of(split.test));
  const auto cold_labels = labels_of(split.test_cold);
  if (has_both_classes(cold_labels)) out.test_cold = evaluate_model(*model, split.test_cold);
  out.model = std::move(model);
  return out;
}

AblationTable run_ablation(const RunSpec& base, std::span<const std::string> variants, const SplitData& split,
                           std::span<const std::uint64_t> seeds) {
  if (variants.empty()) throw ConfigError("ablation needs at least one variant");
  std::vector<VariantConfig> resolved;
  for (const auto& name : variants) resolved.push_back(variant_by_name(name));

  AblationTable table;
  table.reference = std::find(variants.begin(), variants.end(), "DADIN++") != variants.end() ? "DADIN++" : variants.front();
  const auto test_labels = labels_of(split.test);
  for (std::size_t v = 0; v < variants.size(); ++v) {
    RunSpec spec = base;
    spec.model.variant = resolved[v];
    AblationRow row;
    row.variant = variants[v];
    bool first = true;
    row.report = repeat_experiment(
        [&](std::uint64_t seed) {
          auto outcome = run_once(spec, split, seed);
          if (first && spec.model.input == InputKind::kCategorical) {
            const auto states = collect_states(*outcome.model, split.test);
            row.attention = attention_summary(states.v_u, states.v_s, states.v_t, test_labels);
            row.has_attention = true;
          }
          first = false;
          return outcome.test;
        },
        seeds);
    table.rows.push_back(std::move(row));
  }
  return table;
}

Improvement auc_improvement(const MetricReport& row, const MetricReport& reference) {
  Improvement imp;
  imp.absolute_points = 100.0 * (row.auc - reference.auc);
  imp.relative_percent = 100.0 * (row.auc - reference.auc) / reference.auc;
  return imp;
}

void write_ablation_table(std::ostream& os, const AblationTable& table) {
  const MetricReport* ref = nullptr;
  for (const auto& r : table.rows) {
    if (r.variant == table.reference) ref = &r.report;
  }
  os << "variant\tauc_mean\tauc_std\tlogloss_mean\tlogloss_std\tauc_rel_improve_pct\tauc_abs_improve_pts"
        "\tv_u_mean\tv_s_mean\tv_t_mean\n";
  os << std::setprecision(6) << std::fixed;
  for (const auto& r : table.rows) {
    // Improvement of the reference over this row, matching the usual "gain of the full model" reading.
    const auto imp = ref ? auc_improvement(*ref, r.report) : Improvement{};
    os << r.variant << '\t' << r.report.auc << '\t' << r.report.auc_std << '\t' << r.report.logloss << '\t'
       << r.report.logloss_std << '\t' << imp.relative_percent << '\t' << imp.absolute_points;
    if (r.has_attention) {
      os << '\t' << r.attention.overall.v_u << '\t' << r.attention.overall.v_s << '\t' << r.attention.overall.v_t;
    } else {
      os << "\t\t\t";
    }
    os << '\n';
  }
}

std::vector<LambdaPoint> parse_lambda_grid(const std::string& text) {
  std::vector<LambdaPoint> grid;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) {
    const auto colon = item.find(':');
    LambdaPoint p;
    try {
      if (colon == std::string::npos) throw std::invalid_argument("no colon");
      std::size_t used = 0;
      const auto a = item.substr(0, colon), b = item.substr(colon + 1);
      p.lambda2 = std::stod(a, &used);
      if (used != a.size()) throw std::invalid_argument("trailing");
      p.lambda3 = std::stod(b, &used);
      if (used != b.size()) throw std::invalid_argument("trailing");
    } catch (const std::logic_error&) {
      throw ConfigError("lambda-grid entry '" + item + "' is not of the form lambda2:lambda3");
    }
    if (p.lambda2 < 0.0 || p.lambda3 < 0.0) throw ConfigError("lambda-grid weights must be nonnegative");
    grid.push_back(p);
  }
  if (grid.empty()) throw ConfigError("lambda-grid is empty");
  return grid;
}

}  // namespace dadin
