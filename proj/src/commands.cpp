#include "dadin/commands.hpp"

#include <algorithm>
#include <charconv>
#include <cstdio>
#include <fstream>
#include <map>
#include <optional>
#include <set>
#include <sstream>

#include "dadin/checkpoint.hpp"
#include "dadin/errors.hpp"
#include "dadin/experiments.hpp"
#include "json.hpp"

namespace dadin {

namespace {

using nlohmann::json;
namespace fs = std::filesystem;

std::string fmt(const char* pattern, double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, pattern, v);
  return buf;
}

std::string shortest(double v) {
  char buf[64];
  const auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, ptr);
}

std::ofstream open_out(const fs::path& path) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  std::ofstream os(path);
  if (!os) throw IoError("cannot write " + path.string());
  return os;
}

void append_jsonl(std::ofstream& os, const json& record) { os << record.dump() << '\n'; }

const fs::path& require(const fs::path& p, const char* key) {
  if (p.empty()) throw ConfigError(std::string(key) + " is not set");
  if (!fs::exists(p)) throw ConfigError(std::string(key) + " '" + p.string() + "' does not exist");
  return p;
}

fs::path split_dir_of(const ExperimentConfig& c) { return c.split_dir.empty() ? c.out_dir : c.split_dir; }
fs::path checkpoint_of(const ExperimentConfig& c) {
  return c.checkpoint.empty() ? c.out_dir / "model.ckpt" : c.checkpoint;
}

Dataset load_data(const ExperimentConfig& c, std::size_t seqlen) {
  DatasetPaths paths{require(c.target_csv, "target-csv"), require(c.source_csv, "source-csv"),
                     require(c.schema, "schema")};
  IngestOptions opts;
  opts.skip_bad_rows = c.skip_bad_rows;
  return load_dataset(paths, seqlen, opts);
}

SplitData load_split(const ExperimentConfig& c, const Dataset& data) {
  const auto dir = require(split_dir_of(c), "split-dir");
  const auto vocab_path = dir / "vocab.txt";
  if (!fs::exists(vocab_path)) throw ConfigError("no vocab.txt in " + dir.string() + "; run resample first");
  if (!(Vocabulary::load(vocab_path) == data.vocab)) {
    throw DataError("vocabulary of the input files differs from " + vocab_path.string());
  }
  return materialize_split(data, load_manifest(dir));
}

RunSpec run_spec(const ExperimentConfig& c, const Vocabulary& vocab) {
  RunSpec spec;
  spec.model = c.model;
  spec.model.variant = variant_by_name(c.variant);
  size_model_to(spec.model, vocab);
  spec.train = c.train;
  spec.weights = c.weights;
  return spec;
}

std::string weights_header(const std::string& variant, const LossWeights& w) {
  return "variant " + variant + "  lambda1 = " + shortest(w.lambda1) + "  lambda2 = " + shortest(w.lambda2) +
         "  lambda3 = " + shortest(w.lambda3) + "  alpha = " + shortest(w.alpha) + "\n";
}

json metrics_json(const RunMetrics& m) {
  return {{"auc", m.auc}, {"logloss", m.logloss}, {"n_pos", m.n_pos}, {"n_neg", m.n_neg}};
}

std::string metrics_line(const char* name, const RunMetrics& m) {
  return std::string(name) + "  AUC " + fmt("%.5f", m.auc) + "  LogLoss " + fmt("%.5f", m.logloss) + "  (" +
         std::to_string(m.n_pos) + " pos / " + std::to_string(m.n_neg) + " neg)\n";
}

void write_snapshot(const ExperimentConfig& c, const fs::path& dir, CommandResult& r) {
  const auto path = dir / "config.txt";
  c.write_snapshot(path);
  r.files.push_back(path);
}

// --- toy -----------------------------------------------------------------------------------

CommandResult cmd_toy(const ExperimentConfig& c) {
  CommandResult r;
  ToyConfig tc = c.toy;
  tc.weights = c.weights;
  write_snapshot(c, c.out_dir, r);
  auto metrics = open_out(c.out_dir / "metrics.jsonl");
  r.files.push_back(c.out_dir / "metrics.jsonl");

  std::ostringstream table;
  table << "seed  dadin_acc  dnn_acc  domain_acc  dist_spec  dist_DA\n";
  double sum_d = 0, sum_b = 0, sum_dom = 0, sum_ds = 0, sum_dd = 0;
  json per_seed = json::array();
  for (const auto seed : c.seeds) {
    const auto res = run_toy(tc, seed);
    const auto dir = c.out_dir / "toy" / ("seed-" + std::to_string(seed));
    export_toy(res, tc, dir);
    for (const char* f : {"toy_points.tsv", "toy_grid.tsv", "toy_pca.tsv"}) r.files.push_back(dir / f);
    json rec{{"seed", seed},
             {"dadin_target_accuracy", res.dadin.target_accuracy},
             {"baseline_target_accuracy", res.baseline.target_accuracy},
             {"dadin_domain_accuracy", res.dadin.domain_accuracy},
             {"centroid_distance_spec", res.centroid_distance_spec},
             {"centroid_distance_da", res.centroid_distance_da}};
    append_jsonl(metrics, rec);
    per_seed.push_back(rec);
    table << seed << "  " << fmt("%.4f", res.dadin.target_accuracy) << "  " << fmt("%.4f", res.baseline.target_accuracy)
          << "  " << fmt("%.4f", res.dadin.domain_accuracy) << "  " << fmt("%.4f", res.centroid_distance_spec) << "  "
          << fmt("%.4f", res.centroid_distance_da) << '\n';
    sum_d += res.dadin.target_accuracy;
    sum_b += res.baseline.target_accuracy;
    sum_dom += res.dadin.domain_accuracy;
    sum_ds += res.centroid_distance_spec;
    sum_dd += res.centroid_distance_da;
  }
  const double n = static_cast<double>(c.seeds.size());
  json mean{{"dadin_target_accuracy", sum_d / n},
            {"baseline_target_accuracy", sum_b / n},
            {"dadin_domain_accuracy", sum_dom / n},
            {"centroid_distance_spec", sum_ds / n},
            {"centroid_distance_da", sum_dd / n}};
  table << "mean  " << fmt("%.4f", sum_d / n) << "  " << fmt("%.4f", sum_b / n) << "  " << fmt("%.4f", sum_dom / n)
        << "  " << fmt("%.4f", sum_ds / n) << "  " << fmt("%.4f", sum_dd / n) << '\n';
  r.summary = "toy moons, rotation " + shortest(tc.moons.rotation_degrees) + " degrees\n" + table.str();
  r.json = json{{"command", "toy"}, {"per_seed", per_seed}, {"mean", mean}}.dump();
  return r;
}

// --- resample ------------------------------------------------------------------------------

CommandResult cmd_resample(const ExperimentConfig& c) {
  CommandResult r;
  const auto data = load_data(c, c.model.seqlen);
  Rng rng(c.split_seed);
  const auto m = resample(data.log, c.split, rng);
  const auto dir = split_dir_of(c);
  save_manifest(dir, m);
  data.vocab.save(dir / "vocab.txt");
  write_snapshot(c, dir, r);
  for (const char* f : {"train.ids", "valid.ids", "test.ids", "train_users.ids", "overlap_users.ids",
                        "heldout_users.ids", "cold_start_users.ids", "vocab.txt"}) {
    r.files.push_back(dir / f);
  }

  // Users with target records in train versus in valid/test.
  std::set<std::uint32_t> train_target_users, eval_users;
  std::vector<const Record*> by_id(data.log.records.size());
  for (const auto& rec : data.log.records) by_id[rec.id] = &rec;
  for (const auto id : m.train) {
    if (by_id[id]->domain == kTargetDomain) train_target_users.insert(by_id[id]->user);
  }
  for (const auto* ids : {&m.valid, &m.test}) {
    for (const auto id : *ids) eval_users.insert(by_id[id]->user);
  }
  std::size_t shared = 0;
  for (const auto u : eval_users) shared += train_target_users.count(u);

  std::ostringstream s;
  s << "records: " << data.log.records.size() << "  train " << m.train.size() << "  valid " << m.valid.size()
    << "  test " << m.test.size() << '\n'
    << "target users: train " << m.train_users.size() << " (overlap " << m.overlap_users.size() << ")  held out "
    << m.heldout_users.size() << '\n'
    << "cold-start cohort: " << m.cold_start_users.size() << " users\n"
    << "valid/test users with target records in train: " << shared << (shared == 0 ? " (disjoint)" : "") << '\n';
  for (const auto& w : data.warnings) s << "warning: " << w << '\n';
  for (const auto& w : m.warnings) s << "warning: " << w << '\n';
  r.summary = s.str();
  r.json = json{{"command", "resample"},
                {"records", data.log.records.size()},
                {"train", m.train.size()},
                {"valid", m.valid.size()},
                {"test", m.test.size()},
                {"train_users", m.train_users.size()},
                {"overlap_users", m.overlap_users.size()},
                {"heldout_users", m.heldout_users.size()},
                {"cold_start_users", m.cold_start_users.size()},
                {"shared_eval_users", shared},
                {"warnings", m.warnings}}
               .dump();
  return r;
}

// --- train / eval --------------------------------------------------------------------------

CommandResult cmd_train(const ExperimentConfig& c) {
  CommandResult r;
  const auto data = load_data(c, c.model.seqlen);
  const auto split = load_split(c, data);
  const auto spec = run_spec(c, data.vocab);
  const auto seed = c.seeds.front();
  write_snapshot(c, c.out_dir, r);
  const auto out = run_once(spec, split, seed);

  const auto ckpt = checkpoint_of(c);
  if (ckpt.has_parent_path()) fs::create_directories(ckpt.parent_path());
  std::map<std::string, std::string> meta{{"seed", std::to_string(seed)}, {"variant_name", c.variant}};
  if (out.training.best_epoch) meta["best_epoch"] = std::to_string(*out.training.best_epoch);
  save_checkpoint(ckpt, *out.model, meta);
  r.files.push_back(ckpt);
  {
    auto os = open_out(c.out_dir / "train_log.jsonl");
    write_training_log(os, out.training);
    r.files.push_back(c.out_dir / "train_log.jsonl");
  }
  json rec{{"command", "train"},
           {"variant", c.variant},
           {"seed", seed},
           {"lambda1", c.weights.lambda1},
           {"lambda2", c.weights.lambda2},
           {"lambda3", c.weights.lambda3},
           {"alpha", c.weights.alpha},
           {"epochs_run", out.training.epochs_run},
           {"best_epoch", out.training.best_epoch ? json(*out.training.best_epoch) : json(nullptr)},
           {"best_valid_auc", out.training.best_valid_auc},
           {"test", metrics_json(out.test)},
           {"test_cold", out.test_cold ? metrics_json(*out.test_cold) : json(nullptr)}};
  {
    auto os = open_out(c.out_dir / "metrics.jsonl");
    append_jsonl(os, rec);
    r.files.push_back(c.out_dir / "metrics.jsonl");
  }
  std::ostringstream s;
  s << weights_header(c.variant, c.weights) << "seed " << seed << "  epochs run " << out.training.epochs_run;
  if (out.training.best_epoch) s << "  best epoch " << *out.training.best_epoch << " (valid AUC " << fmt("%.5f", out.training.best_valid_auc) << ")";
  s << '\n' << metrics_line("test      ", out.test);
  if (out.test_cold) {
    s << metrics_line("cold start", *out.test_cold);
  } else {
    s << "cold start  not evaluable (empty or single-class cohort)\n";
  }
  s << "checkpoint " << ckpt.string() << '\n';
  r.summary = s.str();
  r.json = rec.dump();
  return r;
}

void check_vocab_fit(const ModelConfig& m, const Vocabulary& vocab) {
  ModelConfig expected = m;
  size_model_to(expected, vocab);
  if (expected.profile_vocab != m.profile_vocab || expected.target_item_vocab != m.target_item_vocab ||
      expected.source_item_vocab != m.source_item_vocab) {
    throw CheckpointError("checkpoint vocabulary sizes (" + std::to_string(m.profile_vocab) + ", " +
                          std::to_string(m.target_item_vocab) + ", " + std::to_string(m.source_item_vocab) +
                          ") do not match the data (" + std::to_string(expected.profile_vocab) + ", " +
                          std::to_string(expected.target_item_vocab) + ", " +
                          std::to_string(expected.source_item_vocab) + ")");
  }
}

struct LoadedRun {
  LoadedCheckpoint ckpt;
  Dataset data;
  SplitData split;
};

LoadedRun load_trained(const ExperimentConfig& c) {
  auto ckpt = load_checkpoint(require(checkpoint_of(c), "checkpoint"));
  if (ckpt.model.config().input != InputKind::kCategorical) {
    throw CheckpointError("checkpoint holds a dense-input model, not a click model");
  }
  auto data = load_data(c, ckpt.model.config().seqlen);
  check_vocab_fit(ckpt.model.config(), data.vocab);
  auto split = load_split(c, data);
  return {std::move(ckpt), std::move(data), std::move(split)};
}

CommandResult cmd_eval(const ExperimentConfig& c) {
  CommandResult r;
  const auto run = load_trained(c);
  write_snapshot(c, c.out_dir, r);
  const auto test = evaluate_model(run.ckpt.model, run.split.test);
  std::optional<RunMetrics> cold;
  try {
    if (!run.split.test_cold.empty()) cold = evaluate_model(run.ckpt.model, run.split.test_cold);
  } catch (const UndefinedMetricError&) {
    cold.reset();
  }
  json rec{{"command", "eval"},
           {"checkpoint", checkpoint_of(c).string()},
           {"test", metrics_json(test)},
           {"test_cold", cold ? metrics_json(*cold) : json(nullptr)},
           {"cold_start_instances", run.split.test_cold.size()}};
  auto os = open_out(c.out_dir / "eval.jsonl");
  append_jsonl(os, rec);
  r.files.push_back(c.out_dir / "eval.jsonl");
  std::ostringstream s;
  s << metrics_line("test      ", test);
  if (cold) {
    s << metrics_line("cold start", *cold);
  } else {
    s << "cold start  not evaluable (empty or single-class cohort)\n";
  }
  r.summary = s.str();
  r.json = rec.dump();
  return r;
}

// --- ablate --------------------------------------------------------------------------------

CommandResult cmd_ablate(const ExperimentConfig& c) {
  CommandResult r;
  const auto data = load_data(c, c.model.seqlen);
  const auto split = load_split(c, data);
  const auto spec = run_spec(c, data.vocab);
  write_snapshot(c, c.out_dir, r);
  const auto table = run_ablation(spec, c.variants, split, c.seeds);

  std::ostringstream tsv;
  write_ablation_table(tsv, table);
  {
    auto os = open_out(c.out_dir / "ablation.tsv");
    os << tsv.str();
    r.files.push_back(c.out_dir / "ablation.tsv");
  }
  json rows = json::array();
  auto os = open_out(c.out_dir / "ablation.jsonl");
  r.files.push_back(c.out_dir / "ablation.jsonl");
  const MetricReport* ref = nullptr;
  for (const auto& row : table.rows) {
    if (row.variant == table.reference) ref = &row.report;
  }
  for (const auto& row : table.rows) {
    for (const auto& s : row.report.per_seed) {
      append_jsonl(os, {{"variant", row.variant}, {"seed", s.seed}, {"auc", s.auc}, {"logloss", s.logloss}});
    }
    json rec{{"variant", row.variant},
             {"auc_mean", row.report.auc},
             {"auc_std", row.report.auc_std},
             {"logloss_mean", row.report.logloss},
             {"logloss_std", row.report.logloss_std}};
    if (ref) {
      const auto imp = auc_improvement(*ref, row.report);
      rec["reference_auc_relative_improvement_pct"] = imp.relative_percent;
      rec["reference_auc_absolute_improvement_pts"] = imp.absolute_points;
    }
    if (row.has_attention) {
      rec["attention"] = {{"v_u", row.attention.overall.v_u},
                          {"v_s", row.attention.overall.v_s},
                          {"v_t", row.attention.overall.v_t},
                          {"positive", {{"v_u", row.attention.positive.v_u},
                                        {"v_s", row.attention.positive.v_s},
                                        {"v_t", row.attention.positive.v_t}}},
                          {"negative", {{"v_u", row.attention.negative.v_u},
                                        {"v_s", row.attention.negative.v_s},
                                        {"v_t", row.attention.negative.v_t}}}};
    }
    append_jsonl(os, rec);
    rows.push_back(rec);
  }
  r.summary = weights_header("(per row)", c.weights) + "seeds " + std::to_string(c.seeds.size()) +
              ", improvements are of " + table.reference + " over each row\n" + tsv.str();
  r.json = json{{"command", "ablate"}, {"reference", table.reference}, {"rows", rows}}.dump();
  return r;
}

// --- loss curves ---------------------------------------------------------------------------

std::string curve_name(const LambdaPoint& p) {
  return "lambda2-" + shortest(p.lambda2) + "_lambda3-" + shortest(p.lambda3) + ".tsv";
}

CommandResult cmd_loss_curves(const ExperimentConfig& c) {
  CommandResult r;
  const auto grid = parse_lambda_grid(c.lambda_grid);
  const auto data = load_data(c, c.model.seqlen);
  const auto split = load_split(c, data);
  write_snapshot(c, c.out_dir, r);
  const auto seed = c.seeds.front();
  auto metrics = open_out(c.out_dir / "metrics.jsonl");
  r.files.push_back(c.out_dir / "metrics.jsonl");

  json points = json::array();
  std::ostringstream s;
  s << "lambda1 fixed at 1, seed " << seed << "\n"
    << "lambda2  lambda3  iterations  L_y first  L_y last epoch  test AUC\n";
  std::set<std::string> names;
  for (const auto& p : grid) {
    const auto name = curve_name(p);
    if (!names.insert(name).second) throw ConfigError("lambda-grid repeats the point " + shortest(p.lambda2) + ":" + shortest(p.lambda3));
    ExperimentConfig pc = c;
    pc.weights.lambda1 = 1.0;
    pc.weights.lambda2 = p.lambda2;
    pc.weights.lambda3 = p.lambda3;
    const auto spec = run_spec(pc, data.vocab);
    const auto out = run_once(spec, split, seed);
    const auto& its = out.training.iterations;

    const auto path = c.out_dir / "loss_curves" / name;
    auto os = open_out(path);
    r.files.push_back(path);
    os << "# lambda1=1 lambda2=" << shortest(p.lambda2) << " lambda3=" << shortest(p.lambda3)
       << " alpha=" << shortest(c.weights.alpha) << " variant=" << c.variant << " seed=" << seed << '\n';
    os << "iteration\tepoch\tL_y\tL_d_global\tL_d0\tL_d1\ttotal\trho\ttau\tn\n";
    os.precision(17);
    for (const auto& it : its) {
      const auto& l = it.loss;
      os << it.iteration << '\t' << it.epoch << '\t' << l.ctr << '\t' << l.global << '\t' << l.intra0 << '\t'
         << l.intra1 << '\t' << l.total << '\t' << l.rho << '\t' << l.tau << '\t' << l.n << '\n';
    }

    double first = its.empty() ? 0.0 : its.front().loss.ctr;
    double last = 0.0;
    std::size_t count = 0;
    if (!its.empty()) {
      const auto final_epoch = its.back().epoch;
      for (const auto& it : its) {
        if (it.epoch == final_epoch) {
          last += it.loss.ctr;
          ++count;
        }
      }
      last /= static_cast<double>(count);
    }
    json rec{{"lambda1", 1.0},
             {"lambda2", p.lambda2},
             {"lambda3", p.lambda3},
             {"file", path.string()},
             {"iterations", its.size()},
             {"initial_ctr_loss", first},
             {"final_epoch_ctr_loss", last},
             {"test", metrics_json(out.test)}};
    append_jsonl(metrics, rec);
    points.push_back(rec);
    s << shortest(p.lambda2) << "  " << shortest(p.lambda3) << "  " << its.size() << "  " << fmt("%.5f", first) << "  "
      << fmt("%.5f", last) << "  " << fmt("%.5f", out.test.auc) << '\n';
  }
  r.summary = s.str();
  r.json = json{{"command", "loss-curves"}, {"points", points}}.dump();
  return r;
}

// --- export-pca ----------------------------------------------------------------------------

CommandResult cmd_export_pca(const ExperimentConfig& c) {
  CommandResult r;
  const auto run = load_trained(c);
  write_snapshot(c, c.out_dir, r);
  // Training instances cover both domains.
  const auto& inst = run.split.train;
  if (inst.empty()) throw DataError("training split is empty");
  const auto states = collect_states(run.ckpt.model, inst);
  const auto spec = pca_project(states.h_spec, states.n, states.dim);
  const auto da = pca_project(states.h_da, states.n, states.dim);

  std::vector<std::size_t> source_pos, target_pos;
  for (std::size_t i = 0; i < inst.size(); ++i) {
    if (inst[i].y == 0.0) continue;
    (inst[i].domain == kTargetDomain ? target_pos : source_pos).push_back(i);
  }
  auto gap = [&](const ProjectionReport& p) {
    if (source_pos.empty() || target_pos.empty()) return 0.0;
    return distance(centroid(p, source_pos), centroid(p, target_pos));
  };
  const double dist_spec = gap(spec), dist_da = gap(da);

  auto os = open_out(c.out_dir / "pca.tsv");
  r.files.push_back(c.out_dir / "pca.tsv");
  os << "x\ty\tdomain\tlabel\tstage\n";
  os.precision(10);
  for (const auto* proj : {&spec, &da}) {
    const char* stage = proj == &spec ? "spec" : "DA";
    for (std::size_t i = 0; i < proj->n; ++i) {
      os << proj->x(i) << '\t' << proj->y(i) << '\t' << inst[i].domain << '\t' << inst[i].y << '\t' << stage << '\n';
    }
  }
  json rec{{"command", "export-pca"},
           {"points", inst.size()},
           {"explained_spec", {spec.explained[0], spec.explained[1]}},
           {"explained_da", {da.explained[0], da.explained[1]}},
           {"centroid_distance_spec", dist_spec},
           {"centroid_distance_da", dist_da}};
  auto ms = open_out(c.out_dir / "metrics.jsonl");
  append_jsonl(ms, rec);
  r.files.push_back(c.out_dir / "metrics.jsonl");
  r.summary = "projected " + std::to_string(inst.size()) + " training instances\n" +
              "positive-cluster centroid distance  spec " + fmt("%.5f", dist_spec) + "  DA " + fmt("%.5f", dist_da) + "\n";
  r.json = rec.dump();
  return r;
}

// --- synth-data ----------------------------------------------------------------------------

CommandResult cmd_synth_data(const ExperimentConfig& c) {
  CommandResult r;
  write_synthetic_dataset(c.synth, c.out_dir);
  write_snapshot(c, c.out_dir, r);
  for (const char* f : {"target.csv", "source.csv", "schema.txt"}) r.files.push_back(c.out_dir / f);
  r.summary = "wrote " + std::to_string(c.synth.target_records) + " target and " +
              std::to_string(c.synth.source_records) + " source rows to " + c.out_dir.string() + "\n";
  r.json = json{{"command", "synth-data"},
                {"target_records", c.synth.target_records},
                {"source_records", c.synth.source_records},
                {"dir", c.out_dir.string()}}
               .dump();
  return r;
}

}  // namespace

const std::vector<std::string>& command_names() {
  static const std::vector<std::string> names{"toy",         "resample",   "train",     "eval",
                                              "ablate",      "loss-curves", "export-pca", "synth-data"};
  return names;
}

const std::vector<std::string>& command_help() {
  static const std::vector<std::string> help{
      "two-moons study: DADIN-toy against the plain network, boundaries and PCA exports",
      "split the target/source logs into train/valid/test manifests with a cold-start cohort",
      "train one variant and save its best-validation checkpoint",
      "evaluate a checkpoint on the test split and the cold-start cohort",
      "train several variants under identical seeds and tabulate AUC/LogLoss",
      "record loss trajectories over a grid of lambda2:lambda3 settings",
      "project h_spec and h_DA of a checkpoint onto two principal components",
      "write a synthetic two-domain click log with a rotated preference shift"};
  return help;
}

CommandResult run_command(std::string_view name, const ExperimentConfig& config) {
  config.validate();
  try {
    if (name == "toy") return cmd_toy(config);
    if (name == "resample") return cmd_resample(config);
    if (name == "train") return cmd_train(config);
    if (name == "eval") return cmd_eval(config);
    if (name == "ablate") return cmd_ablate(config);
    if (name == "loss-curves") return cmd_loss_curves(config);
    if (name == "export-pca") return cmd_export_pca(config);
    if (name == "synth-data") return cmd_synth_data(config);
  } catch (const DivergenceError& e) {
    throw DivergenceError(std::string(e.what()) + "\nconfiguration:\n" + config.snapshot());
  }
  std::string valid;
  for (const auto& n : command_names()) valid += (valid.empty() ? "" : ", ") + n;
  throw ConfigError("unknown command '" + std::string(name) + "' (valid: " + valid + ")");
}

}  // namespace dadin
