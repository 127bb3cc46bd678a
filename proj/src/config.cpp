#include "dadin/config.hpp"

#include <charconv>
#include <fstream>
#include <functional>
#include <sstream>

#include "dadin/errors.hpp"

namespace dadin {

namespace {

std::string trim(std::string_view s) {
  const auto b = s.find_first_not_of(" \t\r\n");
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(" \t\r\n");
  return std::string(s.substr(b, e - b + 1));
}

[[noreturn]] void bad_value(std::string_view key, std::string_view value, std::string_view expected) {
  throw ConfigError("config key '" + std::string(key) + "': '" + std::string(value) + "' is not " +
                    std::string(expected));
}

double parse_double(std::string_view key, std::string_view text) {
  const auto s = trim(text);
  double v = 0.0;
  const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (s.empty() || ec != std::errc() || ptr != s.data() + s.size()) bad_value(key, text, "a number");
  return v;
}

std::uint64_t parse_uint(std::string_view key, std::string_view text) {
  const auto s = trim(text);
  std::uint64_t v = 0;
  const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (s.empty() || ec != std::errc() || ptr != s.data() + s.size()) bad_value(key, text, "a nonnegative integer");
  return v;
}

bool parse_bool(std::string_view key, std::string_view text) {
  const auto s = trim(text);
  if (s == "true" || s == "1" || s == "yes" || s == "on") return true;
  if (s == "false" || s == "0" || s == "no" || s == "off") return false;
  bad_value(key, text, "a boolean");
}

std::vector<std::string> split_list(std::string_view text) {
  std::vector<std::string> out;
  std::string item;
  std::stringstream ss{std::string(text)};
  while (std::getline(ss, item, ',')) {
    auto t = trim(item);
    if (!t.empty()) out.push_back(std::move(t));
  }
  return out;
}

template <class T>
std::vector<T> parse_uint_list(std::string_view key, std::string_view text) {
  std::vector<T> out;
  for (const auto& item : split_list(text)) out.push_back(static_cast<T>(parse_uint(key, item)));
  return out;
}

std::string format_double(double v) {
  char buf[64];
  const auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, ptr);
}

template <class T>
std::string join(const std::vector<T>& xs) {
  std::string out;
  for (const auto& x : xs) {
    if (!out.empty()) out += ',';
    if constexpr (std::is_same_v<T, std::string>) {
      out += x;
    } else {
      out += std::to_string(x);
    }
  }
  return out;
}

struct Entry {
  const char* name;
  const char* help;
  std::function<std::string(const ExperimentConfig&)> get;
  std::function<void(ExperimentConfig&, std::string_view)> set;
};

// Helpers that bind a key to one member through an accessor.
template <class F>
Entry real(const char* name, const char* help, F field) {
  return {name, help, [field](const ExperimentConfig& c) { return format_double(field(const_cast<ExperimentConfig&>(c))); },
          [field, name](ExperimentConfig& c, std::string_view v) { field(c) = parse_double(name, v); }};
}

template <class F>
Entry count(const char* name, const char* help, F field) {
  return {name, help, [field](const ExperimentConfig& c) { return std::to_string(field(const_cast<ExperimentConfig&>(c))); },
          [field, name](ExperimentConfig& c, std::string_view v) {
            using T = std::remove_reference_t<decltype(field(c))>;
            field(c) = static_cast<T>(parse_uint(name, v));
          }};
}

template <class F>
Entry flag(const char* name, const char* help, F field) {
  return {name, help,
          [field](const ExperimentConfig& c) { return std::string(field(const_cast<ExperimentConfig&>(c)) ? "true" : "false"); },
          [field, name](ExperimentConfig& c, std::string_view v) { field(c) = parse_bool(name, v); }};
}

template <class F>
Entry path(const char* name, const char* help, F field) {
  return {name, help, [field](const ExperimentConfig& c) { return field(const_cast<ExperimentConfig&>(c)).string(); },
          [field](ExperimentConfig& c, std::string_view v) { field(c) = trim(v); }};
}

template <class F>
Entry sizes(const char* name, const char* help, F field) {
  return {name, help, [field](const ExperimentConfig& c) { return join(field(const_cast<ExperimentConfig&>(c))); },
          [field, name](ExperimentConfig& c, std::string_view v) {
            field(c) = parse_uint_list<std::size_t>(name, v);
          }};
}

#define FIELD(expr) [](ExperimentConfig & c) -> auto& { return expr; }

const std::vector<Entry>& entries() {
  static const std::vector<Entry> table{
      count("embed-dim", "embedding width d", FIELD(c.model.embed_dim)),
      count("seqlen", "behaviour history length per domain", FIELD(c.model.seqlen)),
      real("dropout", "label predictor dropout rate", FIELD(c.model.dropout)),
      real("threshold-T", "click threshold routing instances to the intra-class classifiers", FIELD(c.model.threshold)),
      sizes("dnn-hidden", "hidden widths of the DNN after bi-interaction; the output width is d", FIELD(c.model.dnn_hidden)),
      count("label-hidden", "label predictor hidden width", FIELD(c.model.label_hidden)),
      flag("detach-gate", "stop gradients through the predicted click where it gates the intra-class classifiers",
           FIELD(c.model.detach_gate)),
      {"variant", "model variant: DADIN1 ... DADIN9 or DADIN++", [](const ExperimentConfig& c) { return c.variant; },
       [](ExperimentConfig& c, std::string_view v) { c.variant = trim(v); }},
      real("lambda1", "weight of the click loss", FIELD(c.weights.lambda1)),
      real("lambda2", "weight of the global domain confusion loss", FIELD(c.weights.lambda2)),
      real("lambda3", "weight of the intra-class domain confusion losses", FIELD(c.weights.lambda3)),
      real("alpha", "share of the class-0 intra-class loss", FIELD(c.weights.alpha)),
      {"optimizer", "adam or sgd",
       [](const ExperimentConfig& c) { return std::string(c.train.optimizer.kind == OptimizerKind::kAdam ? "adam" : "sgd"); },
       [](ExperimentConfig& c, std::string_view v) {
         const auto s = trim(v);
         if (s == "adam") {
           c.train.optimizer.kind = OptimizerKind::kAdam;
         } else if (s == "sgd") {
           c.train.optimizer.kind = OptimizerKind::kSgd;
         } else {
           bad_value("optimizer", v, "adam or sgd");
         }
       }},
      real("learning-rate", "optimizer step size", FIELD(c.train.optimizer.learning_rate)),
      count("batch-size", "instances per mini-batch", FIELD(c.train.batch_size)),
      count("epochs", "maximum training epochs", FIELD(c.train.epochs)),
      count("patience", "evaluations without validation AUC improvement before stopping", FIELD(c.train.patience)),
      count("eval-every", "epochs between validation passes", FIELD(c.train.eval_every)),
      real("max-grad-norm", "joint gradient norm cap, 0 disables clipping", FIELD(c.train.max_grad_norm)),
      {"intra-normalizer", "branch (1/rho, 1/tau) or batch (1/n) normalisation of the intra-class losses",
       [](const ExperimentConfig& c) {
         return std::string(c.train.intra_normalizer == IntraNormalizer::kBranch ? "branch" : "batch");
       },
       [](ExperimentConfig& c, std::string_view v) {
         const auto s = trim(v);
         if (s == "branch") {
           c.train.intra_normalizer = IntraNormalizer::kBranch;
         } else if (s == "batch") {
           c.train.intra_normalizer = IntraNormalizer::kBatch;
         } else {
           bad_value("intra-normalizer", v, "branch or batch");
         }
       }},
      real("a-train", "share of target-domain users assigned to training", FIELD(c.split.a_train)),
      real("a-cross", "share of training users whose last target day goes to validation/test", FIELD(c.split.a_cross)),
      real("presample", "share of target-domain users kept before splitting", FIELD(c.split.presample)),
      count("split-seed", "seed of the resampling shuffle", FIELD(c.split_seed)),
      flag("skip-bad-rows", "skip unparseable CSV rows with a warning instead of failing", FIELD(c.skip_bad_rows)),
      count("moons-source", "source-domain moon points", FIELD(c.toy.moons.n_source)),
      count("moons-target", "target-domain moon points", FIELD(c.toy.moons.n_target)),
      real("moons-rotation", "target rotation in degrees", FIELD(c.toy.moons.rotation_degrees)),
      real("moons-noise", "gaussian noise on moon points", FIELD(c.toy.moons.noise_std)),
      real("moons-labeled-fraction", "share of target points with visible labels", FIELD(c.toy.moons.target_labeled_fraction)),
      sizes("toy-widths", "tower widths of the toy network", FIELD(c.toy.widths)),
      count("toy-label-hidden", "label predictor width of the toy network", FIELD(c.toy.label_hidden)),
      count("toy-epochs", "toy training epochs", FIELD(c.toy.epochs)),
      count("toy-batch-size", "toy mini-batch size", FIELD(c.toy.batch_size)),
      real("toy-learning-rate", "toy Adam step size", FIELD(c.toy.learning_rate)),
      count("toy-grid", "decision boundary mesh points per axis", FIELD(c.toy.grid)),
      count("synth-users", "synthetic users", FIELD(c.synth.users)),
      real("synth-target-user-fraction", "share of synthetic users active in the target domain",
           FIELD(c.synth.target_user_fraction)),
      count("synth-target-items", "synthetic target items", FIELD(c.synth.target_items)),
      count("synth-source-items", "synthetic source items", FIELD(c.synth.source_items)),
      count("synth-target-records", "synthetic target rows", FIELD(c.synth.target_records)),
      count("synth-source-records", "synthetic source rows", FIELD(c.synth.source_records)),
      count("synth-days", "distinct synthetic days", FIELD(c.synth.days)),
      count("synth-latent-dim", "latent preference dimension", FIELD(c.synth.latent_dim)),
      real("synth-rotation", "rotation of target preferences in degrees", FIELD(c.synth.rotation_degrees)),
      real("synth-signal", "logit scale of the preference match", FIELD(c.synth.signal)),
      real("synth-target-bias", "target click logit offset", FIELD(c.synth.target_bias)),
      real("synth-source-bias", "source click logit offset", FIELD(c.synth.source_bias)),
      count("synth-seed", "seed of the synthetic generator", FIELD(c.synth.seed)),
      path("target-csv", "target-domain CSV", FIELD(c.target_csv)),
      path("source-csv", "source-domain CSV", FIELD(c.source_csv)),
      path("schema", "column role file", FIELD(c.schema)),
      path("split-dir", "directory holding split manifests and the vocabulary", FIELD(c.split_dir)),
      path("checkpoint", "model checkpoint file", FIELD(c.checkpoint)),
      path("out-dir", "output directory", FIELD(c.out_dir)),
      {"seeds", "comma-separated run seeds", [](const ExperimentConfig& c) { return join(c.seeds); },
       [](ExperimentConfig& c, std::string_view v) { c.seeds = parse_uint_list<std::uint64_t>("seeds", v); }},
      {"variants", "comma-separated variants for ablate", [](const ExperimentConfig& c) { return join(c.variants); },
       [](ExperimentConfig& c, std::string_view v) { c.variants = split_list(v); }},
      {"lambda-grid", "lambda2:lambda3 pairs for loss-curves", [](const ExperimentConfig& c) { return c.lambda_grid; },
       [](ExperimentConfig& c, std::string_view v) { c.lambda_grid = trim(v); }},
  };
  return table;
}

#undef FIELD

const Entry& find_entry(std::string_view key) {
  for (const auto& e : entries()) {
    if (key == e.name) return e;
  }
  throw ConfigError("unknown config key '" + std::string(key) + "'");
}

}  // namespace

ExperimentConfig::ExperimentConfig() {
  model.dnn_hidden = {512, 128};
  variants = variant_names();
}

void ExperimentConfig::set(std::string_view key, std::string_view value) { find_entry(key).set(*this, value); }

std::string ExperimentConfig::get(std::string_view key) const { return find_entry(key).get(*this); }

void ExperimentConfig::load_text(std::string_view text, const std::string& source_name) {
  std::stringstream ss{std::string(text)};
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(ss, line)) {
    ++lineno;
    const auto hash = line.find('#');
    if (hash != std::string::npos) line.erase(hash);
    const auto t = trim(line);
    if (t.empty()) continue;
    const auto eq = t.find('=');
    if (eq == std::string::npos) {
      throw ConfigError(source_name + ":" + std::to_string(lineno) + ": expected 'key = value'");
    }
    try {
      set(trim(std::string_view(t).substr(0, eq)), std::string_view(t).substr(eq + 1));
    } catch (const ConfigError& e) {
      throw ConfigError(source_name + ":" + std::to_string(lineno) + ": " + e.what());
    }
  }
}

void ExperimentConfig::load_file(const std::filesystem::path& path) {
  std::ifstream is(path);
  if (!is) throw IoError("cannot read config file " + path.string());
  std::stringstream buf;
  buf << is.rdbuf();
  load_text(buf.str(), path.string());
}

std::string ExperimentConfig::snapshot() const {
  std::string out;
  for (const auto& e : entries()) out += std::string(e.name) + " = " + e.get(*this) + "\n";
  return out;
}

void ExperimentConfig::write_snapshot(const std::filesystem::path& path) const {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream os(path);
  if (!os) throw IoError("cannot write " + path.string());
  os << snapshot();
}

void ExperimentConfig::validate() const {
  ModelConfig m = model;
  m.variant = variant_by_name(variant);
  m.validate();
  weights.validate();
  train.validate();
  split.validate();
  toy.validate();
  synth.validate();
  if (seeds.empty()) throw ConfigError("seeds must list at least one seed");
  for (const auto& v : variants) variant_by_name(v);
  parse_lambda_grid(lambda_grid);
}

const std::vector<ConfigKey>& config_keys() {
  static const std::vector<ConfigKey> keys = [] {
    std::vector<ConfigKey> out;
    for (const auto& e : entries()) out.push_back({e.name, e.help});
    return out;
  }();
  return keys;
}

}  // namespace dadin
