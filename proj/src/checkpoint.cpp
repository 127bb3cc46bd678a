#include "dadin/checkpoint.hpp"

#include <charconv>
#include <fstream>
#include <istream>
#include <ostream>
#include <sstream>

#include "dadin/errors.hpp"

namespace dadin {

namespace {

std::string format_double(double x) {
  char buf[64];
  auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, x);
  return std::string(buf, ptr);
}

std::string join_sizes(const std::vector<std::size_t>& v) {
  std::string s;
  for (std::size_t i = 0; i < v.size(); ++i) s += (i ? "," : "") + std::to_string(v[i]);
  return s.empty() ? "-" : s;
}

std::vector<std::size_t> split_sizes(const std::string& s) {
  std::vector<std::size_t> out;
  if (s == "-") return out;
  std::stringstream ss(s);
  std::string part;
  while (std::getline(ss, part, ',')) out.push_back(std::stoul(part));
  return out;
}

std::map<std::string, std::string> config_meta(const ModelConfig& c) {
  const auto& v = c.variant;
  return {
      {"input", c.input == InputKind::kDense ? "dense" : "categorical"},
      {"embed_dim", std::to_string(c.embed_dim)},
      {"seqlen", std::to_string(c.seqlen)},
      {"profile_vocab", std::to_string(c.profile_vocab)},
      {"target_item_vocab", std::to_string(c.target_item_vocab)},
      {"source_item_vocab", std::to_string(c.source_item_vocab)},
      {"dnn_hidden", join_sizes(c.dnn_hidden)},
      {"dense_input_dim", std::to_string(c.dense_input_dim)},
      {"tower_widths", join_sizes(c.tower_widths)},
      {"label_hidden", std::to_string(c.label_hidden)},
      {"dropout", format_double(c.dropout)},
      {"threshold", format_double(c.threshold)},
      {"detach_gate", c.detach_gate ? "1" : "0"},
      {"variant.sequence_attention", v.sequence_aggregation == SequenceAggregation::kAttention ? "1" : "0"},
      {"variant.interest_attention", v.interest_concat == InterestConcat::kAttention ? "1" : "0"},
      {"variant.bi_interaction", v.use_bi_interaction ? "1" : "0"},
      {"variant.dnn", v.use_dnn ? "1" : "0"},
      {"variant.domain_agnostic", v.use_domain_agnostic_layer ? "1" : "0"},
      {"variant.global_confusion", v.use_global_confusion ? "1" : "0"},
      {"variant.intra_confusion", v.use_intra_confusion ? "1" : "0"},
  };
}

ModelConfig config_from_meta(const std::map<std::string, std::string>& meta) {
  auto get = [&](const std::string& k) -> const std::string& {
    auto it = meta.find(k);
    if (it == meta.end()) throw CheckpointError("checkpoint lacks meta key '" + k + "'");
    return it->second;
  };
  auto flag = [&](const std::string& k) { return get(k) == "1"; };
  ModelConfig c;
  try {
    c.input = get("input") == "dense" ? InputKind::kDense : InputKind::kCategorical;
    c.embed_dim = std::stoul(get("embed_dim"));
    c.seqlen = std::stoul(get("seqlen"));
    c.profile_vocab = std::stoul(get("profile_vocab"));
    c.target_item_vocab = std::stoul(get("target_item_vocab"));
    c.source_item_vocab = std::stoul(get("source_item_vocab"));
    c.dnn_hidden = split_sizes(get("dnn_hidden"));
    c.dense_input_dim = std::stoul(get("dense_input_dim"));
    c.tower_widths = split_sizes(get("tower_widths"));
    c.label_hidden = std::stoul(get("label_hidden"));
    c.dropout = std::stod(get("dropout"));
    c.threshold = std::stod(get("threshold"));
  } catch (const std::logic_error&) {
    throw CheckpointError("checkpoint meta holds a malformed number");
  }
  c.detach_gate = flag("detach_gate");
  auto& v = c.variant;
  v.sequence_aggregation = flag("variant.sequence_attention") ? SequenceAggregation::kAttention : SequenceAggregation::kAverage;
  v.interest_concat = flag("variant.interest_attention") ? InterestConcat::kAttention : InterestConcat::kEqual;
  v.use_bi_interaction = flag("variant.bi_interaction");
  v.use_dnn = flag("variant.dnn");
  v.use_domain_agnostic_layer = flag("variant.domain_agnostic");
  v.use_global_confusion = flag("variant.global_confusion");
  v.use_intra_confusion = flag("variant.intra_confusion");
  return c;
}

}  // namespace

void save_checkpoint(std::ostream& os, const DadinModel& model, const std::map<std::string, std::string>& extra_meta) {
  os << kCheckpointMagic << " v" << kCheckpointVersion << '\n';
  for (const auto& [k, v] : config_meta(model.config())) os << "meta " << k << ' ' << v << '\n';
  for (const auto& [k, v] : extra_meta) os << "meta x." << k << ' ' << v << '\n';
  for (const auto& p : model.params().entries()) {
    const auto& shape = p.value.shape();
    os << "param " << partition_name(p.partition) << ' ' << p.name << ' ' << shape.size();
    for (auto s : shape) os << ' ' << s;
    os << '\n';
    const auto values = p.value.values();
    for (std::size_t i = 0; i < values.size(); ++i) os << (i ? " " : "") << format_double(values[i]);
    os << '\n';
  }
  os << "end\n";
}

void save_checkpoint(const std::filesystem::path& path, const DadinModel& model,
                     const std::map<std::string, std::string>& extra_meta) {
  std::ofstream os(path);
  if (!os) throw IoError("cannot write checkpoint " + path.string());
  save_checkpoint(os, model, extra_meta);
  if (!os) throw IoError("failed writing checkpoint " + path.string());
}

LoadedCheckpoint load_checkpoint(std::istream& is) {
  std::string line;
  if (!std::getline(is, line)) throw CheckpointError("empty checkpoint");
  {
    std::istringstream hs(line);
    std::string magic, version;
    hs >> magic >> version;
    if (magic != kCheckpointMagic) throw CheckpointError("not a checkpoint file (header '" + line + "')");
    if (version != "v" + std::to_string(kCheckpointVersion)) {
      throw CheckpointError("unsupported checkpoint version " + version + " (expected v" +
                            std::to_string(kCheckpointVersion) + ")");
    }
  }
  std::map<std::string, std::string> meta, extra;
  ParamStore params;
  bool ended = false;
  while (std::getline(is, line)) {
    if (line.empty()) continue;
    std::istringstream ls(line);
    std::string kind;
    ls >> kind;
    if (kind == "meta") {
      std::string k, v;
      ls >> k;
      std::getline(ls >> std::ws, v);
      if (k.rfind("x.", 0) == 0) {
        extra[k.substr(2)] = v;
      } else {
        meta[k] = v;
      }
    } else if (kind == "param") {
      std::string part, name;
      std::size_t ndim = 0;
      ls >> part >> name >> ndim;
      Shape shape(ndim);
      for (auto& s : shape) ls >> s;
      if (!ls) throw CheckpointError("malformed param header: " + line);
      std::size_t count = 1;
      for (auto s : shape) count *= s;
      std::string data;
      if (!std::getline(is, data)) throw CheckpointError("truncated values for '" + name + "'");
      std::vector<double> values;
      values.reserve(count);
      const char* p = data.data();
      const char* end = data.data() + data.size();
      while (p < end) {
        while (p < end && *p == ' ') ++p;
        if (p == end) break;
        double x = 0.0;
        auto [next, ec] = std::from_chars(p, end, x);
        if (ec != std::errc()) throw CheckpointError("unreadable value in '" + name + "'");
        values.push_back(x);
        p = next;
      }
      if (values.size() != count) {
        throw CheckpointError("'" + name + "' holds " + std::to_string(values.size()) + " values, shape needs " +
                              std::to_string(count));
      }
      Partition partition;
      try {
        partition = parse_partition(part);
      } catch (const Error&) {
        throw CheckpointError("unknown partition '" + part + "' for '" + name + "'");
      }
      params.add(name, partition, Tensor(shape, std::move(values), true));
    } else if (kind == "end") {
      ended = true;
      break;
    } else {
      throw CheckpointError("unexpected checkpoint line: " + line);
    }
  }
  if (!ended) throw CheckpointError("checkpoint is truncated (no end marker)");
  auto config = config_from_meta(meta);
  try {
    config.validate();
  } catch (const ConfigError& e) {
    throw CheckpointError(std::string("checkpoint configuration is invalid: ") + e.what());
  }
  return {DadinModel(std::move(config), std::move(params)), std::move(extra)};
}

LoadedCheckpoint load_checkpoint(const std::filesystem::path& path) {
  std::ifstream is(path);
  if (!is) throw IoError("cannot read checkpoint " + path.string());
  return load_checkpoint(is);
}

}  // namespace dadin
