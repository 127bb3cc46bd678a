#include "dadin/data.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <istream>
#include <numbers>
#include <ostream>
#include <random>
#include <set>
#include <sstream>
#include <unordered_map>
#include <unordered_set>

#include "dadin/errors.hpp"

namespace dadin {

namespace {

std::string trim(std::string_view s) {
  const auto b = s.find_first_not_of(" \t\r\n");
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(" \t\r\n");
  return std::string(s.substr(b, e - b + 1));
}

bool parse_double(std::string_view s, double& out) {
  const auto t = trim(s);
  if (t.empty()) return false;
  auto [ptr, ec] = std::from_chars(t.data(), t.data() + t.size(), out);
  return ec == std::errc() && ptr == t.data() + t.size() && std::isfinite(out);
}

bool parse_int64(std::string_view s, std::int64_t& out) {
  const auto t = trim(s);
  if (t.empty()) return false;
  auto [ptr, ec] = std::from_chars(t.data(), t.data() + t.size(), out);
  if (ec == std::errc() && ptr == t.data() + t.size()) return true;
  double d = 0.0;
  if (!parse_double(t, d) || d != std::floor(d)) return false;
  out = static_cast<std::int64_t>(d);
  return true;
}

// RFC-4180 style: commas separate, double quotes wrap fields, "" escapes a quote.
// Returns false on an unterminated quote.
bool split_csv_line(std::string_view line, std::vector<std::string>& fields) {
  fields.clear();
  std::string cur;
  bool quoted = false;
  for (std::size_t i = 0; i < line.size(); ++i) {
    const char c = line[i];
    if (quoted) {
      if (c == '"') {
        if (i + 1 < line.size() && line[i + 1] == '"') {
          cur.push_back('"');
          ++i;
        } else {
          quoted = false;
        }
      } else {
        cur.push_back(c);
      }
    } else if (c == '"') {
      quoted = true;
    } else if (c == ',') {
      fields.push_back(std::move(cur));
      cur.clear();
    } else if (c != '\r') {
      cur.push_back(c);
    }
  }
  if (quoted) return false;
  fields.push_back(std::move(cur));
  return true;
}

std::string_view role_name(ColumnRole r) {
  switch (r) {
    case ColumnRole::kUserKey: return "user_key";
    case ColumnRole::kProfile: return "profile";
    case ColumnRole::kItem: return "item";
    case ColumnRole::kLabel: return "label";
    case ColumnRole::kTimestamp: return "timestamp";
    case ColumnRole::kIgnore: return "ignore";
  }
  return "ignore";
}

ColumnRole parse_role(std::string_view s, std::size_t line) {
  for (auto r : {ColumnRole::kUserKey, ColumnRole::kProfile, ColumnRole::kItem, ColumnRole::kLabel,
                 ColumnRole::kTimestamp, ColumnRole::kIgnore}) {
    if (role_name(r) == s) return r;
  }
  throw SchemaError("schema line " + std::to_string(line) + ": unknown role '" + std::string(s) +
                    "' (expected user_key, profile, item, label, timestamp or ignore)");
}

std::string_view item_group(int domain) {
  return domain == kTargetDomain ? Vocabulary::kTargetItem : Vocabulary::kSourceItem;
}

bool is_missing(std::string_view cell) {
  const auto t = trim(cell);
  return t.empty() || t == Vocabulary::kNaValue;
}

}  // namespace

// --- Vocabulary ---------------------------------------------------------------------------

std::uint32_t Vocabulary::id(std::string_view group, std::string_view key) {
  if (frozen_) return lookup(group, key);
  auto it = groups_.find(group);
  if (it == groups_.end()) it = groups_.emplace(std::string(group), Group{}).first;
  auto& g = it->second;
  auto found = g.ids.find(std::string(key));
  if (found != g.ids.end()) return found->second;
  const auto next = static_cast<std::uint32_t>(g.keys.size());
  g.ids.emplace(std::string(key), next);
  g.keys.emplace_back(key);
  return next;
}

std::uint32_t Vocabulary::lookup(std::string_view group, std::string_view key) const {
  auto it = groups_.find(group);
  if (it == groups_.end()) return kUnknownId;
  auto found = it->second.ids.find(std::string(key));
  return found == it->second.ids.end() ? kUnknownId : found->second;
}

std::size_t Vocabulary::size(std::string_view group) const {
  auto it = groups_.find(group);
  return it == groups_.end() ? 2 : it->second.keys.size();
}

const std::string& Vocabulary::key(std::string_view group, std::uint32_t id) const {
  auto it = groups_.find(group);
  if (it == groups_.end() || id >= it->second.keys.size()) {
    throw LookupError("vocabulary group '" + std::string(group) + "' has no id " + std::to_string(id));
  }
  return it->second.keys[id];
}

void Vocabulary::save(std::ostream& os) const {
  os << "vocab v1\n";
  for (const auto& [name, g] : groups_) {
    os << "group " << name << ' ' << g.keys.size() << '\n';
    for (std::size_t i = 2; i < g.keys.size(); ++i) os << i << '\t' << g.keys[i] << '\n';
  }
}

void Vocabulary::save(const std::filesystem::path& path) const {
  std::ofstream os(path);
  if (!os) throw IoError("cannot write vocabulary to " + path.string());
  save(os);
}

Vocabulary Vocabulary::load(std::istream& is) {
  std::string line;
  if (!std::getline(is, line) || trim(line) != "vocab v1") throw DataError("vocabulary: missing 'vocab v1' header");
  Vocabulary v;
  Group* current = nullptr;
  std::size_t line_no = 1;
  while (std::getline(is, line)) {
    ++line_no;
    if (line.empty()) continue;
    if (line.rfind("group ", 0) == 0) {
      std::istringstream ss(line.substr(6));
      std::string name;
      ss >> name;
      current = &v.groups_.emplace(name, Group{}).first->second;
      continue;
    }
    const auto tab = line.find('\t');
    std::uint64_t id = 0;
    if (current == nullptr || tab == std::string::npos ||
        std::from_chars(line.data(), line.data() + tab, id).ec != std::errc() || id != current->keys.size()) {
      throw DataError("vocabulary line " + std::to_string(line_no) + " is malformed");
    }
    std::string key = line.substr(tab + 1);
    if (!key.empty() && key.back() == '\r') key.pop_back();
    current->ids.emplace(key, static_cast<std::uint32_t>(id));
    current->keys.push_back(std::move(key));
  }
  return v;
}

Vocabulary Vocabulary::load(const std::filesystem::path& path) {
  std::ifstream is(path);
  if (!is) throw IoError("cannot read vocabulary " + path.string());
  return load(is);
}

bool Vocabulary::operator==(const Vocabulary& other) const {
  if (groups_.size() != other.groups_.size()) return false;
  for (const auto& [name, g] : groups_) {
    auto it = other.groups_.find(name);
    if (it == other.groups_.end() || it->second.keys != g.keys) return false;
  }
  return true;
}

// --- Schema -------------------------------------------------------------------------------

std::vector<ColumnSpec> Schema::columns(int domain) const {
  auto cols = shared;
  const auto& extra = domain == kTargetDomain ? target_only : source_only;
  cols.insert(cols.end(), extra.begin(), extra.end());
  return cols;
}

Schema Schema::parse(std::istream& is) {
  Schema s;
  std::vector<ColumnSpec>* section = &s.shared;
  std::string raw;
  std::size_t line_no = 0;
  while (std::getline(is, raw)) {
    ++line_no;
    const auto hash = raw.find('#');
    const auto line = trim(std::string_view(raw).substr(0, hash));
    if (line.empty()) continue;
    if (line == "[target]") {
      section = &s.target_only;
      continue;
    }
    if (line == "[source]") {
      section = &s.source_only;
      continue;
    }
    const auto eq = line.find('=');
    if (eq == std::string::npos) {
      throw SchemaError("schema line " + std::to_string(line_no) + ": expected 'column = role'");
    }
    const auto lhs = trim(std::string_view(line).substr(0, eq));
    const auto rhs = trim(std::string_view(line).substr(eq + 1));
    if (lhs == "label_threshold") {
      if (!parse_double(rhs, s.label_threshold)) {
        throw SchemaError("schema line " + std::to_string(line_no) + ": label_threshold is not a number");
      }
      s.has_label_threshold = true;
      continue;
    }
    if (lhs.empty()) throw SchemaError("schema line " + std::to_string(line_no) + ": empty column name");
    section->push_back({lhs, parse_role(rhs, line_no)});
  }
  for (int domain : {kTargetDomain, kSourceDomain}) {
    const auto cols = s.columns(domain);
    auto count = [&](ColumnRole r) {
      return std::count_if(cols.begin(), cols.end(), [r](const ColumnSpec& c) { return c.role == r; });
    };
    const char* name = domain == kTargetDomain ? "target" : "source";
    if (count(ColumnRole::kUserKey) != 1) throw SchemaError(std::string("schema needs exactly one user_key column for the ") + name + " domain");
    if (count(ColumnRole::kLabel) != 1) throw SchemaError(std::string("schema needs exactly one label column for the ") + name + " domain");
    if (count(ColumnRole::kTimestamp) != 1) throw SchemaError(std::string("schema needs exactly one timestamp column for the ") + name + " domain");
    if (count(ColumnRole::kItem) < 1) throw SchemaError(std::string("schema needs an item column for the ") + name + " domain");
  }
  return s;
}

Schema Schema::load(const std::filesystem::path& path) {
  std::ifstream is(path);
  if (!is) throw IoError("cannot read schema " + path.string());
  return parse(is);
}

void Schema::save(std::ostream& os) const {
  if (has_label_threshold) os << "label_threshold = " << label_threshold << '\n';
  for (const auto& c : shared) os << c.name << " = " << role_name(c.role) << '\n';
  if (!target_only.empty()) os << "[target]\n";
  for (const auto& c : target_only) os << c.name << " = " << role_name(c.role) << '\n';
  if (!source_only.empty()) os << "[source]\n";
  for (const auto& c : source_only) os << c.name << " = " << role_name(c.role) << '\n';
}

// --- ingest ---------------------------------------------------------------------------------

void ingest_csv_stream(std::istream& is, const std::string& source_name, int domain, const Schema& schema,
                       Vocabulary& vocab, const IngestOptions& options, InteractionLog& log) {
  std::string line;
  std::size_t line_no = 0;
  // An empty file carries no header and no rows.
  while (std::getline(is, line)) {
    ++line_no;
    if (!trim(line).empty()) break;
  }
  if (trim(line).empty()) return;

  std::vector<std::string> header;
  if (!split_csv_line(line, header)) throw SchemaError(source_name + ": header line is not valid CSV");
  std::unordered_map<std::string, std::size_t> position;
  for (std::size_t i = 0; i < header.size(); ++i) position.emplace(trim(header[i]), i);

  struct Bound {
    ColumnSpec spec;
    std::size_t index;
  };
  std::vector<Bound> bound;
  for (const auto& c : schema.columns(domain)) {
    if (c.role == ColumnRole::kIgnore) continue;
    auto it = position.find(c.name);
    if (it == position.end()) throw SchemaError(source_name + ": declared column '" + c.name + "' is missing");
    bound.push_back({c, it->second});
  }

  std::vector<std::string> cells;
  auto row_error = [&](const std::string& what) {
    const std::string msg = source_name + " line " + std::to_string(line_no) + ": " + what;
    if (!options.skip_bad_rows) throw DataError(msg);
    if (options.warnings) options.warnings->push_back("skipped " + msg);
  };

  while (std::getline(is, line)) {
    ++line_no;
    if (trim(line).empty()) continue;
    if (!split_csv_line(line, cells)) {
      row_error("unterminated quote");
      continue;
    }
    if (cells.size() != header.size()) {
      row_error("expected " + std::to_string(header.size()) + " cells, found " + std::to_string(cells.size()));
      continue;
    }
    Record r;
    r.domain = domain;
    std::string user_key;
    std::string item_key_value;
    bool ok = true;
    std::string problem;
    std::vector<std::pair<std::string, std::string>> profile_cells, item_cells;
    for (const auto& b : bound) {
      const auto& cell = cells[b.index];
      switch (b.spec.role) {
        case ColumnRole::kUserKey:
          if (is_missing(cell)) {
            ok = false;
            problem = "missing user key";
          }
          user_key = trim(cell);
          break;
        case ColumnRole::kLabel: {
          double v = 0.0;
          if (!parse_double(cell, v)) {
            ok = false;
            problem = "label '" + cell + "' is not numeric";
          } else if (schema.has_label_threshold) {
            r.label = v >= schema.label_threshold ? 1.0 : 0.0;
          } else if (v == 0.0 || v == 1.0) {
            r.label = v;
          } else {
            ok = false;
            problem = "label '" + cell + "' is not 0 or 1";
          }
          break;
        }
        case ColumnRole::kTimestamp:
          if (!parse_int64(cell, r.timestamp)) {
            ok = false;
            problem = "timestamp '" + cell + "' is not an integer";
          }
          break;
        case ColumnRole::kProfile:
          profile_cells.emplace_back(b.spec.name, trim(cell));
          break;
        case ColumnRole::kItem:
          item_cells.emplace_back(b.spec.name, trim(cell));
          break;
        case ColumnRole::kIgnore:
          break;
      }
      if (!ok) break;
    }
    if (!ok) {
      row_error(problem);
      continue;
    }
    auto intern = [&](std::string_view group, const std::string& column, const std::string& value) {
      if (is_missing(value)) return kUnknownId;
      return vocab.id(group, column + "=" + value);
    };
    r.user = vocab.id(Vocabulary::kUser, user_key);
    r.profile_ids.push_back(vocab.id(Vocabulary::kProfile, "uid=" + user_key));
    for (const auto& [col, value] : profile_cells) r.profile_ids.push_back(intern(Vocabulary::kProfile, col, value));
    for (const auto& [col, value] : item_cells) r.item_ids.push_back(intern(item_group(domain), col, value));
    r.id = log.records.size();
    log.records.push_back(std::move(r));
  }
}

InteractionLog ingest_csv(const DomainPaths& paths, const Schema& schema, Vocabulary& vocab,
                          const IngestOptions& options) {
  InteractionLog log;
  const std::pair<const std::filesystem::path*, int> files[] = {{&paths.target, kTargetDomain},
                                                                {&paths.source, kSourceDomain}};
  for (const auto& [path, domain] : files) {
    std::ifstream is(*path);
    if (!is) throw IoError("cannot read " + path->string());
    ingest_csv_stream(is, path->string(), domain, schema, vocab, options, log);
  }
  return log;
}

// --- histories ---------------------------------------------------------------------------------

std::vector<History> build_histories(const InteractionLog& log, std::size_t seqlen) {
  struct Click {
    std::int64_t t;
    std::uint64_t id;
    std::uint32_t item;
  };
  // Clicks per (user, domain), chronological.
  std::unordered_map<std::uint64_t, std::vector<Click>> clicks;
  auto key = [](std::uint32_t user, int domain) { return (static_cast<std::uint64_t>(user) << 1) | static_cast<unsigned>(domain); };
  for (const auto& r : log.records) {
    if (r.label == 1.0 && !r.item_ids.empty() && r.item_ids.front() != kUnknownId) {
      clicks[key(r.user, r.domain)].push_back({r.timestamp, r.id, r.item_ids.front()});
    }
  }
  for (auto& [k, v] : clicks) {
    std::sort(v.begin(), v.end(), [](const Click& a, const Click& b) { return a.t != b.t ? a.t < b.t : a.id < b.id; });
  }
  auto earlier = [&](std::uint32_t user, int domain, std::int64_t t) {
    std::vector<std::uint32_t> out;
    auto it = clicks.find(key(user, domain));
    if (it == clicks.end()) return out;
    const auto& v = it->second;
    const auto end = std::lower_bound(v.begin(), v.end(), t, [](const Click& c, std::int64_t x) { return c.t < x; });
    const auto n = static_cast<std::size_t>(end - v.begin());
    const auto begin = v.begin() + static_cast<std::ptrdiff_t>(n - std::min(n, seqlen));
    for (auto c = begin; c != end; ++c) out.push_back(c->item);
    return out;
  };
  std::vector<History> out;
  out.reserve(log.records.size());
  for (const auto& r : log.records) {
    out.push_back({earlier(r.user, kTargetDomain, r.timestamp), earlier(r.user, kSourceDomain, r.timestamp)});
  }
  return out;
}

PaddedSequence pad_sequence(std::span<const std::uint32_t> history, std::size_t seqlen) {
  PaddedSequence p;
  p.ids.assign(seqlen, kPaddingId);
  p.mask.assign(seqlen, 0);
  const auto keep = std::min(seqlen, history.size());
  const auto offset = history.size() - keep;
  for (std::size_t i = 0; i < keep; ++i) {
    p.ids[i] = history[offset + i];
    p.mask[i] = 1;
  }
  return p;
}

std::vector<Instance> make_instances(const InteractionLog& log, std::span<const History> histories) {
  if (histories.size() != log.records.size()) {
    throw DimensionError("make_instances: " + std::to_string(histories.size()) + " histories for " +
                         std::to_string(log.records.size()) + " records");
  }
  std::vector<Instance> out;
  out.reserve(log.records.size());
  for (std::size_t i = 0; i < log.records.size(); ++i) {
    const auto& r = log.records[i];
    Instance inst;
    inst.record_id = r.id;
    inst.user = r.user;
    inst.profile_ids = r.profile_ids;
    (r.domain == kTargetDomain ? inst.target_item : inst.source_item) = r.item_ids;
    inst.target_history = histories[i].target;
    inst.source_history = histories[i].source;
    inst.y = r.label;
    inst.domain = r.domain;
    inst.timestamp = r.timestamp;
    out.push_back(std::move(inst));
  }
  return out;
}

// --- resampling -------------------------------------------------------------------------------------

void SplitSpec::validate() const {
  if (!(a_train > 0.0 && a_train <= 1.0)) throw ConfigError("a-train must lie in (0, 1]");
  if (!(a_cross >= 0.0 && a_cross <= 1.0)) throw ConfigError("a-cross must lie in [0, 1]");
  if (!(presample > 0.0 && presample <= 1.0)) throw ConfigError("presample must lie in (0, 1]");
}

SplitManifest resample(const InteractionLog& log, const SplitSpec& spec, Rng& rng) {
  spec.validate();
  SplitManifest m;

  std::set<std::uint32_t> target_set, source_set;
  std::unordered_map<std::uint32_t, std::int64_t> last_day;
  for (const auto& r : log.records) {
    if (r.domain == kTargetDomain) {
      target_set.insert(r.user);
      auto [it, fresh] = last_day.emplace(r.user, r.timestamp);
      if (!fresh) it->second = std::max(it->second, r.timestamp);
    } else {
      source_set.insert(r.user);
    }
  }
  if (target_set.empty()) throw DataError("resample: the log has no target-domain records");
  if (source_set.empty()) throw DataError("resample: the log has no source-domain records");
  const auto missing = std::count_if(target_set.begin(), target_set.end(),
                                     [&](std::uint32_t u) { return !source_set.count(u); });
  if (missing > 0) {
    m.warnings.push_back(std::to_string(missing) + " target-domain users have no source-domain records");
  }

  std::vector<std::uint32_t> users(target_set.begin(), target_set.end());
  std::set<std::uint32_t> dropped;
  if (spec.presample < 1.0) {
    std::shuffle(users.begin(), users.end(), rng);
    const auto keep = std::max<std::size_t>(1, static_cast<std::size_t>(std::llround(spec.presample * static_cast<double>(users.size()))));
    dropped.insert(users.begin() + static_cast<std::ptrdiff_t>(keep), users.end());
    users.resize(keep);
    std::sort(users.begin(), users.end());
  }
  std::shuffle(users.begin(), users.end(), rng);

  const auto n_train = static_cast<std::size_t>(std::llround(spec.a_train * static_cast<double>(users.size())));
  const auto n_cross = static_cast<std::size_t>(std::llround(spec.a_cross * static_cast<double>(n_train)));
  if (n_cross == 0 && spec.a_cross > 0.0) {
    m.warnings.push_back("a-cross x a-train rounds to zero overlap users; evaluation is pure cold-start");
  }
  m.train_users.assign(users.begin(), users.begin() + static_cast<std::ptrdiff_t>(n_train));
  m.overlap_users.assign(users.begin(), users.begin() + static_cast<std::ptrdiff_t>(n_cross));
  m.heldout_users.assign(users.begin() + static_cast<std::ptrdiff_t>(n_train), users.end());

  const std::unordered_set<std::uint32_t> train_users(m.train_users.begin(), m.train_users.end());
  const std::unordered_set<std::uint32_t> overlap(m.overlap_users.begin(), m.overlap_users.end());
  // Held-out users split by user: the first half feeds test, the rest validation.
  const std::size_t n_test_users = (m.heldout_users.size() + 1) / 2;
  std::unordered_map<std::uint32_t, bool> heldout_to_test;
  for (std::size_t i = 0; i < m.heldout_users.size(); ++i) heldout_to_test[m.heldout_users[i]] = i < n_test_users;

  std::vector<std::uint64_t> extracted;
  for (const auto& r : log.records) {
    if (dropped.count(r.user)) continue;
    if (r.domain == kSourceDomain) {
      m.train.push_back(r.id);
      continue;
    }
    const bool last = r.timestamp == last_day.at(r.user);
    if (train_users.count(r.user)) {
      if (last && overlap.count(r.user)) {
        extracted.push_back(r.id);
      } else {
        m.train.push_back(r.id);
      }
    } else if (last) {
      (heldout_to_test.at(r.user) ? m.test : m.valid).push_back(r.id);
    }
  }
  std::shuffle(extracted.begin(), extracted.end(), rng);
  const std::size_t n_valid = (extracted.size() + 1) / 2;
  m.valid.insert(m.valid.end(), extracted.begin(), extracted.begin() + static_cast<std::ptrdiff_t>(n_valid));
  m.test.insert(m.test.end(), extracted.begin() + static_cast<std::ptrdiff_t>(n_valid), extracted.end());
  for (auto* ids : {&m.train, &m.valid, &m.test}) std::sort(ids->begin(), ids->end());

  std::unordered_set<std::uint32_t> trained_target;
  for (auto id : m.train) {
    const auto& r = log.records[id];
    if (r.domain == kTargetDomain) trained_target.insert(r.user);
  }
  std::set<std::uint32_t> cold;
  for (const auto* ids : {&m.valid, &m.test}) {
    for (auto id : *ids) {
      const auto u = log.records[id].user;
      if (!trained_target.count(u)) cold.insert(u);
    }
  }
  m.cold_start_users.assign(cold.begin(), cold.end());
  return m;
}

void write_id_list(const std::filesystem::path& path, std::span<const std::uint64_t> ids) {
  std::ofstream os(path);
  if (!os) throw IoError("cannot write " + path.string());
  for (auto id : ids) os << id << '\n';
}

std::vector<std::uint64_t> read_id_list(const std::filesystem::path& path) {
  std::ifstream is(path);
  if (!is) throw IoError("cannot read " + path.string());
  std::vector<std::uint64_t> ids;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(is, line)) {
    ++line_no;
    const auto t = trim(line);
    if (t.empty()) continue;
    std::uint64_t id = 0;
    auto [ptr, ec] = std::from_chars(t.data(), t.data() + t.size(), id);
    if (ec != std::errc() || ptr != t.data() + t.size()) {
      throw DataError(path.string() + " line " + std::to_string(line_no) + ": not a record id");
    }
    ids.push_back(id);
  }
  return ids;
}

namespace {

std::vector<std::uint64_t> widen(const std::vector<std::uint32_t>& v) { return {v.begin(), v.end()}; }
std::vector<std::uint32_t> narrow(const std::vector<std::uint64_t>& v) {
  std::vector<std::uint32_t> out;
  for (auto x : v) out.push_back(static_cast<std::uint32_t>(x));
  return out;
}

}  // namespace

void save_manifest(const std::filesystem::path& dir, const SplitManifest& m) {
  std::filesystem::create_directories(dir);
  write_id_list(dir / "train.ids", m.train);
  write_id_list(dir / "valid.ids", m.valid);
  write_id_list(dir / "test.ids", m.test);
  write_id_list(dir / "train_users.ids", widen(m.train_users));
  write_id_list(dir / "overlap_users.ids", widen(m.overlap_users));
  write_id_list(dir / "heldout_users.ids", widen(m.heldout_users));
  write_id_list(dir / "cold_start_users.ids", widen(m.cold_start_users));
}

SplitManifest load_manifest(const std::filesystem::path& dir) {
  SplitManifest m;
  m.train = read_id_list(dir / "train.ids");
  m.valid = read_id_list(dir / "valid.ids");
  m.test = read_id_list(dir / "test.ids");
  m.train_users = narrow(read_id_list(dir / "train_users.ids"));
  m.overlap_users = narrow(read_id_list(dir / "overlap_users.ids"));
  m.heldout_users = narrow(read_id_list(dir / "heldout_users.ids"));
  m.cold_start_users = narrow(read_id_list(dir / "cold_start_users.ids"));
  return m;
}

std::vector<Instance> select_records(std::span<const Instance> all, std::span<const std::uint64_t> ids) {
  std::unordered_map<std::uint64_t, std::size_t> where;
  for (std::size_t i = 0; i < all.size(); ++i) where.emplace(all[i].record_id, i);
  std::vector<Instance> out;
  out.reserve(ids.size());
  for (auto id : ids) {
    auto it = where.find(id);
    if (it == where.end()) throw LookupError("record id " + std::to_string(id) + " is not in the log");
    out.push_back(all[it->second]);
  }
  return out;
}

// --- moons ---------------------------------------------------------------------------------------------

void MoonsConfig::validate() const {
  if (n_source < 2 || n_target < 2) throw ConfigError("moons: each domain needs at least two points");
  if (!(noise_std >= 0.0) || !std::isfinite(noise_std)) throw ConfigError("moons: noise must be a nonnegative number");
  if (!std::isfinite(rotation_degrees)) throw ConfigError("moons: rotation must be finite");
  if (!(target_labeled_fraction >= 0.0 && target_labeled_fraction <= 1.0)) {
    throw ConfigError("moons: target labelled fraction must lie in [0, 1]");
  }
}

std::vector<Instance> MoonsData::target_all() const {
  auto all = target_labeled;
  all.insert(all.end(), target_unlabeled.begin(), target_unlabeled.end());
  std::sort(all.begin(), all.end(), [](const Instance& a, const Instance& b) { return a.record_id < b.record_id; });
  return all;
}

namespace {

// Class 0 on the upper arc, class 1 on the lower arc shifted right and down.
std::vector<Instance> draw_moons(std::size_t n, double noise, int domain, std::uint64_t first_id, Rng& rng) {
  std::uniform_real_distribution<double> angle(0.0, std::numbers::pi);
  std::normal_distribution<double> jitter(0.0, 1.0);
  std::vector<Instance> pts;
  const std::size_t n0 = n / 2;
  for (std::size_t i = 0; i < n; ++i) {
    const double t = angle(rng);
    const bool upper = i < n0;
    double x = upper ? std::cos(t) : 1.0 - std::cos(t);
    double y = upper ? std::sin(t) : 0.5 - std::sin(t);
    x += noise * jitter(rng);
    y += noise * jitter(rng);
    Instance inst;
    inst.record_id = first_id + i;
    inst.dense = {x, y};
    inst.y = upper ? 0.0 : 1.0;
    inst.domain = domain;
    pts.push_back(std::move(inst));
  }
  return pts;
}

}  // namespace

MoonsData generate_moons(const MoonsConfig& config) {
  config.validate();
  Rng rng(config.seed);
  MoonsData data;
  data.source = draw_moons(config.n_source, config.noise_std, kSourceDomain, 0, rng);
  auto target = draw_moons(config.n_target, config.noise_std, kTargetDomain, config.n_source, rng);

  double cx = 0.0, cy = 0.0;
  for (const auto& p : target) {
    cx += p.dense[0];
    cy += p.dense[1];
  }
  cx /= static_cast<double>(target.size());
  cy /= static_cast<double>(target.size());
  data.center[0] = cx;
  data.center[1] = cy;
  const double theta = config.rotation_degrees * std::numbers::pi / 180.0;
  const double c = std::cos(theta), s = std::sin(theta);
  for (auto& p : target) {
    const double dx = p.dense[0] - cx, dy = p.dense[1] - cy;
    p.dense = {cx + c * dx - s * dy, cy + s * dx + c * dy};
  }

  // Reveal labels for a random subset of the target points.
  std::vector<std::size_t> order(target.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
  std::shuffle(order.begin(), order.end(), rng);
  const auto n_labeled = static_cast<std::size_t>(std::llround(config.target_labeled_fraction * static_cast<double>(target.size())));
  std::vector<bool> labeled(target.size(), false);
  for (std::size_t k = 0; k < n_labeled; ++k) labeled[order[k]] = true;
  for (std::size_t i = 0; i < target.size(); ++i) {
    target[i].labeled = labeled[i];
    (labeled[i] ? data.target_labeled : data.target_unlabeled).push_back(std::move(target[i]));
  }
  return data;
}

}  // namespace dadin
