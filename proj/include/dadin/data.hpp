#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <map>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "dadin/instance.hpp"
#include "dadin/tensor.hpp"

namespace dadin {

// --- vocabulary ------------------------------------------------------------------

// Dense ids per categorical group. Ids 0 (padding) and 1 (unknown / "na_value")
// are reserved; observed categories get 2, 3, ... in first-seen order.
class Vocabulary {
 public:
  static constexpr std::string_view kNaValue = "na_value";
  static constexpr std::string_view kProfile = "profile";
  static constexpr std::string_view kTargetItem = "target_item";
  static constexpr std::string_view kSourceItem = "source_item";
  static constexpr std::string_view kUser = "user";

  // Id for key, adding it unless the vocabulary is frozen (then unknown → 1).
  std::uint32_t id(std::string_view group, std::string_view key);
  // Never adds; unknown keys map to kUnknownId.
  std::uint32_t lookup(std::string_view group, std::string_view key) const;
  // Number of ids in the group including the two reserved ones.
  std::size_t size(std::string_view group) const;
  const std::string& key(std::string_view group, std::uint32_t id) const;

  void freeze() { frozen_ = true; }
  bool frozen() const { return frozen_; }

  void save(std::ostream& os) const;
  void save(const std::filesystem::path& path) const;
  static Vocabulary load(std::istream& is);
  static Vocabulary load(const std::filesystem::path& path);

  bool operator==(const Vocabulary& other) const;

 private:
  struct Group {
    std::unordered_map<std::string, std::uint32_t> ids;
    std::vector<std::string> keys{"<pad>", "<unk>"};
  };
  std::map<std::string, Group, std::less<>> groups_;
  bool frozen_ = false;
};

// --- schema and raw interactions ------------------------------------------------------

enum class ColumnRole { kUserKey, kProfile, kItem, kLabel, kTimestamp, kIgnore };

struct ColumnSpec {
  std::string name;
  ColumnRole role;
};

// Declarative CSV layout, one `column = role` line per field. Lines under a
// `[target]` or `[source]` header only apply to that domain's file. The first
// `item` column of a domain is its item key, used for behaviour histories.
// `label_threshold = x` turns a numeric rating into click = (rating >= x).
struct Schema {
  std::vector<ColumnSpec> shared;
  std::vector<ColumnSpec> target_only;
  std::vector<ColumnSpec> source_only;
  double label_threshold = 0.0;
  bool has_label_threshold = false;

  std::vector<ColumnSpec> columns(int domain) const;

  static Schema parse(std::istream& is);
  static Schema load(const std::filesystem::path& path);
  void save(std::ostream& os) const;
};

struct Record {
  std::uint64_t id = 0;  // position in ingest order, target file first
  int domain = kTargetDomain;
  std::uint32_t user = 0;
  std::vector<std::uint32_t> profile_ids;
  std::vector<std::uint32_t> item_ids;  // item key first
  double label = 0.0;
  std::int64_t timestamp = 0;
};

struct InteractionLog {
  std::vector<Record> records;
};

struct DomainPaths {
  std::filesystem::path target;
  std::filesystem::path source;
};

struct IngestOptions {
  // Skip unparseable rows (recording a warning) instead of failing.
  bool skip_bad_rows = false;
  std::vector<std::string>* warnings = nullptr;
};

// Reads both domain files through the schema, growing `vocab` unless frozen.
// Missing cells and "na_value" map to the unknown id.
InteractionLog ingest_csv(const DomainPaths& paths, const Schema& schema, Vocabulary& vocab,
                          const IngestOptions& options = {});
// Single-stream variant used by ingest_csv; records are numbered by position in the log.
void ingest_csv_stream(std::istream& is, const std::string& source_name, int domain,
                       const Schema& schema, Vocabulary& vocab, const IngestOptions& options,
                       InteractionLog& log);

// --- histories ----------------------------------------------------------------------------

struct History {
  std::vector<std::uint32_t> target;
  std::vector<std::uint32_t> source;
};

// For every record, the item keys of the same user's clicks (label 1) in each
// domain with a strictly earlier timestamp, most recent `seqlen` kept,
// oldest first. Parallel to log.records.
std::vector<History> build_histories(const InteractionLog& log, std::size_t seqlen);

struct PaddedSequence {
  std::vector<std::uint32_t> ids;  // seqlen entries, kPaddingId after the history
  std::vector<std::uint8_t> mask;  // 1 where ids holds a real item
};

PaddedSequence pad_sequence(std::span<const std::uint32_t> history, std::size_t seqlen);

// Model-ready instances, parallel to log.records.
std::vector<Instance> make_instances(const InteractionLog& log, std::span<const History> histories);

// --- cold-start resampling ---------------------------------------------------------------------

struct SplitSpec {
  double a_train = 0.8;    // share of target-domain users used for training
  double a_cross = 0.25;   // share of training users whose last target day is held out
  double presample = 1.0;  // optional user subsampling before everything else

  void validate() const;
};

struct SplitManifest {
  std::vector<std::uint64_t> train;
  std::vector<std::uint64_t> valid;
  std::vector<std::uint64_t> test;
  std::vector<std::uint32_t> train_users;
  std::vector<std::uint32_t> overlap_users;
  std::vector<std::uint32_t> heldout_users;
  // Target-domain users in valid/test with no target record in train.
  std::vector<std::uint32_t> cold_start_users;
  std::vector<std::string> warnings;
};

SplitManifest resample(const InteractionLog& log, const SplitSpec& spec, Rng& rng);

void write_id_list(const std::filesystem::path& path, std::span<const std::uint64_t> ids);
std::vector<std::uint64_t> read_id_list(const std::filesystem::path& path);

void save_manifest(const std::filesystem::path& dir, const SplitManifest& manifest);
SplitManifest load_manifest(const std::filesystem::path& dir);

// Instances whose record_id is listed, in list order.
std::vector<Instance> select_records(std::span<const Instance> all, std::span<const std::uint64_t> ids);

// --- toy data -----------------------------------------------------------------------------------

struct MoonsConfig {
  std::size_t n_source = 300;
  std::size_t n_target = 300;
  double rotation_degrees = 35.0;
  double noise_std = 0.1;  // moon radius is 1
  double target_labeled_fraction = 0.5;
  std::uint64_t seed = 0;

  void validate() const;
};

struct MoonsData {
  std::vector<Instance> source;
  std::vector<Instance> target_labeled;
  std::vector<Instance> target_unlabeled;  // true labels kept in y, labeled = false
  double center[2] = {0.0, 0.0};          // rotation centre of the target draw

  std::vector<Instance> target_all() const;
};

// Two interleaved half circles with Gaussian noise. The target set is a fresh
// draw from the same distribution rotated about its centroid.
MoonsData generate_moons(const MoonsConfig& config);

}  // namespace dadin
