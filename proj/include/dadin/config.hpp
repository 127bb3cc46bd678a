#pragma once

// Experiment configuration: every tunable behind one kebab-case key.
//
// Values are layered: built-in defaults, then `key = value` lines from a
// file, then individual overrides. snapshot() writes a file that load_file()
// reads back into an identical configuration.

#include <cstdint>
#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

#include "dadin/data.hpp"
#include "dadin/experiments.hpp"
#include "dadin/loss.hpp"
#include "dadin/model.hpp"
#include "dadin/synthetic.hpp"
#include "dadin/train.hpp"

namespace dadin {

struct ExperimentConfig {
  ExperimentConfig();

  ModelConfig model;  // variant is resolved from `variant`
  std::string variant = "DADIN++";
  LossWeights weights;
  TrainConfig train;
  SplitSpec split;
  std::uint64_t split_seed = 1;
  bool skip_bad_rows = false;
  ToyConfig toy;  // moons settings live in toy.moons
  SyntheticConfig synth;

  std::filesystem::path target_csv;
  std::filesystem::path source_csv;
  std::filesystem::path schema;
  std::filesystem::path split_dir;
  std::filesystem::path checkpoint;
  std::filesystem::path out_dir = "out";

  std::vector<std::uint64_t> seeds{1, 2, 3, 4, 5};
  std::vector<std::string> variants;
  std::string lambda_grid = "1:1,0.5:1,1:0.5,0.5:0.5";

  // ConfigError for unknown keys or unparseable values.
  void set(std::string_view key, std::string_view value);
  std::string get(std::string_view key) const;

  // Lines of `key = value`; blank lines and # comments are ignored.
  void load_file(const std::filesystem::path& path);
  void load_text(std::string_view text, const std::string& source_name = "<text>");

  std::string snapshot() const;
  void write_snapshot(const std::filesystem::path& path) const;

  // Range checks; variant names must resolve.
  void validate() const;
};

struct ConfigKey {
  std::string name;
  std::string help;
};

const std::vector<ConfigKey>& config_keys();

}  // namespace dadin
