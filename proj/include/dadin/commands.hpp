#pragma once

// The experiment commands behind the CLI. Each validates the configuration,
// writes its artifacts plus a config snapshot into its output directory and
// returns a printable summary and a JSON digest of the same numbers.
//
// Output layout (relative to out-dir unless noted):
//   toy          toy/seed-<s>/{toy_points,toy_grid,toy_pca}.tsv, metrics.jsonl
//   resample     manifests and vocab.txt in split-dir (or out-dir)
//   train        model.ckpt (or checkpoint), train_log.jsonl, metrics.jsonl
//   eval         eval.jsonl
//   ablate       ablation.tsv, ablation.jsonl
//   loss-curves  loss_curves/lambda2-<a>_lambda3-<b>.tsv, metrics.jsonl
//   export-pca   pca.tsv, metrics.jsonl
//   synth-data   target.csv, source.csv, schema.txt
// Every command also writes config.txt, loadable as a config file.

#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

#include "dadin/config.hpp"

namespace dadin {

struct CommandResult {
  std::string summary;
  std::string json;
  std::vector<std::filesystem::path> files;
};

const std::vector<std::string>& command_names();
// One-line description per command, parallel to command_names().
const std::vector<std::string>& command_help();

// ConfigError for an unknown command. A DivergenceError is rethrown with the
// configuration appended to its message.
CommandResult run_command(std::string_view name, const ExperimentConfig& config);

}  // namespace dadin
