#pragma once

#include <filesystem>
#include <iosfwd>
#include <map>
#include <string>

#include "dadin/model.hpp"

namespace dadin {

inline constexpr const char* kCheckpointMagic = "DADIN-CHECKPOINT";
inline constexpr int kCheckpointVersion = 1;

// Text format: a versioned header, `meta key value` lines carrying the model
// configuration, then one `param` block per parameter with values written at
// round-trip precision. Loading reproduces the model bit for bit.
void save_checkpoint(std::ostream& os, const DadinModel& model,
                     const std::map<std::string, std::string>& extra_meta = {});
void save_checkpoint(const std::filesystem::path& path, const DadinModel& model,
                     const std::map<std::string, std::string>& extra_meta = {});

struct LoadedCheckpoint {
  DadinModel model;
  std::map<std::string, std::string> meta;
};

// Throws CheckpointError on a wrong header, version, or a parameter that does
// not fit the recorded configuration.
LoadedCheckpoint load_checkpoint(std::istream& is);
LoadedCheckpoint load_checkpoint(const std::filesystem::path& path);

}  // namespace dadin
