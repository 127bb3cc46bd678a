#pragma once

// Synthetic two-domain click logs with a known shift between the domains.
//
// Every user has a latent preference vector; profile columns are noisy
// quantisations of it. Source clicks follow σ(s·⟨u, w⟩ + b) over source item
// latents w; target clicks use the same form with u rotated by
// rotation_degrees in each coordinate plane pair, so the two domains share
// structure but disagree in detail. Target users are a subset of source users.

#include <cstddef>
#include <cstdint>
#include <filesystem>

namespace dadin {

struct SyntheticConfig {
  std::size_t users = 500;
  double target_user_fraction = 0.8;
  std::size_t target_items = 80;
  std::size_t source_items = 160;
  std::size_t target_records = 2500;
  std::size_t source_records = 7500;
  std::size_t days = 14;
  std::size_t latent_dim = 4;
  double rotation_degrees = 60.0;
  double signal = 3.0;  // logit scale s
  double target_bias = -0.5;
  double source_bias = 0.0;
  std::uint64_t seed = 7;

  void validate() const;
};

// Writes target.csv, source.csv and schema.txt into dir.
void write_synthetic_dataset(const SyntheticConfig& config, const std::filesystem::path& dir);

}  // namespace dadin
