#pragma once

#include <cstdint>
#include <vector>

namespace dadin {

inline constexpr int kSourceDomain = 0;
inline constexpr int kTargetDomain = 1;

// Reserved ids shared by every vocabulary.
inline constexpr std::uint32_t kPaddingId = 0;
inline constexpr std::uint32_t kUnknownId = 1;

// One user-item interaction, already mapped to dense ids.
//
// Exactly one of target_item / source_item is non-empty and it must agree
// with `domain`. Histories hold item-key ids in chronological order and never
// contain kPaddingId; padding is added when a batch is assembled.
struct Instance {
  std::uint64_t record_id = 0;
  std::uint32_t user = 0;
  std::vector<std::uint32_t> profile_ids;
  std::vector<std::uint32_t> target_item;
  std::vector<std::uint32_t> source_item;
  std::vector<std::uint32_t> target_history;
  std::vector<std::uint32_t> source_history;
  // Feature vector for dense-input models (toy experiments).
  std::vector<double> dense;
  double y = 0.0;
  int domain = kTargetDomain;
  // Unlabelled instances take part in the domain losses only.
  bool labeled = true;
  std::int64_t timestamp = 0;
};

}  // namespace dadin
