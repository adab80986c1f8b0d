#pragma once

#include <cstdint>
#include <filesystem>
#include <string>

#include "minigrpo/policy.hpp"

namespace minigrpo {

struct CheckpointMeta {
  std::string stage;
  std::int64_t step = 0;
  std::uint64_t seed = 0;
};

// On-disk layout: 8-byte magic "CRLPOL01", little-endian u32 header length,
// UTF-8 JSON header {tokens, k, h, e, seed, stage, step}, then param_count
// little-endian IEEE-754 doubles. Writes go to a temp file and rename into
// place.
void save_checkpoint(const Policy& policy, const CheckpointMeta& meta,
                     const std::filesystem::path& path);

struct LoadedCheckpoint {
  Policy policy;
  CheckpointMeta meta;
};

// Validates magic, header and payload size before touching weights; a
// truncated or inconsistent file yields IoError and no partial policy.
LoadedCheckpoint load_checkpoint(const std::filesystem::path& path);

}  // namespace minigrpo
