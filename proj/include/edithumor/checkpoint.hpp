#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "edithumor/train.hpp"

namespace edithumor {

// Binary layout, all integers little-endian:
//   "KDEH" | u32 version | records... | u32 CRC-32 of every preceding byte
// record: u32 name length | name bytes | u8 rank | rank x u64 dims |
//         prod(dims) x f32 payload (one value for rank 0)
// Integer state (seed, PRNG words) travels as raw u32 bit patterns in the
// f32 slots of records whose names start with "u32:".
inline constexpr char kCheckpointMagic[4] = {'K', 'D', 'E', 'H'};
inline constexpr std::uint32_t kCheckpointVersion = 1;

struct CheckpointRecord {
  std::string name;
  std::vector<std::uint64_t> dims;
  std::vector<float> data;

  friend bool operator==(const CheckpointRecord&, const CheckpointRecord&) = default;
};

std::vector<char> encode_records(const std::vector<CheckpointRecord>& records,
                                 std::uint32_t version = kCheckpointVersion);
/// Throws CorruptFile (bad magic, truncation, CRC mismatch) or
/// VersionMismatch.
std::vector<CheckpointRecord> decode_records(const std::vector<char>& bytes);

std::vector<CheckpointRecord> state_to_records(const TrainState& state);
TrainState state_from_records(const std::vector<CheckpointRecord>& records);

void save_checkpoint(const TrainState& state, const std::filesystem::path& path);
TrainState load_checkpoint(const std::filesystem::path& path);

}  // namespace edithumor
