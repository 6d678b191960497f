#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <utility>
#include <vector>

#include "afenet/model.hpp"

namespace afenet {

inline constexpr std::uint32_t kCheckpointVersion = 1;

/// Training position stored alongside the weights. Batches are a pure
/// function of (seed, step), so these two numbers are the whole sampler state.
struct TrainingState {
  std::uint64_t step = 0;
  std::uint64_t seed = 0;

  bool operator==(const TrainingState&) const = default;
};

/// Decoded checkpoint contents before they are bound to a model.
///
/// Layout (little-endian):
///   "AFENETCK" | u32 version | u32 len, config JSON | u64 step | u64 seed |
///   u32 count | count x (u32 len, name | 4 x i64 shape | f64 values) |
///   u32 CRC-32 of everything before it
struct CheckpointRecord {
  std::uint32_t version = kCheckpointVersion;
  std::string config_json;
  TrainingState state;
  std::vector<std::pair<std::string, Tensor>> params;
};

std::vector<std::uint8_t> encode_checkpoint(const CheckpointRecord& record);
/// Throws VersionError for an unknown version and CorruptCheckpoint for a bad
/// magic, truncation or checksum mismatch.
CheckpointRecord decode_checkpoint(const std::vector<std::uint8_t>& bytes);

CheckpointRecord make_record(const Afenet& model, const TrainingState& state = {});
/// Builds the model from the stored config and loads every parameter.
/// Missing, extra or mis-shaped parameters raise CorruptCheckpoint.
Afenet model_from_record(const CheckpointRecord& record);

void save_checkpoint(const Afenet& model, const std::filesystem::path& path,
                     const TrainingState& state = {});

struct LoadedCheckpoint {
  Afenet model;
  TrainingState state;
};

/// NotFound if the file is missing; otherwise as decode_checkpoint and
/// model_from_record.
LoadedCheckpoint load_checkpoint(const std::filesystem::path& path);

std::vector<std::uint8_t> read_file_bytes(const std::filesystem::path& path);
void write_file_bytes(const std::filesystem::path& path, const std::vector<std::uint8_t>& bytes);

}  // namespace afenet
