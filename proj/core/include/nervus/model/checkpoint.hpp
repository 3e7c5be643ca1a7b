#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <vector>

#include "nervus/data/tabular.hpp"
#include "nervus/model/assembly.hpp"

namespace nervus::model {

// NVS1 container:
//   bytes 0..3   magic "NVS1"
//   u32 LE       metadata length L
//   L bytes      UTF-8 JSON: format_version, task, spec, tabular_stats, epoch,
//                val_loss, tensors[{name, shape, offset}]
//   payload      little-endian float32 tensors in directory order; offsets are
//                relative to the start of the payload
inline constexpr int kCheckpointVersion = 1;

struct CheckpointMeta {
  int format_version = kCheckpointVersion;
  ModelSpec spec;
  std::optional<data::TabularStats> tabular_stats;
  int epoch = 0;
  double val_loss = 0.0;
};

struct Checkpoint {
  CheckpointMeta meta;
  std::vector<NamedTensor> tensors;
};

/// Byte-deterministic encoding of the assembly's parameters.
std::vector<std::uint8_t> encode_checkpoint(const ModelAssembly& model, int epoch, double val_loss,
                                            const data::TabularStats* stats = nullptr);

/// Throws FormatError on a bad magic, unsupported version, truncated or
/// inconsistent payload.
Checkpoint decode_checkpoint(std::span<const std::uint8_t> bytes);

/// Writes through a temporary file and renames it into place, so an existing
/// checkpoint at `path` is never left half-written.
void save_checkpoint(const ModelAssembly& model, const std::filesystem::path& path, int epoch,
                     double val_loss, const data::TabularStats* stats = nullptr);

Checkpoint read_checkpoint(const std::filesystem::path& path);

// Copies checkpoint tensors into `model` by name. A 3-channel first conv kernel
// is summed down when the model takes 1 channel; every other name or shape
// mismatch throws ShapeError naming the tensor. Nothing is modified unless the
// whole checkpoint validates.
void restore_parameters(ModelAssembly& model, const Checkpoint& checkpoint);

/// Builds an assembly for `expected` and restores the checkpoint into it.
ModelAssembly load_checkpoint(const std::filesystem::path& path, const ModelSpec& expected);

}  // namespace nervus::model
