#pragma once

#include "smclust/trainer.hpp"

#include <filesystem>

namespace smclust {

/// Serializes the trained networks with the resolved configuration into one
/// binary file: magic "SMCK", a format-version byte, the config echo text,
/// then per-network layer dims, activations and little-endian float64
/// parameter tensors. The training log is not stored.
void save_checkpoint(const TrainedModel& model, const std::filesystem::path& path);

/// Reads a checkpoint back; throws data_error on bad magic, unsupported
/// format version or truncation.
TrainedModel load_checkpoint(const std::filesystem::path& path);

}  // namespace smclust
