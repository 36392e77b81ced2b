#pragma once

#include "vadctx/stream_model.hpp"

#include <cstdint>
#include <filesystem>

namespace vadctx {

struct CheckpointData {
    StreamModel model;
    uint64_t seed = 0;
};

// Single-file container: magic, format version, a JSON header with the
// architecture metadata and RNG seed, the parameter tensors in registry
// order as raw little-endian doubles, and a trailing checksum.
// save -> load -> save reproduces the file byte for byte.
void save_checkpoint(const std::filesystem::path& path, const StreamModel& model, uint64_t seed);

CheckpointData load_checkpoint(const std::filesystem::path& path);

// Loads and enforces the stream tag, e.g. before scoring.
CheckpointData load_checkpoint(const std::filesystem::path& path, Stream expected_stream);

} // namespace vadctx
