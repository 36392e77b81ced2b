#pragma once

#include "vadctx/detections.hpp"
#include "vadctx/flow.hpp"
#include "vadctx/patch_cache.hpp"

#include <filesystem>
#include <map>
#include <string>
#include <vector>

namespace vadctx {

struct IngestConfig {
    double threshold_train = 0.5;
    double threshold_test = 0.4;
    std::string flow_backend = "horn_schunck"; // or "precomputed"
    std::filesystem::path precomputed_flow_root; // <root>/<split>/<video>.flow
    FlowOptions flow;
    int patch_size = 64;
    int threads = 2;
};

// Per-channel scale dividing raw (u,v) flow patches at load time; computed
// on the training split so train and test share the same normalization.
struct FlowScale {
    double u = 1.0;
    double v = 1.0;
};

struct PreprocessStats {
    int videos = 0;
    int cached_frames = 0; // frames >= 1 (frame 0 has no flow and is dropped)
    int empty_frames = 0;  // frames with zero kept detections
    std::vector<std::string> warnings;
};

struct PreprocessResult {
    PreprocessStats train;
    PreprocessStats test;
    FlowScale flow_scale;
};

// Runs ingestion for the train and test splits of data_root into cache_root:
// frame extraction, detection filtering, dense flow (or the precomputed-flow
// loader), 64x64 crops for both streams, and the cache manifest.
// config_json is embedded verbatim in the manifest for provenance.
PreprocessResult preprocess(const std::filesystem::path& data_root,
                            const std::filesystem::path& cache_root, const IngestConfig& config,
                            uint64_t seed, const std::string& config_json);

// Cache-backed dataset for one (split, stream). Groups are ordered by
// (video, frame); temporal patches arrive standardized by the manifest's
// flow scale.
struct SplitData {
    std::vector<FrameGroup> groups;
    std::vector<FrameKey> empty_frames;
    std::map<std::string, int> video_frame_count; // original frames per video
    FlowScale flow_scale;
    int patch_size = 64;
};

SplitData load_split(const std::filesystem::path& cache_root, const std::string& split,
                     Stream stream, int n);

} // namespace vadctx
