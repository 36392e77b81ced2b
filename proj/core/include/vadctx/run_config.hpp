#pragma once

#include "vadctx/flow.hpp"
#include "vadctx/scoring.hpp"
#include "vadctx/stream_model.hpp"
#include "vadctx/synth.hpp"

#include <filesystem>
#include <string>
#include <vector>

namespace vadctx {

// Declarative run configuration, one JSON document per run. Unknown keys are
// a startup error; every omitted key falls back to the documented default.
struct RunConfig {
    uint64_t seed = 7;
    int threads = 2;

    struct Paths {
        std::filesystem::path data_root = "data/synthetic";
        std::filesystem::path cache_root = "cache";
        std::filesystem::path checkpoint_dir = "runs";
        std::filesystem::path report_dir = "reports";
    } paths;

    CorpusSpec synth;

    struct Ingest {
        double detection_threshold_train = 0.5;
        double detection_threshold_test = 0.4;
        int targets_per_frame_train = 18;
        int targets_per_frame_test = 24;
        std::string flow_backend = "horn_schunck";
        std::filesystem::path precomputed_flow_root;
        FlowOptions flow;
    } ingest;

    ModelConfig model; // input_channels is set per stream when instantiated

    struct Train {
        int batch_size = 64;
        int epochs = 60;
        double lambda_recon = 1.0;
        double lambda_entropy = 0.0002;
        double learning_rate_spatial = 0.001;
        double learning_rate_temporal = 0.0001;
        bool early_stop = true;
        int plateau_epochs = 10;
        double plateau_rel = 1e-4;
    } train;

    struct Eval {
        int smoothing_window = 10;
        Normalization normalization = Normalization::global_max;
    } eval;

    // The fully resolved configuration as JSON, embedded verbatim in every
    // output manifest for provenance.
    std::string effective_json;
};

// Loads and validates the configuration file, applying overrides in order.
// Each override is "key.path=value" (e.g. "train.epochs=10"); unknown keys
// raise ConfigError. The VADCTX_CACHE_ROOT environment variable, when set,
// overrides paths.cache_root (flags still win over it).
RunConfig load_run_config(const std::filesystem::path& path,
                          const std::vector<std::string>& overrides = {});

// The built-in defaults as a config JSON document (what an empty file means).
std::string default_config_json();

} // namespace vadctx
