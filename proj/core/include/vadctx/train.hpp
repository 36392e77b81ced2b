#pragma once

#include "vadctx/stream_model.hpp"

#include <filesystem>
#include <vector>

namespace vadctx {

struct TrainConfig {
    Stream stream = Stream::spatial;
    double learning_rate = 0.001; // 0.0001 for the temporal stream by default
    int batch_size = 64;
    int epochs = 60;
    double lambda_recon = 1.0;
    double lambda_entropy = 0.0002;
    uint64_t seed = 7;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double adam_epsilon = 1e-8;
    bool early_stop = true;
    int plateau_epochs = 10;
    double plateau_rel = 1e-4;
    int threads = 2;

    void validate() const;
};

// Adaptive-moment gradient step over the model's parameter registry.
struct Adam {
    double learning_rate = 0.001;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double epsilon = 1e-8;
    std::vector<Vec> m, v;
    int64_t t = 0;

    void init(const std::vector<ParamRef>& refs);
    void step(std::vector<ParamRef>& refs, const Gradients& grads);
};

struct EpochStats {
    int epoch = 0;
    double recon = 0;
    double entropy = 0;
    double total = 0;
};

struct TrainResult {
    StreamModel model;
    std::vector<EpochStats> history;
    int zero_read_frames = 0; // frames whose addressing was fully shrunk away
};

// Mini-batch training over frame groups: a batch is batch_size groups, the
// per-frame loss is the mean per-target reconstruction loss plus
// lambda_entropy times the frame entropy. Writes one JSON line per batch
// ({"epoch":..,"batch":..,"recon":..,"entropy":..,"total":..}) to
// metrics_path unless it is empty. The dataset is never mutated.
TrainResult train_stream(const TrainConfig& config, const ModelConfig& model_config,
                         const std::vector<FrameGroup>& dataset,
                         const std::filesystem::path& metrics_path = {});

} // namespace vadctx
