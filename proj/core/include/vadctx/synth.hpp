#pragma once

#include <cstdint>
#include <filesystem>
#include <string>

namespace vadctx {

// Deterministic desk-scale corpus: slow shaded squares as the normal mode,
// plus test-only anomalies (a fast square or an oversized triangle) inside
// contiguous frame spans. The seed fully determines every output byte.
struct CorpusSpec {
    int height = 96;
    int width = 128;
    int train_videos = 8;
    int test_videos = 4;
    int frames_per_video = 60;
    int min_sprites = 2;
    int max_sprites = 4;
    double size_min = 8.0;
    double size_max = 16.0;
    double speed_min = 0.5;
    double speed_max = 1.5;
    double anomaly_speed_multiplier = 3.0;
    double anomaly_size_multiplier = 2.5;
    int anomaly_span_min = 10;
    int anomaly_span_max = 20;
    double anomaly_fraction = 0.25; // target fraction of anomalous test frames
    uint64_t seed = 7;

    void validate() const;
};

struct CorpusSummary {
    int train_frames = 0;
    int test_frames = 0;
    int test_anomalous_frames = 0;
};

// Writes grayscale PNG frames under <out>/<split>/<video>/frame_%04d.png,
// ground-truth detections (confidence 1.0) and frame labels as JSON lines per
// split, and a manifest embedding the spec, the seed and the anomaly spans.
CorpusSummary generate_corpus(const CorpusSpec& spec, const std::filesystem::path& out_root);

} // namespace vadctx
