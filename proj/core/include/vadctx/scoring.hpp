#pragma once

#include "vadctx/ingest.hpp"
#include "vadctx/stream_model.hpp"

#include <filesystem>
#include <map>
#include <string>
#include <vector>

namespace vadctx {

struct TargetError {
    std::string video;
    int frame = 0;
    int target = 0;
    double value = 0; // raw per-target reconstruction error, >= 0
};

// Raw per-target reconstruction errors over every group, memory read-only.
// Output order follows the group order, one entry per (frame, target).
std::vector<TargetError> per_target_errors(const StreamModel& model,
                                           const std::vector<FrameGroup>& groups, int threads);

// Regularization of a stream's error table over the whole test set:
// global_max maps L to (L - min) / max; minmax to (L - min) / (max - min).
enum class Normalization { global_max, minmax };

std::vector<double> normalize_errors(const std::vector<double>& errors, Normalization kind);

// Joint per-target score: the larger of the appearance and motion scores.
inline double fuse_scores(double appearance, double motion) {
    return appearance > motion ? appearance : motion;
}

// Frame score: the largest target score; an empty frame scores 0.
double frame_score(const std::vector<double>& target_scores);

// Centered moving average (window frames, t-w/2 .. t+(w-1)/2), truncated at
// the series boundaries. Callers apply it per video so windows never cross
// video boundaries.
std::vector<double> smooth_scores(const std::vector<double>& series, int window);

// Frame-level ROC AUC via the rank statistic; ties get half credit. Throws
// NumericError when labels are single-class.
double compute_auc(const std::vector<double>& scores, const std::vector<int>& labels);

// Frame labels, JSON lines {"video": str, "frame": int, "label": 0|1}.
struct LabelSet {
    std::map<std::string, std::map<int, int>> by_video;

    int at(const std::string& video, int frame) const;
};
LabelSet load_labels(const std::filesystem::path& path);

struct FrameScoreRow {
    std::string video;
    int frame = 0;
    double appearance = 0;
    double motion = 0;
    double fused = 0;
    double smoothed = 0;
    int label = 0;
};

struct ScoreTable {
    std::vector<FrameScoreRow> rows; // ordered by (video, frame), frame >= 1
};

// Two-pass scoring of the test split: raw errors for both streams first,
// then global normalization, per-target fusion, frame maxima, and per-video
// smoothing. Spatial and temporal groups must be aligned (same frames, same
// boxes); frames with zero detections score 0.
ScoreTable score_test_split(const StreamModel& spatial_model, const StreamModel& temporal_model,
                            const SplitData& spatial_data, const SplitData& temporal_data,
                            const LabelSet& labels, Normalization normalization, int window,
                            int threads);

void write_score_csv(const std::filesystem::path& path, const ScoreTable& table);
ScoreTable read_score_csv(const std::filesystem::path& path);

struct EvalResult {
    double auc = 0;
    // Per-video AUC; videos whose labels are single-class are absent.
    std::map<std::string, double> per_video_auc;
};

// AUC of the smoothed score column against the labels.
EvalResult evaluate_scores(const ScoreTable& table);

} // namespace vadctx
