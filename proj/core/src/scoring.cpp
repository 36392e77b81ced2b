#include "vadctx/scoring.hpp"

#include "vadctx/common.hpp"
#include "vadctx/losses.hpp"

#include <json.hpp>

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <numeric>

namespace vadctx {

using nlohmann::json;

std::vector<TargetError> per_target_errors(const StreamModel& model,
                                           const std::vector<FrameGroup>& groups, int threads) {
    for (const auto& g : groups)
        if (g.stream != model.stream())
            throw std::invalid_argument("per_target_errors: stream tag mismatch");

    std::vector<std::vector<TargetError>> per_group(groups.size());
    parallel_for(groups.size(), threads, [&](size_t gi) {
        const FrameGroup& group = groups[gi];
        auto fwd = model.forward_frame(group);
        auto& out = per_group[gi];
        out.reserve(fwd.target_recon.size());
        for (size_t i = 0; i < fwd.target_recon.size(); ++i)
            out.push_back({group.video, group.frame, static_cast<int>(i), fwd.target_recon[i]});
    });

    std::vector<TargetError> flat;
    for (auto& chunk : per_group)
        for (auto& e : chunk)
            flat.push_back(std::move(e));
    return flat;
}

std::vector<double> normalize_errors(const std::vector<double>& errors, Normalization kind) {
    if (errors.empty())
        throw std::invalid_argument("normalize_errors: empty error table");
    const auto [lo_it, hi_it] = std::minmax_element(errors.begin(), errors.end());
    const double lo = *lo_it, hi = *hi_it;
    if (hi <= 0.0)
        throw NumericError("normalize_errors: degenerate stream (max error is 0)");

    std::vector<double> out(errors.size());
    if (kind == Normalization::global_max) {
        for (size_t i = 0; i < errors.size(); ++i)
            out[i] = (errors[i] - lo) / hi;
    } else {
        const double range = hi - lo;
        for (size_t i = 0; i < errors.size(); ++i)
            out[i] = range > 0.0 ? (errors[i] - lo) / range : 0.0;
    }
    return out;
}

double frame_score(const std::vector<double>& target_scores) {
    double best = 0.0;
    for (double s : target_scores)
        best = std::max(best, s);
    return best;
}

std::vector<double> smooth_scores(const std::vector<double>& series, int window) {
    if (window < 1)
        throw std::invalid_argument("smooth_scores: window must be >= 1");
    const int n = static_cast<int>(series.size());
    std::vector<double> out(series.size());
    for (int t = 0; t < n; ++t) {
        const int lo = std::max(0, t - window / 2);
        const int hi = std::min(n - 1, t + (window - 1) / 2);
        double sum = 0.0;
        for (int k = lo; k <= hi; ++k)
            sum += series[k];
        out[t] = sum / static_cast<double>(hi - lo + 1);
    }
    return out;
}

double compute_auc(const std::vector<double>& scores, const std::vector<int>& labels) {
    if (scores.size() != labels.size())
        throw std::invalid_argument("compute_auc: scores and labels differ in length");
    size_t positives = 0;
    for (int l : labels) {
        if (l != 0 && l != 1)
            throw std::invalid_argument("compute_auc: labels must be 0 or 1");
        positives += static_cast<size_t>(l);
    }
    const size_t negatives = labels.size() - positives;
    if (positives == 0 || negatives == 0)
        throw NumericError("compute_auc: undefined AUC, labels contain a single class");

    // Rank statistic with average ranks over ties (half credit per tie).
    std::vector<size_t> order(scores.size());
    std::iota(order.begin(), order.end(), size_t{0});
    std::sort(order.begin(), order.end(),
              [&](size_t a, size_t b) { return scores[a] < scores[b]; });

    double rank_sum_pos = 0.0;
    size_t i = 0;
    while (i < order.size()) {
        size_t j = i;
        while (j + 1 < order.size() && scores[order[j + 1]] == scores[order[i]])
            ++j;
        const double avg_rank = 0.5 * (static_cast<double>(i + 1) + static_cast<double>(j + 1));
        for (size_t k = i; k <= j; ++k)
            if (labels[order[k]] == 1)
                rank_sum_pos += avg_rank;
        i = j + 1;
    }

    const double p = static_cast<double>(positives);
    const double u = rank_sum_pos - p * (p + 1.0) / 2.0;
    return u / (p * static_cast<double>(negatives));
}

int LabelSet::at(const std::string& video, int frame) const {
    auto v = by_video.find(video);
    if (v == by_video.end())
        throw IngestError("labels missing for video: " + video);
    auto f = v->second.find(frame);
    if (f == v->second.end())
        throw IngestError("label missing for video " + video + ", frame " + std::to_string(frame));
    return f->second;
}

LabelSet load_labels(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in)
        throw MissingPrereqError("labels file not found: " + path.string());
    LabelSet out;
    std::string line;
    size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.find_first_not_of(" \t\r") == std::string::npos)
            continue;
        const std::string where = path.filename().string() + ":" + std::to_string(line_no);
        json rec;
        try {
            rec = json::parse(line);
        } catch (const json::exception& e) {
            throw IngestError(where + ": malformed JSON line: " + e.what());
        }
        try {
            const auto video = rec.at("video").get<std::string>();
            const int frame = rec.at("frame").get<int>();
            const int label = rec.at("label").get<int>();
            if (label != 0 && label != 1)
                throw IngestError(where + ": label must be 0 or 1");
            out.by_video[video][frame] = label;
        } catch (const json::exception& e) {
            throw IngestError(where + ": bad record: " + e.what());
        }
    }
    return out;
}

ScoreTable score_test_split(const StreamModel& spatial_model, const StreamModel& temporal_model,
                            const SplitData& spatial_data, const SplitData& temporal_data,
                            const LabelSet& labels, Normalization normalization, int window,
                            int threads) {
    // The two streams must cover the same frames with the same targets.
    if (spatial_data.groups.size() != temporal_data.groups.size())
        throw IngestError("score: spatial/temporal caches disagree on frame count");
    for (size_t i = 0; i < spatial_data.groups.size(); ++i) {
        const auto& s = spatial_data.groups[i];
        const auto& t = temporal_data.groups[i];
        if (s.video != t.video || s.frame != t.frame || s.boxes.size() != t.boxes.size())
            throw IngestError("score: spatial/temporal caches are misaligned at " + s.video +
                              " frame " + std::to_string(s.frame));
    }

    // Pass 1: raw errors per stream.
    auto spatial_errors = per_target_errors(spatial_model, spatial_data.groups, threads);
    auto temporal_errors = per_target_errors(temporal_model, temporal_data.groups, threads);
    if (spatial_errors.size() != temporal_errors.size())
        throw IngestError("score: per-target error tables are misaligned");

    // Pass 2: normalize over the full test set, per stream.
    std::vector<double> raw_s(spatial_errors.size()), raw_t(temporal_errors.size());
    for (size_t i = 0; i < spatial_errors.size(); ++i) {
        raw_s[i] = spatial_errors[i].value;
        raw_t[i] = temporal_errors[i].value;
    }
    const auto norm_s = normalize_errors(raw_s, normalization);
    const auto norm_t = normalize_errors(raw_t, normalization);

    // Per-frame maxima of the per-target scores.
    struct FrameAgg {
        double appearance = 0, motion = 0, fused = 0;
    };
    std::map<std::pair<std::string, int>, FrameAgg> agg;
    for (size_t i = 0; i < spatial_errors.size(); ++i) {
        const auto key = std::make_pair(spatial_errors[i].video, spatial_errors[i].frame);
        auto& a = agg[key];
        a.appearance = std::max(a.appearance, norm_s[i]);
        a.motion = std::max(a.motion, norm_t[i]);
        a.fused = std::max(a.fused, fuse_scores(norm_s[i], norm_t[i]));
    }

    // Assemble the per-video series over frames 1..T-1; frames with zero
    // detections keep score 0.
    ScoreTable table;
    for (const auto& [video, total] : spatial_data.video_frame_count) {
        std::vector<double> fused_series;
        const size_t row_begin = table.rows.size();
        for (int t = 1; t < total; ++t) {
            FrameScoreRow row;
            row.video = video;
            row.frame = t;
            auto it = agg.find({video, t});
            if (it != agg.end()) {
                row.appearance = it->second.appearance;
                row.motion = it->second.motion;
                row.fused = it->second.fused;
            }
            row.label = labels.at(video, t);
            fused_series.push_back(row.fused);
            table.rows.push_back(std::move(row));
        }
        const auto smoothed = smooth_scores(fused_series, window);
        for (size_t k = 0; k < smoothed.size(); ++k)
            table.rows[row_begin + k].smoothed = smoothed[k];
    }
    return table;
}

namespace {

std::string format_double(double v) {
    char buf[32];
    auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), v);
    (void)ec;
    return std::string(buf, ptr);
}

} // namespace

void write_score_csv(const std::filesystem::path& path, const ScoreTable& table) {
    if (path.has_parent_path())
        std::filesystem::create_directories(path.parent_path());
    std::ofstream out(path, std::ios::trunc);
    if (!out)
        throw IngestError("cannot write score CSV: " + path.string());
    out << "video,frame,appearance,motion,fused,smoothed,label\n";
    for (const auto& row : table.rows) {
        out << row.video << ',' << row.frame << ',' << format_double(row.appearance) << ','
            << format_double(row.motion) << ',' << format_double(row.fused) << ','
            << format_double(row.smoothed) << ',' << row.label << '\n';
    }
    if (!out)
        throw IngestError("failed writing score CSV: " + path.string());
}

ScoreTable read_score_csv(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in)
        throw MissingPrereqError("score CSV not found: " + path.string() + " (run score first)");
    ScoreTable table;
    std::string line;
    if (!std::getline(in, line) || line != "video,frame,appearance,motion,fused,smoothed,label")
        throw IngestError("unexpected score CSV header in: " + path.string());
    size_t line_no = 1;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.empty())
            continue;
        FrameScoreRow row;
        size_t pos = 0;
        auto next_field = [&]() {
            const size_t comma = line.find(',', pos);
            const std::string field =
                line.substr(pos, comma == std::string::npos ? std::string::npos : comma - pos);
            pos = comma == std::string::npos ? line.size() : comma + 1;
            return field;
        };
        auto parse_double = [&](const std::string& s) {
            double v = 0;
            auto [p, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
            if (ec != std::errc() || p != s.data() + s.size())
                throw IngestError(path.filename().string() + ":" + std::to_string(line_no) +
                                  ": bad numeric field '" + s + "'");
            return v;
        };
        row.video = next_field();
        row.frame = static_cast<int>(parse_double(next_field()));
        row.appearance = parse_double(next_field());
        row.motion = parse_double(next_field());
        row.fused = parse_double(next_field());
        row.smoothed = parse_double(next_field());
        row.label = static_cast<int>(parse_double(next_field()));
        table.rows.push_back(std::move(row));
    }
    return table;
}

EvalResult evaluate_scores(const ScoreTable& table) {
    if (table.rows.empty())
        throw std::invalid_argument("evaluate_scores: empty score table");
    std::vector<double> scores;
    std::vector<int> labels;
    std::map<std::string, std::pair<std::vector<double>, std::vector<int>>> per_video;
    for (const auto& row : table.rows) {
        scores.push_back(row.smoothed);
        labels.push_back(row.label);
        per_video[row.video].first.push_back(row.smoothed);
        per_video[row.video].second.push_back(row.label);
    }

    EvalResult result;
    result.auc = compute_auc(scores, labels);
    for (const auto& [video, sl] : per_video) {
        const bool has_pos = std::find(sl.second.begin(), sl.second.end(), 1) != sl.second.end();
        const bool has_neg = std::find(sl.second.begin(), sl.second.end(), 0) != sl.second.end();
        if (has_pos && has_neg)
            result.per_video_auc[video] = compute_auc(sl.first, sl.second);
    }
    return result;
}

} // namespace vadctx
