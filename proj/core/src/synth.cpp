#include "vadctx/synth.hpp"

#include "vadctx/common.hpp"
#include "vadctx/image.hpp"

#include <json.hpp>

#include <algorithm>
#include <cmath>
#include <fstream>
#include <vector>

namespace vadctx {

using nlohmann::json;
namespace fs = std::filesystem;

namespace {

enum class SpriteKind { square, triangle };

struct Sprite {
    SpriteKind kind = SpriteKind::square;
    double cx = 0, cy = 0;
    double vx = 0, vy = 0;
    double size = 0;
    double shade = 0.8;
    bool anomalous = false;
    // Vertical lane the sprite bounces in. Normal sprites get disjoint
    // lanes so normal frames never contain composite (overlapping) crops;
    // anomalous sprites roam the whole frame.
    double lane_y0 = 0, lane_y1 = 0;
};

struct AnomalySpan {
    int start = 0; // inclusive
    int end = 0;   // exclusive
    std::string kind;
    Sprite sprite;
};

double margin_for(const Sprite& s) {
    return s.size / 2.0 + 1.0;
}

// Reflect velocity before moving so the step length always equals the speed;
// the per-frame displacement of box centers then sits exactly in the
// configured speed range.
void step(Sprite& s, int width) {
    const double m = margin_for(s);
    if (s.cx + s.vx < m || s.cx + s.vx > width - m)
        s.vx = -s.vx;
    if (s.cy + s.vy < s.lane_y0 + m || s.cy + s.vy > s.lane_y1 - m)
        s.vy = -s.vy;
    s.cx += s.vx;
    s.cy += s.vy;
}

Sprite random_sprite(Rng& rng, const CorpusSpec& spec, double lane_y0, double lane_y1) {
    Sprite s;
    s.size = rng.uniform(spec.size_min, spec.size_max);
    const double speed = rng.uniform(spec.speed_min, spec.speed_max);
    const double angle = rng.uniform(0.0, 2.0 * M_PI);
    s.vx = speed * std::cos(angle);
    s.vy = speed * std::sin(angle);
    s.shade = rng.uniform(0.55, 0.95);
    s.lane_y0 = lane_y0;
    s.lane_y1 = lane_y1;
    const double m = margin_for(s);
    s.cx = rng.uniform(m, spec.width - m);
    s.cy = rng.uniform(lane_y0 + m, lane_y1 - m);
    return s;
}

Sprite anomaly_sprite(Rng& rng, const CorpusSpec& spec, const std::string& kind) {
    Sprite s = random_sprite(rng, spec, 0.0, spec.height);
    s.anomalous = true;
    if (kind == "fast_square") {
        // Upper half of the normal size range: a fast mover must stay
        // resolvable in the dense flow at corpus resolution.
        s.size = rng.uniform(0.5 * (spec.size_min + spec.size_max), spec.size_max);
        const double speed = spec.speed_max * spec.anomaly_speed_multiplier;
        const double angle = rng.uniform(0.0, 2.0 * M_PI);
        s.vx = speed * std::cos(angle);
        s.vy = speed * std::sin(angle);
    } else { // large_triangle
        s.kind = SpriteKind::triangle;
        s.size = spec.size_max * spec.anomaly_size_multiplier;
        const double m = margin_for(s);
        s.cx = rng.uniform(m, spec.width - m);
        s.cy = rng.uniform(m, spec.height - m);
    }
    s.lane_y0 = 0.0;
    s.lane_y1 = spec.height;
    return s;
}

double square_coverage(const Sprite& s, int px, int py) {
    const double x1 = s.cx - s.size / 2.0, x2 = s.cx + s.size / 2.0;
    const double y1 = s.cy - s.size / 2.0, y2 = s.cy + s.size / 2.0;
    const double ox = std::max(0.0, std::min(x2, px + 1.0) - std::max(x1, double(px)));
    const double oy = std::max(0.0, std::min(y2, py + 1.0) - std::max(y1, double(py)));
    return ox * oy;
}

bool point_in_triangle(const Sprite& s, double x, double y) {
    // Isoceles triangle: apex up, base at cy + size/2.
    const double half = s.size / 2.0;
    const double ax = s.cx, ay = s.cy - half;
    const double bx = s.cx - half, by = s.cy + half;
    const double cx = s.cx + half, cy = s.cy + half;
    auto side = [](double x1, double y1, double x2, double y2, double px, double py) {
        return (x2 - x1) * (py - y1) - (y2 - y1) * (px - x1);
    };
    const double d1 = side(ax, ay, bx, by, x, y);
    const double d2 = side(bx, by, cx, cy, x, y);
    const double d3 = side(cx, cy, ax, ay, x, y);
    const bool has_neg = (d1 < 0) || (d2 < 0) || (d3 < 0);
    const bool has_pos = (d1 > 0) || (d2 > 0) || (d3 > 0);
    return !(has_neg && has_pos);
}

double triangle_coverage(const Sprite& s, int px, int py) {
    int inside = 0;
    for (int sy = 0; sy < 4; ++sy)
        for (int sx = 0; sx < 4; ++sx)
            if (point_in_triangle(s, px + (sx + 0.5) / 4.0, py + (sy + 0.5) / 4.0))
                ++inside;
    return inside / 16.0;
}

// Shading falls off toward the sprite edge, giving interior gradients the
// dense flow solver can latch onto.
double profile(const Sprite& s, int px, int py) {
    const double dx = (px + 0.5) - s.cx;
    const double dy = (py + 0.5) - s.cy;
    const double d = std::clamp(std::max(std::abs(dx), std::abs(dy)) / (s.size / 2.0), 0.0, 1.0);
    return s.shade * (1.0 - 0.5 * d);
}

void render(Image& frame, const Sprite& s) {
    const int x0 = std::max(0, static_cast<int>(std::floor(s.cx - s.size / 2.0)));
    const int y0 = std::max(0, static_cast<int>(std::floor(s.cy - s.size / 2.0)));
    const int x1 = std::min(frame.width - 1, static_cast<int>(std::ceil(s.cx + s.size / 2.0)));
    const int y1 = std::min(frame.height - 1, static_cast<int>(std::ceil(s.cy + s.size / 2.0)));
    for (int y = y0; y <= y1; ++y) {
        for (int x = x0; x <= x1; ++x) {
            const double cov = s.kind == SpriteKind::square ? square_coverage(s, x, y)
                                                            : triangle_coverage(s, x, y);
            if (cov <= 0.0)
                continue;
            const float value = static_cast<float>(cov * profile(s, x, y));
            frame.at(y, x) = std::max(frame.at(y, x), value);
        }
    }
}

json box_json(const Sprite& s) {
    const double half = s.size / 2.0;
    return json::array({s.cx - half, s.cy - half, s.cx + half, s.cy + half, 1.0});
}

std::vector<AnomalySpan> plan_spans(Rng& rng, const CorpusSpec& spec, int video_index) {
    std::vector<AnomalySpan> spans;
    int remaining = static_cast<int>(std::lround(spec.anomaly_fraction * spec.frames_per_video));
    int span_index = 0;
    while (remaining >= spec.anomaly_span_min) {
        const int cap = std::min(spec.anomaly_span_max, remaining);
        const int len =
            spec.anomaly_span_min +
            static_cast<int>(rng.uniform_int(static_cast<uint64_t>(cap - spec.anomaly_span_min + 1)));
        AnomalySpan span;
        // Keep spans out of frame 0 (no flow there) and inside the video.
        bool placed = false;
        for (int attempt = 0; attempt < 200 && !placed; ++attempt) {
            const int start =
                1 + static_cast<int>(rng.uniform_int(
                        static_cast<uint64_t>(spec.frames_per_video - len)));
            span.start = start;
            span.end = start + len;
            placed = true;
            for (const auto& other : spans) {
                if (span.start < other.end + 3 && other.start < span.end + 3) {
                    placed = false;
                    break;
                }
            }
        }
        if (!placed)
            break;
        span.kind = (video_index + span_index) % 2 == 0 ? "fast_square" : "large_triangle";
        span.sprite = anomaly_sprite(rng, spec, span.kind);
        spans.push_back(span);
        remaining -= len;
        ++span_index;
    }
    return spans;
}

} // namespace

void CorpusSpec::validate() const {
    if (height < 16 || width < 16)
        throw ConfigError("corpus: frame size too small");
    if (train_videos < 1 || test_videos < 1 || frames_per_video < 2)
        throw ConfigError("corpus: need at least 1 video per split and 2 frames per video");
    if (min_sprites < 1 || max_sprites < min_sprites)
        throw ConfigError("corpus: bad sprite count range");
    if (size_min <= 0 || size_max < size_min)
        throw ConfigError("corpus: bad sprite size range");
    if (speed_min <= 0 || speed_max < speed_min)
        throw ConfigError("corpus: bad speed range");
    if (anomaly_span_min < 1 || anomaly_span_max < anomaly_span_min)
        throw ConfigError("corpus: bad anomaly span range");
    if (anomaly_span_max >= frames_per_video)
        throw ConfigError("corpus: anomaly span does not fit in a video");
    if (anomaly_fraction < 0.0 || anomaly_fraction > 0.8)
        throw ConfigError("corpus: anomaly_fraction must be in [0, 0.8]");

    const double largest = std::max(size_max * anomaly_size_multiplier, size_max);
    const double fastest = speed_max * anomaly_speed_multiplier;
    if (largest + 2.0 * (fastest + 1.0) + 2.0 >= std::min(height, width))
        throw ConfigError("corpus: sprite larger than frame (size/speed ranges unsatisfiable)");
    // Normal sprites bounce inside disjoint lanes of height/max_sprites.
    const double lane = static_cast<double>(height) / max_sprites;
    if (size_max + 2.0 * (speed_max + 1.0) >= lane)
        throw ConfigError("corpus: sprite lanes too small for size/speed ranges "
                          "(reduce max_sprites or sprite size)");
}

CorpusSummary generate_corpus(const CorpusSpec& spec, const fs::path& out_root) {
    spec.validate();
    fs::create_directories(out_root);

    CorpusSummary summary;
    json manifest;
    manifest["spec"] = {{"height", spec.height},
                        {"width", spec.width},
                        {"train_videos", spec.train_videos},
                        {"test_videos", spec.test_videos},
                        {"frames_per_video", spec.frames_per_video},
                        {"min_sprites", spec.min_sprites},
                        {"max_sprites", spec.max_sprites},
                        {"size_min", spec.size_min},
                        {"size_max", spec.size_max},
                        {"speed_min", spec.speed_min},
                        {"speed_max", spec.speed_max},
                        {"anomaly_speed_multiplier", spec.anomaly_speed_multiplier},
                        {"anomaly_size_multiplier", spec.anomaly_size_multiplier},
                        {"anomaly_span_min", spec.anomaly_span_min},
                        {"anomaly_span_max", spec.anomaly_span_max},
                        {"anomaly_fraction", spec.anomaly_fraction}};
    manifest["seed"] = spec.seed;
    json spans_json = json::array();

    for (const std::string split : {"train", "test"}) {
        const bool is_test = split == "test";
        const int video_count = is_test ? spec.test_videos : spec.train_videos;

        std::ofstream det_file(out_root / (split + "_detections.jsonl"), std::ios::trunc);
        std::ofstream label_file(out_root / (split + "_labels.jsonl"), std::ios::trunc);
        if (!det_file || !label_file)
            throw IngestError("cannot write corpus files in: " + out_root.string());

        json videos_json = json::array();
        for (int v = 0; v < video_count; ++v) {
            char name_buf[32];
            std::snprintf(name_buf, sizeof(name_buf), "%s_%03d", split.c_str(), v);
            const std::string video = name_buf;
            videos_json.push_back({{"name", video}, {"frames", spec.frames_per_video}});

            Rng rng(derive_seed(spec.seed, split + "/" + video));
            const int sprite_count =
                spec.min_sprites +
                static_cast<int>(rng.uniform_int(
                    static_cast<uint64_t>(spec.max_sprites - spec.min_sprites + 1)));
            std::vector<Sprite> sprites;
            const double lane_height = static_cast<double>(spec.height) / sprite_count;
            for (int i = 0; i < sprite_count; ++i)
                sprites.push_back(random_sprite(rng, spec, i * lane_height, (i + 1) * lane_height));

            std::vector<AnomalySpan> spans;
            if (is_test) {
                spans = plan_spans(rng, spec, v);
                for (const auto& span : spans)
                    spans_json.push_back({{"video", video},
                                          {"start", span.start},
                                          {"end", span.end},
                                          {"kind", span.kind}});
            }

            for (int f = 0; f < spec.frames_per_video; ++f) {
                std::vector<const Sprite*> active;
                for (const auto& s : sprites)
                    active.push_back(&s);
                bool anomalous_frame = false;
                for (auto& span : spans) {
                    if (f >= span.start && f < span.end) {
                        active.push_back(&span.sprite);
                        anomalous_frame = true;
                    }
                }

                Image frame(spec.height, spec.width);
                json boxes = json::array();
                for (const Sprite* s : active) {
                    render(frame, *s);
                    boxes.push_back(box_json(*s));
                }

                char frame_buf[32];
                std::snprintf(frame_buf, sizeof(frame_buf), "frame_%04d.png", f);
                save_png_gray(out_root / split / video / frame_buf, frame);

                det_file << json{{"video", video}, {"frame", f}, {"boxes", boxes}}.dump() << "\n";
                label_file << json{{"video", video}, {"frame", f}, {"label", anomalous_frame ? 1 : 0}}
                                  .dump()
                           << "\n";

                if (is_test) {
                    ++summary.test_frames;
                    if (anomalous_frame)
                        ++summary.test_anomalous_frames;
                } else {
                    ++summary.train_frames;
                }

                // Advance the world one step.
                for (auto& s : sprites)
                    step(s, spec.width);
                for (auto& span : spans)
                    if (f >= span.start && f < span.end - 1)
                        step(span.sprite, spec.width);
            }
        }
        manifest["splits"][split] = {{"videos", videos_json}};
    }

    manifest["anomaly_spans"] = spans_json;
    manifest["test_anomalous_frames"] = summary.test_anomalous_frames;

    std::ofstream mf(out_root / "manifest.json", std::ios::trunc);
    if (!mf)
        throw IngestError("cannot write corpus manifest in: " + out_root.string());
    mf << manifest.dump(2) << "\n";
    return summary;
}

} // namespace vadctx
