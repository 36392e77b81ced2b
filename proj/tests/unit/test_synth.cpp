#include "vadctx/common.hpp"
#include "vadctx/image.hpp"
#include "vadctx/synth.hpp"

#include <doctest.h>

#include <json.hpp>

#include <cmath>
#include <fstream>
#include <map>

using namespace vadctx;
using nlohmann::json;
namespace fs = std::filesystem;

namespace {

struct TempDir {
    fs::path path;
    TempDir() {
        path = fs::temp_directory_path() /
               ("vadctx_synth_" + std::to_string(::getpid()) + "_" + std::to_string(counter++));
    }
    ~TempDir() { fs::remove_all(path); }
    static inline int counter = 0;
};

CorpusSpec tiny_spec() {
    CorpusSpec spec;
    spec.train_videos = 1;
    spec.test_videos = 2;
    spec.frames_per_video = 30;
    spec.anomaly_span_min = 6;
    spec.anomaly_span_max = 10;
    spec.anomaly_fraction = 0.3;
    spec.seed = 21;
    return spec;
}

std::string slurp(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    return std::string(std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>());
}

std::map<int, std::vector<std::array<double, 4>>> boxes_by_frame(const fs::path& det_file,
                                                                 const std::string& video) {
    std::map<int, std::vector<std::array<double, 4>>> out;
    std::ifstream in(det_file);
    std::string line;
    while (std::getline(in, line)) {
        if (line.empty())
            continue;
        json rec = json::parse(line);
        if (rec.at("video") != video)
            continue;
        for (const auto& b : rec.at("boxes"))
            out[rec.at("frame").get<int>()].push_back(
                {b[0].get<double>(), b[1].get<double>(), b[2].get<double>(), b[3].get<double>()});
    }
    return out;
}

} // namespace

TEST_SUITE_BEGIN("synth");

TEST_CASE("identical spec and seed reproduce every output byte") {
    TempDir a, b;
    auto spec = tiny_spec();
    generate_corpus(spec, a.path);
    generate_corpus(spec, b.path);

    size_t files = 0;
    for (auto& entry : fs::recursive_directory_iterator(a.path)) {
        if (!entry.is_regular_file())
            continue;
        ++files;
        const auto rel = fs::relative(entry.path(), a.path);
        CHECK(slurp(entry.path()) == slurp(b.path / rel));
    }
    CHECK(files > 90); // 90 frames + jsonl files + manifest
}

TEST_CASE("labels match the manifest's anomalous frame count; train labels are all zero") {
    TempDir tmp;
    auto spec = tiny_spec();
    auto summary = generate_corpus(spec, tmp.path);

    json manifest = json::parse(slurp(tmp.path / "manifest.json"));
    CHECK(manifest.at("test_anomalous_frames").get<int>() == summary.test_anomalous_frames);
    CHECK(summary.test_anomalous_frames > 0);

    int counted = 0;
    std::ifstream labels(tmp.path / "test_labels.jsonl");
    std::string line;
    while (std::getline(labels, line))
        if (!line.empty())
            counted += json::parse(line).at("label").get<int>();
    CHECK(counted == summary.test_anomalous_frames);

    std::ifstream train_labels(tmp.path / "train_labels.jsonl");
    while (std::getline(train_labels, line))
        if (!line.empty())
            CHECK(json::parse(line).at("label").get<int>() == 0);

    // Labeled frames lie inside the declared spans, and every span frame is
    // labeled.
    std::map<std::string, std::vector<std::pair<int, int>>> spans;
    for (const auto& s : manifest.at("anomaly_spans"))
        spans[s.at("video").get<std::string>()].push_back(
            {s.at("start").get<int>(), s.at("end").get<int>()});
    std::ifstream labels2(tmp.path / "test_labels.jsonl");
    while (std::getline(labels2, line)) {
        if (line.empty())
            continue;
        json rec = json::parse(line);
        bool in_span = false;
        for (auto [lo, hi] : spans[rec.at("video").get<std::string>()])
            if (rec.at("frame").get<int>() >= lo && rec.at("frame").get<int>() < hi)
                in_span = true;
        CHECK(rec.at("label").get<int>() == (in_span ? 1 : 0));
    }
}

TEST_CASE("every rendered sprite pixel lies inside some ground-truth box") {
    TempDir tmp;
    auto spec = tiny_spec();
    generate_corpus(spec, tmp.path);

    for (const std::string split : {"train", "test"}) {
        const fs::path det_file = tmp.path / (split + "_detections.jsonl");
        const std::string video = split + "_000";
        auto boxes = boxes_by_frame(det_file, video);
        for (int f = 0; f < spec.frames_per_video; f += 7) {
            char buf[32];
            std::snprintf(buf, sizeof(buf), "frame_%04d.png", f);
            Image frame = load_image(tmp.path / split / video / buf);
            for (int y = 0; y < frame.height; ++y)
                for (int x = 0; x < frame.width; ++x) {
                    if (frame.at(y, x) <= 0.0f)
                        continue;
                    bool covered = false;
                    for (const auto& b : boxes[f]) {
                        if (x + 1.0 > b[0] && x < b[2] && y + 1.0 > b[1] && y < b[3]) {
                            covered = true;
                            break;
                        }
                    }
                    CHECK(covered);
                }
        }
    }
}

TEST_CASE("box-center displacements obey the speed ranges") {
    TempDir tmp;
    auto spec = tiny_spec();
    generate_corpus(spec, tmp.path);
    json manifest = json::parse(slurp(tmp.path / "manifest.json"));

    // Normal sprites: the per-frame displacement magnitude sits in the
    // configured range. The training video has only normal sprites and a
    // stable box order.
    auto boxes = boxes_by_frame(tmp.path / "train_detections.jsonl", "train_000");
    const size_t sprite_count = boxes.at(0).size();
    for (int f = 0; f + 1 < spec.frames_per_video; ++f) {
        REQUIRE(boxes.at(f).size() == sprite_count);
        for (size_t s = 0; s < sprite_count; ++s) {
            const auto& a = boxes.at(f)[s];
            const auto& b = boxes.at(f + 1)[s];
            const double dx = 0.5 * (b[0] + b[2]) - 0.5 * (a[0] + a[2]);
            const double dy = 0.5 * (b[1] + b[3]) - 0.5 * (a[1] + a[3]);
            const double step = std::hypot(dx, dy);
            CHECK(step >= spec.speed_min - 1e-9);
            CHECK(step <= spec.speed_max + 1e-9);
        }
    }

    // Fast anomalous sprites exceed the normal maximum by the margin. The
    // anomalous box is appended after the normal ones inside its span.
    for (const auto& span : manifest.at("anomaly_spans")) {
        if (span.at("kind") != "fast_square")
            continue;
        const std::string video = span.at("video").get<std::string>();
        auto tboxes = boxes_by_frame(tmp.path / "test_detections.jsonl", video);
        const int lo = span.at("start").get<int>();
        const int hi = span.at("end").get<int>();
        for (int f = lo; f + 1 < hi; ++f) {
            const auto& a = tboxes.at(f).back();
            const auto& b = tboxes.at(f + 1).back();
            const double dx = 0.5 * (b[0] + b[2]) - 0.5 * (a[0] + a[2]);
            const double dy = 0.5 * (b[1] + b[3]) - 0.5 * (a[1] + a[3]);
            CHECK(std::hypot(dx, dy) ==
                  doctest::Approx(spec.speed_max * spec.anomaly_speed_multiplier).epsilon(1e-9));
        }
    }
}

TEST_CASE("unsatisfiable sprite geometry is a spec error") {
    CorpusSpec spec = tiny_spec();
    spec.size_max = 200.0; // larger than the frame
    CHECK_THROWS_AS(generate_corpus(spec, fs::temp_directory_path() / "vadctx_never"), ConfigError);

    CorpusSpec fraction = tiny_spec();
    fraction.anomaly_fraction = 2.0;
    CHECK_THROWS_AS(generate_corpus(fraction, fs::temp_directory_path() / "vadctx_never"),
                    ConfigError);
}

TEST_SUITE_END();
