#include "vadctx/common.hpp"
#include "vadctx/scoring.hpp"
#include "vadctx/stream_model.hpp"

#include <doctest.h>

#include <cmath>
#include <filesystem>
#include <fstream>

using namespace vadctx;
namespace fs = std::filesystem;

namespace {

// Independent oracle: average over all (positive, negative) pairs with half
// credit for ties. Quadratic, used only to check the rank-based routine.
double brute_force_auc(const std::vector<double>& scores, const std::vector<int>& labels) {
    double wins = 0;
    size_t pairs = 0;
    for (size_t i = 0; i < scores.size(); ++i) {
        if (labels[i] != 1)
            continue;
        for (size_t j = 0; j < scores.size(); ++j) {
            if (labels[j] != 0)
                continue;
            ++pairs;
            if (scores[i] > scores[j])
                wins += 1.0;
            else if (scores[i] == scores[j])
                wins += 0.5;
        }
    }
    return wins / static_cast<double>(pairs);
}

} // namespace

TEST_SUITE_BEGIN("scoring");

TEST_CASE("normalization follows the global-max (L - min) / max rule") {
    auto out = normalize_errors({2, 4, 10}, Normalization::global_max);
    CHECK(out[0] == doctest::Approx(0.0).epsilon(1e-12));
    CHECK(out[1] == doctest::Approx(0.2).epsilon(1e-12));
    CHECK(out[2] == doctest::Approx(0.8).epsilon(1e-12));

    auto equal = normalize_errors({3.5, 3.5}, Normalization::global_max);
    CHECK(equal[0] == 0.0);
    CHECK(equal[1] == 0.0);

    auto outlier = normalize_errors({1, 1, 100}, Normalization::global_max);
    CHECK(outlier[0] == 0.0);
    CHECK(outlier[2] == doctest::Approx(0.99).epsilon(1e-12));

    CHECK_THROWS_AS(normalize_errors({0, 0, 0}, Normalization::global_max), NumericError);
}

TEST_CASE("the min-max variant spans [0,1] exactly") {
    auto out = normalize_errors({2, 4, 10}, Normalization::minmax);
    CHECK(out[0] == 0.0);
    CHECK(out[2] == 1.0);
    CHECK(out[1] == doctest::Approx(0.25).epsilon(1e-12)); // (4-2)/(10-2)
}

TEST_CASE("normalized errors stay in [0, 1 - min/max] and the argmin maps to zero") {
    Rng rng(404);
    for (int t = 0; t < 200; ++t) {
        std::vector<double> errors;
        for (int i = 0; i < 20; ++i)
            errors.push_back(std::exp(rng.normal()));
        auto out = normalize_errors(errors, Normalization::global_max);
        const double lo = *std::min_element(errors.begin(), errors.end());
        const double hi = *std::max_element(errors.begin(), errors.end());
        for (double v : out) {
            CHECK(v >= 0.0);
            CHECK(v <= 1.0 - lo / hi + 1e-12);
        }
        const size_t argmin = std::min_element(errors.begin(), errors.end()) - errors.begin();
        CHECK(out[argmin] == 0.0);
    }
}

TEST_CASE("fusion and frame scores are maxima") {
    CHECK(fuse_scores(0.3, 0.8) == 0.8);
    CHECK(fuse_scores(0.6, 0.6) == 0.6);
    CHECK(fuse_scores(0.0, 0.4) == 0.4);

    CHECK(frame_score({0.2, 0.9, 0.1}) == 0.9);
    CHECK(frame_score({0.35}) == 0.35);
    CHECK(frame_score({}) == 0.0);
}

TEST_CASE("per-frame fusion equals one max over the union of both streams' scores") {
    Rng rng(777);
    for (int t = 0; t < 1000; ++t) {
        const int n = 1 + static_cast<int>(rng.uniform_int(8));
        std::vector<double> app(n), mot(n), fused(n);
        for (int i = 0; i < n; ++i) {
            app[i] = rng.uniform();
            mot[i] = rng.uniform();
            fused[i] = fuse_scores(app[i], mot[i]);
        }
        const double via_targets = frame_score(fused);
        const double via_union = std::max(frame_score(app), frame_score(mot));
        CHECK(via_targets == doctest::Approx(via_union).epsilon(1e-15));
    }
}

TEST_CASE("raising one target's score never lowers the frame score") {
    Rng rng(888);
    for (int t = 0; t < 200; ++t) {
        const int n = 1 + static_cast<int>(rng.uniform_int(6));
        std::vector<double> scores(n);
        for (auto& s : scores)
            s = rng.uniform();
        const double before = frame_score(scores);
        const size_t idx = rng.uniform_int(n);
        scores[idx] += rng.uniform(0.0, 0.5);
        CHECK(frame_score(scores) >= before);
    }
}

TEST_CASE("smoothing: constants, impulses and boundary truncation") {
    std::vector<double> constant(30, 0.4);
    auto sc = smooth_scores(constant, 10);
    for (double v : sc)
        CHECK(v == doctest::Approx(0.4).epsilon(1e-12));

    std::vector<double> impulse(40, 0.0);
    impulse[20] = 1.0;
    auto si = smooth_scores(impulse, 10);
    int spread = 0;
    for (double v : si)
        if (v > 0) {
            CHECK(v == doctest::Approx(0.1).epsilon(1e-12));
            ++spread;
        }
    CHECK(spread == 10);

    // Interior windows are the exact mean filter and preserve the mean.
    std::vector<double> series(25);
    Rng rng(3);
    for (auto& v : series)
        v = rng.uniform();
    auto ss = smooth_scores(series, 10);
    for (int t = 5; t + 4 < 25; ++t) {
        double mean = 0;
        for (int k = t - 5; k <= t + 4; ++k)
            mean += series[k];
        CHECK(ss[t] == doctest::Approx(mean / 10.0).epsilon(1e-12));
    }
}

TEST_CASE("smoothing of one video never leaks into another") {
    // Videos are smoothed separately: an impulse at the end of one series
    // must not bleed into the start of the next.
    std::vector<double> a{0, 0, 0, 1}, b{0, 0, 0, 0};
    auto sa = smooth_scores(a, 4);
    auto sb = smooth_scores(b, 4);
    CHECK(sa[3] > 0.0);
    CHECK(sa[2] > 0.0);
    for (double v : sb)
        CHECK(v == 0.0);
}

TEST_CASE("AUC on trivial and tied inputs") {
    CHECK(compute_auc({0.9, 0.1}, {1, 0}) == 1.0);
    CHECK(compute_auc({0.1, 0.9}, {1, 0}) == 0.0);
    CHECK(compute_auc({0.5, 0.5}, {1, 0}) == 0.5);
    CHECK_THROWS_AS(compute_auc({0.1, 0.9}, {1, 1}), NumericError);
    CHECK_THROWS_AS(compute_auc({0.1}, {0, 1}), std::invalid_argument);
}

TEST_CASE("AUC matches the brute-force pairwise oracle on random inputs") {
    Rng rng(31415);
    for (int t = 0; t < 50; ++t) {
        const int n = 10 + static_cast<int>(rng.uniform_int(60));
        std::vector<double> scores(n);
        std::vector<int> labels(n);
        bool has0 = false, has1 = false;
        for (int i = 0; i < n; ++i) {
            // Quantized scores produce plenty of ties.
            scores[i] = std::round(rng.uniform() * 8.0) / 8.0;
            labels[i] = rng.uniform() < 0.4 ? 1 : 0;
            has0 |= labels[i] == 0;
            has1 |= labels[i] == 1;
        }
        if (!has0)
            labels[0] = 0;
        if (!has1)
            labels[1] = 1;
        CHECK(std::abs(compute_auc(scores, labels) - brute_force_auc(scores, labels)) < 1e-9);
    }
}

TEST_CASE("AUC is invariant under strictly increasing transforms") {
    Rng rng(2718);
    std::vector<double> scores(80);
    std::vector<int> labels(80);
    for (int i = 0; i < 80; ++i) {
        scores[i] = rng.uniform();
        labels[i] = i % 3 == 0 ? 1 : 0;
    }
    const double base = compute_auc(scores, labels);
    std::vector<double> exp_scores(80), affine_scores(80);
    for (int i = 0; i < 80; ++i) {
        exp_scores[i] = std::exp(scores[i]);
        affine_scores[i] = 3.0 * scores[i] + 11.0;
    }
    CHECK(compute_auc(exp_scores, labels) == doctest::Approx(base).epsilon(1e-12));
    CHECK(compute_auc(affine_scores, labels) == doctest::Approx(base).epsilon(1e-12));
}

TEST_CASE("per-target errors do not depend on the worker partitioning") {
    ModelConfig cfg;
    cfg.input_channels = 1;
    cfg.latent_dim = 6;
    cfg.channels = {2, 3, 3, 4};
    cfg.patch_size = 8;
    cfg.memory_items = 4;
    cfg.shrink_threshold = 0.1;
    auto model = StreamModel::init(cfg, Stream::spatial, 71);

    std::vector<FrameGroup> groups;
    Rng rng(72);
    for (int f = 1; f <= 5; ++f) {
        FrameGroup g;
        g.video = "v";
        g.frame = f;
        g.stream = Stream::spatial;
        for (int i = 0; i < 3; ++i) {
            Tensor p(1, 8, 8);
            for (Eigen::Index k = 0; k < p.size(); ++k)
                p.data[k] = rng.uniform();
            g.patches.push_back(std::move(p));
            g.boxes.push_back({0, 0, 8, 8, 1.0});
        }
        groups.push_back(std::move(g));
    }

    auto serial = per_target_errors(model, groups, 1);
    auto parallel = per_target_errors(model, groups, 4);
    REQUIRE(serial.size() == parallel.size());
    for (size_t i = 0; i < serial.size(); ++i) {
        CHECK(serial[i].video == parallel[i].video);
        CHECK(serial[i].frame == parallel[i].frame);
        CHECK(serial[i].target == parallel[i].target);
        CHECK(serial[i].value == parallel[i].value);
    }

    FrameGroup wrong = groups[0];
    wrong.stream = Stream::temporal;
    CHECK_THROWS_AS(per_target_errors(model, {wrong}, 1), std::invalid_argument);
}

TEST_CASE("score CSV round-trips and rewrites byte-identically") {
    ScoreTable table;
    Rng rng(55);
    for (int v = 0; v < 2; ++v)
        for (int f = 1; f < 6; ++f) {
            FrameScoreRow row;
            row.video = "vid_" + std::to_string(v);
            row.frame = f;
            row.appearance = rng.uniform();
            row.motion = rng.uniform();
            row.fused = fuse_scores(row.appearance, row.motion);
            row.smoothed = row.fused * 0.5;
            row.label = f % 2;
            table.rows.push_back(row);
        }

    const fs::path dir = fs::temp_directory_path() / "vadctx_scoring_test";
    fs::create_directories(dir);
    const fs::path csv = dir / "scores.csv";
    write_score_csv(csv, table);
    auto back = read_score_csv(csv);
    REQUIRE(back.rows.size() == table.rows.size());
    for (size_t i = 0; i < table.rows.size(); ++i) {
        CHECK(back.rows[i].video == table.rows[i].video);
        CHECK(back.rows[i].frame == table.rows[i].frame);
        CHECK(back.rows[i].appearance == table.rows[i].appearance); // exact round trip
        CHECK(back.rows[i].smoothed == table.rows[i].smoothed);
        CHECK(back.rows[i].label == table.rows[i].label);
    }

    const fs::path csv2 = dir / "scores2.csv";
    write_score_csv(csv2, back);
    std::ifstream a(csv, std::ios::binary), b(csv2, std::ios::binary);
    std::string sa((std::istreambuf_iterator<char>(a)), std::istreambuf_iterator<char>());
    std::string sb((std::istreambuf_iterator<char>(b)), std::istreambuf_iterator<char>());
    CHECK(sa == sb);
    fs::remove_all(dir);
}

TEST_CASE("label files validate and missing labels are loud") {
    const fs::path dir = fs::temp_directory_path() / "vadctx_labels_test";
    fs::create_directories(dir);
    {
        std::ofstream out(dir / "labels.jsonl");
        out << R"({"video": "v", "frame": 0, "label": 0})" << "\n";
        out << R"({"video": "v", "frame": 1, "label": 1})" << "\n";
    }
    auto labels = load_labels(dir / "labels.jsonl");
    CHECK(labels.at("v", 1) == 1);
    CHECK_THROWS_AS(labels.at("v", 2), IngestError);
    CHECK_THROWS_AS(labels.at("other", 0), IngestError);

    {
        std::ofstream out(dir / "bad.jsonl");
        out << R"({"video": "v", "frame": 0, "label": 7})" << "\n";
    }
    CHECK_THROWS_AS(load_labels(dir / "bad.jsonl"), IngestError);
    CHECK_THROWS_AS(load_labels(dir / "missing.jsonl"), MissingPrereqError);
    fs::remove_all(dir);
}

TEST_SUITE_END();
