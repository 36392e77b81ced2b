#include "vadctx/common.hpp"
#include "vadctx/losses.hpp"
#include "vadctx/stream_model.hpp"

#include <doctest.h>

#include <cmath>

using namespace vadctx;

namespace {

ModelConfig tiny_config(int input_channels = 1) {
    ModelConfig cfg;
    cfg.input_channels = input_channels;
    cfg.latent_dim = 8;
    cfg.channels = {3, 4, 5, 6};
    cfg.patch_size = 16;
    cfg.memory_items = 5;
    cfg.shrink_threshold = 0.05;
    return cfg;
}

Tensor random_patch(int channels, int size, uint64_t seed) {
    Tensor p(channels, size, size);
    Rng rng(seed);
    for (Eigen::Index i = 0; i < p.size(); ++i)
        p.data[i] = rng.uniform();
    return p;
}

FrameGroup make_group(const ModelConfig& cfg, Stream stream, int n, uint64_t seed) {
    FrameGroup g;
    g.video = "v";
    g.frame = 1;
    g.stream = stream;
    for (int i = 0; i < n; ++i) {
        g.patches.push_back(random_patch(cfg.input_channels, cfg.patch_size, seed + i));
        g.boxes.push_back({0, 0, 8, 8, 1.0});
    }
    return g;
}

void zero_biases(StreamModel& model) {
    for (auto& ref : model.param_refs()) {
        if (ref.name.ends_with(".bias"))
            for (Eigen::Index i = 0; i < ref.size; ++i)
                ref.data[i] = 0.0;
    }
}

} // namespace

TEST_SUITE_BEGIN("model");

TEST_CASE("encode output has the configured latent dimension") {
    auto model = StreamModel::init(tiny_config(), Stream::spatial, 11);
    Vec z = model.encode(random_patch(1, 16, 3));
    CHECK(z.size() == 8);
    CHECK(z.allFinite());
}

TEST_CASE("encode of an all-zero patch through a zero-bias network is zero") {
    auto model = StreamModel::init(tiny_config(), Stream::spatial, 11);
    zero_biases(model);
    Tensor zero_patch(1, 16, 16);
    CHECK(model.encode(zero_patch).isZero());
}

TEST_CASE("encode is deterministic") {
    auto model = StreamModel::init(tiny_config(), Stream::spatial, 11);
    Tensor p = random_patch(1, 16, 5);
    Vec a = model.encode(p);
    Vec b = model.encode(p);
    CHECK(a == b);
}

TEST_CASE("encode rejects channel mismatch") {
    auto model = StreamModel::init(tiny_config(), Stream::spatial, 11);
    CHECK_THROWS_AS(model.encode(random_patch(2, 16, 5)), std::invalid_argument);
}

TEST_CASE("decode shape contract and determinism") {
    auto cfg = tiny_config(2);
    auto model = StreamModel::init(cfg, Stream::temporal, 13);
    Rng rng(9);
    Vec fused(2 * cfg.latent_dim);
    for (Eigen::Index i = 0; i < fused.size(); ++i)
        fused[i] = rng.normal();
    Tensor out = model.decode(fused);
    CHECK(out.channels == 2);
    CHECK(out.height == 16);
    CHECK(out.width == 16);
    CHECK(out.data == model.decode(fused).data);

    CHECK_THROWS_AS(model.decode(Vec::Zero(cfg.latent_dim)), std::invalid_argument);
}

TEST_CASE("decode of the zero vector through a zero-bias decoder is zero") {
    auto cfg = tiny_config();
    auto model = StreamModel::init(cfg, Stream::spatial, 13);
    zero_biases(model);
    CHECK(model.decode(Vec::Zero(2 * cfg.latent_dim)).data.isZero());
}

TEST_CASE("fuse_context concatenates target feature first") {
    Vec z(2), r(2);
    z << 1, 2;
    r << 3, 4;
    Vec fused = StreamModel::fuse_context(z, r);
    REQUIRE(fused.size() == 4);
    CHECK(fused[0] == 1);
    CHECK(fused[1] == 2);
    CHECK(fused[2] == 3);
    CHECK(fused[3] == 4);
    CHECK(fused.head(2) == z);
    CHECK(fused.tail(2) == r);

    CHECK(StreamModel::fuse_context(Vec::Zero(3), Vec::Zero(3)).isZero());
    CHECK_THROWS_AS(StreamModel::fuse_context(Vec::Zero(3), Vec::Zero(2)), std::invalid_argument);
}

TEST_CASE("forward_frame: identical targets produce identical reconstructions") {
    auto cfg = tiny_config();
    auto model = StreamModel::init(cfg, Stream::spatial, 17);
    FrameGroup g;
    g.stream = Stream::spatial;
    Tensor p = random_patch(1, 16, 21);
    g.patches = {p, p, p};
    g.boxes.resize(3);
    auto fwd = model.forward_frame(g);
    REQUIRE(fwd.reconstructions.size() == 3);
    CHECK(fwd.reconstructions[0].data == fwd.reconstructions[1].data);
    CHECK(fwd.reconstructions[1].data == fwd.reconstructions[2].data);
    CHECK(fwd.target_recon[0] == fwd.target_recon[1]);
    CHECK(fwd.entropy >= 0.0);
}

TEST_CASE("forward_frame with n=1 context equals the single feature") {
    auto cfg = tiny_config();
    auto model = StreamModel::init(cfg, Stream::spatial, 19);
    FrameGroup g;
    g.stream = Stream::spatial;
    Tensor p = random_patch(1, 16, 23);
    g.patches = {p};
    g.boxes.resize(1);
    auto fwd = model.forward_frame(g);
    CHECK((fwd.context - model.encode(p)).cwiseAbs().maxCoeff() < 1e-15);
}

TEST_CASE("forward_frame with the memory disabled passes the context through") {
    auto cfg = tiny_config();
    cfg.memory_enabled = false;
    auto model = StreamModel::init(cfg, Stream::spatial, 19);
    auto g = make_group(cfg, Stream::spatial, 2, 31);
    auto fwd = model.forward_frame(g);
    CHECK(fwd.read == fwd.context);
    CHECK(fwd.entropy == 0.0);
    CHECK(fwd.reconstructions.size() == 2);
    CHECK(fwd.reconstructions[0].height == 16);
}

TEST_CASE("forward_frame rejects empty groups and stream mismatches") {
    auto model = StreamModel::init(tiny_config(), Stream::spatial, 19);
    FrameGroup empty;
    empty.stream = Stream::spatial;
    CHECK_THROWS_AS(model.forward_frame(empty), std::invalid_argument);

    auto g = make_group(tiny_config(), Stream::temporal, 1, 3);
    CHECK_THROWS_AS(model.forward_frame(g), std::invalid_argument);
}

TEST_CASE("aggregate_context is the arithmetic mean") {
    Vec single(2);
    single << 3, -1;
    CHECK(aggregate_context({single}) == single);

    Vec a(2), b(2);
    a << 2, 0;
    b << 0, 2;
    Vec mean = aggregate_context({a, b});
    CHECK(mean[0] == 1.0);
    CHECK(mean[1] == 1.0);

    Vec v(3);
    v << 0.5, -2, 7;
    CHECK((aggregate_context({v, v, v, v}) - v).cwiseAbs().maxCoeff() < 1e-15);

    CHECK_THROWS_AS(aggregate_context({}), std::invalid_argument);
    CHECK_THROWS_AS(aggregate_context({Vec::Zero(2), Vec::Zero(3)}), std::invalid_argument);
}

TEST_CASE("padded duplicate patches produce identical per-target errors") {
    auto cfg = tiny_config();
    auto model = StreamModel::init(cfg, Stream::spatial, 23);
    FrameGroup g;
    g.stream = Stream::spatial;
    Tensor p0 = random_patch(1, 16, 61);
    Tensor p1 = random_patch(1, 16, 62);
    g.patches = {p0, p1, p0}; // p0 duplicated, as padding does
    g.boxes.resize(3);
    auto fwd = model.forward_frame(g);
    CHECK(fwd.target_recon[0] == fwd.target_recon[2]);
    CHECK(fwd.target_recon[0] != fwd.target_recon[1]);
}

TEST_CASE("aggregated context inside forward_frame is the arithmetic mean of features") {
    auto cfg = tiny_config();
    auto model = StreamModel::init(cfg, Stream::spatial, 37);
    auto g = make_group(cfg, Stream::spatial, 3, 41);
    auto fwd = model.forward_frame(g);
    Vec mean = Vec::Zero(cfg.latent_dim);
    for (const auto& p : g.patches)
        mean += model.encode(p);
    mean /= 3.0;
    CHECK((fwd.context - mean).cwiseAbs().maxCoeff() < 1e-12);
}

TEST_SUITE_END();
