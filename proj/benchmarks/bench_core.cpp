#include "vadctx/common.hpp"
#include "vadctx/flow.hpp"
#include "vadctx/memory_bank.hpp"
#include "vadctx/scoring.hpp"
#include "vadctx/stream_model.hpp"

#include <benchmark/benchmark.h>

using namespace vadctx;

namespace {

Vec random_vec(int dim, uint64_t seed) {
    Rng rng(seed);
    Vec v(dim);
    for (int i = 0; i < dim; ++i)
        v[i] = rng.normal();
    return v;
}

Tensor random_patch(int channels, int size, uint64_t seed) {
    Rng rng(seed);
    Tensor p(channels, size, size);
    for (Eigen::Index i = 0; i < p.size(); ++i)
        p.data[i] = rng.uniform();
    return p;
}

void BM_AddressMemory(benchmark::State& state) {
    const int n = static_cast<int>(state.range(0));
    auto bank = MemoryBank::random(n, 256, 1, 1.0 / n);
    Vec z = random_vec(256, 2);
    for (auto _ : state) {
        auto w = address_memory(z, bank);
        benchmark::DoNotOptimize(w.values.data());
    }
}
BENCHMARK(BM_AddressMemory)->Arg(32)->Arg(100)->Arg(400);

void BM_MemoryReadForward(benchmark::State& state) {
    auto bank = MemoryBank::random(100, 256, 1, 0.01);
    Vec z = random_vec(256, 2);
    for (auto _ : state) {
        auto read = memory_read_forward(z, bank);
        benchmark::DoNotOptimize(read.read.data());
    }
}
BENCHMARK(BM_MemoryReadForward);

void BM_EncodePatch(benchmark::State& state) {
    ModelConfig cfg; // full-scale geometry: 64x64 patches, channels 32/48/64/64, C=256
    auto model = StreamModel::init(cfg, Stream::spatial, 7);
    Tensor patch = random_patch(1, 64, 3);
    for (auto _ : state) {
        Vec z = model.encode(patch);
        benchmark::DoNotOptimize(z.data());
    }
}
BENCHMARK(BM_EncodePatch)->Unit(benchmark::kMillisecond);

void BM_ForwardFrame(benchmark::State& state) {
    ModelConfig cfg;
    cfg.latent_dim = 32;
    cfg.channels = {8, 12, 16, 16};
    cfg.memory_items = 32;
    cfg.shrink_threshold = 1.0 / 32;
    auto model = StreamModel::init(cfg, Stream::spatial, 7);
    FrameGroup group;
    group.stream = Stream::spatial;
    const int n = static_cast<int>(state.range(0));
    for (int i = 0; i < n; ++i) {
        group.patches.push_back(random_patch(1, 64, 100 + i));
        group.boxes.push_back({0, 0, 8, 8, 1.0});
    }
    for (auto _ : state) {
        auto fwd = model.forward_frame(group);
        benchmark::DoNotOptimize(fwd.target_recon.data());
    }
}
BENCHMARK(BM_ForwardFrame)->Arg(4)->Arg(18)->Unit(benchmark::kMillisecond);

void BM_TrainStep(benchmark::State& state) {
    ModelConfig cfg;
    cfg.latent_dim = 32;
    cfg.channels = {8, 12, 16, 16};
    cfg.memory_items = 32;
    cfg.shrink_threshold = 1.0 / 32;
    auto model = StreamModel::init(cfg, Stream::spatial, 7);
    FrameGroup group;
    group.stream = Stream::spatial;
    for (int i = 0; i < 4; ++i) {
        group.patches.push_back(random_patch(1, 64, 200 + i));
        group.boxes.push_back({0, 0, 8, 8, 1.0});
    }
    Gradients grads = model.make_gradients();
    StreamModel::FrameCache cache;
    for (auto _ : state) {
        grads.set_zero();
        model.forward_frame(group, cache);
        model.backward_frame(group, cache, 1.0, 0.0002, grads);
        benchmark::DoNotOptimize(grads.slots.data());
    }
}
BENCHMARK(BM_TrainStep)->Unit(benchmark::kMillisecond);

void BM_HornSchunck(benchmark::State& state) {
    Image a(96, 128), b(96, 128);
    Rng rng(11);
    for (size_t i = 0; i < a.pixels.size(); ++i)
        a.pixels[i] = static_cast<float>(rng.uniform());
    b = a;
    for (int y = 40; y < 52; ++y)
        for (int x = 40; x < 52; ++x)
            b.at(y, x) = 1.0f;
    FlowOptions opt;
    opt.iterations = static_cast<int>(state.range(0));
    for (auto _ : state) {
        FlowField f = compute_flow(a, b, opt);
        benchmark::DoNotOptimize(f.u.data());
    }
}
BENCHMARK(BM_HornSchunck)->Arg(40)->Arg(120)->Unit(benchmark::kMillisecond);

void BM_ComputeAuc(benchmark::State& state) {
    const int n = static_cast<int>(state.range(0));
    Rng rng(13);
    std::vector<double> scores(n);
    std::vector<int> labels(n);
    for (int i = 0; i < n; ++i) {
        scores[i] = rng.uniform();
        labels[i] = i % 5 == 0 ? 1 : 0;
    }
    for (auto _ : state) {
        benchmark::DoNotOptimize(compute_auc(scores, labels));
    }
}
BENCHMARK(BM_ComputeAuc)->Arg(2000)->Arg(20000);

} // namespace

BENCHMARK_MAIN();
