#pragma once

#include <cstdint>
#include <functional>
#include <limits>
#include <random>
#include <stdexcept>
#include <string>
#include <string_view>

namespace vadctx {

// Error taxonomy. The CLI maps these onto its exit codes:
// ConfigError -> 2, MissingPrereqError -> 3, NumericError -> 4.
struct ConfigError : std::runtime_error {
    using std::runtime_error::runtime_error;
};
struct MissingPrereqError : std::runtime_error {
    using std::runtime_error::runtime_error;
};
struct NumericError : std::runtime_error {
    using std::runtime_error::runtime_error;
};
struct IngestError : std::runtime_error {
    using std::runtime_error::runtime_error;
};
struct CheckpointError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

uint64_t splitmix64(uint64_t x);

// Stable sub-seed for a named component ("encoder.conv1", "video_003:pad", ...).
uint64_t derive_seed(uint64_t base, std::string_view tag);

// mt19937_64 engine with hand-rolled distributions. std::*_distribution output
// is implementation-defined, which would silently break run reproducibility
// across standard libraries; the engine itself is specified bit-exactly.
class Rng {
  public:
    explicit Rng(uint64_t seed) : gen_(seed) {}

    // Uniform in [0,1) with 53 bits of precision.
    double uniform() { return static_cast<double>(gen_() >> 11) * 0x1.0p-53; }

    double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

    // Standard normal via Box-Muller. The second value is discarded so the
    // stream position is a pure function of the call count.
    double normal();

    // Unbiased integer in [0, n), n > 0. Rejection sampling.
    uint64_t uniform_int(uint64_t n);

    uint64_t raw() { return gen_(); }

  private:
    std::mt19937_64 gen_;
};

// Static-partition parallel loop. Each index is processed by exactly one
// worker, so writes into per-index slots are race-free and results do not
// depend on scheduling. The first exception thrown by a worker is rethrown.
void parallel_for(std::size_t count, int threads, const std::function<void(std::size_t)>& fn);

} // namespace vadctx
