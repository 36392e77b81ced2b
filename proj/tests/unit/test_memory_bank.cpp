#include "vadctx/common.hpp"
#include "vadctx/memory_bank.hpp"

#include <doctest.h>

#include <Eigen/Dense>

#include <cmath>

using namespace vadctx;

namespace {

Vec make_vec(std::initializer_list<double> values) {
    Vec v(static_cast<Eigen::Index>(values.size()));
    Eigen::Index i = 0;
    for (double x : values)
        v[i++] = x;
    return v;
}

MemoryBank bank_from_rows(std::initializer_list<std::initializer_list<double>> rows,
                          double lambda = 0.0) {
    MemoryBank bank;
    const auto n = static_cast<Eigen::Index>(rows.size());
    const auto c = static_cast<Eigen::Index>(rows.begin()->size());
    bank.items = Mat(n, c);
    Eigen::Index j = 0;
    for (const auto& row : rows)
        bank.items.row(j++) = make_vec(row).transpose();
    bank.shrink_threshold = lambda;
    return bank;
}

} // namespace

TEST_SUITE_BEGIN("memory_bank");

TEST_CASE("cosine similarity on axis-aligned vectors") {
    CHECK(cosine_similarity(make_vec({1, 0}), make_vec({1, 0})) == doctest::Approx(1.0).epsilon(1e-12));
    CHECK(cosine_similarity(make_vec({1, 0}), make_vec({0, 1})) == doctest::Approx(0.0).epsilon(1e-12));
    CHECK(std::abs(cosine_similarity(make_vec({1, 1}), make_vec({1, 0})) - 1.0 / std::sqrt(2.0)) <
          1e-8);
}

TEST_CASE("cosine similarity rejects zero-norm input") {
    CHECK_THROWS_AS(cosine_similarity(make_vec({0, 0}), make_vec({1, 0})), std::invalid_argument);
    CHECK_THROWS_AS(cosine_similarity(make_vec({1, 0}), make_vec({0, 0})), std::invalid_argument);
    CHECK_THROWS_AS(cosine_similarity(make_vec({1, 0}), make_vec({1, 0, 0})), std::invalid_argument);
}

TEST_CASE("addressing identical rows gives uniform weights") {
    auto bank = bank_from_rows({{2, 1}, {2, 1}, {2, 1}, {2, 1}});
    auto w = address_memory(make_vec({0.3, -0.7}), bank);
    REQUIRE(w.values.size() == 4);
    for (Eigen::Index j = 0; j < 4; ++j)
        CHECK(w.values[j] == doctest::Approx(0.25).epsilon(1e-12));
}

TEST_CASE("addressing weights match a by-hand softmax over cosine similarities") {
    // z = [1,0], m1 = [1,0], m2 = [0,1]: similarities are 1 and 0, so the
    // weights are e/(e+1) and 1/(e+1). Expected values computed with scalar
    // std::exp, independent of the addressing code path.
    auto bank = bank_from_rows({{1, 0}, {0, 1}});
    auto w = address_memory(make_vec({1, 0}), bank);
    const double e = std::exp(1.0);
    CHECK(w.values[0] == doctest::Approx(e / (e + 1.0)).epsilon(1e-12));
    CHECK(w.values[1] == doctest::Approx(1.0 / (e + 1.0)).epsilon(1e-12));
    CHECK(w.values[0] == doctest::Approx(0.73106).epsilon(1e-4));
    CHECK(w.values[1] == doctest::Approx(0.26894).epsilon(1e-4));
}

TEST_CASE("permuting memory rows permutes weights identically") {
    auto bank = bank_from_rows({{1, 0.2}, {-0.4, 1}, {0.5, 0.5}});
    auto permuted = bank_from_rows({{0.5, 0.5}, {1, 0.2}, {-0.4, 1}});
    const Vec z = make_vec({0.8, -0.1});
    auto w = address_memory(z, bank);
    auto wp = address_memory(z, permuted);
    CHECK(wp.values[0] == doctest::Approx(w.values[2]).epsilon(1e-12));
    CHECK(wp.values[1] == doctest::Approx(w.values[0]).epsilon(1e-12));
    CHECK(wp.values[2] == doctest::Approx(w.values[1]).epsilon(1e-12));
}

TEST_CASE("hard shrink zeroes entries at or below the threshold") {
    WeightVector w{make_vec({0.7, 0.2, 0.1}), false};
    auto s = hard_shrink(w, 0.15);
    CHECK(s.shrunk);
    CHECK(s.values[0] == 0.7);
    CHECK(s.values[1] == 0.2);
    CHECK(s.values[2] == 0.0);
}

TEST_CASE("hard shrink with lambda zero keeps positive weights") {
    WeightVector w{make_vec({0.5, 0.3, 0.2}), false};
    auto s = hard_shrink(w, 0.0);
    CHECK(s.values == w.values);
}

TEST_CASE("hard shrink can remove every weight") {
    WeightVector w{make_vec({0.4, 0.3, 0.3}), false};
    auto s = hard_shrink(w, 0.5);
    CHECK((s.values.array() == 0.0).all());
}

TEST_CASE("hard shrink renormalization rescales survivors to sum 1") {
    WeightVector w{make_vec({0.6, 0.25, 0.15}), false};
    auto s = hard_shrink(w, 0.2, true);
    CHECK(s.values.sum() == doctest::Approx(1.0).epsilon(1e-12));
    CHECK(s.values[2] == 0.0);
    CHECK(s.values[0] == doctest::Approx(0.6 / 0.85).epsilon(1e-12));
}

TEST_CASE("read_memory is the weighted sum of rows") {
    auto bank = bank_from_rows({{1, 0}, {0, 2}});
    CHECK(read_memory({make_vec({1, 0}), true}, bank) == make_vec({1, 0}));
    Vec mid = read_memory({make_vec({0.5, 0.5}), true}, bank);
    CHECK(mid[0] == doctest::Approx(0.5));
    CHECK(mid[1] == doctest::Approx(1.0));
    CHECK(read_memory({make_vec({0, 0}), true}, bank).isZero());
}

TEST_CASE("entropy loss on analytic cases") {
    CHECK(entropy_loss({make_vec({1, 0, 0, 0}), true}) == 0.0);
    CHECK(entropy_loss({make_vec({0.25, 0.25, 0.25, 0.25}), false}) ==
          doctest::Approx(std::log(4.0)).epsilon(1e-12));
    CHECK(entropy_loss({make_vec({0.5, 0.5, 0, 0}), true}) ==
          doctest::Approx(std::log(2.0)).epsilon(1e-12));
    CHECK(std::abs(entropy_loss({make_vec({0.25, 0.25, 0.25, 0.25}), false}) - 1.386294) < 1e-6);
    CHECK(std::abs(entropy_loss({make_vec({0.5, 0.5, 0, 0}), true}) - 0.693147) < 1e-6);
}

TEST_CASE("randomized invariants: softmax sum, positivity, shrink support, scale invariance") {
    Rng rng(20240501);
    const int trials = 1000;
    for (int t = 0; t < trials; ++t) {
        const int n = 2 + static_cast<int>(rng.uniform_int(14));
        const int c = 2 + static_cast<int>(rng.uniform_int(10));
        MemoryBank bank = MemoryBank::random(n, c, rng.raw(), 0.0);
        Vec z(c);
        for (int i = 0; i < c; ++i)
            z[i] = rng.normal();
        if (z.norm() < 1e-6)
            z[0] += 1.0;

        auto w = address_memory(z, bank);
        CHECK(w.values.sum() == doctest::Approx(1.0).epsilon(1e-6));
        CHECK((w.values.array() > 0.0).all());

        // Scale invariance of the addressing in the query.
        const double scale = std::exp(rng.uniform(-3.0, 3.0));
        auto w_scaled = address_memory(scale * z, bank);
        CHECK((w_scaled.values - w.values).cwiseAbs().maxCoeff() < 1e-9);

        // Shrinkage support is exactly { j : w_j > lambda } and never grows
        // any entry.
        const double lambda = rng.uniform(0.0, 0.5);
        auto s = hard_shrink(w, lambda);
        for (Eigen::Index j = 0; j < s.values.size(); ++j) {
            if (w.values[j] > lambda)
                CHECK(s.values[j] == w.values[j]);
            else
                CHECK(s.values[j] == 0.0);
            CHECK(s.values[j] <= w.values[j]);
        }
        CHECK(s.values.sum() <= 1.0 + 1e-12);
    }
}

TEST_CASE("memory_read_forward flags the zero-read condition instead of failing") {
    auto bank = bank_from_rows({{1, 0}, {0, 1}, {1, 1}});
    bank.shrink_threshold = 0.9; // above any softmax weight for N=3
    auto state = memory_read_forward(make_vec({0.4, 0.6}), bank);
    CHECK(state.zero_read);
    CHECK(state.read.isZero());
    CHECK(entropy_loss(state.shrunk) == 0.0);
}

TEST_CASE("read of a shrunk-but-unnormalized weight stays in the span of rows") {
    Rng rng(77);
    for (int t = 0; t < 50; ++t) {
        MemoryBank bank = MemoryBank::random(4, 3, rng.raw(), 0.2);
        Vec z(3);
        for (int i = 0; i < 3; ++i)
            z[i] = rng.normal();
        if (z.norm() < 1e-6)
            z[0] = 1.0;
        auto state = memory_read_forward(z, bank);
        // Solve items^T x = read in the least-squares sense; the residual is
        // ~0 because read is a combination of the rows.
        Vec coeffs = bank.items.transpose()
                         .colPivHouseholderQr()
                         .solve(state.read);
        CHECK((bank.items.transpose() * coeffs - state.read).norm() < 1e-9);
    }
}

TEST_SUITE_END();
