#include "vadctx/memory_bank.hpp"

#include "vadctx/common.hpp"

#include <cmath>

namespace vadctx {

namespace {
constexpr double kNormFloor = 1e-12;
}

MemoryBank MemoryBank::random(int items, int dim, uint64_t seed, double shrink_threshold,
                              bool renormalize_after_shrink) {
    if (items < 1 || dim < 1)
        throw std::invalid_argument("MemoryBank::random: items and dim must be >= 1");
    if (shrink_threshold < 0)
        throw std::invalid_argument("MemoryBank::random: shrink threshold must be >= 0");
    MemoryBank bank;
    bank.items = Mat(items, dim);
    bank.shrink_threshold = shrink_threshold;
    bank.renormalize_after_shrink = renormalize_after_shrink;
    Rng rng(seed);
    for (int j = 0; j < items; ++j) {
        Vec row(dim);
        double norm2 = 0.0;
        do {
            for (int c = 0; c < dim; ++c)
                row[c] = rng.normal();
            norm2 = row.squaredNorm();
        } while (norm2 < kNormFloor);
        bank.items.row(j) = row / std::sqrt(norm2);
    }
    return bank;
}

void MemoryBank::validate() const {
    if (size() < 1)
        throw std::invalid_argument("MemoryBank: must hold at least one item");
    if (!items.allFinite())
        throw NumericError("MemoryBank: non-finite memory item");
    for (int j = 0; j < size(); ++j) {
        if (items.row(j).norm() < kNormFloor)
            throw NumericError("MemoryBank: zero-norm memory row " + std::to_string(j));
    }
    if (shrink_threshold < 0)
        throw std::invalid_argument("MemoryBank: shrink threshold must be >= 0");
}

double cosine_similarity(const Vec& a, const Vec& b) {
    if (a.size() != b.size())
        throw std::invalid_argument("cosine_similarity: dimension mismatch");
    const double na = a.norm();
    const double nb = b.norm();
    if (na < kNormFloor || nb < kNormFloor)
        throw std::invalid_argument("cosine_similarity: zero-norm input");
    return a.dot(b) / (na * nb);
}

WeightVector address_memory(const Vec& context, const MemoryBank& bank) {
    const int n = bank.size();
    Vec sims(n);
    for (int j = 0; j < n; ++j)
        sims[j] = cosine_similarity(context, bank.items.row(j).transpose());

    const double peak = sims.maxCoeff();
    Vec w = (sims.array() - peak).exp();
    w /= w.sum();
    return WeightVector{std::move(w), false};
}

WeightVector hard_shrink(const WeightVector& w, double lambda, bool renormalize) {
    if (lambda < 0)
        throw std::invalid_argument("hard_shrink: lambda must be >= 0");
    Vec out = w.values;
    for (Eigen::Index j = 0; j < out.size(); ++j) {
        if (out[j] <= lambda)
            out[j] = 0.0;
    }
    if (renormalize) {
        const double sum = out.sum();
        if (sum > 0.0)
            out /= sum;
    }
    return WeightVector{std::move(out), true};
}

Vec read_memory(const WeightVector& w, const MemoryBank& bank) {
    if (w.values.size() != bank.size())
        throw std::invalid_argument("read_memory: weight dimension mismatch");
    return bank.items.transpose() * w.values;
}

double entropy_loss(const WeightVector& w) {
    double ent = 0.0;
    for (Eigen::Index j = 0; j < w.values.size(); ++j) {
        const double v = w.values[j];
        if (v > 0.0)
            ent -= v * std::log(v);
    }
    return ent;
}

MemoryReadState memory_read_forward(const Vec& context, const MemoryBank& bank) {
    MemoryReadState state;
    state.context = context;

    const int n = bank.size();
    state.sims = Vec(n);
    for (int j = 0; j < n; ++j)
        state.sims[j] = cosine_similarity(context, bank.items.row(j).transpose());

    const double peak = state.sims.maxCoeff();
    Vec w = (state.sims.array() - peak).exp();
    w /= w.sum();
    state.raw = WeightVector{std::move(w), false};

    state.shrunk = hard_shrink(state.raw, bank.shrink_threshold, bank.renormalize_after_shrink);
    state.zero_read = (state.shrunk.values.array() == 0.0).all();
    state.read = bank.items.transpose() * state.shrunk.values;
    return state;
}

void memory_read_backward(const MemoryReadState& state, const MemoryBank& bank, const Vec& d_read,
                          double entropy_weight, Eigen::Ref<Vec> d_context,
                          Eigen::Ref<Mat> d_items) {
    const int n = bank.size();
    const Vec& w_hat = state.shrunk.values;

    // read = items^T * w_hat
    Vec d_w_hat = bank.items * d_read;
    d_items += w_hat * d_read.transpose();

    if (entropy_weight != 0.0) {
        for (int j = 0; j < n; ++j) {
            const double v = w_hat[j];
            if (v > 0.0)
                d_w_hat[j] += entropy_weight * (-(std::log(v) + 1.0));
        }
    }

    // Hard shrink: pass-through on surviving entries. If renormalization is
    // enabled the surviving entries were divided by their sum first.
    Vec d_w = Vec::Zero(n);
    const double lambda = bank.shrink_threshold;
    if (bank.renormalize_after_shrink) {
        double survivor_sum = 0.0;
        for (int j = 0; j < n; ++j) {
            if (state.raw.values[j] > lambda)
                survivor_sum += state.raw.values[j];
        }
        if (survivor_sum > 0.0) {
            double dot = 0.0; // sum_k d_w_hat_k * s_k over survivors, s = raw value
            for (int j = 0; j < n; ++j) {
                if (state.raw.values[j] > lambda)
                    dot += d_w_hat[j] * state.raw.values[j];
            }
            for (int j = 0; j < n; ++j) {
                if (state.raw.values[j] > lambda)
                    d_w[j] = d_w_hat[j] / survivor_sum - dot / (survivor_sum * survivor_sum);
            }
        }
    } else {
        for (int j = 0; j < n; ++j) {
            if (state.raw.values[j] > lambda)
                d_w[j] = d_w_hat[j];
        }
    }

    // Softmax Jacobian: ds_j = w_j * (dw_j - sum_k w_k dw_k).
    const Vec& w = state.raw.values;
    const double mixed = w.dot(d_w);
    Vec d_sims(n);
    for (int j = 0; j < n; ++j)
        d_sims[j] = w[j] * (d_w[j] - mixed);

    // Cosine similarity: d(z.m / (|z||m|)).
    const Vec& z = state.context;
    const double zn = z.norm();
    const double zn2 = zn * zn;
    for (int j = 0; j < n; ++j) {
        if (d_sims[j] == 0.0)
            continue;
        const Vec m = bank.items.row(j).transpose();
        const double mn = m.norm();
        const double inv = 1.0 / (zn * mn);
        const double s = state.sims[j];
        d_context += d_sims[j] * (m * inv - s / zn2 * z);
        d_items.row(j) += (d_sims[j] * (z * inv - s / (mn * mn) * m)).transpose();
    }
}

} // namespace vadctx
