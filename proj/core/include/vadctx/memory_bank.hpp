#pragma once

#include "vadctx/tensor.hpp"

#include <cstdint>

namespace vadctx {

// Bank of N learnable prototype context features, one per row. Rows are
// ordinary parameters updated by the optimizer during training and read-only
// at test time. No row may be the zero vector: cosine addressing would be
// undefined.
struct MemoryBank {
    Mat items; // N x C
    double shrink_threshold = 0.01;
    bool renormalize_after_shrink = false;

    int size() const { return static_cast<int>(items.rows()); }
    int dim() const { return static_cast<int>(items.cols()); }

    // Rows drawn uniformly on the unit sphere, so every row has unit norm.
    static MemoryBank random(int items, int dim, uint64_t seed, double shrink_threshold,
                             bool renormalize_after_shrink = false);

    void validate() const;
};

// Addressing weights over the bank rows. `shrunk` distinguishes the raw
// softmax output (strictly positive, sums to 1) from the sparsified vector
// (entries either 0 or strictly above the threshold).
struct WeightVector {
    Vec values;
    bool shrunk = false;
};

// Cosine similarity in [-1, 1]. Rejects zero-norm inputs rather than
// returning NaN.
double cosine_similarity(const Vec& a, const Vec& b);

// Softmax over the cosine similarity between the context and each row.
WeightVector address_memory(const Vec& context, const MemoryBank& bank);

// Entries <= lambda become 0, entries > lambda pass through unchanged.
// With renormalize set and a positive surviving sum, entries are rescaled
// to sum to 1.
WeightVector hard_shrink(const WeightVector& w, double lambda, bool renormalize = false);

// Weighted sum of bank rows. An all-zero weight vector reads the zero vector.
Vec read_memory(const WeightVector& w, const MemoryBank& bank);

// -sum_j w_j log(w_j) over positive entries; zero entries contribute 0.
double entropy_loss(const WeightVector& w);

// One full address -> shrink -> read pass with everything the backward pass
// needs retained.
struct MemoryReadState {
    Vec context;
    Vec sims;            // cosine similarity per row
    WeightVector raw;    // softmax output
    WeightVector shrunk; // post hard-shrink (and renormalization, if enabled)
    Vec read;
    bool zero_read = false; // every weight was shrunk away
};

MemoryReadState memory_read_forward(const Vec& context, const MemoryBank& bank);

// Accumulates d(objective)/d(context) and d(objective)/d(items) given the
// gradient flowing into the read vector. entropy_weight is the coefficient
// multiplying entropy_loss(shrunk) in the objective; pass 0 to exclude it.
void memory_read_backward(const MemoryReadState& state, const MemoryBank& bank, const Vec& d_read,
                          double entropy_weight, Eigen::Ref<Vec> d_context,
                          Eigen::Ref<Mat> d_items);

} // namespace vadctx
