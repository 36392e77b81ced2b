#pragma once

#include "vadctx/tensor.hpp"

#include <cstdint>
#include <vector>

namespace vadctx {

// (h*w) x (c*9) patch matrix for a 3x3 window with zero padding 1.
Mat im2col3x3(const Tensor& x);

// 3x3 convolution, stride 1, zero padding 1. Output keeps the spatial size.
struct Conv2d {
    int in_channels = 0;
    int out_channels = 0;
    Mat weight; // out_channels x in_channels*9
    Vec bias;

    static Conv2d init(int in_channels, int out_channels, uint64_t seed);

    struct Cache {
        Mat cols; // im2col of the input
        int height = 0, width = 0;
    };

    Tensor forward(const Tensor& x) const;
    Tensor forward(const Tensor& x, Cache& cache) const;

    // Returns d_input; accumulates into d_weight / d_bias.
    Tensor backward(const Cache& cache, const Tensor& d_out, Eigen::Ref<Mat> d_weight,
                    Eigen::Ref<Vec> d_bias) const;
};

// 2x2 max pooling, stride 2. Input sides must be even.
struct PoolCache {
    std::vector<int32_t> argmax; // flat input index per output cell
    int in_height = 0, in_width = 0;
};

Tensor maxpool2x2(const Tensor& x);
Tensor maxpool2x2(const Tensor& x, PoolCache& cache);
Tensor maxpool2x2_backward(const Tensor& d_out, const PoolCache& cache, int channels);

// Nearest-neighbor 2x upsampling.
Tensor upsample_nn2x(const Tensor& x);
Tensor upsample_nn2x_backward(const Tensor& d_out);

// ReLU gates its backward pass on the forward output (y > 0).
void relu_inplace(Tensor& x);
void relu_inplace(Vec& x);
void relu_backward_inplace(Tensor& d, const Tensor& forward_out);
void relu_backward_inplace(Vec& d, const Vec& forward_out);

struct Linear {
    Mat weight; // out x in
    Vec bias;

    static Linear init(int in_dim, int out_dim, uint64_t seed);

    Vec forward(const Vec& x) const { return weight * x + bias; }
    // Returns d_input; accumulates into d_weight / d_bias.
    Vec backward(const Vec& x, const Vec& d_out, Eigen::Ref<Mat> d_weight,
                 Eigen::Ref<Vec> d_bias) const;
};

} // namespace vadctx
