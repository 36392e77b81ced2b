#include "vadctx/layers.hpp"

#include "vadctx/common.hpp"

#include <cmath>
#include <cstring>
#include <stdexcept>

namespace vadctx {

Mat im2col3x3(const Tensor& x) {
    const int h = x.height, w = x.width, c = x.channels;
    Mat cols = Mat::Zero(static_cast<Eigen::Index>(h) * w, static_cast<Eigen::Index>(c) * 9);
    for (int ch = 0; ch < c; ++ch) {
        const double* plane = x.data.data() + static_cast<Eigen::Index>(ch) * h * w;
        for (int dy = -1; dy <= 1; ++dy) {
            for (int dx = -1; dx <= 1; ++dx) {
                const Eigen::Index col = ch * 9 + (dy + 1) * 3 + (dx + 1);
                double* dst = cols.col(col).data();
                for (int y = 0; y < h; ++y) {
                    const int sy = y + dy;
                    if (sy < 0 || sy >= h)
                        continue;
                    const int x0 = dx < 0 ? 1 : 0;
                    const int x1 = dx > 0 ? w - 1 : w;
                    const double* src = plane + static_cast<Eigen::Index>(sy) * w + dx;
                    double* row = dst + static_cast<Eigen::Index>(y) * w;
                    for (int px = x0; px < x1; ++px)
                        row[px] = src[px];
                }
            }
        }
    }
    return cols;
}

Conv2d Conv2d::init(int in_channels, int out_channels, uint64_t seed) {
    Conv2d conv;
    conv.in_channels = in_channels;
    conv.out_channels = out_channels;
    const int fan_in = in_channels * 9;
    const double bound = std::sqrt(6.0 / fan_in);
    conv.weight = Mat(out_channels, fan_in);
    conv.bias = Vec::Zero(out_channels);
    Rng rng(seed);
    for (int o = 0; o < out_channels; ++o)
        for (int k = 0; k < fan_in; ++k)
            conv.weight(o, k) = rng.uniform(-bound, bound);
    return conv;
}

Tensor Conv2d::forward(const Tensor& x) const {
    Cache scratch;
    return forward(x, scratch);
}

Tensor Conv2d::forward(const Tensor& x, Cache& cache) const {
    if (x.channels != in_channels)
        throw std::invalid_argument("Conv2d: input channel mismatch");
    cache.cols = im2col3x3(x);
    cache.height = x.height;
    cache.width = x.width;

    Tensor y(out_channels, x.height, x.width);
    const Eigen::Index plane = static_cast<Eigen::Index>(x.height) * x.width;
    Mat out = cache.cols * weight.transpose(); // (h*w) x out
    for (int o = 0; o < out_channels; ++o)
        y.data.segment(o * plane, plane) = out.col(o).array() + bias[o];
    return y;
}

Tensor Conv2d::backward(const Cache& cache, const Tensor& d_out, Eigen::Ref<Mat> d_weight,
                        Eigen::Ref<Vec> d_bias) const {
    const int h = cache.height, w = cache.width;
    const Eigen::Index plane = static_cast<Eigen::Index>(h) * w;

    Mat d_out_mat(plane, out_channels);
    for (int o = 0; o < out_channels; ++o)
        d_out_mat.col(o) = d_out.data.segment(o * plane, plane);

    d_weight += d_out_mat.transpose() * cache.cols;
    d_bias += d_out_mat.colwise().sum().transpose();

    Mat d_cols = d_out_mat * weight; // (h*w) x (in*9)

    // col2im: scatter-add each shifted column back onto the input plane.
    Tensor d_in(in_channels, h, w);
    for (int ch = 0; ch < in_channels; ++ch) {
        double* plane_ptr = d_in.data.data() + static_cast<Eigen::Index>(ch) * plane;
        for (int dy = -1; dy <= 1; ++dy) {
            for (int dx = -1; dx <= 1; ++dx) {
                const Eigen::Index col = ch * 9 + (dy + 1) * 3 + (dx + 1);
                const double* src = d_cols.col(col).data();
                for (int y = 0; y < h; ++y) {
                    const int sy = y + dy;
                    if (sy < 0 || sy >= h)
                        continue;
                    const int x0 = dx < 0 ? 1 : 0;
                    const int x1 = dx > 0 ? w - 1 : w;
                    double* dst = plane_ptr + static_cast<Eigen::Index>(sy) * w + dx;
                    const double* row = src + static_cast<Eigen::Index>(y) * w;
                    for (int px = x0; px < x1; ++px)
                        dst[px] += row[px];
                }
            }
        }
    }
    return d_in;
}

Tensor maxpool2x2(const Tensor& x) {
    PoolCache scratch;
    return maxpool2x2(x, scratch);
}

Tensor maxpool2x2(const Tensor& x, PoolCache& cache) {
    if (x.height % 2 != 0 || x.width % 2 != 0)
        throw std::invalid_argument("maxpool2x2: sides must be even");
    const int oh = x.height / 2, ow = x.width / 2;
    Tensor y(x.channels, oh, ow);
    cache.in_height = x.height;
    cache.in_width = x.width;
    cache.argmax.assign(static_cast<size_t>(x.channels) * oh * ow, 0);

    Eigen::Index out_idx = 0;
    for (int c = 0; c < x.channels; ++c) {
        for (int oy = 0; oy < oh; ++oy) {
            for (int ox = 0; ox < ow; ++ox) {
                const int y0 = oy * 2, x0 = ox * 2;
                double best = x.at(c, y0, x0);
                int best_idx = (c * x.height + y0) * x.width + x0;
                for (int dy = 0; dy < 2; ++dy) {
                    for (int dx = 0; dx < 2; ++dx) {
                        const double v = x.at(c, y0 + dy, x0 + dx);
                        if (v > best) {
                            best = v;
                            best_idx = (c * x.height + y0 + dy) * x.width + x0 + dx;
                        }
                    }
                }
                y.data[out_idx] = best;
                cache.argmax[out_idx] = best_idx;
                ++out_idx;
            }
        }
    }
    return y;
}

Tensor maxpool2x2_backward(const Tensor& d_out, const PoolCache& cache, int channels) {
    Tensor d_in(channels, cache.in_height, cache.in_width);
    for (Eigen::Index i = 0; i < d_out.size(); ++i)
        d_in.data[cache.argmax[i]] += d_out.data[i];
    return d_in;
}

Tensor upsample_nn2x(const Tensor& x) {
    Tensor y(x.channels, x.height * 2, x.width * 2);
    for (int c = 0; c < x.channels; ++c)
        for (int oy = 0; oy < y.height; ++oy)
            for (int ox = 0; ox < y.width; ++ox)
                y.at(c, oy, ox) = x.at(c, oy / 2, ox / 2);
    return y;
}

Tensor upsample_nn2x_backward(const Tensor& d_out) {
    Tensor d_in(d_out.channels, d_out.height / 2, d_out.width / 2);
    for (int c = 0; c < d_out.channels; ++c)
        for (int oy = 0; oy < d_out.height; ++oy)
            for (int ox = 0; ox < d_out.width; ++ox)
                d_in.at(c, oy / 2, ox / 2) += d_out.at(c, oy, ox);
    return d_in;
}

void relu_inplace(Tensor& x) {
    x.data = x.data.cwiseMax(0.0);
}

void relu_inplace(Vec& x) {
    x = x.cwiseMax(0.0);
}

void relu_backward_inplace(Tensor& d, const Tensor& forward_out) {
    d.data = (forward_out.data.array() > 0.0).select(d.data, 0.0);
}

void relu_backward_inplace(Vec& d, const Vec& forward_out) {
    d = (forward_out.array() > 0.0).select(d, 0.0);
}

Linear Linear::init(int in_dim, int out_dim, uint64_t seed) {
    Linear layer;
    const double bound = std::sqrt(6.0 / in_dim);
    layer.weight = Mat(out_dim, in_dim);
    layer.bias = Vec::Zero(out_dim);
    Rng rng(seed);
    for (int o = 0; o < out_dim; ++o)
        for (int i = 0; i < in_dim; ++i)
            layer.weight(o, i) = rng.uniform(-bound, bound);
    return layer;
}

Vec Linear::backward(const Vec& x, const Vec& d_out, Eigen::Ref<Mat> d_weight,
                     Eigen::Ref<Vec> d_bias) const {
    d_weight += d_out * x.transpose();
    d_bias += d_out;
    return weight.transpose() * d_out;
}

} // namespace vadctx
