#pragma once

#include <Eigen/Core>

#include <stdexcept>

namespace vadctx {

using Vec = Eigen::VectorXd;
using Mat = Eigen::MatrixXd;

// Dense CHW tensor backed by one contiguous buffer. Plane-major layout keeps
// every channel a contiguous height*width block, so flattening and the conv
// GEMM output map straight into it.
struct Tensor {
    int channels = 0;
    int height = 0;
    int width = 0;
    Vec data;

    Tensor() = default;
    Tensor(int c, int h, int w)
        : channels(c), height(h), width(w),
          data(Vec::Zero(static_cast<Eigen::Index>(c) * h * w)) {}

    Eigen::Index size() const { return data.size(); }

    double& at(int c, int y, int x) {
        return data[(static_cast<Eigen::Index>(c) * height + y) * width + x];
    }
    double at(int c, int y, int x) const {
        return data[(static_cast<Eigen::Index>(c) * height + y) * width + x];
    }

    bool same_shape(const Tensor& o) const {
        return channels == o.channels && height == o.height && width == o.width;
    }

    void set_zero() { data.setZero(); }

    bool all_finite() const { return data.allFinite(); }
};

} // namespace vadctx
