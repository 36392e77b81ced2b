#pragma once

#include "vadctx/tensor.hpp"

namespace vadctx {

struct LossBreakdown {
    double recon = 0;
    double entropy = 0;
    double total = 0;
    double lambda_recon = 1.0;
    double lambda_entropy = 0.0002;
};

// Mean over all pixels and channels of the squared difference.
double recon_loss(const Tensor& x, const Tensor& x_hat);

LossBreakdown total_loss(double recon, double entropy, double lambda_recon,
                         double lambda_entropy);

} // namespace vadctx
