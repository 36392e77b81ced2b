#include "vadctx/losses.hpp"

#include <stdexcept>

namespace vadctx {

double recon_loss(const Tensor& x, const Tensor& x_hat) {
    if (!x.same_shape(x_hat))
        throw std::invalid_argument("recon_loss: shape mismatch");
    return (x.data - x_hat.data).squaredNorm() / static_cast<double>(x.size());
}

LossBreakdown total_loss(double recon, double entropy, double lambda_recon,
                         double lambda_entropy) {
    LossBreakdown out;
    out.recon = recon;
    out.entropy = entropy;
    out.lambda_recon = lambda_recon;
    out.lambda_entropy = lambda_entropy;
    out.total = lambda_recon * recon + lambda_entropy * entropy;
    return out;
}

} // namespace vadctx
