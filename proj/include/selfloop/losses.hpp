#pragma once

#include <span>
#include <vector>

#include "selfloop/mask.hpp"
#include "selfloop/raster.hpp"

namespace selfloop {

/// A loss value together with its gradient w.r.t. the prediction argument.
template <typename G>
struct LossWithGrad {
    double value = 0.0;
    G grad;
};

/// Mean binary cross-entropy over all pixels. Probabilities are clamped to
/// [1e-12, 1 - 1e-12] before taking logs.
double seg_loss(const RasterMap& pred, const BinaryMask& gt);
LossWithGrad<RasterMap> seg_loss_with_grad(const RasterMap& pred, const BinaryMask& gt);

/// Masked MSE against the pseudo-label: sum over {y_sl > th} of
/// (s_x - y_sl)^2 divided by the number of selected pixels, 0 when none is
/// selected. y_sl is a constant target; the gradient is w.r.t. s_x only.
double uncertainty_guided_loss(const RasterMap& s_x, const RasterMap& y_sl, double th);
LossWithGrad<RasterMap> uncertainty_guided_loss_with_grad(const RasterMap& s_x, const RasterMap& y_sl,
                                                          double th);

/// Fraction of pixels selected by the y_sl > th mask.
double masked_fraction(const RasterMap& y_sl, double th);

/// Softmax cross-entropy against target_index.
double self_supervised_loss(std::span<const double> logits, int target_index);
LossWithGrad<std::vector<double>> self_supervised_loss_with_grad(std::span<const double> logits,
                                                                 int target_index);

}  // namespace selfloop
