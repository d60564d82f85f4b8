#include "selfloop/losses.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <string>

namespace selfloop {

namespace {

constexpr double kProbEps = 1e-12;

void check_pair(const RasterMap& a, const BinaryMask& gt, const char* what) {
    if (a.channels() != 1 || a.height() != gt.height() || a.width() != gt.width())
        throw std::invalid_argument(std::string(what) + ": prediction and mask shapes differ");
}

void check_pair(const RasterMap& a, const RasterMap& b, const char* what) {
    if (!a.same_shape(b)) throw std::invalid_argument(std::string(what) + ": map shapes differ");
}

void check_threshold(double th) {
    if (!(th > 0.0 && th < 1.0)) throw std::invalid_argument("threshold must lie in (0, 1)");
}

}  // namespace

double seg_loss(const RasterMap& pred, const BinaryMask& gt) {
    return seg_loss_with_grad(pred, gt).value;
}

LossWithGrad<RasterMap> seg_loss_with_grad(const RasterMap& pred, const BinaryMask& gt) {
    check_pair(pred, gt, "seg_loss");
    const double n = static_cast<double>(pred.size());
    LossWithGrad<RasterMap> r{0.0, RasterMap(1, pred.height(), pred.width())};
    for (std::size_t i = 0; i < pred.size(); ++i) {
        const double p = std::clamp(pred[i], kProbEps, 1.0 - kProbEps);
        if (gt[i]) {
            r.value -= std::log(p);
            r.grad[i] = -1.0 / (p * n);
        } else {
            r.value -= std::log1p(-p);
            r.grad[i] = 1.0 / ((1.0 - p) * n);
        }
    }
    r.value /= n;
    return r;
}

double uncertainty_guided_loss(const RasterMap& s_x, const RasterMap& y_sl, double th) {
    return uncertainty_guided_loss_with_grad(s_x, y_sl, th).value;
}

LossWithGrad<RasterMap> uncertainty_guided_loss_with_grad(const RasterMap& s_x, const RasterMap& y_sl,
                                                          double th) {
    check_pair(s_x, y_sl, "uncertainty_guided_loss");
    check_threshold(th);
    LossWithGrad<RasterMap> r{0.0, RasterMap(s_x.channels(), s_x.height(), s_x.width())};
    std::size_t selected = 0;
    for (std::size_t i = 0; i < y_sl.size(); ++i) selected += y_sl[i] > th;
    if (selected == 0) return r;
    const double inv = 1.0 / static_cast<double>(selected);
    for (std::size_t i = 0; i < y_sl.size(); ++i) {
        if (!(y_sl[i] > th)) continue;
        const double diff = s_x[i] - y_sl[i];
        r.value += diff * diff;
        r.grad[i] = 2.0 * diff * inv;
    }
    r.value *= inv;
    return r;
}

double masked_fraction(const RasterMap& y_sl, double th) {
    if (y_sl.empty()) return 0.0;
    std::size_t selected = 0;
    for (std::size_t i = 0; i < y_sl.size(); ++i) selected += y_sl[i] > th;
    return static_cast<double>(selected) / static_cast<double>(y_sl.size());
}

double self_supervised_loss(std::span<const double> logits, int target_index) {
    return self_supervised_loss_with_grad(logits, target_index).value;
}

LossWithGrad<std::vector<double>> self_supervised_loss_with_grad(std::span<const double> logits,
                                                                 int target_index) {
    if (target_index < 0 || static_cast<std::size_t>(target_index) >= logits.size())
        throw std::invalid_argument("self_supervised_loss: target index " + std::to_string(target_index) +
                                    " outside [0, " + std::to_string(logits.size()) + ")");
    const double mx = *std::max_element(logits.begin(), logits.end());
    double z = 0.0;
    for (double v : logits) z += std::exp(v - mx);
    const double log_z = mx + std::log(z);
    LossWithGrad<std::vector<double>> r{log_z - logits[static_cast<std::size_t>(target_index)],
                                        std::vector<double>(logits.size())};
    for (std::size_t i = 0; i < logits.size(); ++i) r.grad[i] = std::exp(logits[i] - log_z);
    r.grad[static_cast<std::size_t>(target_index)] -= 1.0;
    return r;
}

}  // namespace selfloop
