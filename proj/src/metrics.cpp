#include "selfloop/metrics.hpp"

#include <stdexcept>

namespace selfloop {

Confusion confusion(const RasterMap& pred, const BinaryMask& gt, double threshold) {
    if (pred.channels() != 1 || pred.height() != gt.height() || pred.width() != gt.width())
        throw std::invalid_argument("metrics: prediction and mask shapes differ");
    if (!(threshold > 0.0 && threshold < 1.0)) throw std::invalid_argument("metrics: threshold must lie in (0, 1)");
    Confusion c;
    for (std::size_t i = 0; i < gt.size(); ++i) {
        const bool p = pred[i] > threshold;
        const bool t = gt[i] != 0;
        if (p && t) ++c.tp;
        else if (p) ++c.fp;
        else if (t) ++c.fn;
        else ++c.tn;
    }
    return c;
}

double f1_from(const Confusion& c) {
    const double denom = 2.0 * c.tp + c.fp + c.fn;
    if (denom == 0.0) return 1.0;
    return 2.0 * c.tp / denom;
}

double f1_score(const RasterMap& pred, const BinaryMask& gt, double threshold) {
    return f1_from(confusion(pred, gt, threshold));
}

double balanced_accuracy_from(const Confusion& c) {
    const std::size_t pos = c.tp + c.fn, neg = c.tn + c.fp;
    double sum = 0.0;
    int terms = 0;
    if (pos > 0) {
        sum += static_cast<double>(c.tp) / pos;
        ++terms;
    }
    if (neg > 0) {
        sum += static_cast<double>(c.tn) / neg;
        ++terms;
    }
    return terms ? sum / terms : 1.0;
}

double balanced_accuracy(const RasterMap& pred, const BinaryMask& gt, double threshold) {
    return balanced_accuracy_from(confusion(pred, gt, threshold));
}

}  // namespace selfloop
