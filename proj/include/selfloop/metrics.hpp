#pragma once

#include <cstddef>

#include "selfloop/mask.hpp"
#include "selfloop/raster.hpp"

namespace selfloop {

struct Confusion {
    std::size_t tp = 0, fp = 0, fn = 0, tn = 0;
};

/// Foreground where pred > threshold.
Confusion confusion(const RasterMap& pred, const BinaryMask& gt, double threshold);

/// 2TP / (2TP + FP + FN); 1 when prediction and truth are both empty.
double f1_from(const Confusion& c);
double f1_score(const RasterMap& pred, const BinaryMask& gt, double threshold = 0.5);

/// Mean of the foreground and background recalls. A class absent from the
/// truth is left out of the mean.
double balanced_accuracy_from(const Confusion& c);
double balanced_accuracy(const RasterMap& pred, const BinaryMask& gt, double threshold = 0.5);

}  // namespace selfloop
