#pragma once

#include <functional>
#include <span>
#include <string>
#include <vector>

#include "selfloop/dataset.hpp"
#include "selfloop/estimators.hpp"
#include "selfloop/network.hpp"

namespace selfloop {

/// Produces one pseudo-label per image, in order.
using PseudoLabeler = std::function<std::vector<UncertaintyMap>(std::span<const UnlabeledSample>)>;

PseudoLabeler softmax_labeler(const SegNetwork& net);
PseudoLabeler mc_dropout_labeler(const SegNetwork& net, int passes, double rate, std::uint64_t seed);
PseudoLabeler ensemble_labeler(std::span<const SegNetwork> members);
/// Runs the self-loop on batches of `batch_size` images, each batch on a
/// fresh copy of `net`; the caller's network is never modified.
PseudoLabeler selfloop_labeler(const SegNetwork& net, SelfLoopConfig cfg, int batch_size);
/// Returns the withheld ground truth; upper bound for every estimator.
PseudoLabeler oracle_labeler(const SplitDataset& split);

struct ImageScore {
    std::string id;
    double f1 = 0.0;
    double balanced_accuracy = 0.0;
};

struct EvalResult {
    double mean_f1 = 0.0;
    double balanced_accuracy = 0.0;
    std::vector<ImageScore> per_image;
};

/// Mean F1 of the pseudo-labels of D_U against the withheld masks. Images
/// without withheld masks are labeled but not scored.
EvalResult evaluate_pseudo_labels(const PseudoLabeler& labeler, const SplitDataset& split,
                                  double threshold = 0.5);

/// Deterministic forward over labeled samples, unweighted mean F1.
EvalResult evaluate_model(const SegNetwork& net, std::span<const Sample> test, double threshold = 0.5);

}  // namespace selfloop
