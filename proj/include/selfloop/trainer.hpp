#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <iosfwd>
#include <span>
#include <vector>

#include "selfloop/dataset.hpp"
#include "selfloop/estimators.hpp"
#include "selfloop/network.hpp"
#include "selfloop/permutation_pool.hpp"

namespace selfloop {

struct TrainConfig {
    int n_labeled = 2;            // N per batch
    int m_unlabeled = 4;          // M per batch
    double th = 0.5;              // L_UG mask threshold
    double outer_lr = 1e-3;
    int epochs = 50;
    int warmup_epochs = 0;        // supervised-only epochs before unlabeled terms start
    Estimator estimator = Estimator::SelfLoop;
    std::uint64_t seed = 0;

    // self-loop
    int q = 10;
    double selfloop_step = 1e-3;
    bool zero_rotations = false;
    bool labeled_ss = true;            // labeled L_SS in the joint step
    bool unlabeled_ss_in_joint = false;

    // baselines
    int mc_passes = 10;
    double mc_rate = 0.2;
    int ensemble_size = 10;

    bool evaluate_each_epoch = true;

    NetworkConfig network;

    void validate() const;
};

struct StepMetrics {
    double l_seg = 0.0;             // summed over labeled images
    double l_ug = 0.0;              // summed over unlabeled images
    double l_ss = 0.0;              // summed over labeled images and Q transforms (joint step)
    double masked_pixel_fraction = 0.0;
    double phase_a_ss = 0.0;        // mean self-loop L_SS over Phase A
    int encoder_updates = 0;
    int full_updates = 0;

    double total() const noexcept { return l_seg + l_ug + l_ss; }
};

/// Momentum-free adaptive step (RMSProp without momentum).
class RmsProp {
public:
    explicit RmsProp(double lr = 1e-3, double decay = 0.9, double eps = 1e-8)
        : lr_(lr), decay_(decay), eps_(eps) {}

    void step(std::span<double> params, std::span<const double> grad);
    std::size_t steps() const noexcept { return steps_; }

private:
    double lr_, decay_, eps_;
    std::vector<double> sq_;
    std::size_t steps_ = 0;
};

struct LabeledItem {
    const RasterMap* image;
    const BinaryMask* mask;
};

struct StepContext {
    const PermutationSet* perm_set = nullptr;
    RmsProp* optimizer = nullptr;
    std::span<const SegNetwork> ensemble;  // fixed members for Estimator::Ensemble
    std::uint64_t step_seed = 0;
    bool use_unlabeled = true;             // false during warm-up
};

/// One batch of the two-phase objective. Phase A (self-loop estimator with
/// unlabeled images) performs Q encoder+head updates and produces y_sl;
/// Phase B takes one optimizer step over all parameters on
/// sum L_SEG + sum L_UG + sum_j sum_i L_SS over the labeled images.
StepMetrics train_step(SegNetwork& net, std::span<const LabeledItem> labeled, std::span<const RasterMap> unlabeled,
                       const TrainConfig& cfg, StepContext& ctx);

struct EpochRow {
    int epoch = 0;
    double l_seg = 0.0, l_ug = 0.0, l_ss = 0.0, masked_fraction = 0.0;
    double val_f1 = 0.0;  // NaN when there is no test set or evaluation is off
};

struct TrainResult {
    SegNetwork net;
    std::vector<EpochRow> history;
};

using EpochCallback = std::function<void(const EpochRow&)>;

/// Epochs over the labeled set in batches of N; each batch is paired with the
/// next M images of a cyclically reshuffled D_U. The network is initialized
/// from cfg.network with its seed replaced by cfg.seed.
TrainResult train(const TrainConfig& cfg, const SplitDataset& data, const PermutationSet& perm_set,
                  const EpochCallback& on_epoch = {});

/// Ensemble members: fully-supervised runs with derived seeds.
std::vector<SegNetwork> train_ensemble(const TrainConfig& cfg, const SplitDataset& data,
                                       const PermutationSet& perm_set);

void write_history_csv(std::ostream& out, std::span<const EpochRow> history);
void save_history_csv(const std::filesystem::path& path, std::span<const EpochRow> history);

}  // namespace selfloop
