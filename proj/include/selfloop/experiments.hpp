#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <string>
#include <vector>

#include "selfloop/config.hpp"
#include "selfloop/dataset.hpp"
#include "selfloop/estimators.hpp"
#include "selfloop/evaluation.hpp"
#include "selfloop/permutation_pool.hpp"
#include "selfloop/trainer.hpp"

namespace selfloop {

struct CommandOptions {
    std::filesystem::path out_dir = "out";
    bool deterministic = false;  // pins the metadata timestamp
    std::ostream* log = nullptr; // progress lines; nullptr = silent
};

NetworkConfig network_config_from(const RunConfig& cfg);
TrainConfig train_config_from(const RunConfig& cfg);
/// Synthetic generator settings for the training (test_set=false) or test set.
SyntheticParams synthetic_params_from(const RunConfig& cfg, bool test_set);
PermutationSet permutation_set_from(const RunConfig& cfg);
SelfLoopConfig selfloop_config_from(const RunConfig& cfg, const PermutationSet& set, int q);
/// Dataset per data.source, split with the run seed.
SplitDataset load_split(const RunConfig& cfg, double label_fraction);

struct MakeDataResult {
    int train_images = 0, train_masks = 0, test_images = 0, test_masks = 0;
};
MakeDataResult cmd_make_data(const RunConfig& cfg, const CommandOptions& opts);

struct TrainSummary {
    EvalResult test;
    std::vector<EpochRow> history;
};
/// checkpoint.bin, history.csv, metrics.json, permutations.txt, config.txt
TrainSummary cmd_train(const RunConfig& cfg, const CommandOptions& opts);

struct PseudoEvalRow {
    std::string name;       // "oracle", "softmax", "mc_dropout", "ensemble", "SL3", ...
    Estimator estimator = Estimator::None;
    int q = 0;              // self-loop only
    EvalResult result;
};
std::vector<PseudoEvalRow> run_pseudo_eval(const RunConfig& cfg, const SegNetwork& net, const SplitDataset& split);
std::string format_pseudo_eval_table(const std::vector<PseudoEvalRow>& rows);
/// pseudo_eval.json, pseudo_eval.txt, config.txt
std::vector<PseudoEvalRow> cmd_pseudo_eval(const RunConfig& cfg, const std::filesystem::path& checkpoint,
                                           const CommandOptions& opts);

struct CompareCell {
    std::string method;
    double label_fraction = 0.0;
    std::uint64_t seed = 0;
    EvalResult test;
    std::vector<EpochRow> history;
};
/// Training recipe of a compare method name (see compare.methods).
TrainConfig compare_method_config(const RunConfig& cfg, const std::string& method);
std::string method_display_name(const std::string& method);
/// Trains one cell; fully_supervised runs at every fraction, the others only below 1.
CompareCell run_compare_cell(const RunConfig& cfg, const std::string& method, double label_fraction,
                             std::uint64_t seed, const PermutationSet& perm_set);
/// compare.json, compare.txt, compare_f1.png, curves_<pct>.png, config.txt
std::vector<CompareCell> cmd_compare(const RunConfig& cfg, const CommandOptions& opts);

/// Overlays, raw pseudo-label PNGs and a sidecar per unlabeled image.
int cmd_export_pseudolabels(const RunConfig& cfg, const std::filesystem::path& checkpoint,
                            const CommandOptions& opts);

}  // namespace selfloop
