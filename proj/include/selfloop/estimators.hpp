#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "selfloop/jigsaw.hpp"
#include "selfloop/network.hpp"
#include "selfloop/permutation_pool.hpp"
#include "selfloop/raster.hpp"

namespace selfloop {

enum class Estimator { SelfLoop, Softmax, McDropout, Ensemble, None };

const char* to_string(Estimator e);
/// Throws std::invalid_argument for unknown names.
Estimator parse_estimator(const std::string& name);

/// Pseudo-label / uncertainty output: one-channel map in [0, 1].
struct UncertaintyMap {
    RasterMap values;
    std::string source;
    std::vector<double> per_image_losses;  // self-loop only
};

struct SelfLoopConfig {
    int q = 10;
    double step_size = 1e-3;
    const PermutationSet* perm_set = nullptr;
    std::uint64_t seed = 0;
    bool zero_rotations = false;
    bool force_identity = false;  // every transform becomes the identity; targets unchanged

    void validate() const;
};

/// Everything needed to replay a self-loop run independently.
struct SelfLoopLog {
    std::vector<JigsawTransform> transforms;             // [iteration]
    std::vector<int> targets;                            // [iteration]
    std::vector<std::vector<RasterMap>> predictions;     // [iteration][image], transformed frame
    std::vector<std::vector<double>> losses;             // [image][iteration]
    std::vector<double> batch_mean_losses;               // [iteration]
};

/// norm(w_i) with w_i = 1 - l_i / sum(l). Uniform when every loss is zero.
std::vector<double> compute_weights(std::span<const double> losses);

/// Q jigsaw-driven encoder(+head) updates on the batch, recording the
/// segmentation of each transformed image before each update, then per image
/// the loss-weighted sum of the re-aligned predictions. The decoder is never
/// written; encoder and head updates persist in `net`.
std::vector<UncertaintyMap> self_loop_uncertainty(SegNetwork& net, std::span<const RasterMap> batch,
                                                  const SelfLoopConfig& cfg, SelfLoopLog* log = nullptr);

UncertaintyMap softmax_pseudo_label(const SegNetwork& net, const RasterMap& x);

/// Mean of `passes` dropout-active forward passes at dropout rate `rate`.
/// `net` is not modified; the stochastic passes run on a private copy.
UncertaintyMap mc_dropout_uncertainty(const SegNetwork& net, const RasterMap& x, int passes, double rate,
                                      std::uint64_t seed = 0, std::vector<RasterMap>* pass_log = nullptr);

UncertaintyMap ensemble_uncertainty(std::span<const SegNetwork> nets, const RasterMap& x,
                                    std::vector<RasterMap>* member_log = nullptr);

}  // namespace selfloop

namespace selfloop {

/// The Q transforms of one self-loop round: permutation indices from
/// sample_iteration_permutations(set, q, seed), rotations seeded per
/// iteration. Shared by the self-loop estimator and the labeled L_SS term.
std::vector<JigsawTransform> iteration_transforms(const PermutationSet& set, int q, std::uint64_t seed,
                                                  bool zero_rotations, bool force_identity = false);

}  // namespace selfloop
