#include "selfloop/estimators.hpp"

#include <cmath>
#include <stdexcept>

#include "selfloop/errors.hpp"
#include "selfloop/losses.hpp"
#include "selfloop/rng.hpp"

namespace selfloop {

const char* to_string(Estimator e) {
    switch (e) {
        case Estimator::SelfLoop: return "selfloop";
        case Estimator::Softmax: return "softmax";
        case Estimator::McDropout: return "mc_dropout";
        case Estimator::Ensemble: return "ensemble";
        case Estimator::None: return "none";
    }
    return "?";
}

Estimator parse_estimator(const std::string& name) {
    for (auto e : {Estimator::SelfLoop, Estimator::Softmax, Estimator::McDropout, Estimator::Ensemble,
                   Estimator::None})
        if (name == to_string(e)) return e;
    throw std::invalid_argument("unknown estimator '" + name + "'");
}

void SelfLoopConfig::validate() const {
    if (perm_set == nullptr) throw std::invalid_argument("self-loop: permutation set missing");
    if (q < 2 || q > perm_set->size())
        throw std::invalid_argument("self-loop: q=" + std::to_string(q) + " outside [2, K=" +
                                    std::to_string(perm_set->size()) + "]");
    if (!(step_size >= 0.0) || !std::isfinite(step_size))
        throw std::invalid_argument("self-loop: step size must be finite and >= 0");
}

std::vector<double> compute_weights(std::span<const double> losses) {
    const auto q = losses.size();
    if (q < 2) throw std::invalid_argument("compute_weights: need at least 2 losses");
    double total = 0.0;
    for (double l : losses) {
        if (!std::isfinite(l) || l < 0.0)
            throw std::invalid_argument("compute_weights: losses must be finite and >= 0");
        total += l;
    }
    std::vector<double> w(q);
    if (total == 0.0) {
        std::fill(w.begin(), w.end(), 1.0 / static_cast<double>(q));
        return w;
    }
    double w_sum = 0.0;
    for (std::size_t i = 0; i < q; ++i) {
        w[i] = 1.0 - losses[i] / total;
        w_sum += w[i];
    }
    for (auto& v : w) v /= w_sum;
    return w;
}

std::vector<JigsawTransform> iteration_transforms(const PermutationSet& set, int q, std::uint64_t seed,
                                                  bool zero_rotations, bool force_identity) {
    const auto indices = sample_iteration_permutations(set, q, seed);
    std::vector<JigsawTransform> out;
    out.reserve(indices.size());
    for (std::size_t i = 0; i < indices.size(); ++i) {
        if (force_identity) {
            out.push_back(JigsawTransform::identity(set.grid_side));
            out.back().perm_index = indices[i];
        } else {
            out.push_back(random_transform(set, indices[i], derive_seed(seed, stream::kSelfLoop, i), zero_rotations));
        }
    }
    return out;
}

std::vector<UncertaintyMap> self_loop_uncertainty(SegNetwork& net, std::span<const RasterMap> batch,
                                                  const SelfLoopConfig& cfg, SelfLoopLog* log) {
    cfg.validate();
    if (batch.empty()) throw std::invalid_argument("self-loop: empty batch");
    if (net.stochastic_mode()) throw std::invalid_argument("self-loop: network must be in deterministic mode");
    const PermutationSet& set = *cfg.perm_set;
    if (set.size() != net.config().k_classes)
        throw std::invalid_argument("self-loop: permutation set size differs from head classes");
    for (const auto& x : batch) net.check_input(x);

    std::vector<JigsawTransform> transforms =
        iteration_transforms(set, cfg.q, cfg.seed, cfg.zero_rotations, cfg.force_identity);
    const auto m = batch.size();
    const auto q = static_cast<std::size_t>(cfg.q);

    std::vector<std::vector<RasterMap>> preds(q);
    std::vector<std::vector<double>> losses(m, std::vector<double>(q));
    std::vector<double> batch_means(q);

    const auto enc = net.group_range(ParamGroup::Encoder);
    const auto head = net.group_range(ParamGroup::Head);
    auto params = net.parameters();

    for (std::size_t i = 0; i < q; ++i) {
        const auto& t = transforms[i];
        const int target = t.perm_index;

        Gradient grad = net.zero_gradient();
        double mean = 0.0;
        preds[i].reserve(m);
        for (std::size_t j = 0; j < m; ++j) {
            const RasterMap xt = apply(t, batch[j]);
            ForwardTrace trace = net.forward(xt);
            auto ce = self_supervised_loss_with_grad(trace.logits, target);
            if (!std::isfinite(ce.value)) throw NumericFailure("self-loop", "L_SS", static_cast<int>(i));
            losses[j][i] = ce.value;
            mean += ce.value;
            for (auto& g : ce.grad) g /= static_cast<double>(m);
            net.backward(trace, nullptr, ce.grad, grad);
            preds[i].push_back(std::move(trace.probability));
        }
        batch_means[i] = mean / static_cast<double>(m);

        if (cfg.step_size > 0.0) {
            for (const auto& r : {enc, head})
                for (std::size_t p = r.begin; p < r.end; ++p) {
                    if (!std::isfinite(grad[p])) throw NumericFailure("self-loop", "grad L_SS", static_cast<int>(i));
                    params[p] -= cfg.step_size * grad[p];
                }
        }
    }

    std::vector<UncertaintyMap> out(m);
    for (std::size_t j = 0; j < m; ++j) {
        const auto w = compute_weights(losses[j]);
        RasterMap y(1, batch[j].height(), batch[j].width());
        for (std::size_t i = 0; i < q; ++i) {
            const RasterMap aligned = invert(transforms[i], preds[i][j]);
            for (std::size_t p = 0; p < y.size(); ++p) y[p] += aligned[p] * w[i];
        }
        out[j] = {std::move(y), to_string(Estimator::SelfLoop), losses[j]};
    }

    if (log != nullptr) {
        log->targets.clear();
        for (const auto& t : transforms) log->targets.push_back(t.perm_index);
        log->transforms = std::move(transforms);
        log->predictions = std::move(preds);
        log->losses = std::move(losses);
        log->batch_mean_losses = std::move(batch_means);
    }
    return out;
}

namespace {

// Running mean; identical inputs reproduce the input exactly.
void accumulate_mean(RasterMap& mean, const RasterMap& p, int k) {
    if (k == 0) {
        mean = p;
        return;
    }
    for (std::size_t i = 0; i < p.size(); ++i) mean[i] += (p[i] - mean[i]) / static_cast<double>(k + 1);
}

}  // namespace

UncertaintyMap softmax_pseudo_label(const SegNetwork& net, const RasterMap& x) {
    if (net.stochastic_mode()) throw std::invalid_argument("softmax pseudo-label needs deterministic mode");
    return {net.forward_segmentation(x), to_string(Estimator::Softmax), {}};
}

UncertaintyMap mc_dropout_uncertainty(const SegNetwork& net, const RasterMap& x, int passes, double rate,
                                      std::uint64_t seed, std::vector<RasterMap>* pass_log) {
    if (passes < 1) throw std::invalid_argument("mc_dropout: passes must be >= 1");
    if (!(rate >= 0.0 && rate < 1.0)) throw std::invalid_argument("mc_dropout: rate must lie in [0, 1)");
    SegNetwork stochastic = net;
    stochastic.set_dropout_rate(rate);
    stochastic.set_stochastic_mode(true, seed);
    RasterMap mean;
    for (int k = 0; k < passes; ++k) {
        RasterMap p = stochastic.forward_segmentation(x);
        accumulate_mean(mean, p, k);
        if (pass_log != nullptr) pass_log->push_back(std::move(p));
    }
    return {std::move(mean), to_string(Estimator::McDropout), {}};
}

UncertaintyMap ensemble_uncertainty(std::span<const SegNetwork> nets, const RasterMap& x,
                                    std::vector<RasterMap>* member_log) {
    if (nets.empty()) throw std::invalid_argument("ensemble: no member networks");
    RasterMap mean;
    for (std::size_t k = 0; k < nets.size(); ++k) {
        if (nets[k].stochastic_mode()) throw std::invalid_argument("ensemble: members must be deterministic");
        RasterMap p = nets[k].forward_segmentation(x);
        accumulate_mean(mean, p, static_cast<int>(k));
        if (member_log != nullptr) member_log->push_back(std::move(p));
    }
    return {std::move(mean), to_string(Estimator::Ensemble), {}};
}

}  // namespace selfloop
