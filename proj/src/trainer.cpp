#include "selfloop/trainer.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <limits>
#include <numeric>
#include <ostream>
#include <stdexcept>

#include "selfloop/errors.hpp"
#include "selfloop/evaluation.hpp"
#include "selfloop/jigsaw.hpp"
#include "selfloop/losses.hpp"
#include "selfloop/rng.hpp"

namespace selfloop {

void TrainConfig::validate() const {
    if (n_labeled < 1) throw std::invalid_argument("train: N (labeled per batch) must be >= 1");
    if (m_unlabeled < 0) throw std::invalid_argument("train: M (unlabeled per batch) must be >= 0");
    if (!(th > 0.0 && th < 1.0)) throw std::invalid_argument("train: th must lie in (0, 1)");
    if (!(outer_lr > 0.0)) throw std::invalid_argument("train: outer_lr must be positive");
    if (epochs < 0 || warmup_epochs < 0) throw std::invalid_argument("train: epochs must be >= 0");
    if (q < 2 || q > network.k_classes) throw std::invalid_argument("train: q must lie in [2, K]");
    if (!(selfloop_step >= 0.0)) throw std::invalid_argument("train: self-loop step must be >= 0");
    if (mc_passes < 1 || !(mc_rate >= 0.0 && mc_rate < 1.0)) throw std::invalid_argument("train: bad MC dropout settings");
    if (ensemble_size < 1) throw std::invalid_argument("train: ensemble_size must be >= 1");
    network.validate();
}

void RmsProp::step(std::span<double> params, std::span<const double> grad) {
    if (params.size() != grad.size()) throw std::invalid_argument("optimizer: size mismatch");
    if (sq_.empty()) sq_.assign(params.size(), 0.0);
    for (std::size_t i = 0; i < params.size(); ++i) {
        sq_[i] = decay_ * sq_[i] + (1.0 - decay_) * grad[i] * grad[i];
        params[i] -= lr_ * grad[i] / (std::sqrt(sq_[i]) + eps_);
    }
    ++steps_;
}

namespace {

void require_finite(double v, const char* phase, const char* term) {
    if (!std::isfinite(v)) throw NumericFailure(phase, term);
}

std::vector<RasterMap> baseline_pseudo_labels(const SegNetwork& net, std::span<const RasterMap> unlabeled,
                                              const TrainConfig& cfg, const StepContext& ctx) {
    std::vector<RasterMap> out;
    for (std::size_t j = 0; j < unlabeled.size(); ++j) {
        switch (cfg.estimator) {
            case Estimator::Softmax:
                out.push_back(softmax_pseudo_label(net, unlabeled[j]).values);
                break;
            case Estimator::McDropout:
                out.push_back(mc_dropout_uncertainty(net, unlabeled[j], cfg.mc_passes, cfg.mc_rate,
                                                     derive_seed(ctx.step_seed, stream::kDropout, j))
                                  .values);
                break;
            case Estimator::Ensemble:
                if (ctx.ensemble.empty()) throw std::invalid_argument("train_step: ensemble estimator without members");
                out.push_back(ensemble_uncertainty(ctx.ensemble, unlabeled[j]).values);
                break;
            default:
                throw std::logic_error("baseline_pseudo_labels: not a baseline estimator");
        }
    }
    return out;
}

}  // namespace

StepMetrics train_step(SegNetwork& net, std::span<const LabeledItem> labeled, std::span<const RasterMap> unlabeled,
                       const TrainConfig& cfg, StepContext& ctx) {
    if (ctx.optimizer == nullptr) throw std::invalid_argument("train_step: optimizer missing");
    if (labeled.empty() && unlabeled.empty()) throw std::invalid_argument("train_step: empty batch");
    const bool semi = cfg.estimator != Estimator::None && ctx.use_unlabeled && !unlabeled.empty();
    const bool selfloop = cfg.estimator == Estimator::SelfLoop && ctx.use_unlabeled;
    if (selfloop && ctx.perm_set == nullptr) throw std::invalid_argument("train_step: permutation set missing");

    StepMetrics metrics;
    std::vector<RasterMap> pseudo;
    std::vector<JigsawTransform> transforms;

    // Phase A
    if (selfloop) {
        SelfLoopConfig sl{cfg.q, cfg.selfloop_step, ctx.perm_set, ctx.step_seed, cfg.zero_rotations, false};
        if (!unlabeled.empty()) {
            SelfLoopLog log;
            try {
                for (auto& m : self_loop_uncertainty(net, unlabeled, sl, &log)) pseudo.push_back(std::move(m.values));
            } catch (const NumericFailure& e) {
                throw NumericFailure("A", "L_SS", e.iteration());
            }
            metrics.phase_a_ss = std::accumulate(log.batch_mean_losses.begin(), log.batch_mean_losses.end(), 0.0) /
                                 static_cast<double>(log.batch_mean_losses.size());
            metrics.encoder_updates = cfg.selfloop_step > 0.0 ? cfg.q : 0;
            transforms = std::move(log.transforms);
        } else {
            transforms = iteration_transforms(*ctx.perm_set, cfg.q, ctx.step_seed, cfg.zero_rotations);
        }
    } else if (semi) {
        pseudo = baseline_pseudo_labels(net, unlabeled, cfg, ctx);
    }

    // Phase B
    Gradient grad = net.zero_gradient();
    for (const auto& item : labeled) {
        ForwardTrace tr = net.forward(*item.image, {.decoder = true, .head = false});
        auto seg = seg_loss_with_grad(tr.probability, *item.mask);
        require_finite(seg.value, "B", "L_SEG");
        metrics.l_seg += seg.value;
        net.backward(tr, &seg.grad, {}, grad);

        if (selfloop && cfg.labeled_ss) {
            for (const auto& t : transforms) {
                ForwardTrace enc = net.forward(apply(t, *item.image), {.decoder = false, .head = true});
                auto ss = self_supervised_loss_with_grad(enc.logits, t.perm_index);
                require_finite(ss.value, "B", "L_SS");
                metrics.l_ss += ss.value;
                net.backward(enc, nullptr, ss.grad, grad);
            }
        }
    }

    if (semi) {
        double masked = 0.0;
        for (std::size_t j = 0; j < unlabeled.size(); ++j) {
            ForwardTrace tr = net.forward(unlabeled[j], {.decoder = true, .head = false});
            auto ug = uncertainty_guided_loss_with_grad(tr.probability, pseudo[j], cfg.th);
            require_finite(ug.value, "B", "L_UG");
            metrics.l_ug += ug.value;
            masked += masked_fraction(pseudo[j], cfg.th);
            net.backward(tr, &ug.grad, {}, grad);

            if (selfloop && cfg.unlabeled_ss_in_joint) {
                for (const auto& t : transforms) {
                    ForwardTrace enc = net.forward(apply(t, unlabeled[j]), {.decoder = false, .head = true});
                    auto ss = self_supervised_loss_with_grad(enc.logits, t.perm_index);
                    require_finite(ss.value, "B", "L_SS");
                    metrics.l_ss += ss.value;
                    net.backward(enc, nullptr, ss.grad, grad);
                }
            }
        }
        metrics.masked_pixel_fraction = masked / static_cast<double>(unlabeled.size());
    }

    for (double g : grad) require_finite(g, "B", "gradient");
    ctx.optimizer->step(net.parameters(), grad);
    metrics.full_updates = 1;
    return metrics;
}

TrainResult train(const TrainConfig& cfg, const SplitDataset& data, const PermutationSet& perm_set,
                  const EpochCallback& on_epoch) {
    cfg.validate();
    if (data.labeled.empty()) throw std::invalid_argument("train: labeled set is empty");
    if (cfg.estimator == Estimator::SelfLoop && perm_set.size() != cfg.network.k_classes)
        throw std::invalid_argument("train: permutation set size differs from k_classes");

    NetworkConfig ncfg = cfg.network;
    ncfg.seed = cfg.seed;
    TrainResult result{SegNetwork(ncfg), {}};
    SegNetwork& net = result.net;
    net.training_seed = cfg.seed;

    std::vector<SegNetwork> members;
    if (cfg.estimator == Estimator::Ensemble) members = train_ensemble(cfg, data, perm_set);

    RmsProp opt(cfg.outer_lr);
    const bool semi = cfg.estimator != Estimator::None && cfg.m_unlabeled > 0 && data.unlabeled_count() > 0;

    std::vector<std::size_t> lab_order(data.labeled.size());
    std::vector<std::size_t> unl_order(semi ? data.unlabeled_count() : 0);
    std::size_t unl_cursor = unl_order.size();
    std::uint64_t unl_round = 0;
    std::uint64_t global_step = 0;

    for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
        std::iota(lab_order.begin(), lab_order.end(), 0);
        Rng lab_rng(derive_seed(cfg.seed, stream::kLabeledShuffle, static_cast<std::uint64_t>(epoch)));
        std::shuffle(lab_order.begin(), lab_order.end(), lab_rng);
        const bool use_unlabeled = semi && epoch >= cfg.warmup_epochs;

        EpochRow row;
        row.epoch = epoch + 1;
        int steps = 0, unl_steps = 0;
        for (std::size_t first = 0; first < lab_order.size(); first += static_cast<std::size_t>(cfg.n_labeled)) {
            const auto last = std::min(lab_order.size(), first + static_cast<std::size_t>(cfg.n_labeled));
            std::vector<LabeledItem> lab;
            for (std::size_t i = first; i < last; ++i) {
                const auto& s = data.labeled[lab_order[i]];
                lab.push_back({&s.image, &*s.mask});
            }
            std::vector<RasterMap> unl;
            if (use_unlabeled) {
                const auto take = std::min<std::size_t>(static_cast<std::size_t>(cfg.m_unlabeled), unl_order.size());
                for (std::size_t k = 0; k < take; ++k) {
                    if (unl_cursor == unl_order.size()) {
                        std::iota(unl_order.begin(), unl_order.end(), 0);
                        Rng unl_rng(derive_seed(cfg.seed, stream::kUnlabeledShuffle, unl_round++));
                        std::shuffle(unl_order.begin(), unl_order.end(), unl_rng);
                        unl_cursor = 0;
                    }
                    unl.push_back(data.unlabeled(unl_order[unl_cursor++]).image);
                }
            }
            StepContext ctx{&perm_set, &opt, members, derive_seed(cfg.seed, stream::kSelfLoop, 1'000'000 + global_step),
                            use_unlabeled};
            const StepMetrics m = train_step(net, lab, unl, cfg, ctx);
            ++global_step;
            ++steps;
            row.l_seg += m.l_seg;
            row.l_ss += m.l_ss;
            if (!unl.empty()) {
                row.l_ug += m.l_ug;
                row.masked_fraction += m.masked_pixel_fraction;
                ++unl_steps;
            }
        }
        row.l_seg /= steps;
        row.l_ss /= steps;
        if (unl_steps > 0) {
            row.l_ug /= unl_steps;
            row.masked_fraction /= unl_steps;
        }
        row.val_f1 = (cfg.evaluate_each_epoch || epoch + 1 == cfg.epochs) && !data.test.empty()
                         ? evaluate_model(net, data.test).mean_f1
                         : std::numeric_limits<double>::quiet_NaN();
        result.history.push_back(row);
        if (on_epoch) on_epoch(row);
    }
    return result;
}

std::vector<SegNetwork> train_ensemble(const TrainConfig& cfg, const SplitDataset& data,
                                       const PermutationSet& perm_set) {
    std::vector<SegNetwork> members;
    for (int k = 0; k < cfg.ensemble_size; ++k) {
        TrainConfig member = cfg;
        member.estimator = Estimator::None;
        member.evaluate_each_epoch = false;
        member.seed = derive_seed(cfg.seed, stream::kEnsemble, static_cast<std::uint64_t>(k));
        SplitDataset labeled_only;
        labeled_only.labeled = data.labeled;
        members.push_back(train(member, labeled_only, perm_set).net);
    }
    return members;
}

void write_history_csv(std::ostream& out, std::span<const EpochRow> history) {
    out << "epoch,l_seg,l_ug,l_ss,masked_fraction,val_f1\n";
    char buf[256];
    for (const auto& r : history) {
        std::snprintf(buf, sizeof buf, "%d,%.17g,%.17g,%.17g,%.17g,%.17g\n", r.epoch, r.l_seg, r.l_ug, r.l_ss,
                      r.masked_fraction, r.val_f1);
        out << buf;
    }
}

void save_history_csv(const std::filesystem::path& path, std::span<const EpochRow> history) {
    std::ofstream out(path);
    if (!out) throw IoError("cannot write " + path.string());
    write_history_csv(out, history);
    if (!out) throw IoError("write failed: " + path.string());
}

}  // namespace selfloop
