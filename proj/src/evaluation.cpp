#include "selfloop/evaluation.hpp"

#include <map>
#include <stdexcept>

#include "selfloop/metrics.hpp"
#include "selfloop/rng.hpp"

namespace selfloop {

PseudoLabeler softmax_labeler(const SegNetwork& net) {
    return [&net](std::span<const UnlabeledSample> batch) {
        std::vector<UncertaintyMap> out;
        for (const auto& s : batch) out.push_back(softmax_pseudo_label(net, s.image));
        return out;
    };
}

PseudoLabeler mc_dropout_labeler(const SegNetwork& net, int passes, double rate, std::uint64_t seed) {
    return [&net, passes, rate, seed](std::span<const UnlabeledSample> batch) {
        std::vector<UncertaintyMap> out;
        for (std::size_t i = 0; i < batch.size(); ++i)
            out.push_back(mc_dropout_uncertainty(net, batch[i].image, passes, rate, derive_seed(seed, stream::kDropout, i)));
        return out;
    };
}

PseudoLabeler ensemble_labeler(std::span<const SegNetwork> members) {
    return [members](std::span<const UnlabeledSample> batch) {
        std::vector<UncertaintyMap> out;
        for (const auto& s : batch) out.push_back(ensemble_uncertainty(members, s.image));
        return out;
    };
}

PseudoLabeler selfloop_labeler(const SegNetwork& net, SelfLoopConfig cfg, int batch_size) {
    if (batch_size < 1) throw std::invalid_argument("selfloop_labeler: batch size must be >= 1");
    return [&net, cfg, batch_size](std::span<const UnlabeledSample> batch) {
        std::vector<UncertaintyMap> out;
        for (std::size_t first = 0, b = 0; first < batch.size(); first += static_cast<std::size_t>(batch_size), ++b) {
            const auto last = std::min(batch.size(), first + static_cast<std::size_t>(batch_size));
            std::vector<RasterMap> images;
            for (std::size_t i = first; i < last; ++i) images.push_back(batch[i].image);
            SegNetwork scratch = net;
            SelfLoopConfig c = cfg;
            c.seed = derive_seed(cfg.seed, stream::kSelfLoop, b);
            for (auto& m : self_loop_uncertainty(scratch, images, c)) out.push_back(std::move(m));
        }
        return out;
    };
}

PseudoLabeler oracle_labeler(const SplitDataset& split) {
    std::map<std::string, RasterMap> truth;
    for (std::size_t i = 0; i < split.unlabeled_count(); ++i)
        if (const auto& m = split.hidden_truth(i)) truth.emplace(split.unlabeled_for_evaluation(i).id, m->to_raster());
    return [truth = std::move(truth)](std::span<const UnlabeledSample> batch) {
        std::vector<UncertaintyMap> out;
        for (const auto& s : batch) {
            auto it = truth.find(s.id);
            if (it == truth.end()) throw std::invalid_argument("oracle: no ground truth for " + s.id);
            out.push_back({it->second, "oracle", {}});
        }
        return out;
    };
}

namespace {

void finish(EvalResult& r) {
    double f1 = 0.0, ba = 0.0;
    for (const auto& s : r.per_image) {
        f1 += s.f1;
        ba += s.balanced_accuracy;
    }
    r.mean_f1 = f1 / static_cast<double>(r.per_image.size());
    r.balanced_accuracy = ba / static_cast<double>(r.per_image.size());
}

}  // namespace

EvalResult evaluate_pseudo_labels(const PseudoLabeler& labeler, const SplitDataset& split, double threshold) {
    std::vector<UnlabeledSample> images;
    std::vector<std::size_t> scored;
    for (std::size_t i = 0; i < split.unlabeled_count(); ++i) {
        if (split.hidden_truth(i)) {
            scored.push_back(images.size());
            images.push_back(split.unlabeled_for_evaluation(i));
        }
    }
    if (images.empty()) throw std::invalid_argument("evaluate_pseudo_labels: D_U has no withheld ground truth");
    const auto labels = labeler(images);
    if (labels.size() != images.size()) throw std::logic_error("pseudo-labeler returned wrong number of maps");

    EvalResult r;
    std::size_t k = 0;
    for (std::size_t i = 0; i < split.unlabeled_count(); ++i) {
        const auto& gt = split.hidden_truth(i);
        if (!gt) continue;
        const auto c = confusion(labels[k].values, *gt, threshold);
        r.per_image.push_back({images[k].id, f1_from(c), balanced_accuracy_from(c)});
        ++k;
    }
    finish(r);
    return r;
}

EvalResult evaluate_model(const SegNetwork& net, std::span<const Sample> test, double threshold) {
    if (test.empty()) throw std::invalid_argument("evaluate_model: empty test set");
    if (net.stochastic_mode()) throw std::invalid_argument("evaluate_model: network must be deterministic");
    EvalResult r;
    for (const auto& s : test) {
        if (!s.mask) throw std::invalid_argument("evaluate_model: test sample " + s.id + " has no mask");
        const auto c = confusion(net.forward_segmentation(s.image), *s.mask, threshold);
        r.per_image.push_back({s.id, f1_from(c), balanced_accuracy_from(c)});
    }
    finish(r);
    return r;
}

}  // namespace selfloop
