#include <gtest/gtest.h>

#include <cmath>
#include <sstream>

#include "selfloop/errors.hpp"
#include "selfloop/losses.hpp"
#include "selfloop/trainer.hpp"
#include "test_util.hpp"

using namespace selfloop;

namespace {

SyntheticParams small_data(int count, std::uint64_t seed) {
    SyntheticParams p;
    p.count = count;
    p.size = 24;
    p.size_multiple = 12;
    p.radius_min = 2.0;
    p.radius_max = 4.0;
    p.blobs_min = 2;
    p.blobs_max = 4;
    p.seed = seed;
    return p;
}

TrainConfig small_config(Estimator e) {
    TrainConfig c;
    c.estimator = e;
    c.network = test_support::tiny_network(12, 1);
    c.epochs = 2;
    c.q = 3;
    c.mc_passes = 2;
    c.ensemble_size = 2;
    c.seed = 8;
    return c;
}

struct Data {
    PermutationSet perms = build_permutation_set(2, 12, 1'000'000, 1);
    SplitDataset split = [] {
        auto s = split_labeled_unlabeled(generate_synthetic_dataset(small_data(10, 2)), 0.4, 0.0, 3);
        s.test = generate_synthetic_dataset(small_data(3, 4));
        return s;
    }();
};

}  // namespace

TEST(RmsProp, FirstStepByHand) {
    RmsProp opt(1e-3, 0.9, 1e-8);
    std::vector<double> p{1.0, -2.0, 0.5};
    const std::vector<double> g{0.2, -0.4, 0.0};
    opt.step(p, g);
    EXPECT_NEAR(p[0], 1.0 - 1e-3 * 0.2 / (std::sqrt(0.1 * 0.04) + 1e-8), 1e-15);
    EXPECT_NEAR(p[1], -2.0 + 1e-3 * 0.4 / (std::sqrt(0.1 * 0.16) + 1e-8), 1e-15);
    EXPECT_EQ(p[2], 0.5);
    EXPECT_EQ(opt.steps(), 1u);
}

TEST(TrainStep, SupervisedOnlyIsPlainBceStep) {
    Data d;
    SegNetwork net(test_support::tiny_network(12, 1));
    SegNetwork ref = net;
    TrainConfig cfg = small_config(Estimator::None);
    cfg.m_unlabeled = 0;
    RmsProp opt(cfg.outer_lr), ref_opt(cfg.outer_lr);
    StepContext ctx{&d.perms, &opt, {}, 5, true};
    std::vector<LabeledItem> lab{{&d.split.labeled[0].image, &*d.split.labeled[0].mask},
                                 {&d.split.labeled[1].image, &*d.split.labeled[1].mask}};
    const auto m = train_step(net, lab, {}, cfg, ctx);

    Gradient g = ref.zero_gradient();
    double l = 0;
    for (const auto& it : lab) {
        const auto tr = ref.forward(*it.image);
        const auto bce = seg_loss_with_grad(tr.probability, *it.mask);
        l += bce.value;
        ref.backward(tr, &bce.grad, {}, g);
    }
    ref_opt.step(ref.parameters(), g);
    EXPECT_NEAR(m.l_seg, l, 1e-14);
    EXPECT_EQ(m.l_ug, 0.0);
    EXPECT_EQ(m.l_ss, 0.0);
    EXPECT_EQ(m.encoder_updates, 0);
    EXPECT_EQ(m.full_updates, 1);
    for (std::size_t i = 0; i < ref.parameter_count(); ++i) EXPECT_NEAR(net.parameters()[i], ref.parameters()[i], 1e-15);
}

TEST(TrainStep, SelfLoopStepReplays) {
    Data d;
    SegNetwork net(test_support::tiny_network(12, 1));
    SegNetwork ref = net;
    TrainConfig cfg = small_config(Estimator::SelfLoop);
    cfg.q = 10;
    RmsProp opt(cfg.outer_lr);
    StepContext ctx{&d.perms, &opt, {}, 77, true};
    std::vector<LabeledItem> lab{{&d.split.labeled[0].image, &*d.split.labeled[0].mask},
                                 {&d.split.labeled[1].image, &*d.split.labeled[1].mask}};
    std::vector<RasterMap> unl{d.split.unlabeled_for_evaluation(0).image, d.split.unlabeled_for_evaluation(1).image};
    const auto m = train_step(net, lab, unl, cfg, ctx);
    EXPECT_EQ(m.encoder_updates, 10);
    EXPECT_EQ(m.full_updates, 1);
    EXPECT_DOUBLE_EQ(m.total(), m.l_seg + m.l_ug + m.l_ss);

    // Phase A by hand, then the three loss terms on the updated network
    SelfLoopConfig sl{10, cfg.selfloop_step, &d.perms, 77, false, false};
    const auto y = self_loop_uncertainty(ref, unl, sl);
    const auto ts = iteration_transforms(d.perms, 10, 77, false);
    double l_seg = 0, l_ss = 0, l_ug = 0;
    for (const auto& it : lab) {
        l_seg += seg_loss(ref.forward_segmentation(*it.image), *it.mask);
        for (const auto& t : ts) l_ss += self_supervised_loss(ref.forward_permutation_logits(apply(t, *it.image)), t.perm_index);
    }
    for (std::size_t j = 0; j < unl.size(); ++j)
        l_ug += uncertainty_guided_loss(ref.forward_segmentation(unl[j]), y[j].values, cfg.th);
    EXPECT_NEAR(m.l_seg, l_seg, 1e-12);
    EXPECT_NEAR(m.l_ss, l_ss, 1e-12);
    EXPECT_NEAR(m.l_ug, l_ug, 1e-12);
}

TEST(TrainStep, WithoutLabeledSsHasNoSsTerm) {
    Data d;
    SegNetwork net(test_support::tiny_network(12, 1));
    TrainConfig cfg = small_config(Estimator::SelfLoop);
    cfg.labeled_ss = false;
    cfg.selfloop_step = 0.0;
    RmsProp opt(cfg.outer_lr);
    StepContext ctx{&d.perms, &opt, {}, 1, true};
    std::vector<LabeledItem> lab{{&d.split.labeled[0].image, &*d.split.labeled[0].mask}};
    std::vector<RasterMap> unl{d.split.unlabeled_for_evaluation(0).image};
    const SegNetwork before = net;
    const auto m = train_step(net, lab, unl, cfg, ctx);
    EXPECT_EQ(m.l_ss, 0.0);
    EXPECT_EQ(m.encoder_updates, 0);
    EXPECT_GT(m.l_ug + m.l_seg, 0.0);
}

TEST(TrainStep, NonFiniteParametersRaiseNumericFailure) {
    Data d;
    SegNetwork net(test_support::tiny_network(12, 1));
    for (auto& v : net.group(ParamGroup::Decoder)) v = NAN;
    TrainConfig cfg = small_config(Estimator::None);
    RmsProp opt(cfg.outer_lr);
    StepContext ctx{&d.perms, &opt, {}, 1, true};
    std::vector<LabeledItem> lab{{&d.split.labeled[0].image, &*d.split.labeled[0].mask}};
    try {
        train_step(net, lab, {}, cfg, ctx);
        FAIL() << "expected NumericFailure";
    } catch (const NumericFailure& e) {
        EXPECT_EQ(e.phase(), "B");
        EXPECT_EQ(e.term(), "L_SEG");
    }
}

TEST(Train, DeterministicHistoryAndParameters) {
    Data d;
    const auto cfg = small_config(Estimator::SelfLoop);
    const auto a = train(cfg, d.split, d.perms);
    const auto b = train(cfg, d.split, d.perms);
    std::ostringstream ha, hb;
    write_history_csv(ha, a.history);
    write_history_csv(hb, b.history);
    EXPECT_EQ(ha.str(), hb.str());
    EXPECT_TRUE(std::equal(a.net.parameters().begin(), a.net.parameters().end(), b.net.parameters().begin()));
    EXPECT_EQ(a.history.size(), 2u);
    EXPECT_EQ(ha.str().substr(0, ha.str().find('\n')), "epoch,l_seg,l_ug,l_ss,masked_fraction,val_f1");
}

TEST(Train, FullySupervisedNeverTouchesUnlabeled) {
    Data d;
    train(small_config(Estimator::None), d.split, d.perms);
    EXPECT_EQ(d.split.unlabeled_accesses(), 0u);
    train(small_config(Estimator::Softmax), d.split, d.perms);
    EXPECT_GT(d.split.unlabeled_accesses(), 0u);
}

TEST(Train, WarmupSkipsUnlabeled) {
    Data d;
    auto cfg = small_config(Estimator::SelfLoop);
    cfg.warmup_epochs = 2;
    const auto r = train(cfg, d.split, d.perms);
    EXPECT_EQ(d.split.unlabeled_accesses(), 0u);
    for (const auto& row : r.history) EXPECT_EQ(row.l_ss, 0.0);
}

TEST(Train, OneEpochOneBatchGivesOneRow) {
    Data d;
    SplitDataset two;
    two.labeled = {d.split.labeled[0], d.split.labeled[1]};
    auto cfg = small_config(Estimator::None);
    cfg.epochs = 1;
    EXPECT_EQ(train(cfg, two, d.perms).history.size(), 1u);
}

TEST(Train, SupervisedLossDecreases) {
    SplitDataset s = split_labeled_unlabeled(generate_synthetic_dataset(small_data(8, 6)), 1.0, 0.0, 1);
    PermutationSet perms = build_permutation_set(2, 12, 1'000'000, 1);
    auto cfg = small_config(Estimator::None);
    cfg.epochs = 50;
    cfg.evaluate_each_epoch = false;
    const auto r = train(cfg, s, perms);
    EXPECT_LT(r.history.back().l_seg, 0.7 * r.history.front().l_seg);
}

TEST(Train, EnsembleAndMcDropoutRun) {
    Data d;
    auto cfg = small_config(Estimator::Ensemble);
    cfg.epochs = 1;
    EXPECT_EQ(train(cfg, d.split, d.perms).history.size(), 1u);
    cfg.estimator = Estimator::McDropout;
    EXPECT_EQ(train(cfg, d.split, d.perms).history.size(), 1u);
    const auto members = train_ensemble(cfg, d.split, d.perms);
    ASSERT_EQ(members.size(), 2u);
    EXPECT_FALSE(std::equal(members[0].parameters().begin(), members[0].parameters().end(),
                            members[1].parameters().begin()));
}

TEST(Train, RejectsEmptyLabeledSet) {
    Data d;
    SplitDataset empty;
    EXPECT_THROW(train(small_config(Estimator::None), empty, d.perms), std::invalid_argument);
}
