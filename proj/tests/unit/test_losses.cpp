#include <gtest/gtest.h>

#include <cmath>
#include <vector>

#include "selfloop/losses.hpp"
#include "test_util.hpp"

using namespace selfloop;

namespace {

template <typename F>
void expect_fd_match(RasterMap x, const RasterMap& analytic, F loss) {
    const double eps = 1e-6;
    for (std::size_t i = 0; i < x.size(); ++i) {
        const double keep = x[i];
        x[i] = keep + eps;
        const double up = loss(x);
        x[i] = keep - eps;
        const double down = loss(x);
        x[i] = keep;
        const double numeric = (up - down) / (2 * eps);
        const double scale = std::max({std::abs(numeric), std::abs(analytic[i]), 1e-8});
        EXPECT_LE(std::abs(numeric - analytic[i]) / scale, 1e-4) << "pixel " << i;
    }
}

}  // namespace

TEST(SegLoss, HandValues) {
    const RasterMap pred(1, 1, 2, std::vector<double>{0.9, 0.2});
    const BinaryMask gt(1, 2, {1, 0});
    EXPECT_NEAR(seg_loss(pred, gt), -(std::log(0.9) + std::log(0.8)) / 2, 1e-15);
    EXPECT_NEAR(seg_loss(pred, gt), 0.1643, 5e-5);
    EXPECT_NEAR(seg_loss(RasterMap(1, 3, 3, 0.5), BinaryMask(3, 3)), std::log(2.0), 1e-15);
    const RasterMap near(1, 1, 2, std::vector<double>{1 - 1e-9, 1e-9});
    EXPECT_LT(seg_loss(near, gt), 1e-8);
}

TEST(SegLoss, GradientMatchesFiniteDifferences) {
    const auto pred = test_support::random_raster(1, 4, 4, 3, 0.05, 0.95);
    const BinaryMask gt(4, 4, {1, 0, 0, 1, 1, 1, 0, 0, 0, 1, 0, 1, 1, 0, 1, 0});
    const auto lg = seg_loss_with_grad(pred, gt);
    EXPECT_DOUBLE_EQ(lg.value, seg_loss(pred, gt));
    expect_fd_match(pred, lg.grad, [&](const RasterMap& p) { return seg_loss(p, gt); });
}

TEST(SegLoss, ShapeMismatchThrows) {
    EXPECT_THROW(seg_loss(RasterMap(1, 2, 2, 0.5), BinaryMask(2, 3)), std::invalid_argument);
}

TEST(UncertaintyGuidedLoss, HandValues) {
    const RasterMap s(1, 2, 2, std::vector<double>{0.8, 0.2, 0.6, 0.4});
    const RasterMap y(1, 2, 2, std::vector<double>{0.9, 0.1, 0.7, 0.3});
    EXPECT_NEAR(uncertainty_guided_loss(s, y, 0.5), 0.01, 1e-15);
    EXPECT_DOUBLE_EQ(masked_fraction(y, 0.5), 0.5);
    EXPECT_EQ(uncertainty_guided_loss(s, RasterMap(1, 2, 2, 0.2), 0.5), 0.0);
    EXPECT_EQ(uncertainty_guided_loss(y, y, 0.5), 0.0);
}

TEST(UncertaintyGuidedLoss, GradientIncludingMaskedPixels) {
    const auto s = test_support::random_raster(1, 4, 4, 4);
    const auto y = test_support::random_raster(1, 4, 4, 5);
    const auto lg = uncertainty_guided_loss_with_grad(s, y, 0.5);
    EXPECT_DOUBLE_EQ(lg.value, uncertainty_guided_loss(s, y, 0.5));
    for (std::size_t i = 0; i < y.size(); ++i)
        if (!(y[i] > 0.5)) {
            EXPECT_EQ(lg.grad[i], 0.0);
        }
    expect_fd_match(s, lg.grad, [&](const RasterMap& p) { return uncertainty_guided_loss(p, y, 0.5); });
}

TEST(UncertaintyGuidedLoss, EmptyMaskHasZeroGradient) {
    const auto s = test_support::random_raster(1, 2, 2, 6);
    const auto lg = uncertainty_guided_loss_with_grad(s, RasterMap(1, 2, 2, 0.2), 0.5);
    EXPECT_EQ(lg.value, 0.0);
    for (double g : lg.grad.values()) EXPECT_EQ(g, 0.0);
}

TEST(UncertaintyGuidedLoss, DependsOnTargetOnlyThroughMaskAndResidual) {
    const auto s = test_support::random_raster(1, 4, 4, 7);
    const auto y = test_support::random_raster(1, 4, 4, 8);
    RasterMap y2 = y;
    for (auto& v : y2.values())
        if (!(v > 0.5)) v = 0.01;  // below th: irrelevant
    EXPECT_EQ(uncertainty_guided_loss(s, y, 0.5), uncertainty_guided_loss(s, y2, 0.5));
}

TEST(UncertaintyGuidedLoss, SmallThresholdIsPlainMse) {
    const auto s = test_support::random_raster(1, 4, 4, 9);
    const auto y = test_support::random_raster(1, 4, 4, 10, 0.01, 1.0);
    double mse = 0;
    for (std::size_t i = 0; i < s.size(); ++i) mse += (s[i] - y[i]) * (s[i] - y[i]);
    mse /= static_cast<double>(s.size());
    EXPECT_NEAR(uncertainty_guided_loss(s, y, 1e-9), mse, 1e-15);
}

TEST(UncertaintyGuidedLoss, RejectsBadThreshold) {
    const RasterMap s(1, 2, 2, 0.5);
    EXPECT_THROW(uncertainty_guided_loss(s, s, 0.0), std::invalid_argument);
    EXPECT_THROW(uncertainty_guided_loss(s, s, 1.0), std::invalid_argument);
}

TEST(SelfSupervisedLoss, HandValues) {
    EXPECT_NEAR(self_supervised_loss(std::vector<double>{2, 0}, 0), std::log(1 + std::exp(-2.0)), 1e-15);
    EXPECT_NEAR(self_supervised_loss(std::vector<double>{2, 0}, 0), 0.1269, 5e-5);
    EXPECT_NEAR(self_supervised_loss(std::vector<double>(100, 0.3), 17), std::log(100.0), 1e-12);
    EXPECT_LT(self_supervised_loss(std::vector<double>{800, 0, 0}, 0), 1e-300);
    EXPECT_THROW(self_supervised_loss(std::vector<double>{1, 2}, 2), std::invalid_argument);
}

TEST(SelfSupervisedLoss, GradientMatchesFiniteDifferences) {
    const auto r = test_support::random_raster(1, 1, 10, 11, -3, 3);
    const std::vector<double> logits(r.values().begin(), r.values().end());
    const auto lg = self_supervised_loss_with_grad(logits, 4);
    const RasterMap analytic(1, 1, 10, lg.grad);
    expect_fd_match(r, analytic, [](const RasterMap& z) {
        return self_supervised_loss(std::vector<double>(z.values().begin(), z.values().end()), 4);
    });
}
