#include <gtest/gtest.h>

#include <cmath>
#include <fstream>
#include <random>

#include "selfloop/errors.hpp"
#include "selfloop/network.hpp"
#include "test_util.hpp"

using namespace selfloop;

namespace {

// L = sum c*prob + sum d*logits for fixed random c, d.
double probe(const SegNetwork& net, const RasterMap& x, const RasterMap& c, const std::vector<double>& d) {
    const auto tr = net.forward(x);
    double l = 0.0;
    for (std::size_t i = 0; i < c.size(); ++i) l += c[i] * tr.probability[i];
    for (std::size_t k = 0; k < d.size(); ++k) l += d[k] * tr.logits[k];
    return l;
}

}  // namespace

TEST(SegNetwork, ShapesAndRange) {
    NetworkConfig cfg;
    SegNetwork net(cfg);
    const auto x = test_support::random_raster(3, 48, 48, 1);
    const auto p = net.forward_segmentation(x);
    EXPECT_EQ(p.channels(), 1);
    EXPECT_EQ(p.height(), 48);
    EXPECT_EQ(p.width(), 48);
    for (double v : p.values()) EXPECT_TRUE(v > 0.0 && v < 1.0);
    EXPECT_EQ(net.forward_permutation_logits(x).size(), 100u);
}

TEST(SegNetwork, GroupsPartitionParameters) {
    SegNetwork net(test_support::tiny_network());
    const auto e = net.group_range(ParamGroup::Encoder);
    const auto d = net.group_range(ParamGroup::Decoder);
    const auto h = net.group_range(ParamGroup::Head);
    EXPECT_EQ(e.begin, 0u);
    EXPECT_EQ(e.end, d.begin);
    EXPECT_EQ(d.end, h.begin);
    EXPECT_EQ(h.end, net.parameter_count());
    EXPECT_GT(e.size(), 0u);
    EXPECT_GT(d.size(), 0u);
    EXPECT_EQ(h.size(), static_cast<std::size_t>(4 * (16 + 1)));  // deepest width 16, K = 4
}

TEST(SegNetwork, DeterministicInitialization) {
    SegNetwork a(test_support::tiny_network(4, 9)), b(test_support::tiny_network(4, 9)), c(test_support::tiny_network(4, 10));
    EXPECT_TRUE(std::equal(a.parameters().begin(), a.parameters().end(), b.parameters().begin()));
    EXPECT_FALSE(std::equal(a.parameters().begin(), a.parameters().end(), c.parameters().begin()));
}

TEST(SegNetwork, StochasticModeVariesDeterministicDoesNot) {
    SegNetwork net(NetworkConfig{});
    const auto x = test_support::random_raster(3, 24, 24, 2);
    EXPECT_EQ(net.forward_segmentation(x), net.forward_segmentation(x));
    net.set_stochastic_mode(true, 5);
    const auto a = net.forward_segmentation(x);
    const auto b = net.forward_segmentation(x);
    EXPECT_NE(a, b);
    net.set_stochastic_mode(false);
    EXPECT_EQ(net.forward_segmentation(x), net.forward_segmentation(x));
}

TEST(SegNetwork, HeadIgnoresDecoder) {
    SegNetwork net(test_support::tiny_network());
    const auto x = test_support::random_raster(3, 8, 8, 3);
    const auto before = net.forward_permutation_logits(x);
    for (auto& v : net.group(ParamGroup::Decoder)) v += 0.5;
    EXPECT_EQ(net.forward_permutation_logits(x), before);
}

TEST(SegNetwork, RejectsIncompatibleInput) {
    SegNetwork net(test_support::tiny_network());
    EXPECT_THROW(net.forward_segmentation(RasterMap(1, 8, 8)), std::invalid_argument);
    EXPECT_THROW(net.forward_segmentation(RasterMap(3, 6, 8)), std::invalid_argument);
}

TEST(SegNetwork, ParameterGradientMatchesFiniteDifferences) {
    SegNetwork net(test_support::tiny_network(5, 4));
    const auto x = test_support::random_raster(3, 4, 4, 5);
    const auto c = test_support::random_raster(1, 4, 4, 6, -1.0, 1.0);
    std::vector<double> d{0.3, -0.7, 0.2, 0.9, -0.4};

    const auto tr = net.forward(x);
    Gradient g = net.zero_gradient();
    net.backward(tr, &c, d, g);

    const double eps = 1e-6;
    auto params = net.parameters();
    int checked = 0;
    for (std::size_t i = 0; i < params.size(); ++i) {
        const double keep = params[i];
        params[i] = keep + eps;
        const double up = probe(net, x, c, d);
        params[i] = keep - eps;
        const double down = probe(net, x, c, d);
        params[i] = keep;
        const double numeric = (up - down) / (2 * eps);
        const double scale = std::max({std::abs(numeric), std::abs(g[i]), 1e-6});
        EXPECT_LE(std::abs(numeric - g[i]) / scale, 1e-4) << "parameter " << i;
        ++checked;
    }
    EXPECT_EQ(checked, static_cast<int>(net.parameter_count()));
}

TEST(SegNetwork, BackwardWithoutSegmentationLeavesDecoderGradientAlone) {
    SegNetwork net(test_support::tiny_network());
    const auto x = test_support::random_raster(3, 8, 8, 7);
    const auto tr = net.forward(x, {.decoder = false, .head = true});
    Gradient g = net.zero_gradient();
    net.backward(tr, nullptr, std::vector<double>{1, -1, 0.5, 0}, g);
    const auto d = net.group_range(ParamGroup::Decoder);
    for (std::size_t i = d.begin; i < d.end; ++i) EXPECT_EQ(g[i], 0.0);
    double enc = 0;
    for (std::size_t i = 0; i < d.begin; ++i) enc += std::abs(g[i]);
    EXPECT_GT(enc, 0.0);
}

TEST(Checkpoint, RoundTrip) {
    SegNetwork net(test_support::tiny_network(6, 12));
    net.training_seed = 77;
    net.parameters()[3] = 0.1234567890123;
    test_support::TempDir dir("ckpt");
    save_checkpoint(dir.path() / "c.bin", net);
    const SegNetwork back = load_checkpoint(dir.path() / "c.bin");
    EXPECT_EQ(back.config(), net.config());
    EXPECT_EQ(back.training_seed, 77u);
    EXPECT_TRUE(std::equal(back.parameters().begin(), back.parameters().end(), net.parameters().begin()));
    const auto x = test_support::random_raster(3, 8, 8, 1);
    EXPECT_EQ(back.forward_segmentation(x), net.forward_segmentation(x));
}

TEST(Checkpoint, RejectsGarbageAndMissingFile) {
    test_support::TempDir dir("ckpt_bad");
    {
        std::ofstream out(dir.path() / "bad.bin");
        out << "not a checkpoint\n";
    }
    EXPECT_THROW(load_checkpoint(dir.path() / "bad.bin"), IoError);
    EXPECT_THROW(load_checkpoint(dir.path() / "missing.bin"), IoError);
}
