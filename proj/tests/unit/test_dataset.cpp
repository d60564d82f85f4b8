#include <gtest/gtest.h>

#include <cmath>
#include <fstream>
#include <set>

#include "selfloop/dataset.hpp"
#include "selfloop/errors.hpp"
#include "selfloop/image_io.hpp"
#include "test_util.hpp"

using namespace selfloop;

namespace {

std::vector<Sample> labeled_samples(int n) {
    std::vector<Sample> v;
    for (int i = 0; i < n; ++i) v.push_back({RasterMap(3, 4, 4, i / 100.0), BinaryMask(4, 4), "s" + std::to_string(i)});
    return v;
}

std::set<std::string> ids(const std::vector<Sample>& v) {
    std::set<std::string> out;
    for (const auto& s : v) out.insert(s.id);
    return out;
}

}  // namespace

TEST(Synthetic, SingleNoiselessBlobMatchesRasterizedEllipse) {
    SyntheticParams p;
    p.blobs_min = p.blobs_max = 1;
    p.noise_level = 0;
    p.seed = 12;
    for (int i = 0; i < 5; ++i) {
        const auto s = generate_synthetic_sample(p, i);
        ASSERT_EQ(s.blobs.size(), 1u);
        const Ellipse& e = s.blobs[0];
        std::size_t expected = 0;
        for (int y = 0; y < p.size; ++y)
            for (int x = 0; x < p.size; ++x) {
                const double dy = y + 0.5 - e.cy, dx = x + 0.5 - e.cx;
                const double u = dx * std::cos(e.angle) + dy * std::sin(e.angle);
                const double v = -dx * std::sin(e.angle) + dy * std::cos(e.angle);
                if ((u / e.rx) * (u / e.rx) + (v / e.ry) * (v / e.ry) <= 1.0) ++expected;
            }
        EXPECT_EQ(s.sample.mask->count(), expected);
    }
}

TEST(Synthetic, DeterministicNonEmptyAndInRange) {
    SyntheticParams p;
    p.seed = 3;
    const auto a = generate_synthetic_dataset(p);
    const auto b = generate_synthetic_dataset(p);
    ASSERT_EQ(a.size(), 40u);
    for (std::size_t i = 0; i < a.size(); ++i) {
        EXPECT_EQ(a[i].image, b[i].image);
        EXPECT_EQ(*a[i].mask, *b[i].mask);
        EXPECT_EQ(a[i].id, b[i].id);
        EXPECT_GT(a[i].mask->count(), 0u);
        EXPECT_EQ(a[i].image.height(), 48);
        for (double v : a[i].image.values()) EXPECT_TRUE(v >= 0 && v <= 1);
    }
}

TEST(Synthetic, RejectsBadSize) {
    SyntheticParams p;
    p.size = 50;
    EXPECT_THROW(generate_synthetic_dataset(p), std::invalid_argument);
    p.size = 48;
    p.count = 0;
    EXPECT_THROW(generate_synthetic_dataset(p), std::invalid_argument);
}

TEST(Split, ThirtySamples) {
    const auto s20 = split_labeled_unlabeled(labeled_samples(30), 0.2, 0.0, 1);
    EXPECT_EQ(s20.labeled.size(), 6u);
    EXPECT_EQ(s20.unlabeled_count(), 24u);
    const auto s50 = split_labeled_unlabeled(labeled_samples(30), 0.5, 0.0, 1);
    EXPECT_EQ(s50.labeled.size(), 15u);
    EXPECT_EQ(s50.unlabeled_count(), 15u);
}

TEST(Split, DisjointDeterministicAndHidesTruth) {
    const auto a = split_labeled_unlabeled(labeled_samples(20), 0.25, 0.2, 4);
    const auto b = split_labeled_unlabeled(labeled_samples(20), 0.25, 0.2, 4);
    EXPECT_EQ(a.test.size(), 4u);
    EXPECT_EQ(a.labeled.size(), 4u);
    EXPECT_EQ(a.unlabeled_count(), 12u);
    std::set<std::string> all = ids(a.labeled);
    for (const auto& s : a.test) EXPECT_TRUE(all.insert(s.id).second);
    for (std::size_t i = 0; i < a.unlabeled_count(); ++i) {
        EXPECT_TRUE(all.insert(a.unlabeled_for_evaluation(i).id).second);
        EXPECT_TRUE(a.hidden_truth(i).has_value());
    }
    EXPECT_EQ(all.size(), 20u);
    EXPECT_EQ(ids(a.labeled), ids(b.labeled));
    EXPECT_EQ(ids(a.test), ids(b.test));
    EXPECT_EQ(a.unlabeled_accesses(), 0u);
    (void)a.unlabeled(0);
    EXPECT_EQ(a.unlabeled_accesses(), 1u);
}

TEST(Split, MinimumOneAndDegenerateFractions) {
    const auto s = split_labeled_unlabeled(labeled_samples(3), 0.1, 0.0, 1);
    EXPECT_EQ(s.labeled.size(), 1u);
    EXPECT_THROW(split_labeled_unlabeled(labeled_samples(3), 0.0, 0.0, 1), std::invalid_argument);
    EXPECT_THROW(split_labeled_unlabeled(labeled_samples(3), 1.2, 0.0, 1), std::invalid_argument);
    EXPECT_THROW(split_labeled_unlabeled(labeled_samples(3), 0.5, 1.0, 1), std::invalid_argument);
    const auto full = split_labeled_unlabeled(labeled_samples(5), 1.0, 0.0, 1);
    EXPECT_EQ(full.labeled.size(), 5u);
    EXPECT_EQ(full.unlabeled_count(), 0u);
}

TEST(Split, MasklessSamplesBecomeUnlabeled) {
    auto v = labeled_samples(6);
    for (int i = 0; i < 3; ++i) v[static_cast<std::size_t>(i)].mask.reset();
    const auto s = split_labeled_unlabeled(v, 1.0, 0.0, 2);
    EXPECT_EQ(s.labeled.size(), 3u);
    EXPECT_EQ(s.unlabeled_count(), 3u);
}

TEST(DirectoryDataset, PairsMasklessAndJunk) {
    test_support::TempDir dir("dataset");
    SyntheticParams p;
    p.count = 3;
    const auto samples = generate_synthetic_dataset(p);
    save_directory_dataset(dir.path(), samples);
    {
        std::ofstream junk(dir.path() / "images" / "notes.txt");
        junk << "hello";
    }
    auto loaded = load_directory_dataset(dir.path());
    ASSERT_EQ(loaded.size(), 3u);
    for (std::size_t i = 0; i < 3; ++i) {
        EXPECT_TRUE(loaded[i].labeled());
        EXPECT_EQ(*loaded[i].mask, *samples[i].mask);
        for (std::size_t k = 0; k < samples[i].image.size(); ++k)
            EXPECT_NEAR(loaded[i].image[k], samples[i].image[k], 0.5 / 255 + 1e-12);
    }
    std::filesystem::remove_all(dir.path() / "masks");
    loaded = load_directory_dataset(dir.path());
    for (const auto& s : loaded) EXPECT_FALSE(s.labeled());
}

TEST(DirectoryDataset, ErrorsNameTheProblem) {
    test_support::TempDir dir("dataset_err");
    EXPECT_THROW(load_directory_dataset(dir.path() / "nowhere"), IoError);
    std::filesystem::create_directories(dir.path() / "images");
    std::filesystem::create_directories(dir.path() / "masks");
    Image8 img{8, 8, 3, std::vector<std::uint8_t>(8 * 8 * 3, 100)};
    Image8 mask{6, 8, 1, std::vector<std::uint8_t>(6 * 8, 255)};
    write_png(dir.path() / "images" / "a.png", img);
    write_png(dir.path() / "masks" / "a.png", mask);
    try {
        load_directory_dataset(dir.path(), {8, 3});
        FAIL() << "expected IoError";
    } catch (const IoError& e) {
        EXPECT_NE(std::string(e.what()).find("a.png"), std::string::npos);
    }
}

TEST(DirectoryDataset, ResizesToConfiguredSize) {
    test_support::TempDir dir("dataset_resize");
    std::filesystem::create_directories(dir.path() / "images");
    Image8 img{40, 30, 1, std::vector<std::uint8_t>(40 * 30, 200)};
    write_png(dir.path() / "images" / "g.png", img);
    const auto loaded = load_directory_dataset(dir.path(), {24, 3});
    ASSERT_EQ(loaded.size(), 1u);
    EXPECT_EQ(loaded[0].image.channels(), 3);
    EXPECT_EQ(loaded[0].image.height(), 24);
    EXPECT_EQ(loaded[0].image.width(), 24);
    EXPECT_NEAR(loaded[0].image[0], 200.0 / 255, 1e-12);
}
