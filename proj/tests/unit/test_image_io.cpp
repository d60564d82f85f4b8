#include <gtest/gtest.h>

#include <fstream>

#include "selfloop/errors.hpp"
#include "selfloop/image_io.hpp"
#include "selfloop/plot.hpp"
#include "test_util.hpp"

using namespace selfloop;

TEST(ImageIo, PngRoundTrip) {
    test_support::TempDir dir("png");
    Image8 img{5, 3, 3, {}};
    for (int i = 0; i < 45; ++i) img.pixels.push_back(static_cast<std::uint8_t>(i * 5));
    write_png(dir.path() / "a.png", img);
    const Image8 back = read_png(dir.path() / "a.png");
    EXPECT_EQ(back.width, 5);
    EXPECT_EQ(back.height, 3);
    EXPECT_EQ(back.channels, 3);
    EXPECT_EQ(back.pixels, img.pixels);
}

TEST(ImageIo, RasterQuantizationAndMasks) {
    const auto m = test_support::random_raster(1, 4, 4, 3);
    const Image8 q = to_image8(m);
    for (std::size_t i = 0; i < m.size(); ++i) EXPECT_LE(std::abs(q.pixels[i] / 255.0 - m[i]), 0.5 / 255 + 1e-12);
    const BinaryMask mask(2, 2, {1, 0, 0, 1});
    const Image8 mi = to_image8(mask);
    EXPECT_EQ(mi.pixels, (std::vector<std::uint8_t>{255, 0, 0, 255}));
    EXPECT_EQ(to_mask(mi), mask);
    const RasterMap gray3 = to_raster(mi, 3);
    EXPECT_EQ(gray3.channels(), 3);
    EXPECT_EQ(gray3.at(2, 1, 1), 1.0);
}

TEST(ImageIo, UnreadableFileIsIoError) {
    test_support::TempDir dir("png_bad");
    {
        std::ofstream out(dir.path() / "x.png");
        out << "garbage";
    }
    EXPECT_THROW(read_png(dir.path() / "x.png"), IoError);
    EXPECT_THROW(read_png(dir.path() / "missing.png"), IoError);
}

TEST(ImageIo, CropResizeCentersAndScales) {
    Image8 img{4, 2, 1, {0, 10, 20, 30, 40, 50, 60, 70}};
    const Image8 out = crop_resize(img, 2, 2, true);
    EXPECT_EQ(out.width, 2);
    EXPECT_EQ(out.height, 2);
    EXPECT_EQ(out.pixels, (std::vector<std::uint8_t>{10, 20, 50, 60}));
}

TEST(Plot, ChartsWritePngs) {
    test_support::TempDir dir("plot");
    bar_chart(dir.path() / "bar.png", "F1", {"20%", "50%"}, {"A", "B"}, {{0.5, 0.7}, {0.6, NAN}}, {{0.1, 0.0}, {0.05, NAN}});
    line_chart(dir.path() / "line.png", "curve", {"A"}, {{0.1, 0.4, 0.6}});
    const Image8 bar = read_png(dir.path() / "bar.png");
    EXPECT_EQ(bar.channels, 3);
    EXPECT_GT(bar.width, 100);
    EXPECT_TRUE(std::filesystem::exists(dir.path() / "line.png"));
}
