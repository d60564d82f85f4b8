#pragma once

#include <cstdint>
#include <filesystem>
#include <vector>

#include "selfloop/mask.hpp"
#include "selfloop/raster.hpp"

namespace selfloop {

/// 8-bit interleaved image as stored in PNG files.
struct Image8 {
    int width = 0;
    int height = 0;
    int channels = 0;  // 1 (gray), 3 (RGB) or 4 (RGBA)
    std::vector<std::uint8_t> pixels;

    std::uint8_t& at(int y, int x, int c) {
        return pixels[(static_cast<std::size_t>(y) * width + x) * channels + c];
    }
    std::uint8_t at(int y, int x, int c) const {
        return pixels[(static_cast<std::size_t>(y) * width + x) * channels + c];
    }
};

/// Throws IoError naming the file on failure. 16-bit and palette images are
/// converted to 8-bit gray/RGB(A).
Image8 read_png(const std::filesystem::path& path);
void write_png(const std::filesystem::path& path, const Image8& img);

/// Values scaled from [0,1] by 255 with rounding and clamping.
Image8 to_image8(const RasterMap& m);
Image8 to_image8(const BinaryMask& m);  // 0 / 255
/// Scales to [0,1]; gray images are replicated to `channels` channels,
/// alpha is dropped.
RasterMap to_raster(const Image8& img, int channels);
/// Foreground where the first channel is >= 128.
BinaryMask to_mask(const Image8& img);

/// Center-crop to the target aspect ratio, then resample to height x width.
/// Bilinear for images, nearest neighbour for masks.
Image8 crop_resize(const Image8& img, int height, int width, bool nearest);

}  // namespace selfloop
