#include "selfloop/image_io.hpp"

#include <png.h>

#include <algorithm>
#include <cmath>
#include <csetjmp>
#include <cstdio>
#include <memory>

#include "selfloop/errors.hpp"

namespace selfloop {

namespace {

struct FileCloser {
    void operator()(std::FILE* f) const { std::fclose(f); }
};
using FilePtr = std::unique_ptr<std::FILE, FileCloser>;

}  // namespace

Image8 read_png(const std::filesystem::path& path) {
    FilePtr fp(std::fopen(path.c_str(), "rb"));
    if (!fp) throw IoError("cannot open " + path.string());
    unsigned char sig[8];
    if (std::fread(sig, 1, 8, fp.get()) != 8 || png_sig_cmp(sig, 0, 8) != 0)
        throw IoError("not a PNG file: " + path.string());

    png_structp png = png_create_read_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
    if (!png) throw IoError("libpng init failed for " + path.string());
    png_infop info = png_create_info_struct(png);
    if (!info) {
        png_destroy_read_struct(&png, nullptr, nullptr);
        throw IoError("libpng init failed for " + path.string());
    }
    Image8 img;
    std::vector<png_bytep> rows;
    if (setjmp(png_jmpbuf(png))) {
        png_destroy_read_struct(&png, &info, nullptr);
        throw IoError("corrupt PNG: " + path.string());
    }
    png_init_io(png, fp.get());
    png_set_sig_bytes(png, 8);
    png_read_info(png, info);

    const auto color = png_get_color_type(png, info);
    const auto depth = png_get_bit_depth(png, info);
    if (depth == 16) png_set_strip_16(png);
    if (color == PNG_COLOR_TYPE_PALETTE) png_set_palette_to_rgb(png);
    if (color == PNG_COLOR_TYPE_GRAY && depth < 8) png_set_expand_gray_1_2_4_to_8(png);
    if (png_get_valid(png, info, PNG_INFO_tRNS)) png_set_tRNS_to_alpha(png);
    if (color == PNG_COLOR_TYPE_GRAY_ALPHA) png_set_strip_alpha(png);
    png_read_update_info(png, info);

    img.width = static_cast<int>(png_get_image_width(png, info));
    img.height = static_cast<int>(png_get_image_height(png, info));
    img.channels = png_get_channels(png, info);
    img.pixels.resize(static_cast<std::size_t>(img.width) * img.height * img.channels);
    rows.resize(static_cast<std::size_t>(img.height));
    for (int y = 0; y < img.height; ++y)
        rows[static_cast<std::size_t>(y)] = img.pixels.data() + static_cast<std::size_t>(y) * img.width * img.channels;
    png_read_image(png, rows.data());
    png_read_end(png, nullptr);
    png_destroy_read_struct(&png, &info, nullptr);
    if (img.channels == 2) throw IoError("unsupported PNG layout: " + path.string());
    return img;
}

namespace {

int png_color_type(const Image8& img, const std::filesystem::path& path) {
    switch (img.channels) {
        case 1: return PNG_COLOR_TYPE_GRAY;
        case 3: return PNG_COLOR_TYPE_RGB;
        case 4: return PNG_COLOR_TYPE_RGBA;
        default: throw IoError("write_png: unsupported channel count for " + path.string());
    }
}

}  // namespace

void write_png(const std::filesystem::path& path, const Image8& img) {
    const int color = png_color_type(img, path);
    FilePtr fp(std::fopen(path.c_str(), "wb"));
    if (!fp) throw IoError("cannot write " + path.string());
    png_structp png = png_create_write_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
    if (!png) throw IoError("libpng init failed for " + path.string());
    png_infop info = png_create_info_struct(png);
    if (!info) {
        png_destroy_write_struct(&png, nullptr);
        throw IoError("libpng init failed for " + path.string());
    }
    if (setjmp(png_jmpbuf(png))) {
        png_destroy_write_struct(&png, &info);
        throw IoError("PNG encode failed: " + path.string());
    }
    png_init_io(png, fp.get());
    png_set_IHDR(png, info, static_cast<png_uint_32>(img.width), static_cast<png_uint_32>(img.height), 8, color,
                 PNG_INTERLACE_NONE, PNG_COMPRESSION_TYPE_DEFAULT, PNG_FILTER_TYPE_DEFAULT);
    png_write_info(png, info);
    for (int y = 0; y < img.height; ++y)
        png_write_row(png, img.pixels.data() + static_cast<std::size_t>(y) * img.width * img.channels);
    png_write_end(png, nullptr);
    png_destroy_write_struct(&png, &info);
}

Image8 to_image8(const RasterMap& m) {
    Image8 img{m.width(), m.height(), m.channels(), {}};
    if (img.channels != 1 && img.channels != 3 && img.channels != 4)
        throw std::invalid_argument("to_image8: unsupported channel count");
    img.pixels.resize(static_cast<std::size_t>(img.width) * img.height * img.channels);
    for (int c = 0; c < m.channels(); ++c)
        for (int y = 0; y < m.height(); ++y)
            for (int x = 0; x < m.width(); ++x)
                img.at(y, x, c) = static_cast<std::uint8_t>(std::lround(std::clamp(m.at(c, y, x), 0.0, 1.0) * 255.0));
    return img;
}

Image8 to_image8(const BinaryMask& m) {
    Image8 img{m.width(), m.height(), 1, std::vector<std::uint8_t>(m.size())};
    for (std::size_t i = 0; i < m.size(); ++i) img.pixels[i] = m[i] ? 255 : 0;
    return img;
}

RasterMap to_raster(const Image8& img, int channels) {
    RasterMap m(channels, img.height, img.width);
    const int src_color = img.channels == 4 ? 3 : img.channels;
    for (int c = 0; c < channels; ++c) {
        const int sc = src_color == 1 ? 0 : std::min(c, src_color - 1);
        for (int y = 0; y < img.height; ++y)
            for (int x = 0; x < img.width; ++x) m.at(c, y, x) = img.at(y, x, sc) / 255.0;
    }
    return m;
}

BinaryMask to_mask(const Image8& img) {
    BinaryMask m(img.height, img.width);
    for (int y = 0; y < img.height; ++y)
        for (int x = 0; x < img.width; ++x) m.set(y, x, img.at(y, x, 0) >= 128);
    return m;
}

Image8 crop_resize(const Image8& img, int height, int width, bool nearest) {
    // largest centered window with the target aspect ratio
    double cw = img.width, ch = img.height;
    const double target = static_cast<double>(width) / height;
    if (cw / ch > target) cw = ch * target;
    else ch = cw / target;
    const double x0 = (img.width - cw) / 2.0, y0 = (img.height - ch) / 2.0;
    const double sx = cw / width, sy = ch / height;

    Image8 out{width, height, img.channels, std::vector<std::uint8_t>(static_cast<std::size_t>(width) * height * img.channels)};
    for (int y = 0; y < height; ++y) {
        for (int x = 0; x < width; ++x) {
            const double fy = y0 + (y + 0.5) * sy - 0.5;
            const double fx = x0 + (x + 0.5) * sx - 0.5;
            for (int c = 0; c < img.channels; ++c) {
                if (nearest) {
                    const int iy = std::clamp(static_cast<int>(std::floor(fy + 0.5)), 0, img.height - 1);
                    const int ix = std::clamp(static_cast<int>(std::floor(fx + 0.5)), 0, img.width - 1);
                    out.at(y, x, c) = img.at(iy, ix, c);
                    continue;
                }
                const int iy = static_cast<int>(std::floor(fy)), ix = static_cast<int>(std::floor(fx));
                const double ty = fy - iy, tx = fx - ix;
                auto px = [&](int yy, int xx) {
                    return static_cast<double>(img.at(std::clamp(yy, 0, img.height - 1), std::clamp(xx, 0, img.width - 1), c));
                };
                const double v = (1 - ty) * ((1 - tx) * px(iy, ix) + tx * px(iy, ix + 1)) +
                                 ty * ((1 - tx) * px(iy + 1, ix) + tx * px(iy + 1, ix + 1));
                out.at(y, x, c) = static_cast<std::uint8_t>(std::lround(std::clamp(v, 0.0, 255.0)));
            }
        }
    }
    return out;
}

}  // namespace selfloop
