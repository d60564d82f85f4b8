#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "selfloop/image_io.hpp"

namespace selfloop {

using Rgb = std::array<std::uint8_t, 3>;

/// RGB drawing surface with a built-in 3x5 glyph font (upper case, digits,
/// a little punctuation; lower case is drawn as upper case).
class Canvas {
public:
    Canvas(int width, int height, Rgb background = {255, 255, 255});

    void fill_rect(int x0, int y0, int x1, int y1, Rgb color);  // inclusive-exclusive
    void line(int x0, int y0, int x1, int y1, Rgb color);
    void text(int x, int y, const std::string& s, Rgb color, int scale = 2);
    static int text_width(const std::string& s, int scale = 2);

    const Image8& image() const noexcept { return img_; }
    void save(const std::filesystem::path& path) const { write_png(path, img_); }

private:
    void put(int x, int y, Rgb c);
    Image8 img_;
};

/// Palette entry i (cycles).
Rgb series_color(std::size_t i);

/// Grouped bars in [0, 1]; values[series][group], NaN leaves a gap.
/// `errors` may be empty or shaped like `values`.
void bar_chart(const std::filesystem::path& path, const std::string& title, const std::vector<std::string>& groups,
               const std::vector<std::string>& series, const std::vector<std::vector<double>>& values,
               const std::vector<std::vector<double>>& errors);

/// One polyline per series over x = 1..n, y clipped to [0, 1].
void line_chart(const std::filesystem::path& path, const std::string& title, const std::vector<std::string>& series,
                const std::vector<std::vector<double>>& ys);

}  // namespace selfloop
