#include "selfloop/plot.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <map>

namespace selfloop {

namespace {

// 5 rows of 3 columns, '#' is ink.
const std::map<char, const char*>& glyphs() {
    static const std::map<char, const char*> g = {
        {'0', "####.##.##.####"}, {'1', ".#.##..#..#.###"}, {'2', "###..#####..###"}, {'3', "###..####..####"}, {'4', "#.##.####..#..#"},
        {'5', "####..###..####"}, {'6', "####..####.####"}, {'7', "###..#..#..#..#"},
        {'8', "####.#####.####"}, {'9', "####.####..####"}, {'A', ".#.#.####.##.##"},
        {'B', "##.#.###.#.###."}, {'C', ".###..#..#...##"}, {'D', "##.#.##.##.###."},
        {'E', "####..##.#..###"}, {'F', "####..##.#..#.."}, {'G', ".###..#.##.#.##"},
        {'H', "#.##.####.##.##"}, {'I', "###.#..#..#.###"}, {'J', "..#..#..##.#.#."},
        {'K', "#.##.###.#.##.#"}, {'L', "#..#..#..#..###"}, {'M', "#.#######.##.##"},
        {'N', "##.#.##.##.##.#"}, {'O', ".#.#.##.##.#.#."}, {'P', "##.#.###.#..#.."},
        {'Q', ".#.#.##.###..##"}, {'R', "##.#.###.#.##.#"}, {'S', ".###...#...###."},
        {'T', "###.#..#..#..#."}, {'U', "#.##.##.##.####"}, {'V', "#.##.##.##.#.#."},
        {'W', "#.##.#######.##"}, {'X', "#.##.#.#.#.##.#"}, {'Y', "#.##.#.#..#..#."},
        {'Z', "###..#.#.#..###"}, {'.', ".............#."}, {'-', "......###......"},
        {'_', "............###"}, {'%', "#.#..#.#.#..#.#"}, {'+', "....#.###.#...."},
        {'/', "..#..#.#.#..#.."}, {':', "....#.....#...."}, {'=', "...###...###..."},
        {'(', ".#.#..#..#...#."}, {')', ".#...#..#..#.#."}, {' ', "..............."},
    };
    return g;
}

constexpr Rgb kBlack{0, 0, 0};
constexpr Rgb kGrid{220, 220, 220};

}  // namespace

Canvas::Canvas(int width, int height, Rgb background) {
    img_.width = width;
    img_.height = height;
    img_.channels = 3;
    img_.pixels.resize(static_cast<std::size_t>(width) * height * 3);
    for (std::size_t i = 0; i < img_.pixels.size(); i += 3)
        std::copy(background.begin(), background.end(), img_.pixels.begin() + static_cast<std::ptrdiff_t>(i));
}

void Canvas::put(int x, int y, Rgb c) {
    if (x < 0 || y < 0 || x >= img_.width || y >= img_.height) return;
    for (int k = 0; k < 3; ++k) img_.at(y, x, k) = c[k];
}

void Canvas::fill_rect(int x0, int y0, int x1, int y1, Rgb color) {
    for (int y = std::min(y0, y1); y < std::max(y0, y1); ++y)
        for (int x = std::min(x0, x1); x < std::max(x0, x1); ++x) put(x, y, color);
}

void Canvas::line(int x0, int y0, int x1, int y1, Rgb color) {
    const int dx = std::abs(x1 - x0), dy = -std::abs(y1 - y0);
    const int sx = x0 < x1 ? 1 : -1, sy = y0 < y1 ? 1 : -1;
    int err = dx + dy;
    while (true) {
        put(x0, y0, color);
        if (x0 == x1 && y0 == y1) break;
        const int e2 = 2 * err;
        if (e2 >= dy) err += dy, x0 += sx;
        if (e2 <= dx) err += dx, y0 += sy;
    }
}

int Canvas::text_width(const std::string& s, int scale) { return static_cast<int>(s.size()) * 4 * scale; }

void Canvas::text(int x, int y, const std::string& s, Rgb color, int scale) {
    const auto& g = glyphs();
    for (char ch : s) {
        auto it = g.find(static_cast<char>(std::toupper(static_cast<unsigned char>(ch))));
        const char* bits = it == g.end() ? g.at('-') : it->second;
        for (int r = 0; r < 5; ++r)
            for (int c = 0; c < 3; ++c)
                if (bits[r * 3 + c] == '#') fill_rect(x + c * scale, y + r * scale, x + (c + 1) * scale, y + (r + 1) * scale, color);
        x += 4 * scale;
    }
}

Rgb series_color(std::size_t i) {
    static constexpr Rgb palette[] = {{31, 119, 180}, {255, 127, 14}, {44, 160, 44},  {214, 39, 40},
                                      {148, 103, 189}, {140, 86, 75}, {227, 119, 194}, {127, 127, 127}};
    return palette[i % std::size(palette)];
}

namespace {

struct Frame {
    int left = 60, top = 40, right, bottom;
    int y_of(double v) const { return bottom - static_cast<int>(std::lround(std::clamp(v, 0.0, 1.0) * (bottom - top))); }
};

Frame draw_axes(Canvas& cv, int width, int height, const std::string& title, int legend_rows) {
    Frame f;
    f.right = width - 20;
    f.bottom = height - 50 - 14 * legend_rows;
    cv.text(f.left, 12, title, kBlack);
    for (int t = 0; t <= 5; ++t) {
        const double v = t / 5.0;
        const int y = f.y_of(v);
        cv.line(f.left, y, f.right, y, kGrid);
        char buf[16];
        std::snprintf(buf, sizeof buf, "%.1f", v);
        cv.text(f.left - Canvas::text_width(buf) - 6, y - 5, buf, kBlack);
    }
    cv.line(f.left, f.top, f.left, f.bottom, kBlack);
    cv.line(f.left, f.bottom, f.right, f.bottom, kBlack);
    return f;
}

void draw_legend(Canvas& cv, int x, int y, const std::vector<std::string>& series) {
    for (std::size_t s = 0; s < series.size(); ++s) {
        const int row_y = y + static_cast<int>(s) * 14;
        cv.fill_rect(x, row_y, x + 10, row_y + 10, series_color(s));
        cv.text(x + 16, row_y, series[s], kBlack);
    }
}

}  // namespace

void bar_chart(const std::filesystem::path& path, const std::string& title, const std::vector<std::string>& groups,
               const std::vector<std::string>& series, const std::vector<std::vector<double>>& values,
               const std::vector<std::vector<double>>& errors) {
    const int width = 720, height = 420 + 14 * static_cast<int>(series.size());
    Canvas cv(width, height);
    const Frame f = draw_axes(cv, width, height, title, static_cast<int>(series.size()));
    const int group_w = (f.right - f.left) / std::max<int>(1, static_cast<int>(groups.size()));
    const int bar_w = std::max(2, (group_w - 20) / std::max<int>(1, static_cast<int>(series.size())));
    for (std::size_t g = 0; g < groups.size(); ++g) {
        const int gx = f.left + static_cast<int>(g) * group_w + 10;
        for (std::size_t s = 0; s < series.size(); ++s) {
            const double v = values[s][g];
            if (std::isnan(v)) continue;
            const int x0 = gx + static_cast<int>(s) * bar_w;
            cv.fill_rect(x0 + 1, f.y_of(v), x0 + bar_w - 1, f.bottom, series_color(s));
            if (!errors.empty() && !std::isnan(errors[s][g])) {
                const int xm = x0 + bar_w / 2;
                const int ylo = f.y_of(v - errors[s][g]), yhi = f.y_of(v + errors[s][g]);
                cv.line(xm, ylo, xm, yhi, kBlack);
                cv.line(xm - 2, ylo, xm + 2, ylo, kBlack);
                cv.line(xm - 2, yhi, xm + 2, yhi, kBlack);
            }
        }
        cv.text(gx + (group_w - 20 - Canvas::text_width(groups[g])) / 2, f.bottom + 8, groups[g], kBlack);
    }
    draw_legend(cv, f.left, f.bottom + 30, series);
    cv.save(path);
}

void line_chart(const std::filesystem::path& path, const std::string& title, const std::vector<std::string>& series,
                const std::vector<std::vector<double>>& ys) {
    const int width = 720, height = 420 + 14 * static_cast<int>(series.size());
    Canvas cv(width, height);
    const Frame f = draw_axes(cv, width, height, title, static_cast<int>(series.size()));
    std::size_t n = 0;
    for (const auto& y : ys) n = std::max(n, y.size());
    auto x_of = [&](std::size_t i) {
        return n <= 1 ? f.left : f.left + static_cast<int>(std::lround(double(i) * (f.right - f.left) / double(n - 1)));
    };
    for (std::size_t s = 0; s < ys.size(); ++s) {
        for (std::size_t i = 1; i < ys[s].size(); ++i) {
            if (std::isnan(ys[s][i - 1]) || std::isnan(ys[s][i])) continue;
            cv.line(x_of(i - 1), f.y_of(ys[s][i - 1]), x_of(i), f.y_of(ys[s][i]), series_color(s));
        }
    }
    cv.text(f.left, f.bottom + 8, "1", kBlack);
    const std::string last = std::to_string(n);
    cv.text(f.right - Canvas::text_width(last), f.bottom + 8, last, kBlack);
    draw_legend(cv, f.left, f.bottom + 30, series);
    cv.save(path);
}

}  // namespace selfloop
