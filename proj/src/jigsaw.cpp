#include "selfloop/jigsaw.hpp"

#include <random>
#include <stdexcept>

#include "selfloop/rng.hpp"

namespace selfloop {

JigsawTransform::JigsawTransform(Permutation perm, std::vector<int> rots, int index)
    : permutation(std::move(perm)), rotations(std::move(rots)), perm_index(index) {
    if (static_cast<int>(rotations.size()) != permutation.size())
        throw std::invalid_argument("JigsawTransform: rotations length must equal grid_side^2");
    for (int r : rotations)
        if (r < 0 || r > 3) throw std::invalid_argument("JigsawTransform: rotation outside {0,1,2,3}");
}

JigsawTransform JigsawTransform::identity(int grid_side) {
    auto perm = Permutation::identity(grid_side);
    std::vector<int> rots(static_cast<std::size_t>(perm.size()), 0);
    return JigsawTransform(std::move(perm), std::move(rots));
}

bool JigsawTransform::is_identity() const noexcept {
    for (int r : rotations)
        if (r != 0) return false;
    return permutation.is_identity();
}

std::string JigsawTransform::to_log_string() const {
    std::string s = std::to_string(perm_index) + ":";
    for (int r : rotations) s += static_cast<char>('0' + r);
    return s;
}

JigsawTransform random_transform(const PermutationSet& set, int perm_index, std::uint64_t seed,
                                 bool zero_rotations) {
    if (perm_index < 0 || perm_index >= set.size())
        throw std::invalid_argument("random_transform: perm_index " + std::to_string(perm_index) +
                                    " out of range");
    const Permutation& perm = set[perm_index];
    std::vector<int> rots(static_cast<std::size_t>(perm.size()), 0);
    if (!zero_rotations) {
        Rng rng(derive_seed(seed, stream::kRotation));
        std::uniform_int_distribution<int> quarter(0, 3);
        for (auto& r : rots) r = quarter(rng);
    }
    return JigsawTransform(perm, std::move(rots), perm_index);
}

namespace {

struct TileGeometry {
    int grid;
    int th;
    int tw;
};

TileGeometry check_geometry(const JigsawTransform& t, const RasterMap& x) {
    const int g = t.grid_side();
    if (x.empty()) throw std::invalid_argument("jigsaw: empty map");
    if (x.height() % g != 0 || x.width() % g != 0)
        throw std::invalid_argument("jigsaw: map " + std::to_string(x.height()) + "x" +
                                    std::to_string(x.width()) + " not divisible by grid " +
                                    std::to_string(g));
    TileGeometry geo{g, x.height() / g, x.width() / g};
    if (geo.th != geo.tw) {
        for (int r : t.rotations)
            if (r % 2 != 0)
                throw std::invalid_argument("jigsaw: odd rotations need square tiles");
    }
    return geo;
}

// Copy tile `src_tile` of `in` into tile `dst_tile` of `out`, rotated
// counter-clockwise by `quarters`.
void place_tile(const RasterMap& in, int src_tile, RasterMap& out, int dst_tile, int quarters,
                const TileGeometry& geo) {
    const int sy0 = (src_tile / geo.grid) * geo.th;
    const int sx0 = (src_tile % geo.grid) * geo.tw;
    const int dy0 = (dst_tile / geo.grid) * geo.th;
    const int dx0 = (dst_tile % geo.grid) * geo.tw;
    const int s = geo.th;  // square whenever quarters is odd
    for (int c = 0; c < in.channels(); ++c) {
        for (int y = 0; y < geo.th; ++y) {
            for (int x = 0; x < geo.tw; ++x) {
                int iy = y, ix = x;
                switch (quarters) {
                    case 1: iy = x; ix = s - 1 - y; break;
                    case 2: iy = geo.th - 1 - y; ix = geo.tw - 1 - x; break;
                    case 3: iy = s - 1 - x; ix = y; break;
                    default: break;
                }
                out.at(c, dy0 + y, dx0 + x) = in.at(c, sy0 + iy, sx0 + ix);
            }
        }
    }
}

}  // namespace

RasterMap apply(const JigsawTransform& t, const RasterMap& x) {
    const auto geo = check_geometry(t, x);
    RasterMap out(x.channels(), x.height(), x.width());
    for (int d = 0; d < t.permutation.size(); ++d)
        place_tile(x, t.permutation[d], out, d, t.rotations[static_cast<std::size_t>(d)], geo);
    return out;
}

RasterMap invert(const JigsawTransform& t, const RasterMap& s) {
    const auto geo = check_geometry(t, s);
    RasterMap out(s.channels(), s.height(), s.width());
    for (int d = 0; d < t.permutation.size(); ++d) {
        const int undo = (4 - t.rotations[static_cast<std::size_t>(d)]) % 4;
        place_tile(s, d, out, t.permutation[d], undo, geo);
    }
    return out;
}

}  // namespace selfloop
