#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "selfloop/permutation_pool.hpp"
#include "selfloop/raster.hpp"

namespace selfloop {

/// Tile permutation plus one counter-clockwise quarter-turn count per
/// destination tile. The rotation is applied after placement, so invert()
/// un-rotates first and then un-permutes.
struct JigsawTransform {
    Permutation permutation;
    std::vector<int> rotations;
    int perm_index = -1;  // index into the originating PermutationSet, -1 if none

    JigsawTransform(Permutation perm, std::vector<int> rotations, int perm_index = -1);

    static JigsawTransform identity(int grid_side);

    int grid_side() const noexcept { return permutation.grid_side(); }
    bool is_identity() const noexcept;

    /// "perm_index:r0r1r2..." for training logs.
    std::string to_log_string() const;
};

/// Transform using set[perm_index] and seeded uniform rotations. When
/// zero_rotations is set every rotation is 0.
JigsawTransform random_transform(const PermutationSet& set, int perm_index, std::uint64_t seed,
                                 bool zero_rotations = false);

/// Destination tile d receives source tile permutation[d] rotated by
/// rotations[d] quarter-turns. Requires H and W divisible by the grid side
/// (and square tiles when any rotation is odd).
RasterMap apply(const JigsawTransform& t, const RasterMap& x);

/// Exact two-sided inverse of apply().
RasterMap invert(const JigsawTransform& t, const RasterMap& s);

}  // namespace selfloop
