#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <span>
#include <vector>

namespace selfloop {

/// A bijection on the G*G tile indices of a jigsaw grid. mapping()[d] is the
/// source tile placed at destination position d.
class Permutation {
public:
    /// Throws std::invalid_argument unless mapping is a bijection on
    /// {0, ..., grid_side^2 - 1} and grid_side >= 2.
    Permutation(std::vector<int> mapping, int grid_side);

    static Permutation identity(int grid_side);

    int grid_side() const noexcept { return grid_side_; }
    int size() const noexcept { return static_cast<int>(mapping_.size()); }
    std::span<const int> mapping() const noexcept { return mapping_; }
    int operator[](int d) const { return mapping_[static_cast<std::size_t>(d)]; }

    bool is_identity() const noexcept;

    friend bool operator==(const Permutation&, const Permutation&) = default;
    friend auto operator<=>(const Permutation&, const Permutation&) = default;

private:
    std::vector<int> mapping_;
    int grid_side_;
};

/// The K-element class vocabulary of the jigsaw pretext task.
struct PermutationSet {
    std::vector<Permutation> permutations;
    int grid_side = 0;
    std::uint64_t seed = 0;
    int min_pairwise_distance = 0;

    int size() const noexcept { return static_cast<int>(permutations.size()); }
    const Permutation& operator[](int i) const { return permutations.at(static_cast<std::size_t>(i)); }
};

/// Number of positions at which p and q differ.
int hamming_distance(const Permutation& p, const Permutation& q);

/// Minimum Hamming distance over all unordered pairs (requires >= 2 items).
int min_pairwise_distance(std::span<const Permutation> perms);

/// All (G^2)! permutations in lexicographic order when that count does not
/// exceed max_candidates; otherwise max_candidates distinct permutations
/// drawn uniformly without replacement.
std::vector<Permutation> enumerate_candidates(int grid_side, std::int64_t max_candidates,
                                              std::uint64_t seed);

/// Greedy max-min Hamming selection. The first element is a seeded uniform
/// draw; each following element maximizes its minimum distance to the
/// already selected ones, ties going to the lowest candidate index.
PermutationSet select_max_hamming_subset(std::span<const Permutation> candidates, int k,
                                         std::uint64_t seed);

/// Convenience: enumerate_candidates followed by select_max_hamming_subset.
PermutationSet build_permutation_set(int grid_side, int k, std::int64_t max_candidates,
                                     std::uint64_t seed);

/// q distinct indices into the set, uniform without replacement. For a
/// fixed seed the result for a smaller q is a prefix of the result for a
/// larger q.
std::vector<int> sample_iteration_permutations(const PermutationSet& set, int q,
                                               std::uint64_t seed);

void write_permutation_set(std::ostream& out, const PermutationSet& set);
PermutationSet read_permutation_set(std::istream& in);
void save_permutation_set(const std::filesystem::path& path, const PermutationSet& set);
PermutationSet load_permutation_set(const std::filesystem::path& path);

}  // namespace selfloop
