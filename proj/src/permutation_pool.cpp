#include "selfloop/permutation_pool.hpp"

#include <algorithm>
#include <cstdio>
#include <fstream>
#include <istream>
#include <limits>
#include <numeric>
#include <ostream>
#include <set>
#include <sstream>
#include <stdexcept>
#include <string>

#include "selfloop/errors.hpp"
#include "selfloop/rng.hpp"

namespace selfloop {

Permutation::Permutation(std::vector<int> mapping, int grid_side)
    : mapping_(std::move(mapping)), grid_side_(grid_side) {
    if (grid_side_ < 2) throw std::invalid_argument("permutation grid_side must be >= 2");
    const auto n = static_cast<std::size_t>(grid_side_) * static_cast<std::size_t>(grid_side_);
    if (mapping_.size() != n) {
        throw std::invalid_argument("permutation length " + std::to_string(mapping_.size()) +
                                    " does not match grid_side^2 = " + std::to_string(n));
    }
    std::vector<bool> seen(n, false);
    for (int v : mapping_) {
        if (v < 0 || static_cast<std::size_t>(v) >= n || seen[static_cast<std::size_t>(v)]) {
            throw std::invalid_argument("permutation mapping is not a bijection");
        }
        seen[static_cast<std::size_t>(v)] = true;
    }
}

Permutation Permutation::identity(int grid_side) {
    std::vector<int> m(static_cast<std::size_t>(std::max(grid_side, 0) * std::max(grid_side, 0)));
    std::iota(m.begin(), m.end(), 0);
    return Permutation(std::move(m), grid_side);
}

bool Permutation::is_identity() const noexcept {
    for (std::size_t i = 0; i < mapping_.size(); ++i)
        if (mapping_[i] != static_cast<int>(i)) return false;
    return true;
}

int hamming_distance(const Permutation& p, const Permutation& q) {
    if (p.grid_side() != q.grid_side())
        throw std::invalid_argument("hamming_distance: mismatched grid_side");
    int d = 0;
    for (int i = 0; i < p.size(); ++i) d += p[i] != q[i];
    return d;
}

int min_pairwise_distance(std::span<const Permutation> perms) {
    if (perms.size() < 2) throw std::invalid_argument("min_pairwise_distance needs >= 2 permutations");
    int best = std::numeric_limits<int>::max();
    for (std::size_t a = 0; a < perms.size(); ++a)
        for (std::size_t b = a + 1; b < perms.size(); ++b)
            best = std::min(best, hamming_distance(perms[a], perms[b]));
    return best;
}

namespace {

// n! saturating at limit + 1
std::int64_t factorial_capped(int n, std::int64_t limit) {
    std::int64_t f = 1;
    for (int i = 2; i <= n; ++i) {
        if (f > limit / i) return limit + 1;
        f *= i;
    }
    return f;
}

}  // namespace

std::vector<Permutation> enumerate_candidates(int grid_side, std::int64_t max_candidates,
                                              std::uint64_t seed) {
    if (grid_side < 2) throw std::invalid_argument("enumerate_candidates: grid_side must be >= 2");
    if (max_candidates < 1) throw std::invalid_argument("enumerate_candidates: max_candidates must be >= 1");
    const int n = grid_side * grid_side;
    std::vector<int> m(static_cast<std::size_t>(n));
    std::iota(m.begin(), m.end(), 0);

    std::vector<Permutation> out;
    if (factorial_capped(n, max_candidates) <= max_candidates) {
        do {
            out.emplace_back(m, grid_side);
        } while (std::next_permutation(m.begin(), m.end()));
        return out;
    }

    Rng rng(derive_seed(seed, stream::kCandidates));
    std::set<std::vector<int>> seen;
    out.reserve(static_cast<std::size_t>(max_candidates));
    while (static_cast<std::int64_t>(out.size()) < max_candidates) {
        std::shuffle(m.begin(), m.end(), rng);
        if (seen.insert(m).second) out.emplace_back(m, grid_side);
    }
    return out;
}

PermutationSet select_max_hamming_subset(std::span<const Permutation> candidates, int k,
                                         std::uint64_t seed) {
    if (k < 2) throw std::invalid_argument("select_max_hamming_subset: k must be >= 2");
    if (candidates.empty()) throw std::invalid_argument("select_max_hamming_subset: no candidates");
    const int grid = candidates.front().grid_side();
    for (const auto& c : candidates)
        if (c.grid_side() != grid)
            throw std::invalid_argument("select_max_hamming_subset: mixed grid sides");
    {
        std::set<Permutation> distinct(candidates.begin(), candidates.end());
        if (static_cast<std::size_t>(k) > distinct.size())
            throw std::invalid_argument("select_max_hamming_subset: k=" + std::to_string(k) +
                                        " exceeds distinct candidate count " +
                                        std::to_string(distinct.size()));
    }

    Rng rng(derive_seed(seed, stream::kPermutationSelect));
    std::uniform_int_distribution<std::size_t> pick(0, candidates.size() - 1);
    std::size_t chosen = pick(rng);

    PermutationSet set;
    set.grid_side = grid;
    set.seed = seed;
    set.permutations.reserve(static_cast<std::size_t>(k));
    set.permutations.push_back(candidates[chosen]);

    // min distance from every candidate to the selected set
    std::vector<int> to_set(candidates.size());
    for (std::size_t i = 0; i < candidates.size(); ++i)
        to_set[i] = hamming_distance(candidates[i], candidates[chosen]);

    int overall_min = std::numeric_limits<int>::max();
    while (set.size() < k) {
        std::size_t best = candidates.size();
        int best_d = 0;
        for (std::size_t i = 0; i < candidates.size(); ++i) {
            if (to_set[i] > best_d) {
                best_d = to_set[i];
                best = i;
            }
        }
        // distinct-count check above guarantees a positive distance remains
        overall_min = std::min(overall_min, best_d);
        set.permutations.push_back(candidates[best]);
        for (std::size_t i = 0; i < candidates.size(); ++i)
            to_set[i] = std::min(to_set[i], hamming_distance(candidates[i], candidates[best]));
    }
    set.min_pairwise_distance = overall_min;
    return set;
}

PermutationSet build_permutation_set(int grid_side, int k, std::int64_t max_candidates,
                                     std::uint64_t seed) {
    const auto candidates = enumerate_candidates(grid_side, max_candidates, seed);
    return select_max_hamming_subset(candidates, k, seed);
}

std::vector<int> sample_iteration_permutations(const PermutationSet& set, int q,
                                               std::uint64_t seed) {
    if (q < 2 || q > set.size())
        throw std::invalid_argument("sample_iteration_permutations: q=" + std::to_string(q) +
                                    " outside [2, " + std::to_string(set.size()) + "]");
    std::vector<int> idx(static_cast<std::size_t>(set.size()));
    std::iota(idx.begin(), idx.end(), 0);
    // Partial Fisher-Yates: prefix of length q is a uniform draw without
    // replacement and is stable when q grows.
    Rng rng(derive_seed(seed, stream::kPermutationSample));
    for (int i = 0; i < q; ++i) {
        std::uniform_int_distribution<int> d(i, set.size() - 1);
        std::swap(idx[static_cast<std::size_t>(i)], idx[static_cast<std::size_t>(d(rng))]);
    }
    idx.resize(static_cast<std::size_t>(q));
    return idx;
}

void write_permutation_set(std::ostream& out, const PermutationSet& set) {
    out << "grid=" << set.grid_side << " k=" << set.size() << " seed=" << set.seed
        << " min_dist=" << set.min_pairwise_distance << '\n';
    for (const auto& p : set.permutations) {
        for (int i = 0; i < p.size(); ++i) out << (i ? " " : "") << p[i];
        out << '\n';
    }
}

PermutationSet read_permutation_set(std::istream& in) {
    std::string header;
    if (!std::getline(in, header)) throw IoError("permutation set: missing header");
    PermutationSet set;
    int k = 0;
    unsigned long long seed = 0;
    if (std::sscanf(header.c_str(), "grid=%d k=%d seed=%llu min_dist=%d", &set.grid_side, &k, &seed,
                    &set.min_pairwise_distance) != 4)
        throw IoError("permutation set: malformed header '" + header + "'");
    set.seed = seed;
    std::string line;
    while (static_cast<int>(set.permutations.size()) < k && std::getline(in, line)) {
        std::istringstream ls(line);
        std::vector<int> m;
        for (int v; ls >> v;) m.push_back(v);
        try {
            set.permutations.emplace_back(std::move(m), set.grid_side);
        } catch (const std::invalid_argument& e) {
            throw IoError(std::string("permutation set: ") + e.what());
        }
    }
    if (set.size() != k) throw IoError("permutation set: expected " + std::to_string(k) + " rows");
    if (k >= 2 && min_pairwise_distance(set.permutations) != set.min_pairwise_distance)
        throw IoError("permutation set: stored min_dist does not match contents");
    return set;
}

void save_permutation_set(const std::filesystem::path& path, const PermutationSet& set) {
    std::ofstream out(path);
    if (!out) throw IoError("cannot write " + path.string());
    write_permutation_set(out, set);
    if (!out) throw IoError("write failed: " + path.string());
}

PermutationSet load_permutation_set(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot read " + path.string());
    return read_permutation_set(in);
}

}  // namespace selfloop
