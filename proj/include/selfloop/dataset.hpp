#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "selfloop/mask.hpp"
#include "selfloop/raster.hpp"

namespace selfloop {

struct Sample {
    RasterMap image;
    std::optional<BinaryMask> mask;  // present iff labeled
    std::string id;

    bool labeled() const noexcept { return mask.has_value(); }
};

/// Training view of an unlabeled image: deliberately has no mask.
struct UnlabeledSample {
    RasterMap image;
    std::string id;
};

/// Labeled / unlabeled / test partition. Ground truth of unlabeled samples
/// is kept aside for pseudo-label evaluation only; the training view hands
/// out images through an access-counting accessor.
class SplitDataset {
public:
    std::vector<Sample> labeled;
    std::vector<Sample> test;
    double label_fraction = 0.0;
    std::uint64_t seed = 0;

    void add_unlabeled(Sample s);

    std::size_t unlabeled_count() const noexcept { return unlabeled_.size(); }
    /// Training access; every call is counted.
    const UnlabeledSample& unlabeled(std::size_t i) const;
    std::size_t unlabeled_accesses() const noexcept { return accesses_; }

    /// Evaluation-only access to the withheld masks.
    const std::optional<BinaryMask>& hidden_truth(std::size_t i) const { return hidden_.at(i); }
    /// Evaluation-only iteration that does not bump the access counter.
    const UnlabeledSample& unlabeled_for_evaluation(std::size_t i) const { return unlabeled_.at(i); }

private:
    std::vector<UnlabeledSample> unlabeled_;
    std::vector<std::optional<BinaryMask>> hidden_;
    mutable std::size_t accesses_ = 0;
};

struct Ellipse {
    double cy = 0, cx = 0;   // centre in pixel coordinates (pixel centres at +0.5)
    double ry = 1, rx = 1;   // semi-axes before rotation
    double angle = 0;        // radians
    double contrast = 1;

    /// Normalized squared radius of point (py, px); <= 1 inside.
    double radius2(double py, double px) const;
};

struct SyntheticParams {
    int count = 40;
    int size = 48;
    int channels = 3;
    int blobs_min = 3;
    int blobs_max = 8;
    double radius_min = 3.0;
    double radius_max = 6.5;
    double contrast_min = 0.35;
    double contrast_max = 0.9;
    double texture = 0.12;
    double noise_level = 0.08;
    int size_multiple = 24;  // lcm of grid side and 2^depth
    std::uint64_t seed = 0;

    void validate() const;
};

struct SyntheticSample {
    Sample sample;
    std::vector<Ellipse> blobs;
};

/// Sample `index` of a synthetic dataset; depends only on (params, index).
SyntheticSample generate_synthetic_sample(const SyntheticParams& params, int index);
std::vector<Sample> generate_synthetic_dataset(const SyntheticParams& params);

struct DirectoryLoadOptions {
    int size = 48;
    int channels = 3;
};

/// Reads <root>/images/*.png and, when present, <root>/masks/<same name>.
/// Non-PNG entries are skipped with a warning on stderr.
std::vector<Sample> load_directory_dataset(const std::filesystem::path& root,
                                           const DirectoryLoadOptions& opts = {});

/// Writes the samples in the directory layout (masks only for labeled ones).
void save_directory_dataset(const std::filesystem::path& root, std::span<const Sample> samples);

/// Seeded shuffle; floor(n * test_fraction) to test (at least 1 when the
/// fraction is positive), then floor(rest * label_fraction) (at least 1) to
/// the labeled set, remaining samples unlabeled. Samples without a mask can
/// only become unlabeled.
SplitDataset split_labeled_unlabeled(std::vector<Sample> data, double label_fraction, double test_fraction,
                                     std::uint64_t seed);

}  // namespace selfloop
