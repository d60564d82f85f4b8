#include "selfloop/dataset.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <iostream>
#include <numbers>
#include <numeric>
#include <random>
#include <stdexcept>

#include "selfloop/errors.hpp"
#include "selfloop/image_io.hpp"
#include "selfloop/rng.hpp"

namespace selfloop {

namespace fs = std::filesystem;

void SplitDataset::add_unlabeled(Sample s) {
    hidden_.push_back(std::move(s.mask));
    unlabeled_.push_back({std::move(s.image), std::move(s.id)});
}

const UnlabeledSample& SplitDataset::unlabeled(std::size_t i) const {
    ++accesses_;
    return unlabeled_.at(i);
}

double Ellipse::radius2(double py, double px) const {
    const double dy = py - cy, dx = px - cx;
    const double c = std::cos(angle), s = std::sin(angle);
    const double u = (dx * c + dy * s) / rx;
    const double v = (-dx * s + dy * c) / ry;
    return u * u + v * v;
}

void SyntheticParams::validate() const {
    if (count < 1) throw std::invalid_argument("synthetic: count must be >= 1");
    if (size < 1 || size_multiple < 1 || size % size_multiple != 0)
        throw std::invalid_argument("synthetic: size " + std::to_string(size) + " must be a positive multiple of " +
                                    std::to_string(size_multiple));
    if (channels != 1 && channels != 3) throw std::invalid_argument("synthetic: channels must be 1 or 3");
    if (blobs_min < 0 || blobs_max < blobs_min) throw std::invalid_argument("synthetic: bad blob count range");
    if (!(radius_min > 0 && radius_max >= radius_min)) throw std::invalid_argument("synthetic: bad radius range");
    if (!(contrast_min >= 0 && contrast_max >= contrast_min && contrast_max <= 1))
        throw std::invalid_argument("synthetic: bad contrast range");
    if (!(noise_level >= 0) || !(texture >= 0)) throw std::invalid_argument("synthetic: negative noise/texture");
}

SyntheticSample generate_synthetic_sample(const SyntheticParams& p, int index) {
    p.validate();
    Rng rng(derive_seed(p.seed, stream::kSynthetic, static_cast<std::uint64_t>(index)));
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    auto uniform = [&](double lo, double hi) { return lo + (hi - lo) * unit(rng); };
    const int n = p.size;

    SyntheticSample out;
    const int blobs = std::uniform_int_distribution<int>(p.blobs_min, p.blobs_max)(rng);
    for (int b = 0; b < blobs; ++b) {
        Ellipse e;
        e.ry = uniform(p.radius_min, p.radius_max);
        e.rx = uniform(p.radius_min, p.radius_max);
        e.angle = uniform(0.0, std::numbers::pi);
        const double margin = std::max(e.rx, e.ry);
        e.cy = uniform(margin, n - margin);
        e.cx = uniform(margin, n - margin);
        e.contrast = uniform(p.contrast_min, p.contrast_max);
        out.blobs.push_back(e);
    }

    // stain-like palette: pink background, purple nuclei
    const double bg[3] = {0.88 + uniform(-0.05, 0.05), 0.62 + uniform(-0.05, 0.05), 0.78 + uniform(-0.05, 0.05)};
    const double fg[3] = {0.38, 0.20, 0.55};

    struct Wave {
        double fy, fx, phase, amp;
    };
    std::vector<Wave> waves;
    for (int k = 0; k < 4; ++k)
        waves.push_back({uniform(0.05, 0.45), uniform(0.05, 0.45), uniform(0, 2 * std::numbers::pi),
                         p.texture * uniform(0.3, 1.0)});

    RasterMap img(p.channels, n, n);
    BinaryMask mask(n, n);
    std::normal_distribution<double> noise(0.0, 1.0);
    for (int y = 0; y < n; ++y) {
        for (int x = 0; x < n; ++x) {
            const double py = y + 0.5, px = x + 0.5;
            double tex = 0.0;
            for (const auto& w : waves) tex += w.amp * std::sin(w.fy * py + w.fx * px + w.phase);
            double alpha = 0.0;
            for (const auto& e : out.blobs) {
                const double r2 = e.radius2(py, px);
                if (r2 <= 1.0) {
                    mask.set(y, x, true);
                    // darkest in the centre, still distinct at the rim
                    alpha = std::max(alpha, e.contrast * (0.55 + 0.45 * (1.0 - r2)));
                }
            }
            for (int c = 0; c < p.channels; ++c) {
                const double base = p.channels == 1 ? 0.8 : bg[c];
                const double ink = p.channels == 1 ? 0.3 : fg[c];
                double v = (1.0 - alpha) * (base + tex) + alpha * ink;
                if (p.noise_level > 0) v += p.noise_level * noise(rng);
                img.at(c, y, x) = std::clamp(v, 0.0, 1.0);
            }
        }
    }
    out.sample = Sample{std::move(img), std::move(mask), "syn_" + std::to_string(p.seed) + "_" + std::to_string(index)};
    return out;
}

std::vector<Sample> generate_synthetic_dataset(const SyntheticParams& params) {
    params.validate();
    std::vector<Sample> out;
    out.reserve(static_cast<std::size_t>(params.count));
    for (int i = 0; i < params.count; ++i) out.push_back(generate_synthetic_sample(params, i).sample);
    return out;
}

std::vector<Sample> load_directory_dataset(const fs::path& root, const DirectoryLoadOptions& opts) {
    const fs::path images = root / "images", masks = root / "masks";
    if (!fs::is_directory(images)) throw IoError("missing directory " + images.string());
    const bool have_masks = fs::is_directory(masks);

    std::vector<fs::path> files;
    for (const auto& entry : fs::directory_iterator(images))
        if (entry.is_regular_file()) files.push_back(entry.path());
    std::sort(files.begin(), files.end());

    std::vector<Sample> out;
    for (const auto& file : files) {
        auto ext = file.extension().string();
        std::transform(ext.begin(), ext.end(), ext.begin(), [](unsigned char ch) { return std::tolower(ch); });
        if (ext != ".png") {
            std::cerr << "warning: skipping non-image file " << file.string() << "\n";
            continue;
        }
        Image8 raw;
        try {
            raw = read_png(file);
        } catch (const IoError& e) {
            std::cerr << "warning: skipping unreadable image " << file.string() << " (" << e.what() << ")\n";
            continue;
        }
        Sample s;
        s.id = file.stem().string();
        s.image = to_raster(crop_resize(raw, opts.size, opts.size, false), opts.channels);
        const fs::path mask_file = masks / file.filename();
        if (have_masks && fs::exists(mask_file)) {
            const Image8 m = read_png(mask_file);
            if (m.width != raw.width || m.height != raw.height)
                throw IoError("mask shape does not match image: " + mask_file.string());
            s.mask = to_mask(crop_resize(m, opts.size, opts.size, true));
        }
        out.push_back(std::move(s));
    }
    return out;
}

void save_directory_dataset(const fs::path& root, std::span<const Sample> samples) {
    std::error_code ec;
    fs::create_directories(root / "images", ec);
    if (ec) throw IoError("cannot create " + (root / "images").string() + ": " + ec.message());
    bool any_mask = std::any_of(samples.begin(), samples.end(), [](const Sample& s) { return s.labeled(); });
    if (any_mask) {
        fs::create_directories(root / "masks", ec);
        if (ec) throw IoError("cannot create " + (root / "masks").string() + ": " + ec.message());
    }
    for (const auto& s : samples) {
        write_png(root / "images" / (s.id + ".png"), to_image8(s.image));
        if (s.mask) write_png(root / "masks" / (s.id + ".png"), to_image8(*s.mask));
    }
}

SplitDataset split_labeled_unlabeled(std::vector<Sample> data, double label_fraction, double test_fraction,
                                     std::uint64_t seed) {
    if (!(label_fraction > 0.0 && label_fraction <= 1.0))
        throw std::invalid_argument("split: label_fraction must lie in (0, 1]");
    if (!(test_fraction >= 0.0 && test_fraction < 1.0))
        throw std::invalid_argument("split: test_fraction must lie in [0, 1)");

    std::vector<Sample> with_mask, without_mask;
    for (auto& s : data) (s.labeled() ? with_mask : without_mask).push_back(std::move(s));

    Rng rng(derive_seed(seed, stream::kSplit));
    std::shuffle(with_mask.begin(), with_mask.end(), rng);

    constexpr double kSlack = 1e-9;  // 30 * 0.2 must floor to 6
    const auto n = with_mask.size();
    std::size_t n_test = 0;
    if (test_fraction > 0.0)
        n_test = std::max<std::size_t>(1, static_cast<std::size_t>(std::floor(n * test_fraction + kSlack)));
    if (n_test >= n) throw std::invalid_argument("split: no labeled-capable samples left after test split");
    const std::size_t rest = n - n_test;
    const std::size_t n_lab =
        std::max<std::size_t>(1, static_cast<std::size_t>(std::floor(rest * label_fraction + kSlack)));

    SplitDataset split;
    split.label_fraction = label_fraction;
    split.seed = seed;
    for (std::size_t i = 0; i < n; ++i) {
        if (i < n_test) split.test.push_back(std::move(with_mask[i]));
        else if (i < n_test + n_lab) split.labeled.push_back(std::move(with_mask[i]));
        else split.add_unlabeled(std::move(with_mask[i]));
    }
    for (auto& s : without_mask) split.add_unlabeled(std::move(s));
    return split;
}

}  // namespace selfloop
