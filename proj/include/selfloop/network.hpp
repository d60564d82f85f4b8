#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include "selfloop/raster.hpp"
#include "selfloop/rng.hpp"

namespace selfloop {

struct NetworkConfig {
    int in_channels = 3;
    int base_width = 8;
    int depth = 3;
    int k_classes = 100;
    double dropout_rate = 0.2;
    std::uint64_t seed = 1;

    /// Throws std::invalid_argument on out-of-range fields.
    void validate() const;

    friend bool operator==(const NetworkConfig&, const NetworkConfig&) = default;
};

enum class ParamGroup { Encoder = 0, Decoder = 1, Head = 2 };

const char* to_string(ParamGroup g);

struct ParamRange {
    std::size_t begin = 0;
    std::size_t end = 0;
    std::size_t size() const noexcept { return end - begin; }
};

/// Flat gradient buffer aligned with SegNetwork::parameters().
using Gradient = AlignedDoubles;

/// Everything backward() needs from one forward pass. Opaque to callers
/// apart from the outputs.
struct ForwardTrace {
    RasterMap input;
    std::vector<RasterMap> enc_in;     // conv input per encoder stage (x, then pooled maps)
    std::vector<RasterMap> enc_pre;    // pre-activation per encoder stage
    std::vector<RasterMap> enc_out;    // post-ReLU, post-dropout per encoder stage
    std::vector<RasterMap> enc_drop;   // dropout multipliers, empty when inactive
    std::vector<RasterMap> dec_in;     // concat(upsampled, skip) per decoder stage, index = level
    std::vector<RasterMap> dec_pre;
    std::vector<RasterMap> dec_out;
    RasterMap final_in;                // decoder output after final dropout
    RasterMap final_drop;
    std::vector<double> pooled;        // global average of deepest encoder features
    std::vector<double> logits;        // head output, empty when head skipped
    RasterMap probability;             // sigmoid output, empty when decoder skipped
    bool has_decoder = false;
    bool has_head = false;
};

struct ForwardOptions {
    bool decoder = true;
    bool head = true;
};

/// Small U-shaped encoder-decoder with skip connections, a logistic
/// segmentation output and a K-way permutation head on the deepest encoder
/// features. Parameters live in one flat vector, partitioned into encoder,
/// decoder and head ranges (in that order).
///
/// Single writer: forward passes may share an instance only while nothing
/// updates it, and stochastic-mode forwards advance an internal generator.
class SegNetwork {
public:
    explicit SegNetwork(const NetworkConfig& cfg);

    const NetworkConfig& config() const noexcept { return cfg_; }

    std::span<const double> parameters() const noexcept { return params_; }
    std::span<double> parameters() noexcept { return params_; }
    std::size_t parameter_count() const noexcept { return params_.size(); }

    ParamRange group_range(ParamGroup g) const noexcept;
    std::span<const double> group(ParamGroup g) const noexcept;
    std::span<double> group(ParamGroup g) noexcept;

    /// Dropout active at inference while set. Reseeds the dropout generator.
    void set_stochastic_mode(bool on, std::uint64_t seed = 0);
    bool stochastic_mode() const noexcept { return stochastic_; }
    void set_dropout_rate(double rate);

    /// Throws std::invalid_argument if x is incompatible with the network.
    void check_input(const RasterMap& x) const;

    ForwardTrace forward(const RasterMap& x, ForwardOptions opts = {}) const;

    /// Accumulates into grad the gradient of a scalar loss given dL/dprob
    /// (may be null) and dL/dlogits (may be empty). Without d_prob the
    /// decoder is not visited and its gradient entries stay untouched.
    void backward(const ForwardTrace& trace, const RasterMap* d_prob,
                  std::span<const double> d_logits, Gradient& grad) const;

    Gradient zero_gradient() const { return Gradient(params_.size(), 0.0); }

    /// Per-pixel foreground probability, 1 channel, same spatial shape.
    RasterMap forward_segmentation(const RasterMap& x) const;

    /// K logits from the encoder and head only.
    std::vector<double> forward_permutation_logits(const RasterMap& x) const;

    /// Training seed stored in checkpoints alongside the config.
    std::uint64_t training_seed = 0;

private:
    struct ConvLayer {
        int in = 0;
        int out = 0;
        int kernel = 3;
        std::size_t offset = 0;  // weights (out x in*k*k, row-major) followed by bias
    };

    std::size_t add_conv(int in, int out, int kernel);
    void initialize();
    RasterMap conv_forward(const ConvLayer& L, const RasterMap& x) const;
    RasterMap conv_backward(const ConvLayer& L, const RasterMap& x, const RasterMap& d_out,
                            Gradient& grad, bool need_input_grad) const;
    void apply_dropout(RasterMap& m, RasterMap& mask) const;

    NetworkConfig cfg_;
    std::vector<ConvLayer> enc_;
    std::vector<ConvLayer> dec_;  // index = level (0 .. depth-1)
    ConvLayer final_;
    std::size_t head_offset_ = 0;
    int head_in_ = 0;
    ParamRange ranges_[3];
    AlignedDoubles params_;
    bool stochastic_ = false;
    mutable Rng dropout_rng_;
};

void save_checkpoint(const std::filesystem::path& path, const SegNetwork& net);
SegNetwork load_checkpoint(const std::filesystem::path& path);

}  // namespace selfloop
