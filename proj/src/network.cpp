#include "selfloop/network.hpp"

#include <Eigen/Core>
#include <cmath>
#include <cstdio>
#include <random>
#include <cstring>
#include <fstream>
#include <sstream>
#include <stdexcept>

#include "selfloop/errors.hpp"

namespace selfloop {

namespace {

using Mat = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using MatMap = Eigen::Map<Mat>;
using ConstMatMap = Eigen::Map<const Mat>;

// Rows are (c, ky, kx), columns are output pixels; zero padding k/2.
Mat im2col(const RasterMap& x, int k) {
    const int C = x.channels(), H = x.height(), W = x.width(), pad = k / 2;
    Mat cols(static_cast<Eigen::Index>(C) * k * k, static_cast<Eigen::Index>(H) * W);
    for (int c = 0; c < C; ++c) {
        for (int ky = 0; ky < k; ++ky) {
            for (int kx = 0; kx < k; ++kx) {
                double* row = cols.row((c * k + ky) * k + kx).data();
                for (int y = 0; y < H; ++y) {
                    const int sy = y + ky - pad;
                    double* dst = row + static_cast<std::size_t>(y) * W;
                    if (sy < 0 || sy >= H) {
                        std::fill(dst, dst + W, 0.0);
                        continue;
                    }
                    for (int xx = 0; xx < W; ++xx) {
                        const int sx = xx + kx - pad;
                        dst[xx] = (sx < 0 || sx >= W) ? 0.0 : x.at(c, sy, sx);
                    }
                }
            }
        }
    }
    return cols;
}

void col2im_add(const Mat& cols, int k, RasterMap& dx) {
    const int C = dx.channels(), H = dx.height(), W = dx.width(), pad = k / 2;
    for (int c = 0; c < C; ++c) {
        for (int ky = 0; ky < k; ++ky) {
            for (int kx = 0; kx < k; ++kx) {
                const double* row = cols.row((c * k + ky) * k + kx).data();
                for (int y = 0; y < H; ++y) {
                    const int sy = y + ky - pad;
                    if (sy < 0 || sy >= H) continue;
                    const double* src = row + static_cast<std::size_t>(y) * W;
                    for (int xx = 0; xx < W; ++xx) {
                        const int sx = xx + kx - pad;
                        if (sx >= 0 && sx < W) dx.at(c, sy, sx) += src[xx];
                    }
                }
            }
        }
    }
}

RasterMap avg_pool2(const RasterMap& x) {
    RasterMap out(x.channels(), x.height() / 2, x.width() / 2);
    for (int c = 0; c < x.channels(); ++c)
        for (int y = 0; y < out.height(); ++y)
            for (int xx = 0; xx < out.width(); ++xx)
                out.at(c, y, xx) = 0.25 * (x.at(c, 2 * y, 2 * xx) + x.at(c, 2 * y, 2 * xx + 1) +
                                           x.at(c, 2 * y + 1, 2 * xx) + x.at(c, 2 * y + 1, 2 * xx + 1));
    return out;
}

void avg_pool2_backward_add(const RasterMap& d_out, RasterMap& d_in) {
    for (int c = 0; c < d_out.channels(); ++c)
        for (int y = 0; y < d_out.height(); ++y)
            for (int xx = 0; xx < d_out.width(); ++xx) {
                const double g = 0.25 * d_out.at(c, y, xx);
                d_in.at(c, 2 * y, 2 * xx) += g;
                d_in.at(c, 2 * y, 2 * xx + 1) += g;
                d_in.at(c, 2 * y + 1, 2 * xx) += g;
                d_in.at(c, 2 * y + 1, 2 * xx + 1) += g;
            }
}

// nearest-neighbour 2x upsampling of `low` written into the first channels of `dst`
void upsample2_into(const RasterMap& low, RasterMap& dst) {
    for (int c = 0; c < low.channels(); ++c)
        for (int y = 0; y < dst.height(); ++y)
            for (int xx = 0; xx < dst.width(); ++xx) dst.at(c, y, xx) = low.at(c, y / 2, xx / 2);
}

double sigmoid(double z) {
    return z >= 0 ? 1.0 / (1.0 + std::exp(-z)) : std::exp(z) / (1.0 + std::exp(z));
}

}  // namespace

void NetworkConfig::validate() const {
    if (in_channels < 1) throw std::invalid_argument("network: in_channels must be >= 1");
    if (base_width < 4) throw std::invalid_argument("network: base_width must be >= 4");
    if (depth < 2) throw std::invalid_argument("network: depth must be >= 2");
    if (k_classes < 2) throw std::invalid_argument("network: k_classes must be >= 2");
    if (!(dropout_rate >= 0.0 && dropout_rate < 1.0))
        throw std::invalid_argument("network: dropout_rate must lie in [0, 1)");
}

const char* to_string(ParamGroup g) {
    switch (g) {
        case ParamGroup::Encoder: return "encoder";
        case ParamGroup::Decoder: return "decoder";
        case ParamGroup::Head: return "head";
    }
    return "?";
}

SegNetwork::SegNetwork(const NetworkConfig& cfg) : cfg_(cfg) {
    cfg_.validate();
    const int w = cfg_.base_width;

    ranges_[0].begin = 0;
    enc_.push_back({cfg_.in_channels, w, 3, add_conv(cfg_.in_channels, w, 3)});
    for (int l = 1; l <= cfg_.depth; ++l) {
        const int in = w << (l - 1), out = w << l;
        enc_.push_back({in, out, 3, add_conv(in, out, 3)});
    }
    ranges_[0].end = params_.size();

    ranges_[1].begin = params_.size();
    dec_.resize(static_cast<std::size_t>(cfg_.depth));
    for (int l = cfg_.depth - 1; l >= 0; --l) {
        const int in = (w << (l + 1)) + (w << l), out = w << l;
        dec_[static_cast<std::size_t>(l)] = {in, out, 3, add_conv(in, out, 3)};
    }
    final_ = {w, 1, 1, add_conv(w, 1, 1)};
    ranges_[1].end = params_.size();

    ranges_[2].begin = params_.size();
    head_in_ = w << cfg_.depth;
    head_offset_ = params_.size();
    params_.resize(params_.size() + static_cast<std::size_t>(cfg_.k_classes) * (head_in_ + 1), 0.0);
    ranges_[2].end = params_.size();

    initialize();
}

std::size_t SegNetwork::add_conv(int in, int out, int kernel) {
    const std::size_t offset = params_.size();
    params_.resize(offset + static_cast<std::size_t>(out) * in * kernel * kernel + out, 0.0);
    return offset;
}

void SegNetwork::initialize() {
    Rng rng(derive_seed(cfg_.seed, stream::kInit));
    auto fill = [&](std::size_t offset, std::size_t count, double stddev) {
        std::normal_distribution<double> n(0.0, stddev);
        for (std::size_t i = 0; i < count; ++i) params_[offset + i] = n(rng);
    };
    auto init_conv = [&](const ConvLayer& L, double gain) {
        const int fan_in = L.in * L.kernel * L.kernel;
        fill(L.offset, static_cast<std::size_t>(L.out) * fan_in, std::sqrt(gain / fan_in));
    };
    for (const auto& L : enc_) init_conv(L, 2.0);
    for (int l = cfg_.depth - 1; l >= 0; --l) init_conv(dec_[static_cast<std::size_t>(l)], 2.0);
    init_conv(final_, 1.0);
    fill(head_offset_, static_cast<std::size_t>(cfg_.k_classes) * head_in_, std::sqrt(1.0 / head_in_));
}

ParamRange SegNetwork::group_range(ParamGroup g) const noexcept {
    return ranges_[static_cast<int>(g)];
}

std::span<const double> SegNetwork::group(ParamGroup g) const noexcept {
    const auto r = group_range(g);
    return std::span<const double>(params_).subspan(r.begin, r.size());
}

std::span<double> SegNetwork::group(ParamGroup g) noexcept {
    const auto r = group_range(g);
    return std::span<double>(params_).subspan(r.begin, r.size());
}

void SegNetwork::set_stochastic_mode(bool on, std::uint64_t seed) {
    stochastic_ = on;
    dropout_rng_.seed(derive_seed(seed, stream::kDropout));
}

void SegNetwork::set_dropout_rate(double rate) {
    if (!(rate >= 0.0 && rate < 1.0)) throw std::invalid_argument("dropout rate must lie in [0, 1)");
    cfg_.dropout_rate = rate;
}

void SegNetwork::check_input(const RasterMap& x) const {
    if (x.empty()) throw std::invalid_argument("network input is empty");
    if (x.channels() != cfg_.in_channels)
        throw std::invalid_argument("network expects " + std::to_string(cfg_.in_channels) +
                                    " channels, got " + std::to_string(x.channels()));
    const int m = 1 << cfg_.depth;
    if (x.height() % m != 0 || x.width() % m != 0)
        throw std::invalid_argument("input " + std::to_string(x.height()) + "x" +
                                    std::to_string(x.width()) + " not divisible by " + std::to_string(m));
}

RasterMap SegNetwork::conv_forward(const ConvLayer& L, const RasterMap& x) const {
    RasterMap out(L.out, x.height(), x.width());
    const auto hw = static_cast<Eigen::Index>(x.plane_size());
    const int fan_in = L.in * L.kernel * L.kernel;
    ConstMatMap w(params_.data() + L.offset, L.out, fan_in);
    Eigen::Map<const Eigen::VectorXd> b(params_.data() + L.offset + static_cast<std::size_t>(L.out) * fan_in, L.out);
    MatMap o(out.values().data(), L.out, hw);
    if (L.kernel == 1) {
        o.noalias() = w * ConstMatMap(x.values().data(), L.in, hw);
    } else {
        o.noalias() = w * im2col(x, L.kernel);
    }
    o.colwise() += b;
    return out;
}

RasterMap SegNetwork::conv_backward(const ConvLayer& L, const RasterMap& x, const RasterMap& d_out,
                                    Gradient& grad, bool need_input_grad) const {
    const auto hw = static_cast<Eigen::Index>(x.plane_size());
    const int fan_in = L.in * L.kernel * L.kernel;
    ConstMatMap w(params_.data() + L.offset, L.out, fan_in);
    ConstMatMap dy(d_out.values().data(), L.out, hw);
    MatMap gw(grad.data() + L.offset, L.out, fan_in);
    Eigen::Map<Eigen::VectorXd> gb(grad.data() + L.offset + static_cast<std::size_t>(L.out) * fan_in, L.out);
    gb += dy.rowwise().sum();

    RasterMap dx;
    if (L.kernel == 1) {
        ConstMatMap cols(x.values().data(), L.in, hw);
        gw.noalias() += dy * cols.transpose();
        if (need_input_grad) {
            dx = RasterMap(L.in, x.height(), x.width());
            MatMap(dx.values().data(), L.in, hw).noalias() = w.transpose() * dy;
        }
        return dx;
    }
    const Mat cols = im2col(x, L.kernel);
    gw.noalias() += dy * cols.transpose();
    if (need_input_grad) {
        dx = RasterMap(L.in, x.height(), x.width());
        const Mat dcols = w.transpose() * dy;
        col2im_add(dcols, L.kernel, dx);
    }
    return dx;
}

void SegNetwork::apply_dropout(RasterMap& m, RasterMap& mask) const {
    const double rate = cfg_.dropout_rate;
    if (!stochastic_ || rate <= 0.0) return;
    mask = RasterMap(m.channels(), m.height(), m.width());
    std::bernoulli_distribution keep(1.0 - rate);
    const double scale = 1.0 / (1.0 - rate);
    for (std::size_t i = 0; i < m.size(); ++i) {
        mask[i] = keep(dropout_rng_) ? scale : 0.0;
        m[i] *= mask[i];
    }
}

ForwardTrace SegNetwork::forward(const RasterMap& x, ForwardOptions opts) const {
    check_input(x);
    const auto stages = static_cast<std::size_t>(cfg_.depth) + 1;
    ForwardTrace t;
    t.input = x;
    t.enc_in.resize(stages);
    t.enc_pre.resize(stages);
    t.enc_out.resize(stages);
    t.enc_drop.resize(stages);

    for (std::size_t l = 0; l < stages; ++l) {
        t.enc_in[l] = l == 0 ? x : avg_pool2(t.enc_out[l - 1]);
        t.enc_pre[l] = conv_forward(enc_[l], t.enc_in[l]);
        RasterMap out = t.enc_pre[l];
        for (auto& v : out.values()) v = v > 0.0 ? v : 0.0;
        apply_dropout(out, t.enc_drop[l]);
        t.enc_out[l] = std::move(out);
    }

    const RasterMap& deep = t.enc_out.back();
    if (opts.head) {
        t.has_head = true;
        t.pooled.assign(static_cast<std::size_t>(head_in_), 0.0);
        for (int c = 0; c < head_in_; ++c) {
            double s = 0.0;
            for (double v : deep.plane(c)) s += v;
            t.pooled[static_cast<std::size_t>(c)] = s / static_cast<double>(deep.plane_size());
        }
        ConstMatMap hw(params_.data() + head_offset_, cfg_.k_classes, head_in_);
        Eigen::Map<const Eigen::VectorXd> hb(params_.data() + head_offset_ +
                                                 static_cast<std::size_t>(cfg_.k_classes) * head_in_,
                                             cfg_.k_classes);
        const Eigen::VectorXd pooled = Eigen::Map<const Eigen::VectorXd>(t.pooled.data(), head_in_);
        const Eigen::VectorXd logits = hw * pooled + hb;
        t.logits.assign(logits.begin(), logits.end());
    }

    if (opts.decoder) {
        t.has_decoder = true;
        const auto levels = static_cast<std::size_t>(cfg_.depth);
        t.dec_in.resize(levels);
        t.dec_pre.resize(levels);
        t.dec_out.resize(levels);
        const RasterMap* below = &deep;
        for (int l = cfg_.depth - 1; l >= 0; --l) {
            const auto li = static_cast<std::size_t>(l);
            const RasterMap& skip = t.enc_out[li];
            RasterMap cat(below->channels() + skip.channels(), skip.height(), skip.width());
            upsample2_into(*below, cat);
            std::copy(skip.values().begin(), skip.values().end(),
                      cat.values().begin() + static_cast<std::ptrdiff_t>(below->channels() * cat.plane_size()));
            t.dec_in[li] = std::move(cat);
            t.dec_pre[li] = conv_forward(dec_[li], t.dec_in[li]);
            RasterMap out = t.dec_pre[li];
            for (auto& v : out.values()) v = v > 0.0 ? v : 0.0;
            t.dec_out[li] = std::move(out);
            below = &t.dec_out[li];
        }
        t.final_in = t.dec_out[0];
        apply_dropout(t.final_in, t.final_drop);
        RasterMap z = conv_forward(final_, t.final_in);
        for (auto& v : z.values()) v = sigmoid(v);
        t.probability = std::move(z);
    }
    return t;
}

void SegNetwork::backward(const ForwardTrace& t, const RasterMap* d_prob,
                          std::span<const double> d_logits, Gradient& grad) const {
    if (grad.size() != params_.size()) throw std::invalid_argument("gradient buffer size mismatch");
    const auto stages = static_cast<std::size_t>(cfg_.depth) + 1;
    std::vector<RasterMap> d_enc(stages);
    for (std::size_t l = 0; l < stages; ++l)
        d_enc[l] = RasterMap(t.enc_out[l].channels(), t.enc_out[l].height(), t.enc_out[l].width());

    if (d_prob != nullptr) {
        if (!t.has_decoder) throw std::invalid_argument("backward: trace has no decoder pass");
        if (!d_prob->same_shape(t.probability)) throw std::invalid_argument("backward: d_prob shape mismatch");
        RasterMap dz = *d_prob;
        for (std::size_t i = 0; i < dz.size(); ++i) {
            const double s = t.probability[i];
            dz[i] *= s * (1.0 - s);
        }
        RasterMap d_cur = conv_backward(final_, t.final_in, dz, grad, true);
        if (!t.final_drop.empty())
            for (std::size_t i = 0; i < d_cur.size(); ++i) d_cur[i] *= t.final_drop[i];

        for (int l = 0; l < cfg_.depth; ++l) {
            const auto li = static_cast<std::size_t>(l);
            for (std::size_t i = 0; i < d_cur.size(); ++i)
                if (t.dec_pre[li][i] <= 0.0) d_cur[i] = 0.0;
            RasterMap d_cat = conv_backward(dec_[li], t.dec_in[li], d_cur, grad, true);
            const RasterMap& below = l + 1 < cfg_.depth ? t.dec_out[li + 1] : t.enc_out.back();
            const int up_ch = below.channels();
            // skip-connection half
            auto& d_skip = d_enc[li];
            const std::size_t off = static_cast<std::size_t>(up_ch) * d_cat.plane_size();
            for (std::size_t i = 0; i < d_skip.size(); ++i) d_skip[i] += d_cat[off + i];
            // upsampled half, summed back onto the lower resolution
            RasterMap d_below(up_ch, below.height(), below.width());
            for (int c = 0; c < up_ch; ++c)
                for (int y = 0; y < d_cat.height(); ++y)
                    for (int x = 0; x < d_cat.width(); ++x) d_below.at(c, y / 2, x / 2) += d_cat.at(c, y, x);
            if (l + 1 < cfg_.depth) {
                d_cur = std::move(d_below);
            } else {
                auto& d_deep = d_enc.back();
                for (std::size_t i = 0; i < d_deep.size(); ++i) d_deep[i] += d_below[i];
            }
        }
    }

    if (!d_logits.empty()) {
        if (!t.has_head) throw std::invalid_argument("backward: trace has no head pass");
        if (d_logits.size() != static_cast<std::size_t>(cfg_.k_classes))
            throw std::invalid_argument("backward: d_logits length mismatch");
        const Eigen::VectorXd dl = Eigen::Map<const Eigen::VectorXd>(d_logits.data(), cfg_.k_classes);
        const Eigen::VectorXd pooled = Eigen::Map<const Eigen::VectorXd>(t.pooled.data(), head_in_);
        MatMap gw(grad.data() + head_offset_, cfg_.k_classes, head_in_);
        gw.noalias() += dl * pooled.transpose();
        Eigen::Map<Eigen::VectorXd>(grad.data() + head_offset_ + static_cast<std::size_t>(cfg_.k_classes) * head_in_,
                                    cfg_.k_classes) += dl;
        ConstMatMap hw(params_.data() + head_offset_, cfg_.k_classes, head_in_);
        const Eigen::VectorXd d_pooled = hw.transpose() * dl;
        auto& d_deep = d_enc.back();
        const double inv = 1.0 / static_cast<double>(d_deep.plane_size());
        for (int c = 0; c < head_in_; ++c)
            for (auto& v : d_deep.plane(c)) v += d_pooled[c] * inv;
    }

    for (int l = static_cast<int>(stages) - 1; l >= 0; --l) {
        const auto li = static_cast<std::size_t>(l);
        RasterMap& d = d_enc[li];
        const bool has_drop = !t.enc_drop[li].empty();
        for (std::size_t i = 0; i < d.size(); ++i) {
            if (t.enc_pre[li][i] <= 0.0) d[i] = 0.0;
            else if (has_drop) d[i] *= t.enc_drop[li][i];
        }
        RasterMap d_in = conv_backward(enc_[li], t.enc_in[li], d, grad, l > 0);
        if (l > 0) avg_pool2_backward_add(d_in, d_enc[li - 1]);
    }
}

RasterMap SegNetwork::forward_segmentation(const RasterMap& x) const {
    return forward(x, {.decoder = true, .head = false}).probability;
}

std::vector<double> SegNetwork::forward_permutation_logits(const RasterMap& x) const {
    return forward(x, {.decoder = false, .head = true}).logits;
}

// Checkpoint layout: text header terminated by "end\n", then the raw
// little-endian doubles of the flat parameter vector.
void save_checkpoint(const std::filesystem::path& path, const SegNetwork& net) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw IoError("cannot write checkpoint " + path.string());
    const auto& c = net.config();
    out << "selfloop-checkpoint v1\n"
        << "in_channels=" << c.in_channels << "\n"
        << "base_width=" << c.base_width << "\n"
        << "depth=" << c.depth << "\n"
        << "k_classes=" << c.k_classes << "\n";
    char rate[64];
    std::snprintf(rate, sizeof rate, "%.17g", c.dropout_rate);
    out << "dropout_rate=" << rate << "\n"
        << "seed=" << c.seed << "\n"
        << "training_seed=" << net.training_seed << "\n";
    for (auto g : {ParamGroup::Encoder, ParamGroup::Decoder, ParamGroup::Head})
        out << "group." << to_string(g) << "=" << net.group_range(g).begin << ":" << net.group_range(g).end << "\n";
    out << "parameters=" << net.parameter_count() << "\nend\n";
    const auto p = net.parameters();
    out.write(reinterpret_cast<const char*>(p.data()), static_cast<std::streamsize>(p.size() * sizeof(double)));
    if (!out) throw IoError("write failed: " + path.string());
}

SegNetwork load_checkpoint(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot read checkpoint " + path.string());
    std::string line;
    if (!std::getline(in, line) || line != "selfloop-checkpoint v1")
        throw IoError("not a selfloop checkpoint (or unsupported version): " + path.string());
    NetworkConfig cfg;
    std::uint64_t training_seed = 0;
    std::size_t count = 0;
    std::vector<std::pair<std::string, std::string>> groups;
    while (std::getline(in, line) && line != "end") {
        const auto eq = line.find('=');
        if (eq == std::string::npos) throw IoError("malformed checkpoint header line: " + line);
        const std::string key = line.substr(0, eq), val = line.substr(eq + 1);
        try {
            if (key == "in_channels") cfg.in_channels = std::stoi(val);
            else if (key == "base_width") cfg.base_width = std::stoi(val);
            else if (key == "depth") cfg.depth = std::stoi(val);
            else if (key == "k_classes") cfg.k_classes = std::stoi(val);
            else if (key == "dropout_rate") cfg.dropout_rate = std::stod(val);
            else if (key == "seed") cfg.seed = std::stoull(val);
            else if (key == "training_seed") training_seed = std::stoull(val);
            else if (key == "parameters") count = std::stoull(val);
            else if (key.rfind("group.", 0) == 0) groups.emplace_back(key.substr(6), val);
            else throw IoError("unknown checkpoint key " + key);
        } catch (const std::logic_error&) {
            throw IoError("bad checkpoint value for " + key + ": " + val);
        }
    }
    if (line != "end") throw IoError("truncated checkpoint header: " + path.string());
    SegNetwork net = [&] {
        try {
            return SegNetwork(cfg);
        } catch (const std::invalid_argument& e) {
            throw IoError(std::string("checkpoint config invalid: ") + e.what());
        }
    }();
    if (count != net.parameter_count())
        throw IoError("checkpoint parameter count does not match its architecture");
    for (const auto& [name, range] : groups) {
        for (auto g : {ParamGroup::Encoder, ParamGroup::Decoder, ParamGroup::Head}) {
            if (name != to_string(g)) continue;
            const auto r = net.group_range(g);
            if (range != std::to_string(r.begin) + ":" + std::to_string(r.end))
                throw IoError("checkpoint group layout mismatch for " + name);
        }
    }
    auto p = net.parameters();
    in.read(reinterpret_cast<char*>(p.data()), static_cast<std::streamsize>(p.size() * sizeof(double)));
    if (in.gcount() != static_cast<std::streamsize>(p.size() * sizeof(double)))
        throw IoError("truncated checkpoint payload: " + path.string());
    net.training_seed = training_seed;
    return net;
}

}  // namespace selfloop
