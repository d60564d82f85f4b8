#pragma once

#include <cstdint>
#include <span>
#include <stdexcept>
#include <vector>

#include "selfloop/raster.hpp"

namespace selfloop {

/// Binary H x W ground-truth mask (values 0 or 1).
class BinaryMask {
public:
    BinaryMask() = default;
    BinaryMask(int height, int width) : height_(height), width_(width) {
        if (height < 1 || width < 1) throw std::invalid_argument("BinaryMask dimensions must be positive");
        bits_.assign(static_cast<std::size_t>(height) * width, 0);
    }
    BinaryMask(int height, int width, std::vector<std::uint8_t> bits) : BinaryMask(height, width) {
        if (bits.size() != bits_.size()) throw std::invalid_argument("BinaryMask size mismatch");
        for (auto b : bits)
            if (b > 1) throw std::invalid_argument("BinaryMask values must be 0 or 1");
        bits_ = std::move(bits);
    }

    /// Pixels with value strictly above threshold become foreground.
    static BinaryMask threshold(const RasterMap& m, double th) {
        BinaryMask out(m.height(), m.width());
        for (std::size_t i = 0; i < out.bits_.size(); ++i) out.bits_[i] = m[i] > th ? 1 : 0;
        return out;
    }

    int height() const noexcept { return height_; }
    int width() const noexcept { return width_; }
    std::size_t size() const noexcept { return bits_.size(); }
    bool empty() const noexcept { return bits_.empty(); }
    std::uint8_t operator[](std::size_t i) const { return bits_[i]; }
    std::uint8_t at(int y, int x) const { return bits_[static_cast<std::size_t>(y) * width_ + x]; }
    void set(int y, int x, bool v) { bits_[static_cast<std::size_t>(y) * width_ + x] = v ? 1 : 0; }
    std::span<const std::uint8_t> bits() const noexcept { return bits_; }

    std::size_t count() const noexcept {
        std::size_t n = 0;
        for (auto b : bits_) n += b;
        return n;
    }

    RasterMap to_raster() const {
        RasterMap m(1, height_, width_);
        for (std::size_t i = 0; i < bits_.size(); ++i) m[i] = bits_[i];
        return m;
    }

    friend bool operator==(const BinaryMask&, const BinaryMask&) = default;

private:
    int height_ = 0;
    int width_ = 0;
    std::vector<std::uint8_t> bits_;
};

}  // namespace selfloop
