#pragma once

#include <cstddef>
#include <span>
#include <stdexcept>
#include <vector>

#include "selfloop/aligned.hpp"

namespace selfloop {

/// Dense C x H x W map of doubles, planar (channel-major) layout. Serves as
/// image, feature map, probability map and pseudo-label alike.
class RasterMap {
public:
    RasterMap() = default;
    RasterMap(int channels, int height, int width, double fill = 0.0)
        : channels_(channels), height_(height), width_(width) {
        if (channels < 1 || height < 1 || width < 1)
            throw std::invalid_argument("RasterMap dimensions must be positive");
        values_.assign(static_cast<std::size_t>(channels) * height * width, fill);
    }
    RasterMap(int channels, int height, int width, std::vector<double> values)
        : RasterMap(channels, height, width) {
        if (values.size() != values_.size())
            throw std::invalid_argument("RasterMap value count does not match shape");
        values_.assign(values.begin(), values.end());
    }

    int channels() const noexcept { return channels_; }
    int height() const noexcept { return height_; }
    int width() const noexcept { return width_; }
    std::size_t plane_size() const noexcept { return static_cast<std::size_t>(height_) * width_; }
    std::size_t size() const noexcept { return values_.size(); }
    bool empty() const noexcept { return values_.empty(); }

    double& at(int c, int y, int x) { return values_[index(c, y, x)]; }
    double at(int c, int y, int x) const { return values_[index(c, y, x)]; }
    double& operator[](std::size_t i) { return values_[i]; }
    double operator[](std::size_t i) const { return values_[i]; }

    std::span<double> values() noexcept { return values_; }
    std::span<const double> values() const noexcept { return values_; }
    std::span<double> plane(int c) { return {values_.data() + c * plane_size(), plane_size()}; }
    std::span<const double> plane(int c) const {
        return {values_.data() + c * plane_size(), plane_size()};
    }

    bool same_shape(const RasterMap& o) const noexcept {
        return channels_ == o.channels_ && height_ == o.height_ && width_ == o.width_;
    }
    bool same_spatial(const RasterMap& o) const noexcept {
        return height_ == o.height_ && width_ == o.width_;
    }

    friend bool operator==(const RasterMap&, const RasterMap&) = default;

private:
    std::size_t index(int c, int y, int x) const noexcept {
        return (static_cast<std::size_t>(c) * height_ + y) * width_ + x;
    }

    int channels_ = 0;
    int height_ = 0;
    int width_ = 0;
    AlignedDoubles values_;
};

}  // namespace selfloop
