#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

namespace dran {

/// Dense C x H x W tensor of doubles, row-major by (channel, row, column).
///
/// Every map is non-empty and holds finite values; constructors that take
/// external data validate both.
class FeatureMap {
public:
    FeatureMap() = default;
    FeatureMap(int channels, int height, int width, double fill = 0.0);
    FeatureMap(int channels, int height, int width, std::vector<double> data);

    int channels() const noexcept { return channels_; }
    int height() const noexcept { return height_; }
    int width() const noexcept { return width_; }
    std::size_t plane_size() const noexcept {
        return static_cast<std::size_t>(height_) * static_cast<std::size_t>(width_);
    }
    std::size_t size() const noexcept { return data_.size(); }
    bool empty() const noexcept { return data_.empty(); }

    std::size_t index(int c, int y, int x) const noexcept {
        return (static_cast<std::size_t>(c) * static_cast<std::size_t>(height_) +
                static_cast<std::size_t>(y)) *
                   static_cast<std::size_t>(width_) +
               static_cast<std::size_t>(x);
    }
    double& at(int c, int y, int x) noexcept { return data_[index(c, y, x)]; }
    double at(int c, int y, int x) const noexcept { return data_[index(c, y, x)]; }

    std::span<double> data() noexcept { return data_; }
    std::span<const double> data() const noexcept { return data_; }
    std::span<double> plane(int c) noexcept { return {data_.data() + index(c, 0, 0), plane_size()}; }
    std::span<const double> plane(int c) const noexcept {
        return {data_.data() + index(c, 0, 0), plane_size()};
    }
    std::span<double> row(int c, int y) noexcept {
        return {data_.data() + index(c, y, 0), static_cast<std::size_t>(width_)};
    }
    std::span<const double> row(int c, int y) const noexcept {
        return {data_.data() + index(c, y, 0), static_cast<std::size_t>(width_)};
    }

    bool same_shape(const FeatureMap& other) const noexcept {
        return channels_ == other.channels_ && height_ == other.height_ && width_ == other.width_;
    }
    bool same_spatial(const FeatureMap& other) const noexcept {
        return height_ == other.height_ && width_ == other.width_;
    }
    bool all_finite() const noexcept;

    /// Bitwise equality of shape and payload.
    friend bool operator==(const FeatureMap& a, const FeatureMap& b) noexcept;

private:
    int channels_ = 0;
    int height_ = 0;
    int width_ = 0;
    std::vector<double> data_;
};

/// Per-pixel region labels; 0 marks background.
class SegMask {
public:
    SegMask() = default;
    SegMask(int height, int width, std::uint8_t fill = 0);
    SegMask(int height, int width, std::vector<std::uint8_t> labels);

    int height() const noexcept { return height_; }
    int width() const noexcept { return width_; }
    std::size_t size() const noexcept { return labels_.size(); }

    std::uint8_t& at(int y, int x) noexcept {
        return labels_[static_cast<std::size_t>(y) * static_cast<std::size_t>(width_) +
                       static_cast<std::size_t>(x)];
    }
    std::uint8_t at(int y, int x) const noexcept {
        return labels_[static_cast<std::size_t>(y) * static_cast<std::size_t>(width_) +
                       static_cast<std::size_t>(x)];
    }
    std::span<const std::uint8_t> labels() const noexcept { return labels_; }
    std::span<std::uint8_t> labels() noexcept { return labels_; }

    bool matches(const FeatureMap& map) const noexcept {
        return height_ == map.height() && width_ == map.width();
    }

    friend bool operator==(const SegMask& a, const SegMask& b) noexcept = default;

private:
    int height_ = 0;
    int width_ = 0;
    std::vector<std::uint8_t> labels_;
};

/// Throws InvalidArgument if any entry is NaN or infinite.
void require_finite(const FeatureMap& map, const char* what);

}  // namespace dran
