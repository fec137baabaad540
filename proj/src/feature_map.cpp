#include "dran/feature_map.hpp"

#include <cmath>
#include <cstring>
#include <string>

#include "dran/error.hpp"

namespace dran {
namespace {

std::size_t checked_volume(int c, int h, int w) {
    if (c < 1 || h < 1 || w < 1) {
        throw InvalidArgument("feature map dims must be positive, got " + std::to_string(c) + "x" +
                              std::to_string(h) + "x" + std::to_string(w));
    }
    return static_cast<std::size_t>(c) * static_cast<std::size_t>(h) * static_cast<std::size_t>(w);
}

}  // namespace

FeatureMap::FeatureMap(int channels, int height, int width, double fill)
    : channels_(channels), height_(height), width_(width),
      data_(checked_volume(channels, height, width), fill) {
    if (!std::isfinite(fill)) throw InvalidArgument("feature map fill value must be finite");
}

FeatureMap::FeatureMap(int channels, int height, int width, std::vector<double> data)
    : channels_(channels), height_(height), width_(width), data_(std::move(data)) {
    if (data_.size() != checked_volume(channels, height, width)) {
        throw InvalidArgument("feature map data length " + std::to_string(data_.size()) +
                              " does not match shape");
    }
    require_finite(*this, "feature map");
}

bool FeatureMap::all_finite() const noexcept {
    for (double v : data_) {
        if (!std::isfinite(v)) return false;
    }
    return true;
}

bool operator==(const FeatureMap& a, const FeatureMap& b) noexcept {
    return a.same_shape(b) &&
           std::memcmp(a.data_.data(), b.data_.data(), a.data_.size() * sizeof(double)) == 0;
}

SegMask::SegMask(int height, int width, std::uint8_t fill)
    : height_(height), width_(width),
      labels_(checked_volume(1, height, width), fill) {}

SegMask::SegMask(int height, int width, std::vector<std::uint8_t> labels)
    : height_(height), width_(width), labels_(std::move(labels)) {
    if (labels_.size() != checked_volume(1, height, width)) {
        throw InvalidArgument("mask label count does not match " + std::to_string(height) + "x" +
                              std::to_string(width));
    }
}

void require_finite(const FeatureMap& map, const char* what) {
    if (!map.all_finite()) throw InvalidArgument(std::string(what) + " contains NaN or Inf");
}

}  // namespace dran
