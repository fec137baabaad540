#pragma once

#include <string>

#include "dran/feature_map.hpp"

namespace dran::io {

/// Any PNG converted to 8-bit RGB, scaled to [0, 1]: 3 x H x W.
FeatureMap read_rgb_png(const std::string& path);

/// 8-bit single-channel PNG whose pixel values are region labels.
SegMask read_mask_png(const std::string& path);

/// Clamps to [0, 1], rounds to 8 bits and writes atomically (temp + rename).
/// Accepts 1 or 3 channels.
void write_rgb_png(const std::string& path, const FeatureMap& image);
void write_mask_png(const std::string& path, const SegMask& mask);

/// round(clamp(x, 0, 1) * 255)
unsigned char quantize(double value) noexcept;

}  // namespace dran::io
