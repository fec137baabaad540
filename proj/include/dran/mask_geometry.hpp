#pragma once

#include <cstdint>
#include <vector>

#include "dran/feature_map.hpp"

namespace dran {

struct BBox {
    int row0 = 0;
    int col0 = 0;
    int height = 0;
    int width = 0;

    bool contains(int y, int x) const noexcept {
        return y >= row0 && y < row0 + height && x >= col0 && x < col0 + width;
    }
    friend bool operator==(const BBox&, const BBox&) = default;
};

/// A region's tight axis-aligned bounding rectangle cut out of a feature map,
/// together with the region's 0/1 membership inside that rectangle.
struct RegionCrop {
    FeatureMap feature;
    BBox bbox;
    std::vector<std::uint8_t> binary_mask;  // bbox.height x bbox.width
    int region_id = 0;

    bool inside(int y, int x) const noexcept {
        return binary_mask[static_cast<std::size_t>(y) * static_cast<std::size_t>(bbox.width) +
                           static_cast<std::size_t>(x)] != 0;
    }
    std::size_t pixel_count() const noexcept;
};

/// Distinct nonzero labels present in the mask, ascending.
std::vector<int> region_set(const SegMask& mask);

/// Tight bounding box of all pixels labelled region_id (all components).
BBox region_bbox(const SegMask& mask, int region_id);

/// Copies the bbox window of every channel.
FeatureMap crop_window(const FeatureMap& feat, const BBox& bbox);

RegionCrop region_bbox_crop(const FeatureMap& feat, const SegMask& mask, int region_id);

/// Returns base with the crop's region pixels replaced by patch values.
FeatureMap merge_region(const FeatureMap& base, const FeatureMap& patch, const RegionCrop& crop);

/// In-place variant used by the pipeline.
void merge_region_into(FeatureMap& base, const FeatureMap& patch, const RegionCrop& crop);

}  // namespace dran
