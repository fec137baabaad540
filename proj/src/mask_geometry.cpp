#include "dran/mask_geometry.hpp"

#include <algorithm>
#include <array>
#include <string>

#include "dran/error.hpp"

namespace dran {

std::size_t RegionCrop::pixel_count() const noexcept {
    return static_cast<std::size_t>(std::count_if(binary_mask.begin(), binary_mask.end(),
                                                  [](std::uint8_t b) { return b != 0; }));
}

std::vector<int> region_set(const SegMask& mask) {
    std::array<bool, 256> seen{};
    for (std::uint8_t label : mask.labels()) seen[label] = true;
    std::vector<int> ids;
    for (int id = 1; id < 256; ++id) {
        if (seen[static_cast<std::size_t>(id)]) ids.push_back(id);
    }
    return ids;
}

BBox region_bbox(const SegMask& mask, int region_id) {
    if (region_id < 1 || region_id > 255) {
        throw InvalidArgument("region id must be in 1..255, got " + std::to_string(region_id));
    }
    int top = mask.height();
    int left = mask.width();
    int bottom = -1;
    int right = -1;
    for (int y = 0; y < mask.height(); ++y) {
        for (int x = 0; x < mask.width(); ++x) {
            if (mask.at(y, x) != region_id) continue;
            top = std::min(top, y);
            bottom = std::max(bottom, y);
            left = std::min(left, x);
            right = std::max(right, x);
        }
    }
    if (bottom < 0) throw RegionNotFound(region_id);
    return BBox{top, left, bottom - top + 1, right - left + 1};
}

FeatureMap crop_window(const FeatureMap& feat, const BBox& bbox) {
    if (bbox.row0 < 0 || bbox.col0 < 0 || bbox.height < 1 || bbox.width < 1 ||
        bbox.row0 + bbox.height > feat.height() || bbox.col0 + bbox.width > feat.width()) {
        throw InvalidArgument("crop window outside feature map bounds");
    }
    FeatureMap out(feat.channels(), bbox.height, bbox.width);
    for (int c = 0; c < feat.channels(); ++c) {
        for (int y = 0; y < bbox.height; ++y) {
            const auto src = feat.row(c, bbox.row0 + y).subspan(static_cast<std::size_t>(bbox.col0),
                                                                static_cast<std::size_t>(bbox.width));
            std::copy(src.begin(), src.end(), out.row(c, y).begin());
        }
    }
    return out;
}

RegionCrop region_bbox_crop(const FeatureMap& feat, const SegMask& mask, int region_id) {
    if (!mask.matches(feat)) {
        throw InvalidArgument("mask " + std::to_string(mask.height()) + "x" +
                              std::to_string(mask.width()) + " does not match feature map " +
                              std::to_string(feat.height()) + "x" + std::to_string(feat.width()));
    }
    RegionCrop crop;
    crop.region_id = region_id;
    crop.bbox = region_bbox(mask, region_id);
    crop.feature = crop_window(feat, crop.bbox);
    crop.binary_mask.resize(static_cast<std::size_t>(crop.bbox.height) *
                            static_cast<std::size_t>(crop.bbox.width));
    for (int y = 0; y < crop.bbox.height; ++y) {
        for (int x = 0; x < crop.bbox.width; ++x) {
            crop.binary_mask[static_cast<std::size_t>(y) * static_cast<std::size_t>(crop.bbox.width) +
                             static_cast<std::size_t>(x)] =
                mask.at(crop.bbox.row0 + y, crop.bbox.col0 + x) == region_id ? 1 : 0;
        }
    }
    return crop;
}

void merge_region_into(FeatureMap& base, const FeatureMap& patch, const RegionCrop& crop) {
    if (patch.channels() != base.channels() || patch.height() != crop.bbox.height ||
        patch.width() != crop.bbox.width) {
        throw InvalidArgument("merge_region: patch shape does not match the region crop");
    }
    if (crop.bbox.row0 + crop.bbox.height > base.height() ||
        crop.bbox.col0 + crop.bbox.width > base.width()) {
        throw InvalidArgument("merge_region: crop box exceeds base map");
    }
    for (int c = 0; c < base.channels(); ++c) {
        for (int y = 0; y < crop.bbox.height; ++y) {
            auto dst = base.row(c, crop.bbox.row0 + y);
            const auto src = patch.row(c, y);
            for (int x = 0; x < crop.bbox.width; ++x) {
                if (crop.inside(y, x)) {
                    dst[static_cast<std::size_t>(crop.bbox.col0 + x)] = src[static_cast<std::size_t>(x)];
                }
            }
        }
    }
}

FeatureMap merge_region(const FeatureMap& base, const FeatureMap& patch, const RegionCrop& crop) {
    FeatureMap out = base;
    merge_region_into(out, patch, crop);
    return out;
}

}  // namespace dran
