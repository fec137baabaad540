#pragma once

#include <string>
#include <vector>

#include "dran/config.hpp"
#include "dran/feature_map.hpp"
#include "dran/mask_geometry.hpp"

namespace dran {

/// Normalizes one source region crop with modulation parameters pooled from
/// the reference crop:
///
///   out = gamma * (F - mu) / sigma + beta
///
/// where (mu, sigma) fuse the source crop's pyramid statistics, (beta, gamma)
/// fuse the reference crop's, all aligned to the source crop's size. The
/// returned map has the source crop's shape; only its region pixels are
/// meaningful to the caller.
FeatureMap dran_region(const RegionCrop& f_crop, const RegionCrop& v_crop, const DranConfig& cfg,
                       const RegionGates& gates);

struct DranResult {
    FeatureMap output;
    std::vector<int> processed;          // ascending region ids
    std::vector<std::string> warnings;   // regions skipped and why
};

/// Full pipeline: crop each shared, configured region on both sides, run
/// dran_region, merge back in ascending id order. Untouched pixels are copied
/// from f. Gates missing from `gates` default to zero (uniform weights).
DranResult dran_forward(const FeatureMap& f, const FeatureMap& v, const SegMask& m_f,
                        const SegMask& m_v, const DranConfig& cfg, const GateSet& gates);

/// Per-region moment transfer computed directly: whiten by the source
/// crop's mean and sqrt(var + eps), re-color with the reference crop's. With
/// masked_stats the moments are taken over region pixels only instead of the
/// full bounding rectangle. Every region present in both masks is processed.
FeatureMap moment_transfer_reference(const FeatureMap& f, const FeatureMap& v, const SegMask& m_f,
                                     const SegMask& m_v, double epsilon = 1e-5, bool masked_stats = false);

}  // namespace dran
