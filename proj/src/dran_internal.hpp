#pragma once

// Forward pass of one region with every intermediate kept, shared by the
// pipeline and the reverse-mode gradient.

#include <vector>

#include "dran/config.hpp"
#include "dran/gating.hpp"
#include "dran/mask_geometry.hpp"
#include "dran/sapp.hpp"

namespace dran::detail {

// One (shift, scale) parameter pair: (mu, sigma) on the source side,
// (beta, gamma) on the reference side.
struct FusedPair {
    PyramidParams pyramid;
    std::vector<FeatureMap> shift_branches;
    std::vector<FeatureMap> scale_branches;
    GateTrace shift_trace;
    GateTrace scale_trace;
    GateWeights shift_weights;
    GateWeights scale_weights;
    FeatureMap shift;
    FeatureMap scale;
};

struct RegionTape {
    FeatureMap v_aligned;  // reference crop resized to the source crop
    FusedPair source;
    FusedPair reference;
};

// Shift weights concatenate (source, reference), scale weights the reverse.
inline constexpr ConcatOrder kShiftOrder = ConcatOrder::SourceFirst;
inline constexpr ConcatOrder kScaleOrder = ConcatOrder::ReferenceFirst;

FeatureMap run_region(const RegionCrop& f_crop, const RegionCrop& v_crop, const RegionSpec& spec,
                      const DranConfig& cfg, const RegionGates& gates, RegionTape* tape);

// Gate set entry for a region, zeros when absent.
RegionGates gates_for(const GateSet& gates, int region_id, const RegionSpec& spec,
                      const DranConfig& cfg, int channels);

struct RegionPlan {
    int id;
    const RegionSpec* spec;
};

// Regions processed by dran_forward, ascending; skipped ids produce warnings.
std::vector<RegionPlan> plan_regions(const SegMask& m_f, const SegMask& m_v, const DranConfig& cfg,
                                     std::vector<std::string>* warnings);

void check_inputs(const FeatureMap& f, const FeatureMap& v, const SegMask& m_f, const SegMask& m_v);

}  // namespace dran::detail
