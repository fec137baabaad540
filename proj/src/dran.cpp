#include "dran/dran.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "dran/error.hpp"
#include "dran/kernels.hpp"
#include "dran_internal.hpp"

namespace dran {
namespace detail {
namespace {

FusedPair fuse_side(const FeatureMap& stats_source, std::span<const std::uint8_t> stats_mask,
                    const FeatureMap& f_r, const FeatureMap& v_aligned, const RegionSpec& spec,
                    const DranConfig& cfg, const GateParams& theta) {
    FusedPair pair;
    SappOptions options;
    options.epsilon = cfg.epsilon;
    options.resize = cfg.resize;
    if (cfg.masked_stats) options.mask = stats_mask;
    pair.pyramid = sapp_forward(stats_source, spec.levels, f_r.height(), f_r.width(), options);
    for (const BranchParams& branch : pair.pyramid.branches) {
        pair.shift_branches.push_back(branch.aligned.shift);
        pair.scale_branches.push_back(branch.aligned.scale);
    }
    pair.shift_weights = gate_forward(f_r, v_aligned, theta, kShiftOrder, &pair.shift_trace);
    pair.scale_weights = gate_forward(f_r, v_aligned, theta, kScaleOrder, &pair.scale_trace);
    pair.shift = fuse_params(pair.shift_weights, pair.shift_branches);
    pair.scale = fuse_params(pair.scale_weights, pair.scale_branches);
    return pair;
}

}  // namespace

RegionGates gates_for(const GateSet& gates, int region_id, const RegionSpec& spec,
                      const DranConfig& cfg, int channels) {
    if (const auto it = gates.find(region_id); it != gates.end()) return it->second;
    const int k = static_cast<int>(spec.levels.size());
    return RegionGates{GateParams::zeros(k, 2 * channels, cfg.gate),
                       GateParams::zeros(k, 2 * channels, cfg.gate)};
}

FeatureMap run_region(const RegionCrop& f_crop, const RegionCrop& v_crop, const RegionSpec& spec,
                      const DranConfig& cfg, const RegionGates& gates, RegionTape* tape) {
    const FeatureMap& f_r = f_crop.feature;
    if (f_r.channels() != v_crop.feature.channels()) {
        throw InvalidArgument("dran_region: source has " + std::to_string(f_r.channels()) +
                              " channels, reference " + std::to_string(v_crop.feature.channels()));
    }
    const std::size_t k = spec.levels.size();
    for (const GateParams* theta : {&gates.reference, &gates.source}) {
        if (static_cast<std::size_t>(theta->branches()) != k || theta->in_channels() != 2 * f_r.channels()) {
            throw ConfigError("gate for region " + std::to_string(f_crop.region_id) +
                              " does not match its " + std::to_string(k) + " pyramid levels and " +
                              std::to_string(f_r.channels()) + " channels");
        }
    }

    RegionTape local;
    RegionTape& t = tape != nullptr ? *tape : local;
    t.v_aligned = resize(v_crop.feature, f_r.height(), f_r.width(), cfg.resize);
    t.source = fuse_side(f_r, f_crop.binary_mask, f_r, t.v_aligned, spec, cfg, gates.source);
    t.reference = fuse_side(v_crop.feature, v_crop.binary_mask, f_r, t.v_aligned, spec, cfg,
                            gates.reference);

    FeatureMap out(f_r.channels(), f_r.height(), f_r.width());
    kernels::active().affine_normalize(f_r.data().data(), t.source.shift.data().data(),
                                       t.source.scale.data().data(), t.reference.scale.data().data(),
                                       t.reference.shift.data().data(), out.data().data(), out.size());
    return out;
}

std::vector<RegionPlan> plan_regions(const SegMask& m_f, const SegMask& m_v, const DranConfig& cfg,
                                     std::vector<std::string>* warnings) {
    const std::vector<int> src = region_set(m_f);
    const std::vector<int> ref = region_set(m_v);
    std::vector<int> all;
    std::set_union(src.begin(), src.end(), ref.begin(), ref.end(), std::back_inserter(all));

    std::vector<RegionPlan> plan;
    for (int id : all) {
        const bool in_src = std::binary_search(src.begin(), src.end(), id);
        const bool in_ref = std::binary_search(ref.begin(), ref.end(), id);
        const auto spec = cfg.regions.find(id);
        std::string reason;
        if (!in_src) {
            reason = "present only in the reference mask";
        } else if (!in_ref) {
            reason = "present only in the source mask";
        } else if (spec == cfg.regions.end()) {
            reason = "has no config entry";
        }
        if (reason.empty()) {
            plan.push_back(RegionPlan{id, &spec->second});
        } else if (warnings != nullptr) {
            warnings->push_back("region " + std::to_string(id) + " skipped: " + reason);
        }
    }
    return plan;
}

void check_inputs(const FeatureMap& f, const FeatureMap& v, const SegMask& m_f, const SegMask& m_v) {
    if (!m_f.matches(f)) throw InvalidArgument("source mask does not match source feature map");
    if (!m_v.matches(v)) throw InvalidArgument("reference mask does not match reference feature map");
    if (f.channels() != v.channels()) {
        throw InvalidArgument("source and reference channel counts differ (" +
                              std::to_string(f.channels()) + " vs " + std::to_string(v.channels()) + ")");
    }
}

}  // namespace detail

FeatureMap dran_region(const RegionCrop& f_crop, const RegionCrop& v_crop, const DranConfig& cfg,
                       const RegionGates& gates) {
    const auto spec = cfg.regions.find(f_crop.region_id);
    if (spec == cfg.regions.end()) {
        throw ConfigError("no config entry for region " + std::to_string(f_crop.region_id));
    }
    return detail::run_region(f_crop, v_crop, spec->second, cfg, gates, nullptr);
}

DranResult dran_forward(const FeatureMap& f, const FeatureMap& v, const SegMask& m_f,
                        const SegMask& m_v, const DranConfig& cfg, const GateSet& gates) {
    detail::check_inputs(f, v, m_f, m_v);
    cfg.validate();
    DranResult result;
    result.output = f;
    for (const detail::RegionPlan& region : detail::plan_regions(m_f, m_v, cfg, &result.warnings)) {
        const RegionCrop f_crop = region_bbox_crop(f, m_f, region.id);
        const RegionCrop v_crop = region_bbox_crop(v, m_v, region.id);
        const RegionGates theta = detail::gates_for(gates, region.id, *region.spec, cfg, f.channels());
        const FeatureMap patch = detail::run_region(f_crop, v_crop, *region.spec, cfg, theta, nullptr);
        merge_region_into(result.output, patch, f_crop);
        result.processed.push_back(region.id);
    }
    return result;
}

FeatureMap moment_transfer_reference(const FeatureMap& f, const FeatureMap& v, const SegMask& m_f,
                                     const SegMask& m_v, double epsilon, bool masked_stats) {
    detail::check_inputs(f, v, m_f, m_v);
    if (!(epsilon > 0.0)) throw InvalidArgument("epsilon must be positive");

    struct Moments {
        double mean;
        double stddev;
    };
    // Two-pass moments over the region's bounding rectangle (or its pixels).
    const auto moments = [masked_stats](const FeatureMap& map, const SegMask& mask, const BBox& box,
                                        int id, int c, double eps) {
        double total = 0.0;
        double count = 0.0;
        for (int y = box.row0; y < box.row0 + box.height; ++y) {
            for (int x = box.col0; x < box.col0 + box.width; ++x) {
                if (masked_stats && mask.at(y, x) != id) continue;
                total += map.at(c, y, x);
                count += 1.0;
            }
        }
        const double mean = total / count;
        double squares = 0.0;
        for (int y = box.row0; y < box.row0 + box.height; ++y) {
            for (int x = box.col0; x < box.col0 + box.width; ++x) {
                if (masked_stats && mask.at(y, x) != id) continue;
                const double d = map.at(c, y, x) - mean;
                squares += d * d;
            }
        }
        return Moments{mean, std::sqrt(squares / count + eps)};
    };

    FeatureMap out = f;
    const std::vector<int> src = region_set(m_f);
    const std::vector<int> ref = region_set(m_v);
    for (int id : src) {
        if (!std::binary_search(ref.begin(), ref.end(), id)) continue;
        const BBox box_f = region_bbox(m_f, id);
        const BBox box_v = region_bbox(m_v, id);
        for (int c = 0; c < f.channels(); ++c) {
            const Moments s = moments(f, m_f, box_f, id, c, epsilon);
            const Moments r = moments(v, m_v, box_v, id, c, epsilon);
            for (int y = box_f.row0; y < box_f.row0 + box_f.height; ++y) {
                for (int x = box_f.col0; x < box_f.col0 + box_f.width; ++x) {
                    if (m_f.at(y, x) != id) continue;
                    out.at(c, y, x) = r.stddev * ((f.at(c, y, x) - s.mean) / s.stddev) + r.mean;
                }
            }
        }
    }
    return out;
}

}  // namespace dran
