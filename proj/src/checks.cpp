#include "dran/checks.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <functional>

#include "dran/dran.hpp"
#include "dran/gating.hpp"
#include "dran/mask_geometry.hpp"
#include "dran/random.hpp"
#include "dran/sapp.hpp"

namespace dran {
namespace {

double max_abs_diff(const FeatureMap& a, const FeatureMap& b) {
    double worst = 0.0;
    const auto x = a.data();
    const auto y = b.data();
    for (std::size_t i = 0; i < x.size(); ++i) worst = std::max(worst, std::abs(x[i] - y[i]));
    return worst;
}

PropertyResult run_property(const std::string& name, double tolerance, int instances,
                            std::uint64_t seed, std::uint64_t stream,
                            const std::function<double(Rng&)>& body) {
    PropertyResult result{name, instances, 0.0, tolerance, true};
    for (int i = 0; i < instances; ++i) {
        Rng rng(seed, stream * 100003ULL + static_cast<std::uint64_t>(i));
        const double err = body(rng);
        result.max_error = std::isnan(err) ? INFINITY : std::max(result.max_error, err);
    }
    result.pass = result.max_error <= tolerance;
    return result;
}

FeatureMap constant_map(int c, int h, int w, Rng& rng) {
    FeatureMap map(c, h, w);
    for (int ch = 0; ch < c; ++ch) {
        const double value = rng.uniform();
        std::fill(map.plane(ch).begin(), map.plane(ch).end(), value);
    }
    return map;
}

nlohmann::json grid_values(const FeatureMap& map) {
    nlohmann::json channels = nlohmann::json::array();
    for (int c = 0; c < map.channels(); ++c) {
        nlohmann::json rows = nlohmann::json::array();
        for (int y = 0; y < map.height(); ++y) {
            const auto row = map.row(c, y);
            rows.push_back(std::vector<double>(row.begin(), row.end()));
        }
        channels.push_back(std::move(rows));
    }
    return channels;
}

}  // namespace

bool CheckReport::pass() const noexcept {
    return std::all_of(properties.begin(), properties.end(), [](const PropertyResult& p) { return p.pass; });
}

CheckReport run_invariant_suite(std::uint64_t seed, int n) {
    CheckReport report;
    report.seed = seed;
    auto& props = report.properties;

    props.push_back(run_property("degeneration_equivalence", 1e-8, n, seed, 1, [](Rng& rng) {
        const RandomInstance inst = random_instance(rng);
        const DranConfig cfg = uniform_config(3, {PyramidLevel::fixed(1)},
                                              rng.integer(0, 1) ? GateMode::Spatial : GateMode::Scalar);
        const GateSet gates = random_gates(cfg, inst.f.channels(), rng.next());
        const FeatureMap got = dran_forward(inst.f, inst.v, inst.m_f, inst.m_v, cfg, gates).output;
        return max_abs_diff(got, moment_transfer_reference(inst.f, inst.v, inst.m_f, inst.m_v, cfg.epsilon));
    }));

    props.push_back(run_property("degeneration_equivalence_masked", 1e-8, n, seed, 2, [](Rng& rng) {
        const RandomInstance inst = random_instance(rng);
        DranConfig cfg = uniform_config(3, {PyramidLevel::fixed(1)});
        cfg.masked_stats = true;
        const FeatureMap got = dran_forward(inst.f, inst.v, inst.m_f, inst.m_v, cfg, {}).output;
        return max_abs_diff(got, moment_transfer_reference(inst.f, inst.v, inst.m_f, inst.m_v, cfg.epsilon, true));
    }));

    props.push_back(run_property("gate_simplex", 1e-12, n, seed, 3, [](Rng& rng) {
        const int c = rng.integer(1, 3);
        const int h = rng.integer(1, 12);
        const int w = rng.integer(1, 12);
        const int k = rng.integer(1, 4);
        const GateMode mode = rng.integer(0, 1) ? GateMode::Spatial : GateMode::Scalar;
        const GateParams theta = GateParams::random(k, 2 * c, mode, rng.next(), 3.0);
        const GateWeights wts = gate_forward(random_map(rng, c, h, w, -2.0, 2.0),
                                             random_map(rng, c, h, w, -2.0, 2.0), theta,
                                             rng.integer(0, 1) ? ConcatOrder::SourceFirst
                                                               : ConcatOrder::ReferenceFirst);
        double worst = 0.0;
        for (int y = 0; y < (mode == GateMode::Scalar ? 1 : h); ++y) {
            for (int x = 0; x < (mode == GateMode::Scalar ? 1 : w); ++x) {
                double total = 0.0;
                for (int b = 0; b < k; ++b) {
                    const double a = wts.at(b, y, x);
                    if (a < 0.0) worst = INFINITY;
                    total += a;
                }
                worst = std::max(worst, std::abs(total - 1.0));
            }
        }
        return worst;
    }));

    props.push_back(run_property("fusion_convex_bounds", 1e-12, n, seed, 4, [](Rng& rng) {
        const int c = rng.integer(1, 3);
        const int h = rng.integer(1, 10);
        const int w = rng.integer(1, 10);
        const int k = rng.integer(1, 4);
        const GateMode mode = rng.integer(0, 1) ? GateMode::Spatial : GateMode::Scalar;
        const GateParams theta = GateParams::random(k, 2 * c, mode, rng.next(), 2.0);
        const GateWeights wts =
            gate_forward(random_map(rng, c, h, w), random_map(rng, c, h, w), theta, ConcatOrder::SourceFirst);
        std::vector<FeatureMap> branches;
        for (int b = 0; b < k; ++b) branches.push_back(random_map(rng, c, h, w, -5.0, 5.0));
        const FeatureMap fused = fuse_params(wts, branches);
        double worst = 0.0;
        for (std::size_t i = 0; i < fused.size(); ++i) {
            double lo = INFINITY;
            double hi = -INFINITY;
            for (const FeatureMap& m : branches) {
                lo = std::min(lo, m.data()[i]);
                hi = std::max(hi, m.data()[i]);
            }
            const double v = fused.data()[i];
            worst = std::max({worst, lo - v, v - hi});
        }
        return worst;
    }));

    props.push_back(run_property("block_partition", 0.0, n, seed, 5, [](Rng& rng) {
        const int h = rng.integer(1, 40);
        const int w = rng.integer(1, 40);
        const Grid grid{rng.integer(1, h), rng.integer(1, w)};
        std::vector<int> hits(static_cast<std::size_t>(h * w), 0);
        for (int i = 0; i < grid.rows; ++i) {
            const Span1D rows = block_span(h, grid.rows, i);
            for (int j = 0; j < grid.cols; ++j) {
                const Span1D cols = block_span(w, grid.cols, j);
                if (rows.end <= rows.begin || cols.end <= cols.begin) return 1.0;
                for (int y = rows.begin; y < rows.end; ++y) {
                    for (int x = cols.begin; x < cols.end; ++x) ++hits[static_cast<std::size_t>(y * w + x)];
                }
            }
        }
        return static_cast<double>(std::count_if(hits.begin(), hits.end(), [](int v) { return v != 1; }));
    }));

    props.push_back(run_property("passthrough", 0.0, n, seed, 6, [](Rng& rng) {
        const RandomInstance inst = random_instance(rng);
        const int k = rng.integer(1, 3);
        // Region 1 is left unconfigured so that it also passes through.
        DranConfig cfg = uniform_config(3, random_levels(rng, k));
        cfg.regions.erase(1);
        const GateSet gates = random_gates(cfg, inst.f.channels(), rng.next());
        const DranResult result = dran_forward(inst.f, inst.v, inst.m_f, inst.m_v, cfg, gates);
        double mismatches = 0.0;
        for (int y = 0; y < inst.f.height(); ++y) {
            for (int x = 0; x < inst.f.width(); ++x) {
                const int label = inst.m_f.at(y, x);
                if (std::find(result.processed.begin(), result.processed.end(), label) != result.processed.end()) {
                    continue;
                }
                for (int c = 0; c < inst.f.channels(); ++c) {
                    const double a = result.output.at(c, y, x);
                    const double b = inst.f.at(c, y, x);
                    if (std::memcmp(&a, &b, sizeof a) != 0) mismatches += 1.0;
                }
            }
        }
        return mismatches;
    }));

    props.push_back(run_property("self_transfer_idempotence", 1e-8, n, seed, 7, [](Rng& rng) {
        const RandomInstance inst = random_instance(rng);
        const GateMode mode = rng.integer(0, 1) ? GateMode::Spatial : GateMode::Scalar;
        const DranConfig cfg = uniform_config(3, random_levels(rng, rng.integer(1, 3)), mode);
        const FeatureMap got = dran_forward(inst.f, inst.f, inst.m_f, inst.m_f, cfg, {}).output;
        return max_abs_diff(got, inst.f);
    }));

    props.push_back(run_property("crop_merge_identity", 0.0, n, seed, 8, [](Rng& rng) {
        const RandomInstance inst = random_instance(rng);
        FeatureMap merged = inst.f;
        for (int id : region_set(inst.m_f)) {
            const RegionCrop crop = region_bbox_crop(inst.f, inst.m_f, id);
            merge_region_into(merged, crop.feature, crop);
        }
        return merged == inst.f ? 0.0 : 1.0;
    }));

    props.push_back(run_property("constant_region_finiteness", 0.0, n, seed, 9, [](Rng& rng) {
        const RandomInstance inst = random_instance(rng);
        const FeatureMap f = constant_map(inst.f.channels(), inst.f.height(), inst.f.width(), rng);
        const FeatureMap v = constant_map(inst.v.channels(), inst.v.height(), inst.v.width(), rng);
        const GateMode mode = rng.integer(0, 1) ? GateMode::Spatial : GateMode::Scalar;
        const DranConfig cfg = uniform_config(3, random_levels(rng, rng.integer(1, 3)), mode);
        const GateSet gates = random_gates(cfg, f.channels(), rng.next());
        const FeatureMap out = dran_forward(f, v, inst.m_f, inst.m_v, cfg, gates).output;
        return out.all_finite() ? 0.0 : 1.0;
    }));

    return report;
}

nlohmann::json region_stats_json(const FeatureMap& image, const SegMask& mask, const DranConfig& cfg) {
    cfg.validate();
    nlohmann::json regions = nlohmann::json::array();
    for (int id : region_set(mask)) {
        const auto spec = cfg.regions.find(id);
        if (spec == cfg.regions.end()) continue;
        const RegionCrop crop = region_bbox_crop(image, mask, id);
        nlohmann::json branches = nlohmann::json::array();
        for (const PyramidLevel& level : spec->second.levels) {
            const Grid grid = resolve_level(level, crop.bbox.height, crop.bbox.width);
            const LevelStats stats = cfg.masked_stats
                                         ? level_stats_masked(crop.feature, crop.binary_mask, grid, cfg.epsilon)
                                         : level_stats(crop.feature, grid, cfg.epsilon);
            nlohmann::json level_doc = level.is_half() ? nlohmann::json("half") : nlohmann::json(level.blocks());
            branches.push_back(nlohmann::json{{"level", level_doc},
                                              {"grid", {grid.rows, grid.cols}},
                                              {"rho", grid_values(stats.rho)},
                                              {"tau", grid_values(stats.tau)}});
        }
        regions.push_back(nlohmann::json{
            {"id", id},
            {"name", spec->second.name},
            {"bbox", {crop.bbox.row0, crop.bbox.col0, crop.bbox.height, crop.bbox.width}},
            {"branches", std::move(branches)}});
    }
    return nlohmann::json{{"epsilon", cfg.epsilon}, {"masked_stats", cfg.masked_stats}, {"regions", regions}};
}

}  // namespace dran
