#include "dran/autodiff.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "dran/error.hpp"
#include "dran/random.hpp"
#include "dran_internal.hpp"

namespace dran {
namespace {

using detail::FusedPair;
using detail::RegionTape;

void add_into(FeatureMap& dst, const FeatureMap& src) {
    auto d = dst.data();
    const auto s = src.data();
    for (std::size_t i = 0; i < d.size(); ++i) d[i] += s[i];
}

void add_into(ConvWeights& dst, const ConvWeights& src) {
    for (std::size_t i = 0; i < dst.kernel.size(); ++i) dst.kernel[i] += src.kernel[i];
    for (std::size_t i = 0; i < dst.bias.size(); ++i) dst.bias[i] += src.bias[i];
}

struct SideGrads {
    FeatureMap stats_input;  // gradient on the crop the statistics were taken from
    FeatureMap f_r;          // through the gate inputs
    FeatureMap v_aligned;
    ConvWeights theta;
};

SideGrads backward_side(const FusedPair& pair, const FeatureMap& stats_source,
                        std::span<const std::uint8_t> stats_mask, const GateParams& theta,
                        const DranConfig& cfg, const FeatureMap& grad_shift,
                        const FeatureMap& grad_scale) {
    std::vector<FeatureMap> grad_shift_branches;
    std::vector<FeatureMap> grad_scale_branches;
    GateWeights grad_shift_weights;
    GateWeights grad_scale_weights;
    fuse_params_backward(pair.shift_weights, pair.shift_branches, grad_shift, grad_shift_branches,
                         grad_shift_weights);
    fuse_params_backward(pair.scale_weights, pair.scale_branches, grad_scale, grad_scale_branches,
                         grad_scale_weights);

    GateGrads shift_gate = gate_backward(theta, detail::kShiftOrder, pair.shift_trace,
                                         pair.shift_weights, grad_shift_weights);
    GateGrads scale_gate = gate_backward(theta, detail::kScaleOrder, pair.scale_trace,
                                         pair.scale_weights, grad_scale_weights);

    SideGrads grads;
    grads.stats_input = FeatureMap(stats_source.channels(), stats_source.height(), stats_source.width());
    const std::span<const std::uint8_t> mask =
        cfg.masked_stats ? stats_mask : std::span<const std::uint8_t>{};
    for (std::size_t k = 0; k < pair.pyramid.branches.size(); ++k) {
        const BranchParams& branch = pair.pyramid.branches[k];
        const FeatureMap grad_rho =
            resize_backward(grad_shift_branches[k], branch.grid.rows, branch.grid.cols, cfg.resize);
        const FeatureMap grad_tau =
            resize_backward(grad_scale_branches[k], branch.grid.rows, branch.grid.cols, cfg.resize);
        level_stats_backward(stats_source, mask, branch.grid, branch.stats, grad_rho, grad_tau,
                             grads.stats_input);
    }

    grads.f_r = std::move(shift_gate.f_r);
    add_into(grads.f_r, scale_gate.f_r);
    grads.v_aligned = std::move(shift_gate.v_r);
    add_into(grads.v_aligned, scale_gate.v_r);
    grads.theta = std::move(shift_gate.theta);
    add_into(grads.theta, scale_gate.theta);
    return grads;
}

void scatter_add(FeatureMap& dst, const FeatureMap& src, const BBox& box) {
    for (int c = 0; c < src.channels(); ++c) {
        for (int y = 0; y < box.height; ++y) {
            auto d = dst.row(c, box.row0 + y);
            const auto s = src.row(c, y);
            for (int x = 0; x < box.width; ++x) d[static_cast<std::size_t>(box.col0 + x)] += s[static_cast<std::size_t>(x)];
        }
    }
}

void track(GroupError& group, double err) {
    group.max_rel_err = std::max(group.max_rel_err, err);
    ++group.coordinates;
}

void merge_group(GroupError& total, const GroupError& part) {
    total.max_rel_err = std::max(total.max_rel_err, part.max_rel_err);
    total.coordinates += part.coordinates;
}

nlohmann::json group_json(const GroupError& g) {
    return nlohmann::json{{"max_rel_err", g.max_rel_err}, {"coordinates", g.coordinates}};
}

// Flattened view of every gate parameter in a set, in map order.
std::vector<double*> gate_slots(GateSet& gates) {
    std::vector<double*> slots;
    for (auto& [id, pair] : gates) {
        for (GateParams* theta : {&pair.reference, &pair.source}) {
            for (double& w : theta->conv.kernel) slots.push_back(&w);
            for (double& b : theta->conv.bias) slots.push_back(&b);
        }
    }
    return slots;
}

std::vector<double> flatten(const std::map<int, RegionGateGrads>& grads) {
    std::vector<double> flat;
    for (const auto& [id, pair] : grads) {
        for (const ConvWeights* w : {&pair.reference, &pair.source}) {
            flat.insert(flat.end(), w->kernel.begin(), w->kernel.end());
            flat.insert(flat.end(), w->bias.begin(), w->bias.end());
        }
    }
    return flat;
}

}  // namespace

GradBundle dran_vjp(const FeatureMap& f, const FeatureMap& v, const SegMask& m_f,
                    const SegMask& m_v, const DranConfig& cfg, const GateSet& gates,
                    const FeatureMap& upstream) {
    detail::check_inputs(f, v, m_f, m_v);
    cfg.validate();
    if (!upstream.same_shape(f)) throw InvalidArgument("dran_vjp: upstream shape must match f");

    GradBundle grads{FeatureMap(f.channels(), f.height(), f.width()),
                     FeatureMap(v.channels(), v.height(), v.width()), {}};
    std::vector<std::uint8_t> replaced(f.plane_size(), 0);

    for (const detail::RegionPlan& region : detail::plan_regions(m_f, m_v, cfg, nullptr)) {
        const RegionCrop f_crop = region_bbox_crop(f, m_f, region.id);
        const RegionCrop v_crop = region_bbox_crop(v, m_v, region.id);
        const RegionGates theta = detail::gates_for(gates, region.id, *region.spec, cfg, f.channels());
        RegionTape tape;
        detail::run_region(f_crop, v_crop, *region.spec, cfg, theta, &tape);

        const FeatureMap& f_r = f_crop.feature;
        const BBox& box = f_crop.bbox;
        const int channels = f_r.channels();
        FeatureMap grad_f_r(channels, box.height, box.width);
        FeatureMap grad_mu(channels, box.height, box.width);
        FeatureMap grad_sigma(channels, box.height, box.width);
        FeatureMap grad_gamma(channels, box.height, box.width);
        FeatureMap grad_beta(channels, box.height, box.width);
        for (int y = 0; y < box.height; ++y) {
            for (int x = 0; x < box.width; ++x) {
                if (!f_crop.inside(y, x)) continue;
                replaced[static_cast<std::size_t>(box.row0 + y) * static_cast<std::size_t>(f.width()) +
                         static_cast<std::size_t>(box.col0 + x)] = 1;
                for (int c = 0; c < channels; ++c) {
                    const double g = upstream.at(c, box.row0 + y, box.col0 + x);
                    const double sigma = tape.source.scale.at(c, y, x);
                    const double gamma = tape.reference.scale.at(c, y, x);
                    const double whitened = (f_r.at(c, y, x) - tape.source.shift.at(c, y, x)) / sigma;
                    grad_f_r.at(c, y, x) = g * gamma / sigma;
                    grad_mu.at(c, y, x) = -g * gamma / sigma;
                    grad_sigma.at(c, y, x) = -g * gamma * whitened / sigma;
                    grad_gamma.at(c, y, x) = g * whitened;
                    grad_beta.at(c, y, x) = g;
                }
            }
        }

        SideGrads source = backward_side(tape.source, f_r, f_crop.binary_mask, theta.source, cfg,
                                         grad_mu, grad_sigma);
        SideGrads reference = backward_side(tape.reference, v_crop.feature, v_crop.binary_mask,
                                            theta.reference, cfg, grad_beta, grad_gamma);

        add_into(grad_f_r, source.stats_input);
        add_into(grad_f_r, source.f_r);
        add_into(grad_f_r, reference.f_r);

        FeatureMap grad_v_aligned = std::move(source.v_aligned);
        add_into(grad_v_aligned, reference.v_aligned);
        FeatureMap grad_v_r = std::move(reference.stats_input);
        add_into(grad_v_r, resize_backward(grad_v_aligned, v_crop.bbox.height, v_crop.bbox.width, cfg.resize));

        scatter_add(grads.d_f, grad_f_r, f_crop.bbox);
        scatter_add(grads.d_v, grad_v_r, v_crop.bbox);
        grads.d_theta.emplace(region.id, RegionGateGrads{std::move(reference.theta), std::move(source.theta)});
    }

    for (int c = 0; c < f.channels(); ++c) {
        auto d = grads.d_f.plane(c);
        const auto u = upstream.plane(c);
        for (std::size_t p = 0; p < replaced.size(); ++p) {
            if (replaced[p] == 0) d[p] += u[p];
        }
    }
    return grads;
}

std::vector<double> finite_diff_grad(const std::function<double(std::span<const double>)>& fn,
                                     std::span<const double> x, double step) {
    if (!(step > 0.0)) throw InvalidArgument("finite_diff_grad: step must be positive");
    std::vector<double> point(x.begin(), x.end());
    std::vector<double> grad(x.size());
    for (std::size_t i = 0; i < x.size(); ++i) {
        const double original = point[i];
        point[i] = original + step;
        const double up = fn(point);
        point[i] = original - step;
        const double down = fn(point);
        point[i] = original;
        grad[i] = (up - down) / (2.0 * step);
    }
    return grad;
}

double relative_error(double a, double b) noexcept {
    return std::abs(a - b) / std::max({std::abs(a), std::abs(b), 1e-8});
}

nlohmann::json GradcheckReport::to_json() const {
    nlohmann::json trials_doc = nlohmann::json::array();
    for (const TrialRecord& r : records) {
        trials_doc.push_back(nlohmann::json{
            {"trial", r.trial},
            {"shape", {r.channels, r.height, r.width}},
            {"gate", r.gate_mode},
            {"regions", r.region_levels},
            {"max_rel_err", {{"f", r.f.max_rel_err}, {"v", r.v.max_rel_err}, {"theta", r.theta.max_rel_err}}},
            {"pass", r.pass}});
    }
    return nlohmann::json{{"seed", seed},
                          {"trials", trials},
                          {"step", step},
                          {"tolerance", tolerance},
                          {"groups", {{"f", group_json(f)}, {"v", group_json(v)}, {"theta", group_json(theta)}}},
                          {"records", trials_doc},
                          {"pass", pass}};
}

GradcheckReport gradcheck_report(std::uint64_t seed, int trials, double step, double tolerance) {
    if (trials < 1) throw InvalidArgument("gradcheck needs at least one trial");
    GradcheckReport report;
    report.seed = seed;
    report.trials = trials;
    report.step = step;
    report.tolerance = tolerance;

    for (int trial = 0; trial < trials; ++trial) {
        Rng rng(seed, static_cast<std::uint64_t>(trial));
        TrialRecord record;
        record.trial = trial;
        record.channels = rng.integer(1, 2);
        record.height = rng.integer(5, 8);
        record.width = rng.integer(5, 8);
        const int regions = 1 + trial % 3;

        DranConfig cfg;
        cfg.gate = trial % 2 == 0 ? GateMode::Scalar : GateMode::Spatial;
        cfg.masked_stats = trial % 4 == 3;
        for (int id = 1; id <= regions; ++id) {
            const int k = 1 + (trial + id) % 3;
            std::vector<PyramidLevel> levels{PyramidLevel::fixed(1)};
            if (k == 3) levels.push_back(PyramidLevel::fixed(rng.integer(2, 3)));
            if (k >= 2) levels.push_back(PyramidLevel::half());
            std::string desc = std::to_string(id) + ":[";
            for (std::size_t i = 0; i < levels.size(); ++i) {
                desc += (i ? "," : "") + levels[i].to_string();
            }
            record.region_levels.push_back(desc + "]");
            cfg.regions.emplace(id, RegionSpec{"r" + std::to_string(id), std::move(levels)});
        }
        record.gate_mode = to_string(cfg.gate) + (cfg.masked_stats ? "+masked" : "");

        const int ref_h = rng.integer(5, 8);
        const int ref_w = rng.integer(5, 8);
        const FeatureMap f = random_map(rng, record.channels, record.height, record.width);
        const FeatureMap v = random_map(rng, record.channels, ref_h, ref_w);
        const SegMask m_f = random_mask(rng, record.height, record.width, regions);
        const SegMask m_v = random_mask(rng, ref_h, ref_w, regions);
        GateSet gates = random_gates(cfg, record.channels, rng.next(), 0.5);
        const FeatureMap upstream = random_map(rng, record.channels, record.height, record.width, -1.0, 1.0);

        const GradBundle analytic = dran_vjp(f, v, m_f, m_v, cfg, gates, upstream);
        const FeatureMap base = dran_forward(f, v, m_f, m_v, cfg, gates).output;
        // <upstream, out(x) - out(x0)>: terms untouched by a perturbation vanish exactly.
        const auto scalarize = [&](const FeatureMap& out) {
            double total = 0.0;
            const auto o = out.data();
            const auto b = base.data();
            const auto u = upstream.data();
            for (std::size_t i = 0; i < o.size(); ++i) total += u[i] * (o[i] - b[i]);
            return total;
        };

        const auto fd_f = finite_diff_grad(
            [&](std::span<const double> x) {
                const FeatureMap probe(f.channels(), f.height(), f.width(), std::vector<double>(x.begin(), x.end()));
                return scalarize(dran_forward(probe, v, m_f, m_v, cfg, gates).output);
            },
            f.data(), step);
        const auto fd_v = finite_diff_grad(
            [&](std::span<const double> x) {
                const FeatureMap probe(v.channels(), v.height(), v.width(), std::vector<double>(x.begin(), x.end()));
                return scalarize(dran_forward(f, probe, m_f, m_v, cfg, gates).output);
            },
            v.data(), step);

        GateSet probe_gates = gates;
        std::vector<double*> slots = gate_slots(probe_gates);
        std::vector<double> theta0(slots.size());
        for (std::size_t i = 0; i < slots.size(); ++i) theta0[i] = *slots[i];
        const auto fd_theta = finite_diff_grad(
            [&](std::span<const double> x) {
                for (std::size_t i = 0; i < slots.size(); ++i) *slots[i] = x[i];
                return scalarize(dran_forward(f, v, m_f, m_v, cfg, probe_gates).output);
            },
            theta0, step);

        const auto d_f = analytic.d_f.data();
        for (std::size_t i = 0; i < fd_f.size(); ++i) track(record.f, relative_error(d_f[i], fd_f[i]));
        const auto d_v = analytic.d_v.data();
        for (std::size_t i = 0; i < fd_v.size(); ++i) track(record.v, relative_error(d_v[i], fd_v[i]));
        // Every configured region appears in both masks, so d_theta covers the
        // whole gate set in the same order.
        const std::vector<double> d_theta = flatten(analytic.d_theta);
        if (d_theta.size() != fd_theta.size()) {
            throw Error("gradcheck: gate gradient layout mismatch");
        }
        for (std::size_t i = 0; i < fd_theta.size(); ++i) {
            track(record.theta, relative_error(d_theta[i], fd_theta[i]));
        }

        record.pass = record.f.max_rel_err <= tolerance && record.v.max_rel_err <= tolerance &&
                      record.theta.max_rel_err <= tolerance;
        merge_group(report.f, record.f);
        merge_group(report.v, record.v);
        merge_group(report.theta, record.theta);
        report.pass = report.pass && record.pass;
        report.records.push_back(std::move(record));
    }
    return report;
}

}  // namespace dran
