#pragma once

// Reverse-mode gradients of dran_forward and the finite-difference harness
// used to validate them.

#include <cstdint>
#include <functional>
#include <span>
#include <string>
#include <vector>

#include <json.hpp>

#include "dran/config.hpp"
#include "dran/dran.hpp"

namespace dran {

struct RegionGateGrads {
    ConvWeights reference;
    ConvWeights source;
};

struct GradBundle {
    FeatureMap d_f;
    FeatureMap d_v;
    std::map<int, RegionGateGrads> d_theta;  // keyed like the effective gate set
};

/// <upstream, d dran_forward / d(f, v, theta)>. Masks are constants. Gates
/// missing from `gates` are treated as zeros and still receive gradients.
GradBundle dran_vjp(const FeatureMap& f, const FeatureMap& v, const SegMask& m_f,
                    const SegMask& m_v, const DranConfig& cfg, const GateSet& gates,
                    const FeatureMap& upstream);

/// Central differences (g(x + h e_i) - g(x - h e_i)) / 2h for every i.
std::vector<double> finite_diff_grad(const std::function<double(std::span<const double>)>& fn,
                                     std::span<const double> x, double step);

/// max(|a|, |b|, 1e-8) denominator.
double relative_error(double a, double b) noexcept;

struct GroupError {
    double max_rel_err = 0.0;
    std::size_t coordinates = 0;
};

struct TrialRecord {
    int trial = 0;
    int channels = 0;
    int height = 0;
    int width = 0;
    std::string gate_mode;
    std::vector<std::string> region_levels;  // e.g. "1:[1,half]"
    GroupError f;
    GroupError v;
    GroupError theta;
    bool pass = true;
};

struct GradcheckReport {
    std::uint64_t seed = 0;
    int trials = 0;
    double step = 1e-5;
    double tolerance = 1e-5;
    GroupError f;
    GroupError v;
    GroupError theta;
    std::vector<TrialRecord> records;
    bool pass = true;

    nlohmann::json to_json() const;
};

/// Randomized analytic-vs-finite-difference comparison across gate modes,
/// level lists and region counts. Bilinear resize only.
GradcheckReport gradcheck_report(std::uint64_t seed, int trials, double step = 1e-5,
                                 double tolerance = 1e-5);

}  // namespace dran
