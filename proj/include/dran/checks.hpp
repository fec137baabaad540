#pragma once

// Cross-module invariant suite run by `dran check`.

#include <cstdint>
#include <string>
#include <vector>

#include <json.hpp>

#include "dran/config.hpp"
#include "dran/feature_map.hpp"

namespace dran {

struct PropertyResult {
    std::string name;
    int instances = 0;
    double max_error = 0.0;
    double tolerance = 0.0;
    bool pass = true;
};

struct CheckReport {
    std::uint64_t seed = 0;
    std::vector<PropertyResult> properties;
    bool pass() const noexcept;
};

CheckReport run_invariant_suite(std::uint64_t seed, int instances_per_property = 100);

/// Per-region, per-branch grid dims and rho/tau arrays of an image.
nlohmann::json region_stats_json(const FeatureMap& image, const SegMask& mask,
                                 const DranConfig& cfg);

}  // namespace dran
