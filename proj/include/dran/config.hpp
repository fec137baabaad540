#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include <json.hpp>

#include "dran/gating.hpp"
#include "dran/sapp.hpp"
#include "dran/tensor_ops.hpp"

namespace dran {

struct RegionSpec {
    std::string name;
    std::vector<PyramidLevel> levels;
};

struct DranConfig {
    std::map<int, RegionSpec> regions;
    double epsilon = 1e-5;
    ResizeMode resize = ResizeMode::Bilinear;
    GateMode gate = GateMode::Scalar;
    bool masked_stats = false;

    /// Throws ConfigError when a region has no levels, ids fall outside
    /// 1..255, or epsilon is not positive.
    void validate() const;

    static DranConfig from_json(const nlohmann::json& doc);
    static DranConfig load(const std::string& path);
    nlohmann::json to_json() const;
};

/// Default level recipes: two branches for broad regions, three for
/// detail-rich ones.
std::vector<PyramidLevel> coarse_region_levels();  // [1, half]
std::vector<PyramidLevel> detail_region_levels();  // [1, 6, half]

/// Gate parameters for one region: `reference` fuses (beta, gamma),
/// `source` fuses (mu, sigma).
struct RegionGates {
    GateParams reference;
    GateParams source;
};

using GateSet = std::map<int, RegionGates>;

GateSet zero_gates(const DranConfig& cfg, int channels);
GateSet random_gates(const DranConfig& cfg, int channels, std::uint64_t seed, double scale = 0.5);

/// Overrides the mode of every gate in the set.
void set_gate_mode(GateSet& gates, GateMode mode);

/// Checks K and 2C against the config for every gate present.
void validate_gates(const GateSet& gates, const DranConfig& cfg, int channels);

nlohmann::json gates_to_json(const GateSet& gates);
GateSet gates_from_json(const nlohmann::json& doc);
GateSet load_gates(const std::string& path);

std::string to_string(ResizeMode mode);
std::string to_string(GateMode mode);
ResizeMode parse_resize_mode(const std::string& text);
GateMode parse_gate_mode(const std::string& text);

}  // namespace dran
