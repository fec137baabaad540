#include "dran/config.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <fstream>
#include <sstream>
#include <utility>

#include "dran/error.hpp"

namespace dran {
namespace {

using nlohmann::json;

std::string lower(std::string text) {
    std::transform(text.begin(), text.end(), text.begin(),
                   [](unsigned char ch) { return static_cast<char>(std::tolower(ch)); });
    return text;
}

json read_json_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open " + path);
    try {
        return json::parse(in);
    } catch (const json::parse_error& e) {
        throw ConfigError(path + ": " + e.what());
    }
}

int parse_region_key(const std::string& key) {
    std::size_t used = 0;
    int id = 0;
    try {
        id = std::stoi(key, &used);
    } catch (const std::exception&) {
        used = 0;
    }
    if (used != key.size() || id < 1 || id > 255) {
        throw ConfigError("region key '" + key + "' is not an id in 1..255");
    }
    return id;
}

PyramidLevel parse_level(const json& item) {
    if (item.is_string()) {
        const std::string text = lower(item.get<std::string>());
        if (text == "half" || text == "n/2") return PyramidLevel::half();
        throw ConfigError("unknown pyramid level '" + item.get<std::string>() + "'");
    }
    if (item.is_number_integer() || item.is_number_unsigned()) {
        const auto blocks = item.get<long long>();
        if (blocks < 1 || blocks > 4096) throw ConfigError("pyramid level out of range");
        return PyramidLevel::fixed(static_cast<int>(blocks));
    }
    throw ConfigError("pyramid levels must be positive integers or \"half\"");
}

json level_to_json(const PyramidLevel& level) {
    if (level.is_half()) return "half";
    return level.blocks();
}

GateParams parse_gate(const json& doc, const std::string& where) {
    try {
        GateParams theta;
        theta.mode = parse_gate_mode(doc.at("mode").get<std::string>());
        theta.conv.out_channels = doc.at("branches").get<int>();
        theta.conv.in_channels = doc.at("in_channels").get<int>();
        theta.conv.kernel = doc.at("kernel").get<std::vector<double>>();
        theta.conv.bias = doc.at("bias").get<std::vector<double>>();
        theta.conv.validate();
        return theta;
    } catch (const json::exception& e) {
        throw ConfigError(where + ": " + e.what());
    } catch (const InvalidArgument& e) {
        throw ConfigError(where + ": " + e.what());
    }
}

json gate_to_json(const GateParams& theta) {
    return json{{"mode", to_string(theta.mode)},
                {"branches", theta.conv.out_channels},
                {"in_channels", theta.conv.in_channels},
                {"kernel", theta.conv.kernel},
                {"bias", theta.conv.bias}};
}

void check_gate_shape(const GateParams& theta, int id, const char* pair, std::size_t branches,
                      int channels) {
    if (static_cast<std::size_t>(theta.branches()) != branches || theta.in_channels() != 2 * channels) {
        throw ConfigError("gate " + std::to_string(id) + "/" + pair + " has shape " +
                          std::to_string(theta.branches()) + "x" + std::to_string(theta.in_channels()) +
                          ", expected " + std::to_string(branches) + "x" + std::to_string(2 * channels));
    }
}

}  // namespace

std::vector<PyramidLevel> coarse_region_levels() {
    return {PyramidLevel::fixed(1), PyramidLevel::half()};
}

std::vector<PyramidLevel> detail_region_levels() {
    return {PyramidLevel::fixed(1), PyramidLevel::fixed(6), PyramidLevel::half()};
}

void DranConfig::validate() const {
    if (!(epsilon > 0.0) || !std::isfinite(epsilon)) throw ConfigError("epsilon must be positive");
    for (const auto& [id, spec] : regions) {
        if (id < 1 || id > 255) throw ConfigError("region id " + std::to_string(id) + " outside 1..255");
        if (spec.levels.empty()) {
            throw ConfigError("region " + std::to_string(id) + " needs at least one pyramid level");
        }
    }
}

DranConfig DranConfig::from_json(const json& doc) {
    if (!doc.is_object()) throw ConfigError("config must be a JSON object");
    DranConfig cfg;
    try {
        if (doc.contains("epsilon")) cfg.epsilon = doc.at("epsilon").get<double>();
        if (doc.contains("resize")) cfg.resize = parse_resize_mode(doc.at("resize").get<std::string>());
        if (doc.contains("gate")) cfg.gate = parse_gate_mode(doc.at("gate").get<std::string>());
        if (doc.contains("masked_stats")) cfg.masked_stats = doc.at("masked_stats").get<bool>();
        const json& regions = doc.at("regions");
        if (!regions.is_object()) throw ConfigError("\"regions\" must be an object keyed by id");
        for (const auto& [key, entry] : regions.items()) {
            RegionSpec spec;
            spec.name = entry.value("name", std::string{});
            for (const json& item : entry.at("levels")) spec.levels.push_back(parse_level(item));
            cfg.regions.emplace(parse_region_key(key), std::move(spec));
        }
    } catch (const json::exception& e) {
        throw ConfigError(std::string("config: ") + e.what());
    } catch (const InvalidArgument& e) {
        throw ConfigError(std::string("config: ") + e.what());
    }
    cfg.validate();
    return cfg;
}

DranConfig DranConfig::load(const std::string& path) { return from_json(read_json_file(path)); }

json DranConfig::to_json() const {
    json regions_doc = json::object();
    for (const auto& [id, spec] : regions) {
        json levels = json::array();
        for (const PyramidLevel& level : spec.levels) levels.push_back(level_to_json(level));
        regions_doc[std::to_string(id)] = json{{"name", spec.name}, {"levels", levels}};
    }
    return json{{"epsilon", epsilon},
                {"resize", to_string(resize)},
                {"gate", to_string(gate)},
                {"masked_stats", masked_stats},
                {"regions", regions_doc}};
}

GateSet zero_gates(const DranConfig& cfg, int channels) {
    GateSet gates;
    for (const auto& [id, spec] : cfg.regions) {
        const int k = static_cast<int>(spec.levels.size());
        gates.emplace(id, RegionGates{GateParams::zeros(k, 2 * channels, cfg.gate),
                                      GateParams::zeros(k, 2 * channels, cfg.gate)});
    }
    return gates;
}

GateSet random_gates(const DranConfig& cfg, int channels, std::uint64_t seed, double scale) {
    GateSet gates;
    std::uint64_t stream = seed * 0x9E3779B97F4A7C15ULL;
    for (const auto& [id, spec] : cfg.regions) {
        const int k = static_cast<int>(spec.levels.size());
        GateParams reference = GateParams::random(k, 2 * channels, cfg.gate, ++stream, scale);
        GateParams source = GateParams::random(k, 2 * channels, cfg.gate, ++stream, scale);
        gates.emplace(id, RegionGates{std::move(reference), std::move(source)});
    }
    return gates;
}

void set_gate_mode(GateSet& gates, GateMode mode) {
    for (auto& [id, pair] : gates) {
        pair.reference.mode = mode;
        pair.source.mode = mode;
    }
}

void validate_gates(const GateSet& gates, const DranConfig& cfg, int channels) {
    for (const auto& [id, pair] : gates) {
        const auto it = cfg.regions.find(id);
        if (it == cfg.regions.end()) continue;
        check_gate_shape(pair.reference, id, "reference", it->second.levels.size(), channels);
        check_gate_shape(pair.source, id, "source", it->second.levels.size(), channels);
    }
}

json gates_to_json(const GateSet& gates) {
    json doc = json::object();
    for (const auto& [id, pair] : gates) {
        doc[std::to_string(id)] =
            json{{"reference", gate_to_json(pair.reference)}, {"source", gate_to_json(pair.source)}};
    }
    return json{{"gates", doc}};
}

GateSet gates_from_json(const json& doc) {
    if (!doc.is_object() || !doc.contains("gates") || !doc.at("gates").is_object()) {
        throw ConfigError("gate document must be an object with a \"gates\" object");
    }
    GateSet gates;
    for (const auto& [key, entry] : doc.at("gates").items()) {
        const int id = parse_region_key(key);
        if (!entry.contains("reference") || !entry.contains("source")) {
            throw ConfigError("gate " + key + " needs both \"reference\" and \"source\"");
        }
        // Named first: GCC 11 leaks earlier members when a later aggregate initializer throws.
        auto reference = parse_gate(entry.at("reference"), "gate " + key + "/reference");
        auto source = parse_gate(entry.at("source"), "gate " + key + "/source");
        gates.emplace(id, RegionGates{std::move(reference), std::move(source)});
    }
    return gates;
}

GateSet load_gates(const std::string& path) { return gates_from_json(read_json_file(path)); }

std::string to_string(ResizeMode mode) { return mode == ResizeMode::Bilinear ? "bilinear" : "nearest"; }

std::string to_string(GateMode mode) { return mode == GateMode::Scalar ? "scalar" : "spatial"; }

ResizeMode parse_resize_mode(const std::string& text) {
    const std::string t = lower(text);
    if (t == "bilinear") return ResizeMode::Bilinear;
    if (t == "nearest") return ResizeMode::Nearest;
    throw ConfigError("unknown resize mode '" + text + "'");
}

GateMode parse_gate_mode(const std::string& text) {
    const std::string t = lower(text);
    if (t == "scalar") return GateMode::Scalar;
    if (t == "spatial") return GateMode::Spatial;
    throw ConfigError("unknown gate mode '" + text + "'");
}

}  // namespace dran
