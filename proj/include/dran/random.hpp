#pragma once

// Seeded instance generators shared by the invariant suite, the gradient
// check and the tests. Output depends only on the seed.

#include <cstdint>
#include <random>
#include <vector>

#include "dran/config.hpp"
#include "dran/feature_map.hpp"

namespace dran {

class Rng {
public:
    explicit Rng(std::uint64_t seed) : engine_(seed) {}
    Rng(std::uint64_t seed, std::uint64_t stream);

    /// Uniform in [0, 1) with 53 random bits.
    double uniform() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }
    double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }
    /// Uniform integer in [lo, hi].
    int integer(int lo, int hi) {
        return lo + static_cast<int>(engine_() % static_cast<std::uint64_t>(hi - lo + 1));
    }
    std::uint64_t next() { return engine_(); }

private:
    std::mt19937_64 engine_;
};

FeatureMap random_map(Rng& rng, int channels, int height, int width, double lo = 0.0,
                      double hi = 1.0);

/// Labels 1..regions, each region at least one pixel, some background.
/// Regions are unions of random rectangles so their boxes overlap and
/// contain foreign pixels.
SegMask random_mask(Rng& rng, int height, int width, int regions);

/// Mask whose regions are disjoint axis-aligned rectangles.
SegMask random_block_mask(Rng& rng, int height, int width, int regions);

struct RandomInstance {
    FeatureMap f;
    FeatureMap v;
    SegMask m_f;
    SegMask m_v;
};

struct InstanceShape {
    int min_channels = 1;
    int max_channels = 3;
    int min_size = 4;
    int max_size = 16;
    int min_regions = 1;
    int max_regions = 3;
};

RandomInstance random_instance(Rng& rng, const InstanceShape& shape = {});

/// Random level list of length k drawn from {1, 2, 3, 6, half}; the first
/// level is always 1.
std::vector<PyramidLevel> random_levels(Rng& rng, int k);

/// Config with one region entry per label in 1..regions.
DranConfig uniform_config(int regions, const std::vector<PyramidLevel>& levels,
                          GateMode mode = GateMode::Scalar, double epsilon = 1e-5);

}  // namespace dran
