#include "dran/random.hpp"

#include <algorithm>
#include <string>

#include "dran/error.hpp"

namespace dran {

Rng::Rng(std::uint64_t seed, std::uint64_t stream) {
    std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                      static_cast<std::uint32_t>(stream), static_cast<std::uint32_t>(stream >> 32)};
    engine_.seed(seq);
}

FeatureMap random_map(Rng& rng, int channels, int height, int width, double lo, double hi) {
    FeatureMap map(channels, height, width);
    for (double& v : map.data()) v = rng.uniform(lo, hi);
    return map;
}

SegMask random_mask(Rng& rng, int height, int width, int regions) {
    if (regions < 1 || regions > 255 || regions > height * width) {
        throw InvalidArgument("random_mask: cannot place " + std::to_string(regions) + " regions");
    }
    SegMask mask(height, width);
    for (int id = 1; id <= regions; ++id) {
        const int pieces = rng.integer(1, 2);
        for (int p = 0; p < pieces; ++p) {
            const int h = rng.integer(1, std::max(1, height * 2 / 3));
            const int w = rng.integer(1, std::max(1, width * 2 / 3));
            const int y0 = rng.integer(0, height - h);
            const int x0 = rng.integer(0, width - w);
            for (int y = y0; y < y0 + h; ++y) {
                for (int x = x0; x < x0 + w; ++x) mask.at(y, x) = static_cast<std::uint8_t>(id);
            }
        }
    }
    // One guaranteed pixel per label, at distinct positions.
    std::vector<int> cells(static_cast<std::size_t>(height * width));
    for (std::size_t i = 0; i < cells.size(); ++i) cells[i] = static_cast<int>(i);
    for (int id = 1; id <= regions; ++id) {
        const int pick = rng.integer(id - 1, static_cast<int>(cells.size()) - 1);
        std::swap(cells[static_cast<std::size_t>(id - 1)], cells[static_cast<std::size_t>(pick)]);
        const int cell = cells[static_cast<std::size_t>(id - 1)];
        mask.at(cell / width, cell % width) = static_cast<std::uint8_t>(id);
    }
    return mask;
}

SegMask random_block_mask(Rng& rng, int height, int width, int regions) {
    const bool vertical = width >= height;
    const int extent = vertical ? width : height;
    if (regions < 1 || regions > extent) {
        throw InvalidArgument("random_block_mask: cannot place " + std::to_string(regions) + " regions");
    }
    SegMask mask(height, width);
    for (int id = 1; id <= regions; ++id) {
        const int lo = (id - 1) * extent / regions;
        const int hi = id * extent / regions;  // exclusive
        const int a0 = rng.integer(lo, hi - 1);
        const int a1 = rng.integer(a0, hi - 1);
        const int other = vertical ? height : width;
        const int b0 = rng.integer(0, other - 1);
        const int b1 = rng.integer(b0, other - 1);
        for (int a = a0; a <= a1; ++a) {
            for (int b = b0; b <= b1; ++b) {
                if (vertical) {
                    mask.at(b, a) = static_cast<std::uint8_t>(id);
                } else {
                    mask.at(a, b) = static_cast<std::uint8_t>(id);
                }
            }
        }
    }
    return mask;
}

RandomInstance random_instance(Rng& rng, const InstanceShape& shape) {
    const int channels = rng.integer(shape.min_channels, shape.max_channels);
    const int regions = rng.integer(shape.min_regions, shape.max_regions);
    const int h = rng.integer(shape.min_size, shape.max_size);
    const int w = rng.integer(shape.min_size, shape.max_size);
    const int hv = rng.integer(shape.min_size, shape.max_size);
    const int wv = rng.integer(shape.min_size, shape.max_size);
    RandomInstance inst;
    inst.f = random_map(rng, channels, h, w);
    inst.v = random_map(rng, channels, hv, wv);
    inst.m_f = random_mask(rng, h, w, regions);
    inst.m_v = random_mask(rng, hv, wv, regions);
    return inst;
}

std::vector<PyramidLevel> random_levels(Rng& rng, int k) {
    std::vector<PyramidLevel> levels{PyramidLevel::fixed(1)};
    for (int i = 1; i < k; ++i) {
        switch (rng.integer(0, 3)) {
            case 0: levels.push_back(PyramidLevel::fixed(2)); break;
            case 1: levels.push_back(PyramidLevel::fixed(3)); break;
            case 2: levels.push_back(PyramidLevel::fixed(6)); break;
            default: levels.push_back(PyramidLevel::half()); break;
        }
    }
    return levels;
}

DranConfig uniform_config(int regions, const std::vector<PyramidLevel>& levels, GateMode mode,
                          double epsilon) {
    DranConfig cfg;
    cfg.epsilon = epsilon;
    cfg.gate = mode;
    for (int id = 1; id <= regions; ++id) {
        cfg.regions.emplace(id, RegionSpec{"region" + std::to_string(id), levels});
    }
    return cfg;
}

}  // namespace dran
