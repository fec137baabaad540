#pragma once

// Spatiality-aware pyramid pooling: each branch tiles a region crop into a
// grid of blocks, takes per-block mean (rho) and sqrt(variance + eps) (tau),
// and resizes both grids to the target crop size.

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "dran/feature_map.hpp"
#include "dran/tensor_ops.hpp"

namespace dran {

/// Nominal pyramid level: a fixed block count per axis, or "half" which
/// resolves to ceil(dim / 2) blocks per axis.
class PyramidLevel {
public:
    static PyramidLevel fixed(int blocks);
    static PyramidLevel half() noexcept { return PyramidLevel(0, true); }

    bool is_half() const noexcept { return half_; }
    int blocks() const noexcept { return blocks_; }
    std::string to_string() const;

    friend bool operator==(const PyramidLevel&, const PyramidLevel&) = default;

private:
    PyramidLevel(int blocks, bool half) : blocks_(blocks), half_(half) {}
    int blocks_;
    bool half_;
};

struct Grid {
    int rows = 1;
    int cols = 1;
    friend bool operator==(const Grid&, const Grid&) = default;
};

Grid resolve_level(const PyramidLevel& level, int height, int width);

/// Half-open range [begin, end) of block `i` when `n` items are split into
/// `blocks` pieces: begin = floor(i * n / blocks).
struct Span1D {
    int begin;
    int end;
};
Span1D block_span(int n, int blocks, int i) noexcept;

struct LevelStats {
    FeatureMap rho;  // C x rows x cols
    FeatureMap tau;  // C x rows x cols, >= sqrt(eps)
};

/// Block means and standard deviations over every pixel of each block.
LevelStats level_stats(const FeatureMap& v, Grid grid, double epsilon);

/// Same statistics restricted to pixels where mask != 0. A block that holds
/// no mask pixels takes the statistics of all mask pixels in the crop.
LevelStats level_stats_masked(const FeatureMap& v, std::span<const std::uint8_t> mask, Grid grid,
                              double epsilon);

struct AlignedParams {
    FeatureMap shift;  // resized rho
    FeatureMap scale;  // resized tau
};

AlignedParams align_params(const FeatureMap& rho, const FeatureMap& tau, int target_h,
                           int target_w, ResizeMode mode = ResizeMode::Bilinear);

struct BranchParams {
    PyramidLevel level;
    Grid grid;
    LevelStats stats;
    AlignedParams aligned;
};

struct PyramidParams {
    std::vector<BranchParams> branches;
};

struct SappOptions {
    double epsilon = 1e-5;
    ResizeMode resize = ResizeMode::Bilinear;
    /// When non-empty, statistics use only pixels with mask != 0.
    std::span<const std::uint8_t> mask = {};
};

PyramidParams sapp_forward(const FeatureMap& v, std::span<const PyramidLevel> levels,
                           int target_h, int target_w, const SappOptions& options = {});

/// Gradient of the crop given gradients on a branch's rho and tau grids.
/// Accumulates into grad_v.
void level_stats_backward(const FeatureMap& v, std::span<const std::uint8_t> mask, Grid grid,
                          const LevelStats& stats, const FeatureMap& grad_rho,
                          const FeatureMap& grad_tau, FeatureMap& grad_v);

}  // namespace dran
