#include "dran/sapp.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "dran/error.hpp"
#include "dran/kernels.hpp"

namespace dran {
namespace {

void require_epsilon(double epsilon) {
    if (!(epsilon > 0.0) || !std::isfinite(epsilon)) {
        throw InvalidArgument("epsilon must be positive and finite");
    }
}

void require_grid(const FeatureMap& v, Grid grid) {
    if (grid.rows < 1 || grid.cols < 1 || grid.rows > v.height() || grid.cols > v.width()) {
        throw InvalidArgument("grid " + std::to_string(grid.rows) + "x" + std::to_string(grid.cols) +
                              " does not fit a " + std::to_string(v.height()) + "x" +
                              std::to_string(v.width()) + " crop");
    }
}

// Flat spatial indices of the pixels that feed block (i, j).
void block_pixels(int h, int w, std::span<const std::uint8_t> mask, Grid grid, int i, int j,
                  std::vector<std::size_t>& out) {
    out.clear();
    const Span1D rows = block_span(h, grid.rows, i);
    const Span1D cols = block_span(w, grid.cols, j);
    for (int y = rows.begin; y < rows.end; ++y) {
        for (int x = cols.begin; x < cols.end; ++x) {
            const auto p = static_cast<std::size_t>(y) * static_cast<std::size_t>(w) +
                           static_cast<std::size_t>(x);
            if (mask.empty() || mask[p] != 0) out.push_back(p);
        }
    }
    if (!out.empty() || mask.empty()) return;
    for (std::size_t p = 0; p < mask.size(); ++p) {
        if (mask[p] != 0) out.push_back(p);
    }
}

// Second pass on the mean: adds the average residual, which makes the mean of
// a constant block exact.
double residual(const double* x, std::size_t n, double mean) {
    double r = 0.0;
    for (std::size_t i = 0; i < n; ++i) r += x[i] - mean;
    return r;
}

}  // namespace

PyramidLevel PyramidLevel::fixed(int blocks) {
    if (blocks < 1) throw InvalidArgument("pyramid level must have at least one block per axis");
    return PyramidLevel(blocks, false);
}

std::string PyramidLevel::to_string() const { return half_ ? "half" : std::to_string(blocks_); }

Grid resolve_level(const PyramidLevel& level, int height, int width) {
    if (height < 1 || width < 1) throw InvalidArgument("resolve_level: crop dims must be positive");
    if (level.is_half()) return Grid{std::max(1, (height + 1) / 2), std::max(1, (width + 1) / 2)};
    return Grid{std::min(level.blocks(), height), std::min(level.blocks(), width)};
}

Span1D block_span(int n, int blocks, int i) noexcept {
    const auto n64 = static_cast<long long>(n);
    return Span1D{static_cast<int>(i * n64 / blocks), static_cast<int>((i + 1) * n64 / blocks)};
}

LevelStats level_stats(const FeatureMap& v, Grid grid, double epsilon) {
    require_epsilon(epsilon);
    require_grid(v, grid);
    const auto& k = kernels::active();
    LevelStats stats{FeatureMap(v.channels(), grid.rows, grid.cols),
                     FeatureMap(v.channels(), grid.rows, grid.cols)};
    for (int i = 0; i < grid.rows; ++i) {
        const Span1D rows = block_span(v.height(), grid.rows, i);
        for (int j = 0; j < grid.cols; ++j) {
            const Span1D cols = block_span(v.width(), grid.cols, j);
            const auto len = static_cast<std::size_t>(cols.end - cols.begin);
            const double count = static_cast<double>(rows.end - rows.begin) * static_cast<double>(len);
            for (int c = 0; c < v.channels(); ++c) {
                double total = 0.0;
                for (int y = rows.begin; y < rows.end; ++y) {
                    total += k.sum(v.row(c, y).data() + cols.begin, len);
                }
                double mean = total / count;
                double drift = 0.0;
                for (int y = rows.begin; y < rows.end; ++y) {
                    drift += residual(v.row(c, y).data() + cols.begin, len, mean);
                }
                mean += drift / count;
                double squares = 0.0;
                for (int y = rows.begin; y < rows.end; ++y) {
                    squares += k.sum_sq_dev(v.row(c, y).data() + cols.begin, len, mean);
                }
                stats.rho.at(c, i, j) = mean;
                stats.tau.at(c, i, j) = std::sqrt(squares / count + epsilon);
            }
        }
    }
    return stats;
}

LevelStats level_stats_masked(const FeatureMap& v, std::span<const std::uint8_t> mask, Grid grid,
                              double epsilon) {
    require_epsilon(epsilon);
    require_grid(v, grid);
    if (mask.size() != v.plane_size()) throw InvalidArgument("level_stats_masked: mask size mismatch");
    if (std::none_of(mask.begin(), mask.end(), [](std::uint8_t b) { return b != 0; })) {
        throw InvalidArgument("level_stats_masked: mask selects no pixels");
    }
    const auto& k = kernels::active();
    LevelStats stats{FeatureMap(v.channels(), grid.rows, grid.cols),
                     FeatureMap(v.channels(), grid.rows, grid.cols)};
    std::vector<std::size_t> pixels;
    std::vector<double> gathered;
    for (int i = 0; i < grid.rows; ++i) {
        for (int j = 0; j < grid.cols; ++j) {
            block_pixels(v.height(), v.width(), mask, grid, i, j, pixels);
            gathered.resize(pixels.size());
            const double count = static_cast<double>(pixels.size());
            for (int c = 0; c < v.channels(); ++c) {
                const auto plane = v.plane(c);
                for (std::size_t n = 0; n < pixels.size(); ++n) gathered[n] = plane[pixels[n]];
                double mean = k.sum(gathered.data(), gathered.size()) / count;
                mean += residual(gathered.data(), gathered.size(), mean) / count;
                const double squares = k.sum_sq_dev(gathered.data(), gathered.size(), mean);
                stats.rho.at(c, i, j) = mean;
                stats.tau.at(c, i, j) = std::sqrt(squares / count + epsilon);
            }
        }
    }
    return stats;
}

AlignedParams align_params(const FeatureMap& rho, const FeatureMap& tau, int target_h,
                           int target_w, ResizeMode mode) {
    if (!rho.same_shape(tau)) throw InvalidArgument("align_params: rho and tau shapes differ");
    return AlignedParams{resize(rho, target_h, target_w, mode), resize(tau, target_h, target_w, mode)};
}

PyramidParams sapp_forward(const FeatureMap& v, std::span<const PyramidLevel> levels,
                           int target_h, int target_w, const SappOptions& options) {
    if (levels.empty()) throw InvalidArgument("sapp_forward: at least one pyramid level required");
    PyramidParams params;
    params.branches.reserve(levels.size());
    for (const PyramidLevel& level : levels) {
        const Grid grid = resolve_level(level, v.height(), v.width());
        LevelStats stats = options.mask.empty()
                               ? level_stats(v, grid, options.epsilon)
                               : level_stats_masked(v, options.mask, grid, options.epsilon);
        AlignedParams aligned = align_params(stats.rho, stats.tau, target_h, target_w, options.resize);
        params.branches.push_back(BranchParams{level, grid, std::move(stats), std::move(aligned)});
    }
    return params;
}

void level_stats_backward(const FeatureMap& v, std::span<const std::uint8_t> mask, Grid grid,
                          const LevelStats& stats, const FeatureMap& grad_rho,
                          const FeatureMap& grad_tau, FeatureMap& grad_v) {
    if (!grad_v.same_shape(v) || !grad_rho.same_shape(stats.rho) || !grad_tau.same_shape(stats.tau)) {
        throw InvalidArgument("level_stats_backward: shape mismatch");
    }
    std::vector<std::size_t> pixels;
    for (int i = 0; i < grid.rows; ++i) {
        for (int j = 0; j < grid.cols; ++j) {
            block_pixels(v.height(), v.width(), mask, grid, i, j, pixels);
            const double count = static_cast<double>(pixels.size());
            for (int c = 0; c < v.channels(); ++c) {
                const double mean = stats.rho.at(c, i, j);
                const double d_mean = grad_rho.at(c, i, j) / count;
                // d tau / d x_p = (x_p - mean) / (count * tau)
                const double d_dev = grad_tau.at(c, i, j) / (count * stats.tau.at(c, i, j));
                const auto src = v.plane(c);
                auto dst = grad_v.plane(c);
                for (std::size_t p : pixels) dst[p] += d_mean + d_dev * (src[p] - mean);
            }
        }
    }
}

}  // namespace dran
