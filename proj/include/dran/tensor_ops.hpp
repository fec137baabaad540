#pragma once

#include <vector>

#include "dran/feature_map.hpp"

namespace dran {

enum class ResizeMode { Bilinear, Nearest };

/// 3x3 convolution parameters, kernel laid out [out][in][ky][kx].
struct ConvWeights {
    int out_channels = 0;
    int in_channels = 0;
    std::vector<double> kernel;
    std::vector<double> bias;

    static ConvWeights zeros(int out_channels, int in_channels);

    std::size_t kernel_index(int o, int i, int ky, int kx) const noexcept {
        return ((static_cast<std::size_t>(o) * static_cast<std::size_t>(in_channels) +
                 static_cast<std::size_t>(i)) *
                    3 +
                static_cast<std::size_t>(ky)) *
                   3 +
               static_cast<std::size_t>(kx);
    }
    /// Throws InvalidArgument on inconsistent sizes or non-finite entries.
    void validate() const;
};

/// Resamples every channel to out_h x out_w.
///
/// Bilinear mode samples output index i at s = (i + 0.5) * in / out - 0.5,
/// clamped to [0, in - 1]. Nearest mode takes floor((i + 0.5) * in / out).
/// Equal shapes return an exact copy; constant maps stay exactly constant.
FeatureMap resize(const FeatureMap& src, int out_h, int out_w,
                  ResizeMode mode = ResizeMode::Bilinear);

inline FeatureMap resize_bilinear(const FeatureMap& src, int out_h, int out_w) {
    return resize(src, out_h, out_w, ResizeMode::Bilinear);
}

/// Transpose of resize: maps a gradient on the output grid back onto an
/// in_h x in_w grid.
FeatureMap resize_backward(const FeatureMap& grad_out, int in_h, int in_w,
                           ResizeMode mode = ResizeMode::Bilinear);

/// Numerically stable softmax over the channel axis at every location.
FeatureMap softmax_channels(const FeatureMap& x);

/// Softmax over a plain vector.
std::vector<double> softmax(const std::vector<double>& logits);

/// Stride-1, zero-padded 3x3 cross-correlation plus bias.
FeatureMap conv2d_3x3(const FeatureMap& x, const ConvWeights& weights);

struct ConvGrads {
    FeatureMap input;
    ConvWeights weights;
};

/// Vector-Jacobian product of conv2d_3x3 for the output gradient grad_out.
ConvGrads conv2d_3x3_backward(const FeatureMap& x, const ConvWeights& weights,
                              const FeatureMap& grad_out);

/// Stacks a's channels followed by b's.
FeatureMap concat_channels(const FeatureMap& a, const FeatureMap& b);

/// Per-channel arithmetic mean over all spatial positions.
std::vector<double> global_mean(const FeatureMap& x);

}  // namespace dran
