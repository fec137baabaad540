#pragma once

// Dynamic gating: a 3x3 convolution over the concatenated source/reference
// crops, followed by softmax over the K branches, and the convex fusion of
// branch parameter maps with the resulting weights.

#include <cstdint>
#include <span>
#include <vector>

#include "dran/feature_map.hpp"
#include "dran/tensor_ops.hpp"

namespace dran {

enum class GateMode { Scalar, Spatial };

/// Which crop goes first in the channel concatenation.
enum class ConcatOrder { SourceFirst, ReferenceFirst };

struct GateParams {
    ConvWeights conv;  // out = K branches, in = 2C
    GateMode mode = GateMode::Scalar;

    int branches() const noexcept { return conv.out_channels; }
    int in_channels() const noexcept { return conv.in_channels; }

    static GateParams zeros(int branches, int in_channels, GateMode mode = GateMode::Scalar);
    /// Entries drawn uniformly from [-scale, scale] with a seeded generator.
    static GateParams random(int branches, int in_channels, GateMode mode, std::uint64_t seed,
                             double scale = 0.5);
};

/// Scalar mode: one weight per branch. Spatial mode: a K x h x w map.
struct GateWeights {
    GateMode mode = GateMode::Scalar;
    std::vector<double> scalar;
    FeatureMap spatial;

    int branches() const noexcept {
        return mode == GateMode::Scalar ? static_cast<int>(scalar.size()) : spatial.channels();
    }
    double at(int k, int y, int x) const noexcept {
        return mode == GateMode::Scalar ? scalar[static_cast<std::size_t>(k)] : spatial.at(k, y, x);
    }
};

struct GateTrace {
    FeatureMap input;   // concatenated crops
    FeatureMap logits;  // conv output, K x h x w
    std::vector<double> pooled;  // scalar mode only
};

GateWeights gate_forward(const FeatureMap& f_r, const FeatureMap& v_r, const GateParams& theta,
                         ConcatOrder order, GateTrace* trace = nullptr);

struct GateGrads {
    FeatureMap f_r;
    FeatureMap v_r;
    ConvWeights theta;
};

/// Backpropagates a gradient on the gate weights through softmax, pooling,
/// convolution and concatenation.
GateGrads gate_backward(const GateParams& theta, ConcatOrder order, const GateTrace& trace,
                        const GateWeights& weights, const GateWeights& grad_weights);

/// sum_k weights_k * branch_maps[k], scalar weights broadcast over positions,
/// spatial weights broadcast over channels.
FeatureMap fuse_params(const GateWeights& weights, std::span<const FeatureMap> branch_maps);

/// Gradients of fuse_params. grad_weights has the layout of weights.
void fuse_params_backward(const GateWeights& weights, std::span<const FeatureMap> branch_maps,
                          const FeatureMap& grad_out, std::vector<FeatureMap>& grad_branches,
                          GateWeights& grad_weights);

}  // namespace dran
