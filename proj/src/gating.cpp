#include "dran/gating.hpp"

#include <algorithm>
#include <string>
#include <vector>

#include "dran/error.hpp"
#include "dran/kernels.hpp"
#include "dran/random.hpp"

namespace dran {
namespace {

void require_theta(const GateParams& theta, int channels) {
    theta.conv.validate();
    if (theta.in_channels() != 2 * channels) {
        throw InvalidArgument("gate expects " + std::to_string(theta.in_channels()) +
                              " input channels, crops provide " + std::to_string(2 * channels));
    }
}

}  // namespace

GateParams GateParams::zeros(int branches, int in_channels, GateMode mode) {
    return GateParams{ConvWeights::zeros(branches, in_channels), mode};
}

GateParams GateParams::random(int branches, int in_channels, GateMode mode, std::uint64_t seed,
                              double scale) {
    GateParams theta = zeros(branches, in_channels, mode);
    Rng rng(seed);
    for (double& w : theta.conv.kernel) w = rng.uniform(-scale, scale);
    for (double& b : theta.conv.bias) b = rng.uniform(-scale, scale);
    return theta;
}

GateWeights gate_forward(const FeatureMap& f_r, const FeatureMap& v_r, const GateParams& theta,
                         ConcatOrder order, GateTrace* trace) {
    if (!f_r.same_shape(v_r)) {
        throw InvalidArgument("gate_forward: source and reference crops must share shape");
    }
    require_theta(theta, f_r.channels());

    FeatureMap input = order == ConcatOrder::SourceFirst ? concat_channels(f_r, v_r)
                                                         : concat_channels(v_r, f_r);
    FeatureMap logits = conv2d_3x3(input, theta.conv);

    GateWeights weights;
    weights.mode = theta.mode;
    std::vector<double> pooled;
    if (theta.mode == GateMode::Scalar) {
        pooled = global_mean(logits);
        weights.scalar = softmax(pooled);
    } else {
        weights.spatial = softmax_channels(logits);
    }
    if (trace != nullptr) {
        trace->input = std::move(input);
        trace->logits = std::move(logits);
        trace->pooled = std::move(pooled);
    }
    return weights;
}

GateGrads gate_backward(const GateParams& theta, ConcatOrder order, const GateTrace& trace,
                        const GateWeights& weights, const GateWeights& grad_weights) {
    const int branches = theta.branches();
    const int h = trace.logits.height();
    const int w = trace.logits.width();
    FeatureMap grad_logits(branches, h, w);

    if (weights.mode == GateMode::Scalar) {
        double inner = 0.0;
        for (int k = 0; k < branches; ++k) {
            inner += weights.scalar[static_cast<std::size_t>(k)] *
                     grad_weights.scalar[static_cast<std::size_t>(k)];
        }
        const double area = static_cast<double>(trace.logits.plane_size());
        for (int k = 0; k < branches; ++k) {
            const auto kk = static_cast<std::size_t>(k);
            const double d_pooled = weights.scalar[kk] * (grad_weights.scalar[kk] - inner);
            std::fill(grad_logits.plane(k).begin(), grad_logits.plane(k).end(), d_pooled / area);
        }
    } else {
        for (int y = 0; y < h; ++y) {
            for (int x = 0; x < w; ++x) {
                double inner = 0.0;
                for (int k = 0; k < branches; ++k) {
                    inner += weights.spatial.at(k, y, x) * grad_weights.spatial.at(k, y, x);
                }
                for (int k = 0; k < branches; ++k) {
                    grad_logits.at(k, y, x) =
                        weights.spatial.at(k, y, x) * (grad_weights.spatial.at(k, y, x) - inner);
                }
            }
        }
    }

    ConvGrads conv = conv2d_3x3_backward(trace.input, theta.conv, grad_logits);
    const int channels = trace.input.channels() / 2;
    const std::size_t half = static_cast<std::size_t>(channels) * trace.input.plane_size();
    const auto all = conv.input.data();
    FeatureMap first(channels, h, w, std::vector<double>(all.begin(), all.begin() + static_cast<std::ptrdiff_t>(half)));
    FeatureMap second(channels, h, w, std::vector<double>(all.begin() + static_cast<std::ptrdiff_t>(half), all.end()));

    GateGrads grads;
    grads.theta = std::move(conv.weights);
    if (order == ConcatOrder::SourceFirst) {
        grads.f_r = std::move(first);
        grads.v_r = std::move(second);
    } else {
        grads.f_r = std::move(second);
        grads.v_r = std::move(first);
    }
    return grads;
}

FeatureMap fuse_params(const GateWeights& weights, std::span<const FeatureMap> branch_maps) {
    const int branches = weights.branches();
    if (branches < 1 || static_cast<std::size_t>(branches) != branch_maps.size()) {
        throw InvalidArgument("fuse_params: " + std::to_string(branch_maps.size()) +
                              " branch maps for " + std::to_string(branches) + " weights");
    }
    const FeatureMap& first = branch_maps.front();
    for (const FeatureMap& map : branch_maps) {
        if (!map.same_shape(first)) throw InvalidArgument("fuse_params: branch map shapes differ");
    }
    if (weights.mode == GateMode::Spatial && !weights.spatial.same_spatial(first)) {
        throw InvalidArgument("fuse_params: spatial weights do not match branch maps");
    }

    // Accumulated as anchor + sum_k a_k (b_k - anchor), anchored on the largest
    // weight: one-hot weights return their branch exactly and coinciding
    // branches give a result that does not move with the weights.
    const auto& k = kernels::active();
    FeatureMap out(first.channels(), first.height(), first.width());
    const std::size_t plane = first.plane_size();
    if (weights.mode == GateMode::Scalar) {
        const auto anchor = static_cast<std::size_t>(
            std::max_element(weights.scalar.begin(), weights.scalar.end()) - weights.scalar.begin());
        const auto base = branch_maps[anchor].data();
        std::copy(base.begin(), base.end(), out.data().begin());
        std::vector<double> diff(out.size());
        for (std::size_t b = 0; b < branch_maps.size(); ++b) {
            if (b == anchor || weights.scalar[b] == 0.0) continue;
            const auto m = branch_maps[b].data();
            for (std::size_t i = 0; i < diff.size(); ++i) diff[i] = m[i] - base[i];
            k.axpy(weights.scalar[b], diff.data(), out.data().data(), out.size());
        }
        return out;
    }
    for (std::size_t p = 0; p < plane; ++p) {
        int anchor = 0;
        for (int b = 1; b < branches; ++b) {
            if (weights.spatial.data()[static_cast<std::size_t>(b) * plane + p] >
                weights.spatial.data()[static_cast<std::size_t>(anchor) * plane + p]) {
                anchor = b;
            }
        }
        for (int c = 0; c < first.channels(); ++c) {
            const std::size_t at = static_cast<std::size_t>(c) * plane + p;
            const double base = branch_maps[static_cast<std::size_t>(anchor)].data()[at];
            double acc = base;
            for (int b = 0; b < branches; ++b) {
                const double w = weights.spatial.data()[static_cast<std::size_t>(b) * plane + p];
                if (b == anchor || w == 0.0) continue;
                acc += w * (branch_maps[static_cast<std::size_t>(b)].data()[at] - base);
            }
            out.data()[at] = acc;
        }
    }
    return out;
}

void fuse_params_backward(const GateWeights& weights, std::span<const FeatureMap> branch_maps,
                          const FeatureMap& grad_out, std::vector<FeatureMap>& grad_branches,
                          GateWeights& grad_weights) {
    const int branches = weights.branches();
    const auto& k = kernels::active();
    grad_branches.assign(static_cast<std::size_t>(branches),
                         FeatureMap(grad_out.channels(), grad_out.height(), grad_out.width()));
    grad_weights = GateWeights{};
    grad_weights.mode = weights.mode;
    const std::size_t plane = grad_out.plane_size();

    if (weights.mode == GateMode::Scalar) {
        grad_weights.scalar.assign(static_cast<std::size_t>(branches), 0.0);
        for (int b = 0; b < branches; ++b) {
            const auto bb = static_cast<std::size_t>(b);
            k.scale(weights.scalar[bb], grad_out.data().data(), grad_branches[bb].data().data(),
                    grad_out.size());
            grad_weights.scalar[bb] = k.dot(grad_out.data().data(), branch_maps[bb].data().data(),
                                            grad_out.size());
        }
        return;
    }
    grad_weights.spatial = FeatureMap(branches, grad_out.height(), grad_out.width());
    for (int b = 0; b < branches; ++b) {
        const auto bb = static_cast<std::size_t>(b);
        const auto w = weights.spatial.plane(b);
        auto gw = grad_weights.spatial.plane(b);
        for (int c = 0; c < grad_out.channels(); ++c) {
            const auto g = grad_out.plane(c);
            const auto m = branch_maps[bb].plane(c);
            auto gb = grad_branches[bb].plane(c);
            for (std::size_t p = 0; p < plane; ++p) {
                gb[p] = w[p] * g[p];
                gw[p] += g[p] * m[p];
            }
        }
    }
}

}  // namespace dran
