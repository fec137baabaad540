#include "dran/tensor_ops.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "dran/error.hpp"
#include "dran/kernels.hpp"

namespace dran {
namespace {

// Per-axis sampling table: output index i reads lo[i] and hi[i] blended by t[i].
struct AxisSampling {
    std::vector<int> lo;
    std::vector<int> hi;
    std::vector<double> t;
};

AxisSampling make_axis(int in_size, int out_size, ResizeMode mode) {
    AxisSampling axis;
    axis.lo.resize(static_cast<std::size_t>(out_size));
    axis.hi.resize(static_cast<std::size_t>(out_size));
    axis.t.assign(static_cast<std::size_t>(out_size), 0.0);
    const double ratio = static_cast<double>(in_size) / static_cast<double>(out_size);
    for (int i = 0; i < out_size; ++i) {
        const auto k = static_cast<std::size_t>(i);
        if (mode == ResizeMode::Nearest) {
            const int idx = std::min(in_size - 1, static_cast<int>(std::floor((i + 0.5) * ratio)));
            axis.lo[k] = axis.hi[k] = idx;
            continue;
        }
        double s = (i + 0.5) * ratio - 0.5;
        s = std::clamp(s, 0.0, static_cast<double>(in_size - 1));
        const int i0 = static_cast<int>(std::floor(s));
        axis.lo[k] = i0;
        axis.hi[k] = std::min(i0 + 1, in_size - 1);
        axis.t[k] = s - i0;
    }
    return axis;
}

void require_positive_dims(int h, int w, const char* what) {
    if (h < 1 || w < 1) {
        throw InvalidArgument(std::string(what) + ": target dims must be positive, got " +
                              std::to_string(h) + "x" + std::to_string(w));
    }
}

}  // namespace

ConvWeights ConvWeights::zeros(int out_channels, int in_channels) {
    if (out_channels < 1 || in_channels < 1) {
        throw InvalidArgument("conv weights need positive channel counts");
    }
    ConvWeights w;
    w.out_channels = out_channels;
    w.in_channels = in_channels;
    w.kernel.assign(static_cast<std::size_t>(out_channels) * static_cast<std::size_t>(in_channels) * 9,
                    0.0);
    w.bias.assign(static_cast<std::size_t>(out_channels), 0.0);
    return w;
}

void ConvWeights::validate() const {
    if (out_channels < 1 || in_channels < 1) {
        throw InvalidArgument("conv weights need positive channel counts");
    }
    const auto expected =
        static_cast<std::size_t>(out_channels) * static_cast<std::size_t>(in_channels) * 9;
    if (kernel.size() != expected || bias.size() != static_cast<std::size_t>(out_channels)) {
        throw InvalidArgument("conv weights: kernel/bias sizes do not match " +
                              std::to_string(out_channels) + "x" + std::to_string(in_channels) +
                              "x3x3");
    }
    for (double v : kernel) {
        if (!std::isfinite(v)) throw InvalidArgument("conv kernel contains NaN or Inf");
    }
    for (double v : bias) {
        if (!std::isfinite(v)) throw InvalidArgument("conv bias contains NaN or Inf");
    }
}

FeatureMap resize(const FeatureMap& src, int out_h, int out_w, ResizeMode mode) {
    require_positive_dims(out_h, out_w, "resize");
    if (src.height() == out_h && src.width() == out_w) return src;

    const AxisSampling ay = make_axis(src.height(), out_h, mode);
    const AxisSampling ax = make_axis(src.width(), out_w, mode);
    FeatureMap out(src.channels(), out_h, out_w);
    for (int c = 0; c < src.channels(); ++c) {
        for (int y = 0; y < out_h; ++y) {
            const auto yk = static_cast<std::size_t>(y);
            const auto r0 = src.row(c, ay.lo[yk]);
            const auto r1 = src.row(c, ay.hi[yk]);
            const double ty = ay.t[yk];
            auto dst = out.row(c, y);
            for (int x = 0; x < out_w; ++x) {
                const auto xk = static_cast<std::size_t>(x);
                const auto x0 = static_cast<std::size_t>(ax.lo[xk]);
                const auto x1 = static_cast<std::size_t>(ax.hi[xk]);
                const double tx = ax.t[xk];
                const double top = r0[x0] + tx * (r0[x1] - r0[x0]);
                const double bottom = r1[x0] + tx * (r1[x1] - r1[x0]);
                dst[xk] = top + ty * (bottom - top);
            }
        }
    }
    return out;
}

FeatureMap resize_backward(const FeatureMap& grad_out, int in_h, int in_w, ResizeMode mode) {
    require_positive_dims(in_h, in_w, "resize_backward");
    if (grad_out.height() == in_h && grad_out.width() == in_w) return grad_out;

    const AxisSampling ay = make_axis(in_h, grad_out.height(), mode);
    const AxisSampling ax = make_axis(in_w, grad_out.width(), mode);
    FeatureMap grad_in(grad_out.channels(), in_h, in_w);
    for (int c = 0; c < grad_out.channels(); ++c) {
        for (int y = 0; y < grad_out.height(); ++y) {
            const auto yk = static_cast<std::size_t>(y);
            auto r0 = grad_in.row(c, ay.lo[yk]);
            auto r1 = grad_in.row(c, ay.hi[yk]);
            const double ty = ay.t[yk];
            const auto g = grad_out.row(c, y);
            for (int x = 0; x < grad_out.width(); ++x) {
                const auto xk = static_cast<std::size_t>(x);
                const auto x0 = static_cast<std::size_t>(ax.lo[xk]);
                const auto x1 = static_cast<std::size_t>(ax.hi[xk]);
                const double tx = ax.t[xk];
                const double g_top = (1.0 - ty) * g[xk];
                const double g_bottom = ty * g[xk];
                r0[x0] += (1.0 - tx) * g_top;
                r0[x1] += tx * g_top;
                r1[x0] += (1.0 - tx) * g_bottom;
                r1[x1] += tx * g_bottom;
            }
        }
    }
    return grad_in;
}

std::vector<double> softmax(const std::vector<double>& logits) {
    if (logits.empty()) throw InvalidArgument("softmax of an empty vector");
    const double peak = *std::max_element(logits.begin(), logits.end());
    std::vector<double> out(logits.size());
    double total = 0.0;
    for (std::size_t k = 0; k < logits.size(); ++k) {
        out[k] = std::exp(logits[k] - peak);
        total += out[k];
    }
    for (double& v : out) v /= total;
    return out;
}

FeatureMap softmax_channels(const FeatureMap& x) {
    FeatureMap out(x.channels(), x.height(), x.width());
    const std::size_t plane = x.plane_size();
    const auto src = x.data();
    auto dst = out.data();
    const auto channels = static_cast<std::size_t>(x.channels());
    for (std::size_t p = 0; p < plane; ++p) {
        double peak = src[p];
        for (std::size_t c = 1; c < channels; ++c) peak = std::max(peak, src[c * plane + p]);
        double total = 0.0;
        for (std::size_t c = 0; c < channels; ++c) {
            const double e = std::exp(src[c * plane + p] - peak);
            dst[c * plane + p] = e;
            total += e;
        }
        for (std::size_t c = 0; c < channels; ++c) dst[c * plane + p] /= total;
    }
    return out;
}

FeatureMap conv2d_3x3(const FeatureMap& x, const ConvWeights& weights) {
    weights.validate();
    if (weights.in_channels != x.channels()) {
        throw InvalidArgument("conv2d_3x3: weights expect " + std::to_string(weights.in_channels) +
                              " input channels, got " + std::to_string(x.channels()));
    }
    const auto& k = kernels::active();
    const int h = x.height();
    const int w = x.width();
    FeatureMap out(weights.out_channels, h, w);
    for (int o = 0; o < weights.out_channels; ++o) {
        std::fill(out.plane(o).begin(), out.plane(o).end(), weights.bias[static_cast<std::size_t>(o)]);
        for (int i = 0; i < weights.in_channels; ++i) {
            for (int ky = 0; ky < 3; ++ky) {
                for (int kx = 0; kx < 3; ++kx) {
                    const double tap = weights.kernel[weights.kernel_index(o, i, ky, kx)];
                    if (tap == 0.0) continue;
                    const int x_lo = std::max(0, 1 - kx);
                    const int x_hi = std::min(w, w + 1 - kx);
                    if (x_hi <= x_lo) continue;
                    const auto n = static_cast<std::size_t>(x_hi - x_lo);
                    for (int y = 0; y < h; ++y) {
                        const int sy = y + ky - 1;
                        if (sy < 0 || sy >= h) continue;
                        k.axpy(tap, x.row(i, sy).data() + x_lo + kx - 1, out.row(o, y).data() + x_lo, n);
                    }
                }
            }
        }
    }
    return out;
}

ConvGrads conv2d_3x3_backward(const FeatureMap& x, const ConvWeights& weights,
                              const FeatureMap& grad_out) {
    weights.validate();
    if (weights.in_channels != x.channels() || grad_out.channels() != weights.out_channels ||
        !grad_out.same_spatial(x)) {
        throw InvalidArgument("conv2d_3x3_backward: shape mismatch");
    }
    const auto& k = kernels::active();
    const int h = x.height();
    const int w = x.width();
    ConvGrads grads{FeatureMap(x.channels(), h, w),
                    ConvWeights::zeros(weights.out_channels, weights.in_channels)};
    for (int o = 0; o < weights.out_channels; ++o) {
        grads.weights.bias[static_cast<std::size_t>(o)] =
            k.sum(grad_out.plane(o).data(), grad_out.plane_size());
        for (int i = 0; i < weights.in_channels; ++i) {
            for (int ky = 0; ky < 3; ++ky) {
                for (int kx = 0; kx < 3; ++kx) {
                    const int x_lo = std::max(0, 1 - kx);
                    const int x_hi = std::min(w, w + 1 - kx);
                    if (x_hi <= x_lo) continue;
                    const auto n = static_cast<std::size_t>(x_hi - x_lo);
                    const double tap = weights.kernel[weights.kernel_index(o, i, ky, kx)];
                    double acc = 0.0;
                    for (int y = 0; y < h; ++y) {
                        const int sy = y + ky - 1;
                        if (sy < 0 || sy >= h) continue;
                        const double* g = grad_out.row(o, y).data() + x_lo;
                        acc += k.dot(g, x.row(i, sy).data() + x_lo + kx - 1, n);
                        if (tap != 0.0) k.axpy(tap, g, grads.input.row(i, sy).data() + x_lo + kx - 1, n);
                    }
                    grads.weights.kernel[weights.kernel_index(o, i, ky, kx)] = acc;
                }
            }
        }
    }
    return grads;
}

FeatureMap concat_channels(const FeatureMap& a, const FeatureMap& b) {
    if (!a.same_spatial(b)) {
        throw InvalidArgument("concat_channels: spatial dims differ (" + std::to_string(a.height()) +
                              "x" + std::to_string(a.width()) + " vs " + std::to_string(b.height()) +
                              "x" + std::to_string(b.width()) + ")");
    }
    std::vector<double> data;
    data.reserve(a.size() + b.size());
    data.insert(data.end(), a.data().begin(), a.data().end());
    data.insert(data.end(), b.data().begin(), b.data().end());
    return FeatureMap(a.channels() + b.channels(), a.height(), a.width(), std::move(data));
}

std::vector<double> global_mean(const FeatureMap& x) {
    const auto& k = kernels::active();
    std::vector<double> means(static_cast<std::size_t>(x.channels()));
    const double n = static_cast<double>(x.plane_size());
    for (int c = 0; c < x.channels(); ++c) {
        means[static_cast<std::size_t>(c)] = k.sum(x.plane(c).data(), x.plane_size()) / n;
    }
    return means;
}

}  // namespace dran
