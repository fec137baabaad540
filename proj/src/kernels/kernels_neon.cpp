#include <arm_neon.h>

#include "dran/kernels.hpp"

namespace dran::kernels::detail {
namespace {

double sum(const double* x, std::size_t n) {
    float64x2_t acc0 = vdupq_n_f64(0.0);
    float64x2_t acc1 = vdupq_n_f64(0.0);
    std::size_t i = 0;
    for (; i + 4 <= n; i += 4) {
        acc0 = vaddq_f64(acc0, vld1q_f64(x + i));
        acc1 = vaddq_f64(acc1, vld1q_f64(x + i + 2));
    }
    double s = vaddvq_f64(vaddq_f64(acc0, acc1));
    for (; i < n; ++i) s += x[i];
    return s;
}

double sum_sq_dev(const double* x, std::size_t n, double center) {
    const float64x2_t c = vdupq_n_f64(center);
    float64x2_t acc0 = vdupq_n_f64(0.0);
    float64x2_t acc1 = vdupq_n_f64(0.0);
    std::size_t i = 0;
    for (; i + 4 <= n; i += 4) {
        const float64x2_t d0 = vsubq_f64(vld1q_f64(x + i), c);
        const float64x2_t d1 = vsubq_f64(vld1q_f64(x + i + 2), c);
        acc0 = vfmaq_f64(acc0, d0, d0);
        acc1 = vfmaq_f64(acc1, d1, d1);
    }
    double s = vaddvq_f64(vaddq_f64(acc0, acc1));
    for (; i < n; ++i) {
        const double d = x[i] - center;
        s += d * d;
    }
    return s;
}

double dot(const double* x, const double* y, std::size_t n) {
    float64x2_t acc0 = vdupq_n_f64(0.0);
    float64x2_t acc1 = vdupq_n_f64(0.0);
    std::size_t i = 0;
    for (; i + 4 <= n; i += 4) {
        acc0 = vfmaq_f64(acc0, vld1q_f64(x + i), vld1q_f64(y + i));
        acc1 = vfmaq_f64(acc1, vld1q_f64(x + i + 2), vld1q_f64(y + i + 2));
    }
    double s = vaddvq_f64(vaddq_f64(acc0, acc1));
    for (; i < n; ++i) s += x[i] * y[i];
    return s;
}

void axpy(double a, const double* x, double* y, std::size_t n) {
    const float64x2_t va = vdupq_n_f64(a);
    std::size_t i = 0;
    for (; i + 2 <= n; i += 2) vst1q_f64(y + i, vfmaq_f64(vld1q_f64(y + i), va, vld1q_f64(x + i)));
    for (; i < n; ++i) y[i] += a * x[i];
}

void mul_acc(const double* w, const double* x, double* y, std::size_t n) {
    std::size_t i = 0;
    for (; i + 2 <= n; i += 2) {
        vst1q_f64(y + i, vfmaq_f64(vld1q_f64(y + i), vld1q_f64(w + i), vld1q_f64(x + i)));
    }
    for (; i < n; ++i) y[i] += w[i] * x[i];
}

void scale(double a, const double* x, double* y, std::size_t n) {
    std::size_t i = 0;
    for (; i + 2 <= n; i += 2) vst1q_f64(y + i, vmulq_n_f64(vld1q_f64(x + i), a));
    for (; i < n; ++i) y[i] = a * x[i];
}

void affine_normalize(const double* f, const double* mu, const double* sigma, const double* gamma,
                      const double* beta, double* out, std::size_t n) {
    std::size_t i = 0;
    for (; i + 2 <= n; i += 2) {
        const float64x2_t whitened =
            vdivq_f64(vsubq_f64(vld1q_f64(f + i), vld1q_f64(mu + i)), vld1q_f64(sigma + i));
        vst1q_f64(out + i, vfmaq_f64(vld1q_f64(beta + i), vld1q_f64(gamma + i), whitened));
    }
    for (; i < n; ++i) out[i] = gamma[i] * ((f[i] - mu[i]) / sigma[i]) + beta[i];
}

constexpr KernelTable kNeon{
    Backend::Neon, "neon", sum, sum_sq_dev, dot, axpy, mul_acc, scale, affine_normalize,
};

}  // namespace

const KernelTable* neon_table() { return &kNeon; }

}  // namespace dran::kernels::detail
