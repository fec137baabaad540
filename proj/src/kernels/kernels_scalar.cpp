#include "dran/kernels.hpp"

namespace dran::kernels::detail {
namespace {

double sum(const double* x, std::size_t n) {
    double s = 0.0;
    for (std::size_t i = 0; i < n; ++i) s += x[i];
    return s;
}

double sum_sq_dev(const double* x, std::size_t n, double center) {
    double s = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        const double d = x[i] - center;
        s += d * d;
    }
    return s;
}

double dot(const double* x, const double* y, std::size_t n) {
    double s = 0.0;
    for (std::size_t i = 0; i < n; ++i) s += x[i] * y[i];
    return s;
}

void axpy(double a, const double* x, double* y, std::size_t n) {
    for (std::size_t i = 0; i < n; ++i) y[i] += a * x[i];
}

void mul_acc(const double* w, const double* x, double* y, std::size_t n) {
    for (std::size_t i = 0; i < n; ++i) y[i] += w[i] * x[i];
}

void scale(double a, const double* x, double* y, std::size_t n) {
    for (std::size_t i = 0; i < n; ++i) y[i] = a * x[i];
}

void affine_normalize(const double* f, const double* mu, const double* sigma, const double* gamma,
                      const double* beta, double* out, std::size_t n) {
    for (std::size_t i = 0; i < n; ++i) out[i] = gamma[i] * ((f[i] - mu[i]) / sigma[i]) + beta[i];
}

constexpr KernelTable kScalar{
    Backend::Scalar, "scalar", sum, sum_sq_dev, dot, axpy, mul_acc, scale, affine_normalize,
};

}  // namespace

const KernelTable& scalar_table() { return kScalar; }

}  // namespace dran::kernels::detail
