#pragma once

// Contiguous double-precision inner loops shared by every module.
//
// Each kernel has a portable scalar reference and, when the build enables it,
// AVX2+FMA (x86-64) or NEON (aarch64) variants. The variant is picked once at
// runtime from CPU features; DRAN_KERNELS=scalar|avx2|neon|auto in the
// environment overrides the choice. Variants agree to rounding, not bitwise,
// because vector lanes reassociate sums and fuse multiply-adds.

#include <cstddef>
#include <optional>
#include <string_view>

namespace dran::kernels {

enum class Backend { Scalar, Avx2, Neon };

struct KernelTable {
    Backend backend;
    const char* name;

    /// sum x[i]
    double (*sum)(const double* x, std::size_t n);
    /// sum (x[i] - center)^2
    double (*sum_sq_dev)(const double* x, std::size_t n, double center);
    /// sum x[i] * y[i]
    double (*dot)(const double* x, const double* y, std::size_t n);
    /// y[i] += a * x[i]
    void (*axpy)(double a, const double* x, double* y, std::size_t n);
    /// y[i] += w[i] * x[i]
    void (*mul_acc)(const double* w, const double* x, double* y, std::size_t n);
    /// y[i] = a * x[i]
    void (*scale)(double a, const double* x, double* y, std::size_t n);
    /// out[i] = gamma[i] * (f[i] - mu[i]) / sigma[i] + beta[i]
    void (*affine_normalize)(const double* f, const double* mu, const double* sigma,
                             const double* gamma, const double* beta, double* out,
                             std::size_t n);
};

/// Table currently used by the library.
const KernelTable& active();

/// Table for a specific backend; nullptr when not compiled in or unsupported
/// by this CPU.
const KernelTable* table(Backend backend);

bool available(Backend backend);

/// Switches the active table. Throws InvalidArgument when unavailable.
void select(Backend backend);

/// Best backend supported by this build and CPU.
Backend detect_best();

std::string_view backend_name(Backend backend);
std::optional<Backend> parse_backend(std::string_view name);

namespace detail {
const KernelTable& scalar_table();
const KernelTable* avx2_table();
const KernelTable* neon_table();
}  // namespace detail

}  // namespace dran::kernels
