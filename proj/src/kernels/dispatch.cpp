#include <atomic>
#include <cstdlib>
#include <string>

#include "dran/error.hpp"
#include "dran/kernels.hpp"

namespace dran::kernels {

namespace detail {
#if !DRAN_HAVE_AVX2
const KernelTable* avx2_table() { return nullptr; }
#endif
#if !DRAN_HAVE_NEON
const KernelTable* neon_table() { return nullptr; }
#endif
}  // namespace detail

namespace {

const KernelTable* initial_table() {
    Backend backend = detect_best();
    if (const char* env = std::getenv("DRAN_KERNELS"); env != nullptr && *env != '\0') {
        const std::string requested(env);
        if (requested != "auto") {
            if (auto parsed = parse_backend(requested); parsed && available(*parsed)) backend = *parsed;
        }
    }
    return table(backend);
}

std::atomic<const KernelTable*>& active_slot() {
    static std::atomic<const KernelTable*> slot{initial_table()};
    return slot;
}

}  // namespace

const KernelTable* table(Backend backend) {
    switch (backend) {
        case Backend::Scalar: return &detail::scalar_table();
        case Backend::Avx2: return detail::avx2_table();
        case Backend::Neon: return detail::neon_table();
    }
    return nullptr;
}

bool available(Backend backend) { return table(backend) != nullptr; }

Backend detect_best() {
    if (available(Backend::Avx2)) return Backend::Avx2;
    if (available(Backend::Neon)) return Backend::Neon;
    return Backend::Scalar;
}

const KernelTable& active() { return *active_slot().load(std::memory_order_acquire); }

void select(Backend backend) {
    const KernelTable* t = table(backend);
    if (t == nullptr) {
        throw InvalidArgument("kernel backend '" + std::string(backend_name(backend)) +
                              "' is not available on this build/CPU");
    }
    active_slot().store(t, std::memory_order_release);
}

std::string_view backend_name(Backend backend) {
    switch (backend) {
        case Backend::Scalar: return "scalar";
        case Backend::Avx2: return "avx2";
        case Backend::Neon: return "neon";
    }
    return "unknown";
}

std::optional<Backend> parse_backend(std::string_view name) {
    if (name == "scalar") return Backend::Scalar;
    if (name == "avx2") return Backend::Avx2;
    if (name == "neon") return Backend::Neon;
    return std::nullopt;
}

}  // namespace dran::kernels
