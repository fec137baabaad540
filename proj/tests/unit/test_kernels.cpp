#include <cmath>
#include <vector>

#include <gtest/gtest.h>

#include "dran/config.hpp"
#include "dran/dran.hpp"
#include "dran/error.hpp"
#include "dran/kernels.hpp"
#include "dran/random.hpp"
#include "oracles.hpp"

using namespace dran;
using kernels::Backend;

namespace {

std::vector<Backend> vector_backends() {
    std::vector<Backend> out;
    for (Backend b : {Backend::Avx2, Backend::Neon})
        if (kernels::available(b)) out.push_back(b);
    return out;
}

std::vector<double> random_vector(Rng& rng, std::size_t n) {
    std::vector<double> v(n);
    for (double& x : v) x = rng.uniform(-2, 2);
    return v;
}

class ScopedBackend {
public:
    explicit ScopedBackend(Backend b) : previous_(kernels::active().backend) { kernels::select(b); }
    ~ScopedBackend() { kernels::select(previous_); }

private:
    Backend previous_;
};

}  // namespace

TEST(KernelDispatchTest, ScalarAlwaysAvailable) {
    EXPECT_TRUE(kernels::available(Backend::Scalar));
    ASSERT_NE(kernels::table(Backend::Scalar), nullptr);
    EXPECT_EQ(kernels::parse_backend("scalar"), Backend::Scalar);
    EXPECT_FALSE(kernels::parse_backend("sse9").has_value());
}

TEST(KernelDispatchTest, UnavailableBackendThrows) {
    for (Backend b : {Backend::Avx2, Backend::Neon}) {
        if (!kernels::available(b)) { EXPECT_THROW(kernels::select(b), InvalidArgument); }
    }
}

TEST(KernelEquivalenceTest, VectorVariantsAgreeWithScalar) {
    const auto& ref = *kernels::table(Backend::Scalar);
    Rng rng(77);
    for (Backend b : vector_backends()) {
        const auto& vec = *kernels::table(b);
        for (std::size_t n : {0u, 1u, 3u, 4u, 5u, 7u, 8u, 9u, 15u, 16u, 17u, 63u, 100u}) {
            const auto x = random_vector(rng, n);
            const auto y = random_vector(rng, n);
            auto pos = random_vector(rng, n);
            for (double& p : pos) p = std::abs(p) + 0.1;
            const double scale = 1.0 + static_cast<double>(n);
            EXPECT_NEAR(vec.sum(x.data(), n), ref.sum(x.data(), n), 1e-13 * scale);
            EXPECT_NEAR(vec.sum_sq_dev(x.data(), n, 0.3), ref.sum_sq_dev(x.data(), n, 0.3), 1e-13 * scale);
            EXPECT_NEAR(vec.dot(x.data(), y.data(), n), ref.dot(x.data(), y.data(), n), 1e-13 * scale);

            std::vector<double> a = y, b2 = y;
            vec.axpy(0.7, x.data(), a.data(), n);
            ref.axpy(0.7, x.data(), b2.data(), n);
            for (std::size_t i = 0; i < n; ++i) EXPECT_NEAR(a[i], b2[i], 1e-15);

            a = y, b2 = y;
            vec.mul_acc(pos.data(), x.data(), a.data(), n);
            ref.mul_acc(pos.data(), x.data(), b2.data(), n);
            for (std::size_t i = 0; i < n; ++i) EXPECT_NEAR(a[i], b2[i], 1e-15);

            vec.scale(-1.5, x.data(), a.data(), n);
            ref.scale(-1.5, x.data(), b2.data(), n);
            for (std::size_t i = 0; i < n; ++i) EXPECT_EQ(a[i], b2[i]);

            std::vector<double> out_v(n), out_s(n);
            vec.affine_normalize(x.data(), y.data(), pos.data(), pos.data(), x.data(), out_v.data(), n);
            ref.affine_normalize(x.data(), y.data(), pos.data(), pos.data(), x.data(), out_s.data(), n);
            for (std::size_t i = 0; i < n; ++i) EXPECT_NEAR(out_v[i], out_s[i], 1e-14);
        }
    }
}

TEST(KernelEquivalenceTest, PipelineAgreesAcrossBackends) {
    const auto backends = vector_backends();
    if (backends.empty()) GTEST_SKIP() << "no vector backend on this machine";
    Rng rng(5);
    for (int trial = 0; trial < 20; ++trial) {
        const RandomInstance inst = random_instance(rng);
        const int regions = 3;
        DranConfig cfg = uniform_config(regions, {PyramidLevel::fixed(1), PyramidLevel::fixed(2), PyramidLevel::half()},
                                        trial % 2 ? GateMode::Spatial : GateMode::Scalar);
        const GateSet gates = random_gates(cfg, inst.f.channels(), rng.next());
        FeatureMap scalar_out;
        {
            ScopedBackend guard(Backend::Scalar);
            scalar_out = dran_forward(inst.f, inst.v, inst.m_f, inst.m_v, cfg, gates).output;
        }
        for (Backend b : backends) {
            ScopedBackend guard(b);
            const auto out = dran_forward(inst.f, inst.v, inst.m_f, inst.m_v, cfg, gates).output;
            EXPECT_LT(oracle::max_abs_diff(out, scalar_out), 1e-12);
        }
    }
}
