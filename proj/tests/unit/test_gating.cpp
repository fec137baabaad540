#include <cmath>

#include <gtest/gtest.h>

#include "dran/error.hpp"
#include "dran/gating.hpp"
#include "dran/random.hpp"
#include "oracles.hpp"

using namespace dran;

namespace {

void expect_simplex(const GateWeights& w, int h, int width) {
    for (int y = 0; y < h; ++y)
        for (int x = 0; x < width; ++x) {
            double sum = 0.0;
            for (int k = 0; k < w.branches(); ++k) {
                EXPECT_GE(w.at(k, y, x), 0.0);
                sum += w.at(k, y, x);
            }
            EXPECT_NEAR(sum, 1.0, 1e-12);
        }
}

}  // namespace

TEST(GateForwardTest, ZeroThetaIsUniform) {
    Rng rng(1);
    const auto f = random_map(rng, 2, 4, 5);
    const auto v = random_map(rng, 2, 4, 5);
    for (GateMode mode : {GateMode::Scalar, GateMode::Spatial}) {
        const auto w = gate_forward(f, v, GateParams::zeros(3, 4, mode), ConcatOrder::SourceFirst);
        for (int y = 0; y < 4; ++y)
            for (int x = 0; x < 5; ++x)
                for (int k = 0; k < 3; ++k) EXPECT_NEAR(w.at(k, y, x), 1.0 / 3.0, 1e-15);
    }
}

TEST(GateForwardTest, BiasOnlyClosedForm) {
    Rng rng(2);
    const auto f = random_map(rng, 1, 3, 3);
    const auto v = random_map(rng, 1, 3, 3);
    for (GateMode mode : {GateMode::Scalar, GateMode::Spatial}) {
        auto theta = GateParams::zeros(2, 2, mode);
        theta.conv.bias = {std::log(3.0), 0.0};
        const auto w = gate_forward(f, v, theta, ConcatOrder::ReferenceFirst);
        for (int y = 0; y < 3; ++y)
            for (int x = 0; x < 3; ++x) {
                EXPECT_NEAR(w.at(0, y, x), 0.75, 1e-15);
                EXPECT_NEAR(w.at(1, y, x), 0.25, 1e-15);
            }
    }
}

TEST(GateForwardTest, OrderMatters) {
    Rng rng(3);
    const auto f = random_map(rng, 1, 4, 4);
    const auto v = random_map(rng, 1, 4, 4);
    auto theta = GateParams::zeros(2, 2, GateMode::Scalar);
    theta.conv.kernel[theta.conv.kernel_index(0, 0, 1, 1)] = 2.0;  // branch 0 reads the first operand
    const auto fv = gate_forward(f, v, theta, ConcatOrder::SourceFirst);
    const auto vf = gate_forward(f, v, theta, ConcatOrder::ReferenceFirst);
    EXPECT_NE(fv.scalar[0], vf.scalar[0]);
}

TEST(GateForwardTest, ShapeMismatchThrows) {
    EXPECT_THROW(gate_forward(FeatureMap(1, 3, 3), FeatureMap(1, 3, 4), GateParams::zeros(2, 2), ConcatOrder::SourceFirst),
                 InvalidArgument);
    EXPECT_THROW(gate_forward(FeatureMap(1, 3, 3), FeatureMap(1, 3, 3), GateParams::zeros(2, 4), ConcatOrder::SourceFirst),
                 InvalidArgument);
}

TEST(GateForwardTest, RandomThetaStaysOnSimplex) {
    Rng rng(55);
    for (int trial = 0; trial < 100; ++trial) {
        const int c = rng.integer(1, 3), h = rng.integer(1, 8), w = rng.integer(1, 8), k = rng.integer(1, 4);
        const GateMode mode = trial % 2 ? GateMode::Spatial : GateMode::Scalar;
        const auto theta = GateParams::random(k, 2 * c, mode, rng.next(), 3.0);
        const auto weights = gate_forward(random_map(rng, c, h, w), random_map(rng, c, h, w), theta,
                                          ConcatOrder::SourceFirst);
        expect_simplex(weights, h, w);
    }
}

TEST(FuseParamsTest, OneHotSelectsBitwise) {
    Rng rng(7);
    std::vector<FeatureMap> maps;
    for (int k = 0; k < 3; ++k) maps.push_back(random_map(rng, 2, 4, 3, -5, 5));
    for (int pick = 0; pick < 3; ++pick) {
        GateWeights scalar{GateMode::Scalar, {0, 0, 0}, {}};
        scalar.scalar[static_cast<std::size_t>(pick)] = 1.0;
        EXPECT_TRUE(fuse_params(scalar, maps) == maps[static_cast<std::size_t>(pick)]);

        GateWeights spatial{GateMode::Spatial, {}, FeatureMap(3, 4, 3, 0.0)};
        for (double& v : spatial.spatial.plane(pick)) v = 1.0;
        EXPECT_TRUE(fuse_params(spatial, maps) == maps[static_cast<std::size_t>(pick)]);
    }
}

TEST(FuseParamsTest, IdenticalBranchesAreAFixedPoint) {
    Rng rng(8);
    const auto m = random_map(rng, 2, 3, 3);
    const std::vector<FeatureMap> maps{m, m, m};
    const GateWeights w{GateMode::Scalar, {0.2, 0.5, 0.3}, {}};
    EXPECT_TRUE(fuse_params(w, maps) == m);
}

TEST(FuseParamsTest, WeightedConstants) {
    const std::vector<FeatureMap> maps{FeatureMap(1, 2, 2, 0.0), FeatureMap(1, 2, 2, 8.0)};
    const auto out = fuse_params(GateWeights{GateMode::Scalar, {0.25, 0.75}, {}}, maps);
    for (double v : out.data()) EXPECT_EQ(v, 6.0);
}

TEST(FuseParamsTest, ConvexBoundsAndPositivity) {
    Rng rng(9);
    for (int trial = 0; trial < 100; ++trial) {
        const int k = rng.integer(1, 4), c = rng.integer(1, 3), h = rng.integer(1, 6), w = rng.integer(1, 6);
        std::vector<FeatureMap> maps;
        for (int b = 0; b < k; ++b) maps.push_back(random_map(rng, c, h, w, 0.01, 3.0));
        const GateMode mode = trial % 2 ? GateMode::Spatial : GateMode::Scalar;
        const auto theta = GateParams::random(k, 2 * c, mode, rng.next(), 2.0);
        const auto weights = gate_forward(random_map(rng, c, h, w), random_map(rng, c, h, w), theta,
                                          ConcatOrder::ReferenceFirst);
        const auto fused = fuse_params(weights, maps);
        for (int ch = 0; ch < c; ++ch)
            for (int y = 0; y < h; ++y)
                for (int x = 0; x < w; ++x) {
                    double lo = INFINITY, hi = -INFINITY;
                    for (const auto& m : maps) {
                        lo = std::min(lo, m.at(ch, y, x));
                        hi = std::max(hi, m.at(ch, y, x));
                    }
                    EXPECT_GE(fused.at(ch, y, x), lo - 1e-12);
                    EXPECT_LE(fused.at(ch, y, x), hi + 1e-12);
                    EXPECT_GE(fused.at(ch, y, x), 0.01 - 1e-12);
                }
    }
}

TEST(FuseParamsTest, MismatchThrows) {
    const std::vector<FeatureMap> maps{FeatureMap(1, 2, 2), FeatureMap(1, 2, 3)};
    EXPECT_THROW(fuse_params(GateWeights{GateMode::Scalar, {0.5, 0.5}, {}}, maps), InvalidArgument);
    const std::vector<FeatureMap> one{FeatureMap(1, 2, 2)};
    EXPECT_THROW(fuse_params(GateWeights{GateMode::Scalar, {0.5, 0.5}, {}}, one), InvalidArgument);
    EXPECT_THROW(fuse_params(GateWeights{GateMode::Spatial, {}, FeatureMap(1, 3, 3, 1.0)}, one), InvalidArgument);
}

TEST(FuseParamsTest, BackwardMatchesConvexSumPartials) {
    Rng rng(10);
    std::vector<FeatureMap> maps;
    for (int k = 0; k < 3; ++k) maps.push_back(random_map(rng, 2, 3, 4));
    const auto g = random_map(rng, 2, 3, 4, -1, 1);
    const GateWeights w{GateMode::Scalar, {0.2, 0.3, 0.5}, {}};
    std::vector<FeatureMap> grad_maps;
    GateWeights grad_w;
    fuse_params_backward(w, maps, g, grad_maps, grad_w);
    for (int k = 0; k < 3; ++k) {
        double dot = 0.0;
        for (std::size_t i = 0; i < g.size(); ++i) {
            dot += g.data()[i] * maps[static_cast<std::size_t>(k)].data()[i];
            EXPECT_NEAR(grad_maps[static_cast<std::size_t>(k)].data()[i], w.scalar[static_cast<std::size_t>(k)] * g.data()[i], 1e-15);
        }
        EXPECT_NEAR(grad_w.scalar[static_cast<std::size_t>(k)], dot, 1e-12);
    }
}
