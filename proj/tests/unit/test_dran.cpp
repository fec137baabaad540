#include <cmath>

#include <gtest/gtest.h>

#include "dran/config.hpp"
#include "dran/dran.hpp"
#include "dran/error.hpp"
#include "dran/mask_geometry.hpp"
#include "dran/random.hpp"
#include "oracles.hpp"

using namespace dran;

namespace {

const std::vector<PyramidLevel> kSingle{PyramidLevel::fixed(1)};

DranResult run(const RandomInstance& inst, const DranConfig& cfg, const GateSet& gates) {
    return dran_forward(inst.f, inst.v, inst.m_f, inst.m_v, cfg, gates);
}

}  // namespace

TEST(DranForwardTest, EmptyMasksPassThrough) {
    Rng rng(1);
    const auto f = random_map(rng, 3, 6, 5);
    const auto v = random_map(rng, 3, 4, 4);
    const auto cfg = uniform_config(2, kSingle);
    const auto out = dran_forward(f, v, SegMask(6, 5), SegMask(4, 4), cfg, zero_gates(cfg, 3));
    EXPECT_TRUE(out.output == f);
    EXPECT_TRUE(out.processed.empty());
}

TEST(DranForwardTest, FullImageRegionTransfersGlobalMoments) {
    Rng rng(2);
    const auto f = random_map(rng, 3, 7, 6);
    const auto v = random_map(rng, 3, 5, 9);
    const SegMask m_f(7, 6, 1), m_v(5, 9, 1);
    const auto cfg = uniform_config(1, kSingle);
    const auto out = dran_forward(f, v, m_f, m_v, cfg, zero_gates(cfg, 3)).output;
    EXPECT_LT(oracle::max_abs_diff(out, oracle::moment_transfer(f, v, m_f, m_v, cfg.epsilon)), 1e-12);
    for (int c = 0; c < 3; ++c) {
        const auto got = oracle::region_moments(out, m_f, 1, c, false, 0.0);
        const auto want = oracle::region_moments(v, m_v, 1, c, false, 0.0);
        EXPECT_NEAR(got.mean, want.mean, 1e-12);
        EXPECT_NEAR(got.stddev, want.stddev, 1e-4);  // epsilon enters both std estimates
    }
}

TEST(DranForwardTest, SingleBlockMatchesMomentOracle) {
    Rng rng(3);
    for (int trial = 0; trial < 100; ++trial) {
        const auto inst = random_instance(rng);
        const bool masked = trial % 2 == 1;
        auto cfg = uniform_config(3, kSingle, trial % 3 == 0 ? GateMode::Spatial : GateMode::Scalar);
        cfg.masked_stats = masked;
        const auto out = run(inst, cfg, zero_gates(cfg, inst.f.channels())).output;
        const auto want = oracle::moment_transfer(inst.f, inst.v, inst.m_f, inst.m_v, cfg.epsilon, masked);
        EXPECT_LT(oracle::max_abs_diff(out, want), 1e-8);
        const auto baseline = moment_transfer_reference(inst.f, inst.v, inst.m_f, inst.m_v, cfg.epsilon, masked);
        EXPECT_LT(oracle::max_abs_diff(baseline, want), 1e-12);
    }
}

TEST(DranForwardTest, SelfTransferIsIdentity) {
    Rng rng(4);
    for (int trial = 0; trial < 50; ++trial) {
        auto inst = random_instance(rng);
        const auto cfg = uniform_config(3, kSingle);
        const auto out = dran_forward(inst.f, inst.f, inst.m_f, inst.m_f, cfg, zero_gates(cfg, inst.f.channels()));
        EXPECT_LT(oracle::max_abs_diff(out.output, inst.f), 1e-10);
    }
}

TEST(DranForwardTest, MultiLevelSelfTransferWithinTolerance) {
    Rng rng(5);
    const std::vector<PyramidLevel> levels{PyramidLevel::fixed(1), PyramidLevel::fixed(3), PyramidLevel::half()};
    for (int trial = 0; trial < 30; ++trial) {
        const auto inst = random_instance(rng);
        const auto cfg = uniform_config(3, levels);
        const auto out = dran_forward(inst.f, inst.f, inst.m_f, inst.m_f, cfg, zero_gates(cfg, inst.f.channels()));
        EXPECT_LT(oracle::max_abs_diff(out.output, inst.f), 1e-6);
    }
}

TEST(DranForwardTest, ConstantRegionsMapToReferenceConstant) {
    SegMask m_f(6, 6), m_v(5, 7);
    for (int y = 1; y < 4; ++y)
        for (int x = 2; x < 6; ++x) m_f.at(y, x) = 1;
    for (int y = 0; y < 3; ++y)
        for (int x = 0; x < 3; ++x) m_v.at(y, x) = 1;
    FeatureMap f(2, 6, 6, 0.2), v(2, 5, 7, 0.9);
    const std::vector<PyramidLevel> levels{PyramidLevel::fixed(1), PyramidLevel::fixed(6), PyramidLevel::half()};
    for (GateMode mode : {GateMode::Scalar, GateMode::Spatial}) {
        const auto cfg = uniform_config(1, levels, mode);
        const auto out = dran_forward(f, v, m_f, m_v, cfg, random_gates(cfg, 2, 99, 2.0)).output;
        ASSERT_TRUE(out.all_finite());
        for (int c = 0; c < 2; ++c)
            for (int y = 0; y < 6; ++y)
                for (int x = 0; x < 6; ++x) EXPECT_NEAR(out.at(c, y, x), m_f.at(y, x) ? 0.9 : 0.2, 1e-12);
    }
}

TEST(DranForwardTest, PixelsOutsideProcessedRegionsAreUntouched) {
    Rng rng(6);
    for (int trial = 0; trial < 50; ++trial) {
        const auto inst = random_instance(rng);
        const auto cfg = uniform_config(2, {PyramidLevel::fixed(1), PyramidLevel::half()}, GateMode::Spatial);
        const auto res = run(inst, cfg, random_gates(cfg, inst.f.channels(), rng.next()));
        for (int c = 0; c < inst.f.channels(); ++c)
            for (int y = 0; y < inst.f.height(); ++y)
                for (int x = 0; x < inst.f.width(); ++x) {
                    const int id = inst.m_f.at(y, x);
                    const bool processed = std::find(res.processed.begin(), res.processed.end(), id) != res.processed.end();
                    if (!processed) { EXPECT_EQ(res.output.at(c, y, x), inst.f.at(c, y, x)); }
                }
    }
}

TEST(DranForwardTest, RegionsMissingFromOneSideAreSkippedWithWarning) {
    Rng rng(7);
    const auto f = random_map(rng, 1, 4, 4);
    const auto v = random_map(rng, 1, 4, 4);
    SegMask m_f(4, 4), m_v(4, 4);
    m_f.at(0, 0) = 1;
    m_f.at(3, 3) = 2;
    m_v.at(1, 1) = 2;
    m_v.at(2, 2) = 3;
    const auto cfg = uniform_config(3, kSingle);
    const auto res = dran_forward(f, v, m_f, m_v, cfg, zero_gates(cfg, 1));
    EXPECT_EQ(res.processed, (std::vector<int>{2}));
    EXPECT_EQ(res.warnings.size(), 2u);
    EXPECT_EQ(res.output.at(0, 0, 0), f.at(0, 0, 0));
    EXPECT_EQ(res.output.at(0, 3, 3), v.at(0, 1, 1));
}

TEST(DranForwardTest, DisjointRegionsAreIndependent) {
    Rng rng(8);
    for (int trial = 0; trial < 30; ++trial) {
        const int h = rng.integer(6, 14), w = rng.integer(6, 14);
        RandomInstance inst{random_map(rng, 2, h, w), random_map(rng, 2, h, w),
                            random_block_mask(rng, h, w, 2), random_block_mask(rng, h, w, 2)};
        const auto cfg = uniform_config(2, {PyramidLevel::fixed(1), PyramidLevel::fixed(2)});
        const auto gates = random_gates(cfg, 2, rng.next());
        const auto base = run(inst, cfg, gates).output;
        for (int y = 0; y < h; ++y)
            for (int x = 0; x < w; ++x)
                if (inst.m_v.at(y, x) == 1)
                    for (int c = 0; c < 2; ++c) inst.v.at(c, y, x) = 0.0;
        const auto changed = run(inst, cfg, gates).output;
        for (int c = 0; c < 2; ++c)
            for (int y = 0; y < h; ++y)
                for (int x = 0; x < w; ++x)
                    if (inst.m_f.at(y, x) == 2) { EXPECT_EQ(changed.at(c, y, x), base.at(c, y, x)); }
    }
}

TEST(DranForwardTest, ZeroThetaIgnoresBranchOrder) {
    Rng rng(9);
    const std::vector<PyramidLevel> a{PyramidLevel::fixed(1), PyramidLevel::fixed(3), PyramidLevel::half()};
    const std::vector<PyramidLevel> b{PyramidLevel::half(), PyramidLevel::fixed(1), PyramidLevel::fixed(3)};
    for (int trial = 0; trial < 30; ++trial) {
        const auto inst = random_instance(rng);
        const auto cfg_a = uniform_config(3, a);
        const auto cfg_b = uniform_config(3, b);
        const auto out_a = run(inst, cfg_a, zero_gates(cfg_a, inst.f.channels())).output;
        const auto out_b = run(inst, cfg_b, zero_gates(cfg_b, inst.f.channels())).output;
        EXPECT_LT(oracle::max_abs_diff(out_a, out_b), 1e-12);
    }
}

TEST(DranForwardTest, RepeatedRunsAreBitwiseIdentical) {
    Rng rng(10);
    const auto inst = random_instance(rng);
    const auto cfg = uniform_config(3, {PyramidLevel::fixed(1), PyramidLevel::fixed(2), PyramidLevel::half()}, GateMode::Spatial);
    const auto gates = random_gates(cfg, inst.f.channels(), 5);
    EXPECT_TRUE(run(inst, cfg, gates).output == run(inst, cfg, gates).output);
}

TEST(DranForwardTest, InputValidation) {
    const auto cfg = uniform_config(1, kSingle);
    EXPECT_THROW(dran_forward(FeatureMap(1, 3, 3), FeatureMap(2, 3, 3), SegMask(3, 3, 1), SegMask(3, 3, 1), cfg,
                              zero_gates(cfg, 1)),
                 InvalidArgument);
    EXPECT_THROW(dran_forward(FeatureMap(1, 3, 3), FeatureMap(1, 3, 3), SegMask(3, 4, 1), SegMask(3, 3, 1), cfg,
                              zero_gates(cfg, 1)),
                 InvalidArgument);
}

TEST(DranRegionTest, MissingConfigIsConfigError) {
    const FeatureMap f(1, 3, 3, 0.5);
    const SegMask m(3, 3, 4);
    const RegionCrop crop = region_bbox_crop(f, m, 4);
    const auto cfg = uniform_config(1, kSingle);
    EXPECT_THROW(dran_region(crop, crop, cfg, zero_gates(cfg, 1).at(1)), ConfigError);
}

TEST(DranRegionTest, WrongGateShapeIsConfigError) {
    const FeatureMap f(1, 3, 3, 0.5);
    const SegMask m(3, 3, 1);
    const RegionCrop crop = region_bbox_crop(f, m, 1);
    const auto cfg = uniform_config(1, {PyramidLevel::fixed(1), PyramidLevel::half()});
    const RegionGates wrong{GateParams::zeros(3, 2), GateParams::zeros(3, 2)};
    EXPECT_THROW(dran_region(crop, crop, cfg, wrong), ConfigError);
}

TEST(MomentTransferReferenceTest, IdentityAndConstants) {
    Rng rng(11);
    const auto inst = random_instance(rng);
    EXPECT_LT(oracle::max_abs_diff(moment_transfer_reference(inst.f, inst.f, inst.m_f, inst.m_f), inst.f), 1e-10);
    const FeatureMap f(1, 3, 3, 0.1), v(1, 3, 3, 0.7);
    const auto out = moment_transfer_reference(f, v, SegMask(3, 3, 1), SegMask(3, 3, 1));
    for (double x : out.data()) EXPECT_NEAR(x, 0.7, 1e-12);
}
