#include <gtest/gtest.h>

#include "dran/error.hpp"
#include "dran/mask_geometry.hpp"
#include "dran/random.hpp"
#include "oracles.hpp"

using namespace dran;

TEST(RegionSetTest, Examples) {
    EXPECT_TRUE(region_set(SegMask(3, 3)).empty());
    SegMask m(2, 3, std::vector<std::uint8_t>{0, 3, 1, 1, 0, 3});
    EXPECT_EQ(region_set(m), (std::vector<int>{1, 3}));
    EXPECT_EQ(region_set(SegMask(2, 2, 7)), (std::vector<int>{7}));
}

TEST(RegionBBoxTest, TightRectangle) {
    SegMask m(4, 4);
    for (int y = 1; y <= 2; ++y)
        for (int x = 0; x <= 1; ++x) m.at(y, x) = 1;
    const FeatureMap f(3, 4, 4, 0.5);
    const RegionCrop crop = region_bbox_crop(f, m, 1);
    EXPECT_EQ(crop.bbox, (BBox{1, 0, 2, 2}));
    EXPECT_EQ(crop.feature.channels(), 3);
    EXPECT_EQ(crop.feature.height(), 2);
    EXPECT_EQ(crop.feature.width(), 2);
    EXPECT_EQ(crop.pixel_count(), 4u);
}

TEST(RegionBBoxTest, FullImageAndSinglePixel) {
    Rng rng(1);
    const auto f = random_map(rng, 2, 5, 6);
    const RegionCrop full = region_bbox_crop(f, SegMask(5, 6, 2), 2);
    EXPECT_EQ(full.bbox, (BBox{0, 0, 5, 6}));
    EXPECT_TRUE(full.feature == f);

    SegMask m(5, 6);
    m.at(2, 3) = 9;
    EXPECT_EQ(region_bbox(m, 9), (BBox{2, 3, 1, 1}));
}

TEST(RegionBBoxTest, MissingRegionThrows) {
    SegMask m(3, 3);
    m.at(0, 0) = 1;
    try {
        region_bbox(m, 4);
        FAIL() << "expected RegionNotFound";
    } catch (const RegionNotFound& e) {
        EXPECT_EQ(e.region_id(), 4);
    }
    EXPECT_THROW(region_bbox_crop(FeatureMap(1, 3, 4), m, 1), InvalidArgument);
}

TEST(RegionBBoxTest, DisconnectedComponentsShareOneBox) {
    SegMask m(5, 7);
    m.at(1, 1) = 4;
    m.at(3, 5) = 4;
    EXPECT_EQ(region_bbox(m, 4), (BBox{1, 1, 3, 5}));
}

TEST(RegionBBoxTest, MatchesBruteForceAndIsTight) {
    Rng rng(31);
    for (int trial = 0; trial < 100; ++trial) {
        const int h = rng.integer(1, 12), w = rng.integer(1, 12);
        const SegMask m = random_mask(rng, h, w, rng.integer(1, std::min(4, h * w)));
        const FeatureMap f = random_map(rng, 1, h, w);
        std::size_t covered = 0;
        for (int id : region_set(m)) {
            const RegionCrop crop = region_bbox_crop(f, m, id);
            const oracle::Box b = oracle::bounding_box(m, id);
            EXPECT_EQ(crop.bbox, (BBox{b.y0, b.x0, b.y1 - b.y0 + 1, b.x1 - b.x0 + 1}));
            bool top = false, bottom = false, left = false, right = false;
            for (int y = 0; y < crop.bbox.height; ++y)
                for (int x = 0; x < crop.bbox.width; ++x) {
                    if (!crop.inside(y, x)) continue;
                    top |= y == 0;
                    bottom |= y == crop.bbox.height - 1;
                    left |= x == 0;
                    right |= x == crop.bbox.width - 1;
                }
            EXPECT_TRUE(top && bottom && left && right);
            covered += crop.pixel_count();
        }
        std::size_t labelled = 0;
        for (auto l : m.labels()) labelled += l != 0;
        EXPECT_EQ(covered, labelled);
    }
}

TEST(MergeTest, CropThenMergeIsIdentity) {
    Rng rng(8);
    for (int trial = 0; trial < 50; ++trial) {
        const auto inst = random_instance(rng);
        for (int id : region_set(inst.m_f)) {
            const RegionCrop crop = region_bbox_crop(inst.f, inst.m_f, id);
            EXPECT_TRUE(merge_region(inst.f, crop.feature, crop) == inst.f);
        }
    }
}

TEST(MergeTest, FullMaskReplacesBoxAndBaseUntouched) {
    SegMask m(4, 4);
    for (int y = 1; y < 3; ++y)
        for (int x = 1; x < 4; ++x) m.at(y, x) = 1;
    const FeatureMap base(1, 4, 4, 0.0);
    const RegionCrop crop = region_bbox_crop(base, m, 1);
    const FeatureMap patch(1, 2, 3, 9.0);
    const auto out = merge_region(base, patch, crop);
    for (int y = 0; y < 4; ++y)
        for (int x = 0; x < 4; ++x) EXPECT_EQ(out.at(0, y, x), m.at(y, x) ? 9.0 : 0.0);
    for (double v : base.data()) EXPECT_EQ(v, 0.0);
    EXPECT_THROW(merge_region(base, FeatureMap(1, 3, 3), crop), InvalidArgument);
}

TEST(MergeTest, DisjointRegionsCommute) {
    Rng rng(13);
    for (int trial = 0; trial < 50; ++trial) {
        const int h = rng.integer(2, 12), w = rng.integer(2, 12);
        const SegMask m = random_mask(rng, h, w, 2);
        const FeatureMap base = random_map(rng, 2, h, w);
        const FeatureMap other = random_map(rng, 2, h, w);
        const auto ids = region_set(m);
        if (ids.size() < 2) continue;
        const RegionCrop a = region_bbox_crop(other, m, ids[0]);
        const RegionCrop b = region_bbox_crop(other, m, ids[1]);
        const auto ab = merge_region(merge_region(base, a.feature, a), b.feature, b);
        const auto ba = merge_region(merge_region(base, b.feature, b), a.feature, a);
        EXPECT_TRUE(ab == ba);
    }
}
