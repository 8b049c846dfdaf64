// Copyright 2026 The genaug Authors.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include <map>
#include <random>
#include <set>

#include <gtest/gtest.h>

#include "test_util.hpp"

namespace genaug {
namespace {

ImageRecord image(int w, int h, std::vector<Annotation> anns = {}) {
    return ImageRecord("im", testing::pattern_raster(w, h), std::move(anns));
}

Annotation ann(double x0, double y0, double x1, double y1) { return {{x0, y0, x1, y1}, "car"}; }

TEST(Harvest, CentresOnInstance) {
    const auto img = image(1024, 1024);
    const auto p = harvest_instance_patch(img, ann(488, 488, 536, 536), 96);
    EXPECT_EQ(p.origin, (PixelPoint{464, 464}));
    EXPECT_EQ(*p.instance, (BBox{24, 24, 72, 72}));
}

TEST(Harvest, ClampsAtBorder) {
    const auto img = image(1024, 1024);
    const auto p = harvest_instance_patch(img, ann(5, 5, 15, 15), 96);
    EXPECT_EQ(p.origin, (PixelPoint{0, 0}));
    const auto q = harvest_instance_patch(img, ann(1010, 1000, 1024, 1020), 96);
    EXPECT_EQ(q.origin, (PixelPoint{928, 928}));
}

TEST(Harvest, Errors) {
    const auto img = image(1024, 1024);
    try {
        harvest_instance_patch(img, ann(0, 0, 49, 10), 96);
        FAIL();
    } catch (const PatchError& e) {
        EXPECT_EQ(e.code(), PatchErrc::InstanceTooLarge);
    }
    try {
        harvest_instance_patch(image(64, 200), ann(0, 0, 10, 10), 96);
        FAIL();
    } catch (const PatchError& e) {
        EXPECT_EQ(e.code(), PatchErrc::ImageTooSmall);
    }
}

TEST(Harvest, InstanceAlwaysInsidePatch) {
    std::mt19937_64 rng(3);
    const auto img = image(300, 200);
    std::uniform_real_distribution<double> side(1.0, 48.0);
    for (int i = 0; i < 2000; ++i) {
        const double w = side(rng), h = side(rng);
        const double x = std::uniform_real_distribution<double>(0, 300 - w)(rng);
        const double y = std::uniform_real_distribution<double>(0, 200 - h)(rng);
        const auto p = harvest_instance_patch(img, ann(x, y, x + w, y + h), 96);
        ASSERT_TRUE(inside_bounds(*p.instance, 96, 96)) << to_string(*p.instance);
        ASSERT_TRUE(img.pixels().contains(p.origin.x, p.origin.y, 96, 96));
    }
}

TEST(SampleOrigin, ForcedWhenImageEqualsPatch) {
    std::mt19937_64 rng(1);
    const auto img = image(96, 96);
    for (int i = 0; i < 20; ++i) EXPECT_EQ(sample_patch_origin(img, 96, rng), (PixelPoint{0, 0}));
}

TEST(SampleOrigin, BoundsAndDeterminism) {
    const auto img = image(1024, 1024);
    std::mt19937_64 a(9), b(9);
    for (int i = 0; i < 1000; ++i) {
        const auto p = sample_patch_origin(img, 96, a);
        ASSERT_EQ(p, sample_patch_origin(img, 96, b));
        ASSERT_GE(p.x, 0);
        ASSERT_LE(p.x, 928);
        ASSERT_GE(p.y, 0);
        ASSERT_LE(p.y, 928);
    }
}

TEST(SampleOrigin, ChiSquareUniformOnFourCells) {
    // 2x2 possible origins: chi-square with 3 dof, critical value at p=0.01 is 11.345.
    const auto img = image(97, 97);
    std::mt19937_64 rng(2024);
    std::map<std::pair<int, int>, int> counts;
    constexpr int kDraws = 100000;
    for (int i = 0; i < kDraws; ++i) {
        const auto p = sample_patch_origin(img, 96, rng);
        ++counts[{p.x, p.y}];
    }
    ASSERT_EQ(counts.size(), 4U);
    double chi2 = 0.0;
    for (const auto& [cell, n] : counts) {
        const double e = kDraws / 4.0;
        chi2 += (n - e) * (n - e) / e;
    }
    EXPECT_LT(chi2, 11.345);
}

TEST(MaskCenter, HoleGeometry) {
    const auto img = image(128, 128);
    const auto m = mask_center(extract_patch(img, {0, 0}, 96));
    EXPECT_EQ(m.hole, (BBox{24, 24, 72, 72}));
    const auto small = mask_center(extract_patch(img, {5, 5}, 4));
    EXPECT_EQ(small.hole, (BBox{1, 1, 3, 3}));
}

TEST(MaskCenter, MaskExactlyInsideHoleAndInputUntouched) {
    const auto img = image(128, 128);
    for (const int s : {4, 8, 96, 10}) {
        const Patch p = extract_patch(img, {3, 7}, s);
        const Patch copy = p;
        const auto m = mask_center(p);
        EXPECT_EQ(p.pixels, copy.pixels);
        int masked = 0;
        for (int y = 0; y < s; ++y) {
            for (int x = 0; x < s; ++x) {
                const bool in = x >= m.hole.x_min && x < m.hole.x_max && y >= m.hole.y_min &&
                                y < m.hole.y_max;
                ASSERT_EQ(m.mask.at(x, y) != 0, in);
                if (in) {
                    ++masked;
                    ASSERT_EQ(m.pixels.at(x, y, 0), 0);
                } else {
                    ASSERT_EQ(m.pixels.at(x, y, 1), p.pixels.at(x, y, 1));
                }
            }
        }
        EXPECT_EQ(masked, (s / 2) * (s / 2));
    }
}

TEST(MaskCenter, OddSizeRejected) {
    const auto img = image(128, 128);
    Patch p = extract_patch(img, {0, 0}, 95);
    try {
        mask_center(p);
        FAIL();
    } catch (const PatchError& e) {
        EXPECT_EQ(e.code(), PatchErrc::OddPatchSize);
    }
}

TEST(HoleRect, Translation) {
    const auto img = image(400, 400);
    EXPECT_EQ(hole_rect_global(mask_center(extract_patch(img, {100, 200}, 96))),
              (BBox{124, 224, 172, 272}));
    EXPECT_EQ(hole_rect_global(mask_center(extract_patch(img, {0, 0}, 96))), (BBox{24, 24, 72, 72}));
}

TEST(HoleRect, AlwaysInsideImage) {
    std::mt19937_64 rng(5);
    for (int i = 0; i < 500; ++i) {
        const int w = std::uniform_int_distribution<int>(96, 300)(rng);
        const int h = std::uniform_int_distribution<int>(96, 300)(rng);
        const auto img = image(w, h);
        const auto o = sample_patch_origin(img, 96, rng);
        ASSERT_TRUE(inside_bounds(hole_rect_global(mask_center(extract_patch(img, o, 96))), w, h));
    }
}

std::set<std::pair<int, int>> cells(const BBox& b) {
    std::set<std::pair<int, int>> out;
    for (int y = static_cast<int>(b.y_min); y < static_cast<int>(b.y_max); ++y)
        for (int x = static_cast<int>(b.x_min); x < static_cast<int>(b.x_max); ++x) out.insert({x, y});
    return out;
}

TEST(IntersectsAny, Basics) {
    const BBox hole{24, 24, 72, 72};
    EXPECT_TRUE(intersects_any(hole, std::vector<Annotation>{ann(30, 30, 40, 40)}));
    EXPECT_FALSE(intersects_any(hole, std::vector<Annotation>{ann(0, 0, 24, 30)}));
    EXPECT_FALSE(intersects_any(hole, std::vector<Annotation>{}));
}

TEST(IntersectsAny, MatchesPixelSetOracle) {
    std::mt19937_64 rng(8);
    for (int i = 0; i < 3000; ++i) {
        const BBox rect = testing::random_int_box(rng, 30, 16);
        std::vector<Annotation> anns;
        const int n = std::uniform_int_distribution<int>(0, 3)(rng);
        for (int k = 0; k < n; ++k) anns.push_back({testing::random_int_box(rng, 30, 12), "car"});
        const auto rc = cells(rect);
        bool shared = false;
        for (const auto& a : anns)
            for (const auto& c : cells(a.bbox)) shared = shared || rc.count(c) > 0;
        ASSERT_EQ(intersects_any(rect, anns), shared);
    }
}

TEST(Composite, OnlyHoleChanges) {
    const auto img = image(200, 150, {ann(1, 1, 5, 5)});
    const auto before = img.pixels();
    const auto m = mask_center(extract_patch(img, {40, 30}, 96));
    const auto result = testing::SolidGenerator(96, 77).fill(m, 0);
    const auto out = composite_hole(img, m, result);
    EXPECT_EQ(img.pixels(), before);
    EXPECT_EQ(out.annotations(), img.annotations());
    const BBox hole = hole_rect_global(m);
    for (int y = 0; y < 150; ++y) {
        for (int x = 0; x < 200; ++x) {
            const bool in = x >= hole.x_min && x < hole.x_max && y >= hole.y_min && y < hole.y_max;
            for (int c = 0; c < 3; ++c) {
                ASSERT_EQ(out.pixels().at(x, y, c), in ? 77 : before.at(x, y, c));
            }
        }
    }
    EXPECT_EQ(crop(out.pixels(), 64, 54, 48, 48), result.hole_content());
}

TEST(Composite, DisjointHolesCommute) {
    const auto img = image(300, 200);
    const auto m1 = mask_center(extract_patch(img, {0, 0}, 96));
    const auto m2 = mask_center(extract_patch(img, {150, 90}, 96));
    const auto r1 = testing::SolidGenerator(96, 10).fill(m1, 0);
    const auto r2 = testing::SolidGenerator(96, 250).fill(m2, 0);
    const auto ab = composite_hole(composite_hole(img, m1, r1), m2, r2);
    const auto ba = composite_hole(composite_hole(img, m2, r2), m1, r1);
    EXPECT_EQ(ab.pixels(), ba.pixels());
    EXPECT_EQ(ab.pixels().at(30, 30, 0), 10);
    EXPECT_EQ(ab.pixels().at(180, 120, 0), 250);
}

TEST(Composite, GeometryMismatch) {
    const auto img = image(200, 200);
    const auto m = mask_center(extract_patch(img, {0, 0}, 96));
    const GenerationResult wrong(testing::pattern_raster(64, 64));
    try {
        composite_hole(img, m, wrong);
        FAIL();
    } catch (const PatchError& e) {
        EXPECT_EQ(e.code(), PatchErrc::GeometryMismatch);
    }
    const ImageRecord other("other", testing::pattern_raster(200, 200));
    EXPECT_THROW(composite_hole(other, m, testing::SolidGenerator().fill(m, 0)), PatchError);
}

TEST(GenerationResultTest, HoleContentIsCentralCrop) {
    const Raster r = testing::pattern_raster(96, 96);
    const GenerationResult g(r);
    EXPECT_EQ(g.hole_content(), crop(r, 24, 24, 48, 48));
    EXPECT_THROW(GenerationResult(testing::pattern_raster(95, 95)), PatchError);
}

}  // namespace
}  // namespace genaug
