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

#include <limits>
#include <random>

#include <gtest/gtest.h>

#include "oracles.hpp"
#include "test_util.hpp"

namespace genaug {
namespace {

TEST(Iou, IdenticalBoxesGiveOne) {
    const BBox b{3, 4, 17, 9};
    EXPECT_DOUBLE_EQ(iou(b, b), 1.0);
}

TEST(Iou, DisjointBoxesGiveZero) {
    EXPECT_DOUBLE_EQ(iou({0, 0, 10, 10}, {20, 20, 30, 30}), 0.0);
    EXPECT_DOUBLE_EQ(iou({0, 0, 10, 10}, {10, 0, 20, 10}), 0.0);
}

TEST(Iou, HalfShiftedSquare) {
    EXPECT_NEAR(iou({0, 0, 10, 10}, {5, 0, 15, 10}), 50.0 / 150.0, 1e-15);
}

TEST(Iou, MatchesCellOracleOnRandomIntegerBoxes) {
    std::mt19937_64 rng(11);
    for (int i = 0; i < 2000; ++i) {
        const BBox a = testing::random_int_box(rng, 40, 24);
        const BBox b = testing::random_int_box(rng, 40, 24);
        ASSERT_NEAR(iou(a, b), oracle::cell_iou(a, b), 1e-12) << to_string(a) << " " << to_string(b);
    }
}

TEST(Iou, SymmetricAndBounded) {
    std::mt19937_64 rng(12);
    std::uniform_real_distribution<double> u(0.0, 50.0);
    for (int i = 0; i < 2000; ++i) {
        const double x = u(rng), y = u(rng), x2 = u(rng), y2 = u(rng);
        const BBox a{x, y, x + 1 + u(rng), y + 1 + u(rng)};
        const BBox b{x2, y2, x2 + 1 + u(rng), y2 + 1 + u(rng)};
        const double v = iou(a, b);
        ASSERT_EQ(v, iou(b, a));
        ASSERT_GE(v, 0.0);
        ASSERT_LE(v, 1.0);
        if (!(a == b)) {
            ASSERT_LT(v, 1.0);
        }
    }
}

TEST(BBoxTest, MakeRejectsDegenerateAndNonFinite) {
    EXPECT_THROW(make_bbox(0, 0, 0, 5), std::invalid_argument);
    EXPECT_THROW(make_bbox(0, 0, 5, -1), std::invalid_argument);
    EXPECT_THROW(make_bbox(0, 0, std::numeric_limits<double>::infinity(), 5),
                 std::invalid_argument);
    EXPECT_NO_THROW(make_bbox(0, 0, 0.5, 0.5));
}

TEST(BBoxTest, OverlapIsStrictlyPositiveArea) {
    EXPECT_FALSE(overlaps({0, 0, 24, 24}, {24, 0, 48, 24}));
    EXPECT_FALSE(overlaps({0, 0, 24, 24}, {0, 24, 24, 48}));
    EXPECT_TRUE(overlaps({0, 0, 24.5, 24}, {24, 0, 48, 24}));
}

TEST(BBoxTest, ClippedAndInsideBounds) {
    EXPECT_TRUE(inside_bounds({0, 0, 10, 10}, 10, 10));
    EXPECT_FALSE(inside_bounds({-1, 0, 10, 10}, 10, 10));
    EXPECT_FALSE(inside_bounds({0, 0, 10.5, 10}, 10, 10));
    const BBox c = clipped({-5, 3, 20, 30}, 16, 16);
    EXPECT_EQ(c, (BBox{0, 3, 16, 16}));
}

}  // namespace
}  // namespace genaug
