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

#pragma once

#include <algorithm>
#include <cmath>
#include <compare>
#include <stdexcept>
#include <string>

namespace genaug {

/// Axis-aligned rectangle in pixel coordinates, half-open on both axes:
/// it covers [x_min, x_max) x [y_min, y_max).
struct BBox {
    double x_min = 0.0;
    double y_min = 0.0;
    double x_max = 0.0;
    double y_max = 0.0;

    [[nodiscard]] constexpr double width() const noexcept { return x_max - x_min; }
    [[nodiscard]] constexpr double height() const noexcept { return y_max - y_min; }
    [[nodiscard]] constexpr double area() const noexcept { return width() * height(); }
    [[nodiscard]] constexpr double center_x() const noexcept { return 0.5 * (x_min + x_max); }
    [[nodiscard]] constexpr double center_y() const noexcept { return 0.5 * (y_min + y_max); }

    /// Finite coordinates and strictly positive extent on both axes.
    [[nodiscard]] bool valid() const noexcept {
        return std::isfinite(x_min) && std::isfinite(y_min) && std::isfinite(x_max) &&
               std::isfinite(y_max) && x_max > x_min && y_max > y_min;
    }

    friend constexpr bool operator==(const BBox&, const BBox&) = default;
};

inline std::string to_string(const BBox& b) {
    return "(" + std::to_string(b.x_min) + ", " + std::to_string(b.y_min) + ", " +
           std::to_string(b.x_max) + ", " + std::to_string(b.y_max) + ")";
}

/// Checked constructor; throws std::invalid_argument on a degenerate box.
inline BBox make_bbox(double x_min, double y_min, double x_max, double y_max) {
    BBox b{x_min, y_min, x_max, y_max};
    if (!b.valid()) {
        throw std::invalid_argument("invalid bounding box " + to_string(b));
    }
    return b;
}

[[nodiscard]] constexpr BBox translated(const BBox& b, double dx, double dy) noexcept {
    return {b.x_min + dx, b.y_min + dy, b.x_max + dx, b.y_max + dy};
}

[[nodiscard]] inline double intersection_area(const BBox& a, const BBox& b) noexcept {
    const double w = std::min(a.x_max, b.x_max) - std::max(a.x_min, b.x_min);
    const double h = std::min(a.y_max, b.y_max) - std::max(a.y_min, b.y_min);
    if (w <= 0.0 || h <= 0.0) {
        return 0.0;
    }
    return w * h;
}

/// Positive-area overlap. Boxes that only share an edge do not overlap.
[[nodiscard]] inline bool overlaps(const BBox& a, const BBox& b) noexcept {
    return intersection_area(a, b) > 0.0;
}

/// Intersection over union; 0 for disjoint boxes.
[[nodiscard]] inline double iou(const BBox& a, const BBox& b) noexcept {
    const double inter = intersection_area(a, b);
    if (inter <= 0.0) {
        return 0.0;
    }
    const double uni = a.area() + b.area() - inter;
    return inter / uni;
}

/// True when the box lies inside [0, width) x [0, height).
[[nodiscard]] inline bool inside_bounds(const BBox& b, double width, double height) noexcept {
    return b.x_min >= 0.0 && b.y_min >= 0.0 && b.x_max <= width && b.y_max <= height;
}

[[nodiscard]] inline BBox clipped(const BBox& b, double width, double height) noexcept {
    return {std::clamp(b.x_min, 0.0, width), std::clamp(b.y_min, 0.0, height),
            std::clamp(b.x_max, 0.0, width), std::clamp(b.y_max, 0.0, height)};
}

}  // namespace genaug
