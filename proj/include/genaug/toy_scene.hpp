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

// Procedural aerial-looking scenes: smooth ground texture with top-down
// vehicle sprites. Used by the toy backends and as desk-scale datasets.

#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <numbers>
#include <random>
#include <string>
#include <vector>

#include <opencv2/imgproc.hpp>

#include "genaug/dataset.hpp"
#include "genaug/geometry.hpp"
#include "genaug/raster.hpp"

namespace genaug {

struct Rgb {
    std::uint8_t r = 0;
    std::uint8_t g = 0;
    std::uint8_t b = 0;
    friend bool operator==(const Rgb&, const Rgb&) = default;
};

/// Body colours, all brighter than the ground so template polarity is stable.
inline const std::vector<Rgb>& default_vehicle_palette() {
    static const std::vector<Rgb> kPalette{
        {236, 236, 232}, {196, 198, 202}, {232, 212, 96}, {160, 196, 232}, {240, 150, 128}};
    return kPalette;
}

/// Top-down vehicle: rounded rectangle with a dark windshield band and a
/// smaller rear window. `angle` is the heading in radians.
struct VehicleSprite {
    double cx = 0.0;
    double cy = 0.0;
    double angle = 0.0;
    double length = 24.0;
    double width = 12.0;
    Rgb body{236, 236, 232};
};

inline constexpr Rgb kGlassColor{38, 44, 56};

/// Axis-aligned extent of the rotated body rectangle (unclipped).
inline BBox vehicle_extent(const VehicleSprite& s) {
    const double c = std::abs(std::cos(s.angle));
    const double n = std::abs(std::sin(s.angle));
    const double hx = 0.5 * (s.length * c + s.width * n);
    const double hy = 0.5 * (s.length * n + s.width * c);
    return {s.cx - hx, s.cy - hy, s.cx + hx, s.cy + hy};
}

namespace detail {

inline constexpr int kPolyShift = 4;
inline constexpr double kPolyScale = 1 << kPolyShift;

/// Rounded rectangle outline in the sprite frame, u along the heading.
inline std::vector<cv::Point2d> rounded_rect(double u0, double u1, double v0, double v1,
                                             double radius) {
    std::vector<cv::Point2d> pts;
    const double r = std::min({radius, 0.5 * (u1 - u0), 0.5 * (v1 - v0)});
    const std::array<cv::Point2d, 4> centers{cv::Point2d{u1 - r, v1 - r}, {u0 + r, v1 - r},
                                             {u0 + r, v0 + r}, {u1 - r, v0 + r}};
    constexpr int kArc = 6;
    for (int k = 0; k < 4; ++k) {
        for (int i = 0; i <= kArc; ++i) {
            const double t = (k + static_cast<double>(i) / kArc) * 0.5 * std::numbers::pi;
            pts.push_back(centers[static_cast<std::size_t>(k)] +
                          cv::Point2d{r * std::cos(t), r * std::sin(t)});
        }
    }
    return pts;
}

inline void blend_polygon(cv::Mat& roi, const std::vector<cv::Point2d>& local,
                          const VehicleSprite& s, cv::Point2d roi_origin, Rgb color,
                          double opacity) {
    const double c = std::cos(s.angle);
    const double n = std::sin(s.angle);
    std::vector<cv::Point> pts;
    pts.reserve(local.size());
    for (const auto& p : local) {
        const double x = s.cx + p.x * c - p.y * n - roi_origin.x;
        const double y = s.cy + p.x * n + p.y * c - roi_origin.y;
        pts.emplace_back(static_cast<int>(std::lround(x * kPolyScale)),
                         static_cast<int>(std::lround(y * kPolyScale)));
    }
    cv::Mat coverage = cv::Mat::zeros(roi.size(), CV_8U);
    const std::vector<std::vector<cv::Point>> polys{pts};
    cv::fillPoly(coverage, polys, cv::Scalar(255), cv::LINE_AA, kPolyShift);
    const double target[3] = {static_cast<double>(color.r), static_cast<double>(color.g),
                              static_cast<double>(color.b)};
    for (int y = 0; y < roi.rows; ++y) {
        auto* px = roi.ptr<std::uint8_t>(y);
        const auto* m = coverage.ptr<std::uint8_t>(y);
        for (int x = 0; x < roi.cols; ++x) {
            if (m[x] == 0) continue;
            const double a = opacity * m[x] / 255.0;
            for (int ch = 0; ch < 3; ++ch) {
                const double v = px[3 * x + ch] + a * (target[ch] - px[3 * x + ch]);
                px[3 * x + ch] = cv::saturate_cast<std::uint8_t>(v);
            }
        }
    }
}

}  // namespace detail

/// Blends the sprite into an RGB raster; `opacity` in [0,1] scales every layer.
inline void draw_vehicle(Raster& dst, const VehicleSprite& s, double opacity = 1.0) {
    const BBox ext = vehicle_extent(s);
    const int x0 = std::max(0, static_cast<int>(std::floor(ext.x_min)) - 2);
    const int y0 = std::max(0, static_cast<int>(std::floor(ext.y_min)) - 2);
    const int x1 = std::min(dst.width(), static_cast<int>(std::ceil(ext.x_max)) + 2);
    const int y1 = std::min(dst.height(), static_cast<int>(std::ceil(ext.y_max)) + 2);
    if (x1 <= x0 || y1 <= y0 || opacity <= 0.0) {
        return;
    }
    cv::Mat roi = as_mat(dst)(cv::Rect(x0, y0, x1 - x0, y1 - y0));
    const cv::Point2d origin{static_cast<double>(x0), static_cast<double>(y0)};
    const double hl = 0.5 * s.length;
    const double hw = 0.5 * s.width;
    detail::blend_polygon(roi, detail::rounded_rect(-hl, hl, -hw, hw, 0.35 * s.width), s, origin,
                          s.body, opacity);
    detail::blend_polygon(roi,
                          detail::rounded_rect(0.12 * s.length, 0.30 * s.length, -0.40 * s.width,
                                               0.40 * s.width, 0.1 * s.width),
                          s, origin, kGlassColor, opacity);
    detail::blend_polygon(roi,
                          detail::rounded_rect(-0.40 * s.length, -0.30 * s.length,
                                               -0.36 * s.width, 0.36 * s.width, 0.1 * s.width),
                          s, origin, kGlassColor, opacity);
}

/// Smooth ground colour field with a little per-pixel grain.
template <std::uniform_random_bit_generator Rng>
Raster render_background(int width, int height, Rng& rng) {
    std::uniform_real_distribution<double> u(0.0, 1.0);
    constexpr int kGrid = 6;
    cv::Mat coarse(kGrid, kGrid, CV_32FC3);
    const double base_r = 70 + 40 * u(rng);
    const double base_g = 75 + 40 * u(rng);
    const double base_b = 60 + 35 * u(rng);
    for (int y = 0; y < kGrid; ++y) {
        for (int x = 0; x < kGrid; ++x) {
            const double shade = 30.0 * (u(rng) - 0.5);
            coarse.at<cv::Vec3f>(y, x) =
                cv::Vec3f(static_cast<float>(base_r + shade + 10 * (u(rng) - 0.5)),
                          static_cast<float>(base_g + shade + 10 * (u(rng) - 0.5)),
                          static_cast<float>(base_b + shade + 10 * (u(rng) - 0.5)));
        }
    }
    cv::Mat field;
    cv::resize(coarse, field, cv::Size(width, height), 0, 0, cv::INTER_CUBIC);
    // Occasional road band.
    if (u(rng) < 0.5) {
        const bool horizontal = u(rng) < 0.5;
        const int extent = horizontal ? height : width;
        const int band = std::max(4, extent / 10);
        const int start = static_cast<int>(u(rng) * (extent - band));
        const cv::Rect road = horizontal ? cv::Rect(0, start, width, band)
                                         : cv::Rect(start, 0, band, height);
        field(road) = field(road) * 0.5 + cv::Scalar(45, 45, 48);
    }
    std::normal_distribution<float> grain(0.0F, 4.0F);
    Raster out(width, height, 3);
    for (int y = 0; y < height; ++y) {
        const auto* src = field.ptr<cv::Vec3f>(y);
        for (int x = 0; x < width; ++x) {
            for (int c = 0; c < 3; ++c) {
                out.at(x, y, c) = cv::saturate_cast<std::uint8_t>(src[x][c] + grain(rng));
            }
        }
    }
    return out;
}

/// Random sprite parameters for a vehicle of the given nominal length.
template <std::uniform_random_bit_generator Rng>
VehicleSprite random_vehicle(double cx, double cy, double length, const std::vector<Rgb>& palette,
                             Rng& rng) {
    std::uniform_real_distribution<double> u(0.0, 1.0);
    VehicleSprite s;
    s.cx = cx;
    s.cy = cy;
    s.angle = 2.0 * std::numbers::pi * u(rng);
    s.length = length;
    s.width = length * (0.45 + 0.1 * u(rng));
    s.body = palette[std::uniform_int_distribution<std::size_t>(0, palette.size() - 1)(rng)];
    return s;
}

struct ToySceneParams {
    int n_images = 30;
    int image_size = 256;
    int min_vehicles = 1;
    int max_vehicles = 4;
    double min_length = 18.0;
    double max_length = 30.0;
    std::string id_prefix = "img";
    std::string label = "car";
};

/// Deterministic synthetic dataset; boxes are the integer-rounded extents of
/// non-overlapping vehicles.
inline Dataset make_toy_dataset(const ToySceneParams& params, std::uint64_t seed) {
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    std::vector<ImageRecord> records;
    records.reserve(static_cast<std::size_t>(params.n_images));
    const double s = params.image_size;
    for (int i = 0; i < params.n_images; ++i) {
        Raster pixels = render_background(params.image_size, params.image_size, rng);
        std::vector<Annotation> annotations;
        const int n = std::uniform_int_distribution<int>(params.min_vehicles,
                                                         params.max_vehicles)(rng);
        for (int v = 0; v < n; ++v) {
            for (int attempt = 0; attempt < 50; ++attempt) {
                const double length =
                    params.min_length + (params.max_length - params.min_length) * u(rng);
                const double margin = 0.5 * length + 2.0;
                if (s <= 2 * margin) break;
                const double cx = margin + (s - 2 * margin) * u(rng);
                const double cy = margin + (s - 2 * margin) * u(rng);
                const auto sprite = random_vehicle(cx, cy, length, default_vehicle_palette(), rng);
                const BBox ext = vehicle_extent(sprite);
                const BBox box = clipped({std::floor(ext.x_min), std::floor(ext.y_min),
                                          std::ceil(ext.x_max), std::ceil(ext.y_max)},
                                         s, s);
                const BBox padded{box.x_min - 4, box.y_min - 4, box.x_max + 4, box.y_max + 4};
                const bool clear = std::none_of(
                    annotations.begin(), annotations.end(),
                    [&](const Annotation& a) { return overlaps(a.bbox, padded); });
                if (!clear) continue;
                draw_vehicle(pixels, sprite);
                annotations.push_back({box, params.label, Provenance::Original});
                break;
            }
        }
        char id[64];
        std::snprintf(id, sizeof(id), "%s%04d", params.id_prefix.c_str(), i);
        records.emplace_back(id, std::move(pixels), std::move(annotations));
    }
    return Dataset(std::move(records), {params.label});
}

}  // namespace genaug
