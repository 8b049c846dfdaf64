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
#include <optional>
#include <random>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "genaug/dataset.hpp"
#include "genaug/geometry.hpp"
#include "genaug/raster.hpp"

namespace genaug {

enum class PatchErrc { InstanceTooLarge, ImageTooSmall, OddPatchSize, GeometryMismatch };

inline const char* to_string(PatchErrc e) noexcept {
    switch (e) {
        case PatchErrc::InstanceTooLarge: return "InstanceTooLarge";
        case PatchErrc::ImageTooSmall: return "ImageTooSmall";
        case PatchErrc::OddPatchSize: return "OddPatchSize";
        case PatchErrc::GeometryMismatch: return "GeometryMismatch";
    }
    return "Unknown";
}

class PatchError : public std::runtime_error {
  public:
    PatchError(PatchErrc code, const std::string& detail)
        : std::runtime_error(std::string(to_string(code)) + ": " + detail), code_(code) {}
    [[nodiscard]] PatchErrc code() const noexcept { return code_; }

  private:
    PatchErrc code_;
};

struct PixelPoint {
    int x = 0;
    int y = 0;
    friend constexpr auto operator<=>(const PixelPoint&, const PixelPoint&) = default;
};

/// Square window of a parent image.
struct Patch {
    PixelPoint origin;
    int size = 0;
    Raster pixels;
    std::string parent_id;
    /// Set for harvested patches: the instance box in patch-local coordinates.
    std::optional<BBox> instance;
};

/// A patch whose central size/2 square has been blanked. `base` keeps the
/// original pixels, `pixels` is the masked copy fed to a generator.
struct MaskedPatch {
    Patch base;
    BBox hole;
    Raster mask;
    Raster pixels;

    [[nodiscard]] int size() const noexcept { return base.size; }
    [[nodiscard]] int hole_offset() const noexcept { return base.size / 4; }
    [[nodiscard]] int hole_side() const noexcept { return base.size / 2; }
};

/// Generator output: the completed patch and its central hole crop.
class GenerationResult {
  public:
    GenerationResult() = default;

    /// Throws PatchError(GeometryMismatch) unless `completed` is an RGB square
    /// of even side.
    explicit GenerationResult(Raster completed) : completed_(std::move(completed)) {
        if (completed_.width() != completed_.height() || completed_.width() % 2 != 0 ||
            completed_.channels() != 3) {
            throw PatchError(PatchErrc::GeometryMismatch,
                             "completed patch must be an even RGB square");
        }
        const int s = completed_.width();
        hole_content_ = crop(completed_, s / 4, s / 4, s / 2, s / 2);
    }

    [[nodiscard]] const Raster& completed() const noexcept { return completed_; }
    [[nodiscard]] const Raster& hole_content() const noexcept { return hole_content_; }

  private:
    Raster completed_;
    Raster hole_content_;
};

inline void require_fits(const ImageRecord& image, int patch_size) {
    if (patch_size <= 0 || image.width() < patch_size || image.height() < patch_size) {
        throw PatchError(PatchErrc::ImageTooSmall,
                         "image '" + image.id() + "' is " + std::to_string(image.width()) + "x" +
                             std::to_string(image.height()) + ", patch is " +
                             std::to_string(patch_size));
    }
}

inline Patch extract_patch(const ImageRecord& image, PixelPoint origin, int patch_size) {
    require_fits(image, patch_size);
    Patch p;
    p.origin = origin;
    p.size = patch_size;
    p.pixels = crop(image.pixels(), origin.x, origin.y, patch_size, patch_size);
    p.parent_id = image.id();
    return p;
}

/// Patch centred on the instance, shifted inward at image borders.
inline Patch harvest_instance_patch(const ImageRecord& image, const Annotation& annotation,
                                    int patch_size) {
    require_fits(image, patch_size);
    const double half = 0.5 * patch_size;
    if (annotation.bbox.width() > half || annotation.bbox.height() > half) {
        throw PatchError(PatchErrc::InstanceTooLarge,
                         "instance " + to_string(annotation.bbox) + " exceeds half of patch " +
                             std::to_string(patch_size));
    }
    const auto place = [&](double center, int limit) {
        const int o = static_cast<int>(std::floor(center - half + 0.5));
        return std::clamp(o, 0, limit - patch_size);
    };
    const PixelPoint origin{place(annotation.bbox.center_x(), image.width()),
                            place(annotation.bbox.center_y(), image.height())};
    Patch p = extract_patch(image, origin, patch_size);
    p.instance = translated(annotation.bbox, -origin.x, -origin.y);
    return p;
}

/// Uniform origin over {0..W-s} x {0..H-s}.
template <std::uniform_random_bit_generator Rng>
PixelPoint sample_patch_origin(const ImageRecord& image, int patch_size, Rng& rng) {
    require_fits(image, patch_size);
    std::uniform_int_distribution<int> dx(0, image.width() - patch_size);
    std::uniform_int_distribution<int> dy(0, image.height() - patch_size);
    const int x = dx(rng);
    const int y = dy(rng);
    return {x, y};
}

/// Hole of a square patch of the given side, in patch-local coordinates.
[[nodiscard]] constexpr BBox central_hole(int patch_size) noexcept {
    const double offset = patch_size / 4;
    const double end = patch_size / 4 + patch_size / 2;
    return {offset, offset, end, end};
}

inline MaskedPatch mask_center(const Patch& patch) {
    if (patch.size <= 0 || patch.size % 2 != 0) {
        throw PatchError(PatchErrc::OddPatchSize, "patch size " + std::to_string(patch.size));
    }
    if (patch.pixels.width() != patch.size || patch.pixels.height() != patch.size) {
        throw PatchError(PatchErrc::GeometryMismatch, "patch raster does not match its size");
    }
    MaskedPatch m;
    m.base = patch;
    const int offset = patch.size / 4;
    const int side = patch.size / 2;
    m.hole = central_hole(patch.size);
    m.mask = Raster(patch.size, patch.size, 1, 0);
    m.pixels = patch.pixels;
    as_mat(m.mask)(cv::Rect(offset, offset, side, side)).setTo(cv::Scalar(255));
    as_mat(m.pixels)(cv::Rect(offset, offset, side, side)).setTo(cv::Scalar::all(0));
    return m;
}

[[nodiscard]] inline BBox hole_rect_global(const MaskedPatch& masked) noexcept {
    return translated(masked.hole, masked.base.origin.x, masked.base.origin.y);
}

/// Strictly positive overlap with any annotation; shared edges do not count.
[[nodiscard]] inline bool intersects_any(const BBox& rect,
                                         std::span<const Annotation> annotations) noexcept {
    return std::any_of(annotations.begin(), annotations.end(),
                       [&](const Annotation& a) { return overlaps(rect, a.bbox); });
}

/// New record whose hole region holds the generated content. Annotations are
/// carried over unchanged.
inline ImageRecord composite_hole(const ImageRecord& image, const MaskedPatch& masked,
                                  const GenerationResult& result) {
    const BBox hole = hole_rect_global(masked);
    const int side = masked.hole_side();
    if (result.completed().width() != masked.size() ||
        result.hole_content().width() != side || result.hole_content().height() != side) {
        throw PatchError(PatchErrc::GeometryMismatch, "generation result does not match patch");
    }
    if (masked.base.parent_id != image.id() || !inside_bounds(hole, image.width(), image.height())) {
        throw PatchError(PatchErrc::GeometryMismatch,
                         "hole " + to_string(hole) + " is not inside image '" + image.id() + "'");
    }
    Raster pixels = image.pixels();
    paste(pixels, result.hole_content(), static_cast<int>(hole.x_min),
          static_cast<int>(hole.y_min));
    return image.with_pixels(std::move(pixels));
}

}  // namespace genaug
