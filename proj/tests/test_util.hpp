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
#include <atomic>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <random>
#include <string>
#include <unistd.h>
#include <vector>

#include "genaug/genaug.hpp"

namespace genaug::testing {

/// Directory removed on destruction.
class TempDir {
  public:
    TempDir() {
        static std::atomic<int> counter{0};
        path_ = std::filesystem::temp_directory_path() /
                ("genaug_test_" + std::to_string(::getpid()) + "_" + std::to_string(counter++));
        std::filesystem::remove_all(path_);
        std::filesystem::create_directories(path_);
    }
    ~TempDir() {
        std::error_code ec;
        std::filesystem::remove_all(path_, ec);
    }
    TempDir(const TempDir&) = delete;
    TempDir& operator=(const TempDir&) = delete;

    [[nodiscard]] const std::filesystem::path& path() const noexcept { return path_; }
    std::filesystem::path operator/(const std::string& leaf) const { return path_ / leaf; }

  private:
    std::filesystem::path path_;
};

/// Deterministic RGB test pattern.
inline Raster pattern_raster(int w, int h, int salt = 0) {
    Raster r(w, h, 3);
    for (int y = 0; y < h; ++y) {
        for (int x = 0; x < w; ++x) {
            r.at(x, y, 0) = static_cast<std::uint8_t>((x * 29 + y * 7 + salt) % 256);
            r.at(x, y, 1) = static_cast<std::uint8_t>((x * 3 + y * 31 + 2 * salt) % 256);
            r.at(x, y, 2) = static_cast<std::uint8_t>((x * y * 5 + salt) % 256);
        }
    }
    return r;
}

/// Integer box with sides in [1, max_side] and origin in [0, span).
template <class Rng>
BBox random_int_box(Rng& rng, int span, int max_side) {
    std::uniform_int_distribution<int> pos(0, span - 1);
    std::uniform_int_distribution<int> side(1, max_side);
    const int x = pos(rng);
    const int y = pos(rng);
    return {static_cast<double>(x), static_cast<double>(y), static_cast<double>(x + side(rng)),
            static_cast<double>(y + side(rng))};
}

/// Random dataset with 1-2 labels, mixed provenance and float coordinates.
template <class Rng>
Dataset random_dataset(Rng& rng, int index) {
    std::uniform_int_distribution<int> n_images(1, 4);
    std::uniform_int_distribution<int> side(8, 40);
    std::uniform_int_distribution<int> n_ann(0, 4);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    const std::vector<std::string> labels{"car", "truck"};
    std::vector<ImageRecord> records;
    const int n = n_images(rng);
    for (int i = 0; i < n; ++i) {
        const int w = side(rng);
        const int h = side(rng);
        std::vector<Annotation> anns;
        const int k = n_ann(rng);
        for (int a = 0; a < k; ++a) {
            const double x0 = u(rng) * (w - 1);
            const double y0 = u(rng) * (h - 1);
            const double x1 = x0 + 0.5 + u(rng) * (w - x0 - 0.5);
            const double y1 = y0 + 0.5 + u(rng) * (h - y0 - 0.5);
            anns.push_back({{x0, y0, x1, y1}, labels[static_cast<std::size_t>(u(rng) < 0.7 ? 0 : 1)],
                            u(rng) < 0.3 ? Provenance::Synthetic : Provenance::Original});
        }
        records.emplace_back("d" + std::to_string(index) + "_" + std::to_string(i),
                             pattern_raster(w, h, index + i), std::move(anns));
    }
    return Dataset(std::move(records));
}

/// Round-trip equality: records compared in id order; coordinates within one
/// quantization step of `format`, everything else exact. Empty string when equal.
inline std::string round_trip_difference(const Dataset& a, const Dataset& b,
                                         AnnotationFormat format) {
    if (a.size() != b.size()) return "record count";
    std::vector<const ImageRecord*> ra, rb;
    for (const auto& r : a.records()) ra.push_back(&r);
    for (const auto& r : b.records()) rb.push_back(&r);
    const auto by_id = [](const ImageRecord* x, const ImageRecord* y) { return x->id() < y->id(); };
    std::sort(ra.begin(), ra.end(), by_id);
    std::sort(rb.begin(), rb.end(), by_id);
    for (std::size_t i = 0; i < ra.size(); ++i) {
        const auto& x = *ra[i];
        const auto& y = *rb[i];
        if (x.id() != y.id()) return "id " + x.id() + " vs " + y.id();
        if (!(x.pixels() == y.pixels())) return "pixels of " + x.id();
        if (x.annotations().size() != y.annotations().size()) return "annotation count of " + x.id();
        for (std::size_t k = 0; k < x.annotations().size(); ++k) {
            const auto& p = x.annotations()[k];
            const auto& q = y.annotations()[k];
            if (p.label != q.label || p.provenance != q.provenance) return "label/provenance";
            const double sx = format == AnnotationFormat::YoloTxt ? kYoloQuantum * x.width() : 0.0;
            const double sy = format == AnnotationFormat::YoloTxt ? kYoloQuantum * x.height() : 0.0;
            if (std::abs(p.bbox.x_min - q.bbox.x_min) > sx ||
                std::abs(p.bbox.x_max - q.bbox.x_max) > sx ||
                std::abs(p.bbox.y_min - q.bbox.y_min) > sy ||
                std::abs(p.bbox.y_max - q.bbox.y_max) > sy) {
                return "coordinates of " + x.id() + ": " + to_string(p.bbox) + " vs " +
                       to_string(q.bbox);
            }
        }
    }
    return {};
}

/// Generator that fills the hole with one colour.
class SolidGenerator final : public GeneratorBackend {
  public:
    explicit SolidGenerator(int patch_size = 96, std::uint8_t value = 200)
        : patch_size_(patch_size), value_(value) {}
    [[nodiscard]] GeneratorCapabilities capabilities() const override { return {patch_size_, true}; }
    GenerationResult fill(const MaskedPatch& masked, std::uint64_t) override {
        Raster out = masked.pixels;
        for (int y = 0; y < out.height(); ++y) {
            for (int x = 0; x < out.width(); ++x) {
                if (masked.mask.at(x, y, 0) == 0) continue;
                for (int c = 0; c < 3; ++c) out.at(x, y, c) = value_;
            }
        }
        return GenerationResult(std::move(out));
    }

  private:
    int patch_size_;
    std::uint8_t value_;
};

/// Detector reporting one box over the central half with a fixed confidence.
class ConstantDetector final : public DetectorBackend {
  public:
    explicit ConstantDetector(double confidence) : confidence_(confidence) {}
    [[nodiscard]] DetectorCapabilities capabilities() const override { return {0}; }
    std::vector<Detection> detect(const Raster& image) override {
        if (confidence_ < 0.0) return {};
        const double w = image.width();
        const double h = image.height();
        return {{{w / 4, h / 4, 3 * w / 4, 3 * h / 4}, confidence_, "car"}};
    }

  private:
    double confidence_;
};

/// Toy dataset sized for augmentation tests.
inline Dataset toy_fixture(int n_images, int image_size, std::uint64_t seed) {
    ToySceneParams p;
    p.n_images = n_images;
    p.image_size = image_size;
    return make_toy_dataset(p, seed);
}

}  // namespace genaug::testing
