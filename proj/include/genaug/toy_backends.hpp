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

// ML-free stand-ins for the generator and detector roles.
//
// ToyGenerator fills the hole with a Coons-patch interpolation of the
// surrounding ring, blends a random vehicle sprite at opacity sqrt(quality)
// and adds grey noise scaled by (1 - quality).
//
// ToyDetector runs normalized cross-correlation of a template bank on a
// 2x-downsampled grey image, keeps 8-neighbour local maxima above a raw
// correlation threshold, suppresses overlaps, and maps correlation to a
// confidence through a monotone piecewise-linear ScoreMapping. The default
// acceptance detector's mapping is the empirical CDF of correlations the toy
// generator produces with quality ~ U[0,1], which makes its scores close to
// uniform on [0,1].

#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <map>
#include <mutex>
#include <numbers>
#include <optional>
#include <random>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include <opencv2/imgproc.hpp>

#include "genaug/backend.hpp"
#include "genaug/dataset.hpp"
#include "genaug/metrics.hpp"
#include "genaug/patch.hpp"
#include "genaug/raster.hpp"
#include "genaug/toy_scene.hpp"

namespace genaug {

/// Monotone non-decreasing piecewise-linear map from correlation to [0,1].
/// Constant beyond the first and last knot.
class ScoreMapping {
  public:
    struct Knot {
        double x;
        double y;
    };

    ScoreMapping() : ScoreMapping(identity()) {}

    static ScoreMapping identity() { return from_knots({{0.0, 0.0}, {1.0, 1.0}}); }

    static ScoreMapping from_knots(std::vector<Knot> knots) {
        if (knots.size() < 2) {
            throw std::invalid_argument("score mapping needs at least two knots");
        }
        for (std::size_t i = 0; i < knots.size(); ++i) {
            if (knots[i].y < 0.0 || knots[i].y > 1.0) {
                throw std::invalid_argument("score mapping outputs must lie in [0,1]");
            }
            if (i > 0 && (knots[i].x <= knots[i - 1].x || knots[i].y < knots[i - 1].y)) {
                throw std::invalid_argument("score mapping must be monotone");
            }
        }
        ScoreMapping m(0);
        m.knots_ = std::move(knots);
        return m;
    }

    /// Empirical CDF of `samples` on `n_knots` quantiles, anchored at
    /// (floor, 0) and ending at (max(1, max sample), 1).
    static ScoreMapping from_samples(std::vector<double> samples, int n_knots, double floor) {
        if (samples.empty() || n_knots < 2) {
            throw std::invalid_argument("calibration needs samples and at least two knots");
        }
        std::sort(samples.begin(), samples.end());
        std::vector<Knot> knots{{floor, 0.0}};
        for (int k = 1; k < n_knots; ++k) {
            const double p = static_cast<double>(k) / n_knots;
            const double pos = p * static_cast<double>(samples.size() - 1);
            const auto lo = static_cast<std::size_t>(pos);
            const std::size_t hi = std::min(lo + 1, samples.size() - 1);
            const double x =
                samples[lo] + (pos - static_cast<double>(lo)) * (samples[hi] - samples[lo]);
            if (x > knots.back().x && x < 1.0) {
                knots.push_back({x, p});
            }
        }
        knots.push_back({std::max(1.0, samples.back() + 1e-9), 1.0});
        return from_knots(std::move(knots));
    }

    double operator()(double x) const noexcept {
        if (x <= knots_.front().x) return knots_.front().y;
        if (x >= knots_.back().x) return knots_.back().y;
        const auto it = std::upper_bound(knots_.begin(), knots_.end(), x,
                                         [](double v, const Knot& k) { return v < k.x; });
        const Knot& b = *it;
        const Knot& a = *(it - 1);
        return a.y + (x - a.x) / (b.x - a.x) * (b.y - a.y);
    }

    [[nodiscard]] const std::vector<Knot>& knots() const noexcept { return knots_; }

  private:
    explicit ScoreMapping(int) {}
    std::vector<Knot> knots_;
};

// ---------------------------------------------------------------------------
// Generator

struct ToyGeneratorParams {
    /// Sprite fidelity in [0,1]; unset draws a fresh U[0,1] value per sample.
    std::optional<double> quality;
    std::vector<Rgb> palette = default_vehicle_palette();
    std::uint64_t seed = 0;
    double noise_sigma = 40.0;
};

namespace detail {

/// Transfinite (Coons) interpolation of the hole from the one-pixel ring
/// around it. Patches too small to have a ring get the context mean.
inline void coons_fill(Raster& img, int offset, int side) {
    if (offset < 1) {
        cv::Mat m = as_mat(img);
        cv::Mat mask(m.size(), CV_8U, cv::Scalar(255));
        mask(cv::Rect(offset, offset, side, side)).setTo(0);
        const cv::Scalar mean = cv::mean(m, mask);
        m(cv::Rect(offset, offset, side, side)).setTo(mean);
        return;
    }
    const int x0 = offset;
    const int y0 = offset;
    const int e = offset + side;
    for (int c = 0; c < 3; ++c) {
        const double p00 = img.at(x0 - 1, y0 - 1, c);
        const double p10 = img.at(e, y0 - 1, c);
        const double p01 = img.at(x0 - 1, e, c);
        const double p11 = img.at(e, e, c);
        for (int j = 0; j < side; ++j) {
            const double t = (j + 1.0) / (side + 1.0);
            const double left = img.at(x0 - 1, y0 + j, c);
            const double right = img.at(e, y0 + j, c);
            for (int i = 0; i < side; ++i) {
                const double s = (i + 1.0) / (side + 1.0);
                const double top = img.at(x0 + i, y0 - 1, c);
                const double bottom = img.at(x0 + i, e, c);
                const double v = (1 - t) * top + t * bottom + (1 - s) * left + s * right -
                                 ((1 - s) * (1 - t) * p00 + s * (1 - t) * p10 +
                                  (1 - s) * t * p01 + s * t * p11);
                img.at(x0 + i, y0 + j, c) = cv::saturate_cast<std::uint8_t>(v);
            }
        }
    }
}

}  // namespace detail

template <std::uniform_random_bit_generator Rng>
GenerationResult toy_generate(const MaskedPatch& masked, const ToyGeneratorParams& params,
                              Rng& rng) {
    std::uniform_real_distribution<double> u(0.0, 1.0);
    const double quality = std::clamp(params.quality.value_or(u(rng)), 0.0, 1.0);
    const int offset = masked.hole_offset();
    const int side = masked.hole_side();

    Raster out = masked.pixels;
    detail::coons_fill(out, offset, side);

    // The sprite is drawn on a hole-sized canvas so it can never leak into the
    // context ring.
    Raster hole = crop(out, offset, offset, side, side);
    const double jitter = side / 12.0;
    const double length = side * (0.50 + 0.12 * u(rng));
    auto sprite = random_vehicle(0.5 * side + jitter * (2 * u(rng) - 1),
                                 0.5 * side + jitter * (2 * u(rng) - 1), length,
                                 params.palette.empty() ? default_vehicle_palette() : params.palette,
                                 rng);
    draw_vehicle(hole, sprite, std::sqrt(quality));

    const double sigma = (1.0 - quality) * params.noise_sigma;
    if (sigma > 0.0) {
        std::normal_distribution<double> noise(0.0, sigma);
        for (int y = 0; y < side; ++y) {
            for (int x = 0; x < side; ++x) {
                const double n = noise(rng);
                for (int c = 0; c < 3; ++c) {
                    hole.at(x, y, c) = cv::saturate_cast<std::uint8_t>(hole.at(x, y, c) + n);
                }
            }
        }
    }
    paste(out, hole, offset, offset);
    return GenerationResult(std::move(out));
}

class ToyGenerator final : public GeneratorBackend {
  public:
    explicit ToyGenerator(ToyGeneratorParams params = {}, int patch_size = 96)
        : params_(std::move(params)), patch_size_(patch_size) {
        if (params_.quality && (*params_.quality < 0.0 || *params_.quality > 1.0)) {
            throw std::invalid_argument("toy generator quality must be in [0,1]");
        }
    }

    [[nodiscard]] GeneratorCapabilities capabilities() const override {
        return {patch_size_, true};
    }

    GenerationResult fill(const MaskedPatch& masked, std::uint64_t seed) override {
        std::mt19937_64 rng(seed ^ (params_.seed * 0x9E3779B97F4A7C15ULL));
        return toy_generate(masked, params_, rng);
    }

    [[nodiscard]] const ToyGeneratorParams& params() const noexcept { return params_; }

  private:
    ToyGeneratorParams params_;
    int patch_size_;
};

// ---------------------------------------------------------------------------
// Detector

/// Grey template and the box it reports, in template-local coordinates.
struct DetectorTemplate {
    Raster gray;
    BBox box;
};

struct ToyDetectorParams {
    std::vector<DetectorTemplate> templates;
    ScoreMapping mapping = ScoreMapping::identity();
    /// Raw correlation a local maximum must exceed.
    double detection_threshold = 0.5;
    /// Correlation runs after this many 2x downsamplings.
    int pyramid_levels = 1;
    double nms_iou = 0.3;
    std::size_t max_detections = 200;
    std::string label = "car";
};

class ToyDetector final : public DetectorBackend {
  public:
    explicit ToyDetector(ToyDetectorParams params) : params_(std::move(params)) {
        if (params_.templates.empty()) {
            throw std::invalid_argument("toy detector needs at least one template");
        }
        if (params_.pyramid_levels < 0) {
            throw std::invalid_argument("pyramid_levels must be non-negative");
        }
        for (const auto& t : params_.templates) {
            if (t.gray.channels() != 1 || !t.box.valid()) {
                throw std::invalid_argument("templates must be grey with a valid box");
            }
            scaled_.push_back(downsample(as_mat(t.gray)));
            min_side_ = std::max({min_side_, t.gray.width(), t.gray.height()});
        }
    }

    [[nodiscard]] DetectorCapabilities capabilities() const override { return {min_side_}; }

    std::vector<Detection> detect(const Raster& image) override {
        return run(image, params_.mapping);
    }

    /// Detections with confidence equal to the raw correlation (clamped to
    /// [0,1]); used for calibration.
    std::vector<Detection> detect_raw(const Raster& image) const {
        return run(image, ScoreMapping::identity());
    }

    [[nodiscard]] const ToyDetectorParams& params() const noexcept { return params_; }

  private:
    [[nodiscard]] double factor() const noexcept { return std::ldexp(1.0, params_.pyramid_levels); }

    cv::Mat downsample(const cv::Mat& gray) const {
        cv::Mat out = gray;
        for (int l = 0; l < params_.pyramid_levels; ++l) {
            if (out.cols < 2 || out.rows < 2) break;
            cv::Mat next;
            cv::resize(out, next, cv::Size(out.cols / 2, out.rows / 2), 0, 0, cv::INTER_AREA);
            out = next;
        }
        return out;
    }

    std::vector<Detection> run(const Raster& image, const ScoreMapping& mapping) const {
        struct Candidate {
            float score;
            BBox box;
        };
        std::vector<Candidate> candidates;
        const Raster gray = to_gray(image);
        const cv::Mat scaled = downsample(as_mat(gray));
        const double f = factor();
        const auto threshold = static_cast<float>(params_.detection_threshold);
        cv::Mat response;
        for (std::size_t t = 0; t < scaled_.size(); ++t) {
            const cv::Mat& tmpl = scaled_[t];
            if (tmpl.cols > scaled.cols || tmpl.rows > scaled.rows) continue;
            cv::matchTemplate(scaled, tmpl, response, cv::TM_CCOEFF_NORMED);
            for (int y = 0; y < response.rows; ++y) {
                const auto* row = response.ptr<float>(y);
                for (int x = 0; x < response.cols; ++x) {
                    const float v = row[x];
                    if (!(v > threshold) || !is_local_max(response, x, y, v)) continue;
                    const BBox box = clipped(
                        translated(params_.templates[t].box, x * f, y * f), image.width(),
                        image.height());
                    if (box.valid()) candidates.push_back({v, box});
                }
            }
        }
        std::stable_sort(candidates.begin(), candidates.end(),
                         [](const Candidate& a, const Candidate& b) { return a.score > b.score; });
        std::vector<Detection> out;
        for (const auto& c : candidates) {
            if (out.size() >= params_.max_detections) break;
            const bool suppressed = std::any_of(out.begin(), out.end(), [&](const Detection& d) {
                return iou(d.bbox, c.box) > params_.nms_iou;
            });
            if (suppressed) continue;
            out.push_back({c.box, std::clamp(mapping(static_cast<double>(c.score)), 0.0, 1.0),
                           params_.label});
        }
        return out;
    }

    /// Plateaus resolve to their first pixel in raster order.
    static bool is_local_max(const cv::Mat& r, int x, int y, float v) {
        for (int dy = -1; dy <= 1; ++dy) {
            const int yy = y + dy;
            if (yy < 0 || yy >= r.rows) continue;
            const auto* row = r.ptr<float>(yy);
            for (int dx = -1; dx <= 1; ++dx) {
                const int xx = x + dx;
                if ((dx == 0 && dy == 0) || xx < 0 || xx >= r.cols) continue;
                const bool before = dy < 0 || (dy == 0 && dx < 0);
                if (before ? row[xx] >= v : row[xx] > v) return false;
            }
        }
        return true;
    }

    ToyDetectorParams params_;
    std::vector<cv::Mat> scaled_;
    int min_side_ = 0;
};

inline std::vector<Detection> toy_detect(const Raster& image, const ToyDetectorParams& params) {
    return ToyDetector(params).detect(image);
}

/// Grey renderings of the canonical sprite at `n_orientations` headings, on a
/// flat ground, sized for the given patch.
inline std::vector<DetectorTemplate> vehicle_template_bank(int patch_size, int n_orientations = 8) {
    const int hole = patch_size / 2;
    const int side = std::max(4, 2 * static_cast<int>(std::lround(patch_size / 6.0)));
    std::vector<DetectorTemplate> bank;
    for (int k = 0; k < n_orientations; ++k) {
        Raster canvas(side, side, 3, 100);
        VehicleSprite s;
        s.cx = 0.5 * side;
        s.cy = 0.5 * side;
        s.angle = 2.0 * std::numbers::pi * k / n_orientations;
        s.length = 0.56 * hole;
        s.width = 0.5 * s.length;
        s.body = {210, 210, 210};
        draw_vehicle(canvas, s);
        bank.push_back({to_gray(canvas), {0.0, 0.0, static_cast<double>(side),
                                          static_cast<double>(side)}});
    }
    return bank;
}

/// Best raw correlation among detections that identify the generated
/// instance (same gate as score_generated), 0 when none.
inline double raw_hole_score(const ToyDetector& detector, const GenerationResult& result,
                             const MaskedPatch& masked) {
    double best = 0.0;
    for (const auto& d : detector.detect_raw(result.completed())) {
        if (iou(d.bbox, masked.hole) >= kHoleIouGate) best = std::max(best, d.confidence);
    }
    return best;
}

/// Picks a random patch of `backgrounds` whose hole avoids every annotation.
/// Returns nullopt after `max_tries` collisions.
template <std::uniform_random_bit_generator Rng>
std::optional<std::pair<std::size_t, MaskedPatch>> sample_clear_patch(const Dataset& backgrounds,
                                                                      int patch_size, Rng& rng,
                                                                      int max_tries = 200) {
    if (backgrounds.empty()) return std::nullopt;
    std::uniform_int_distribution<std::size_t> pick(0, backgrounds.size() - 1);
    for (int i = 0; i < max_tries; ++i) {
        const std::size_t idx = pick(rng);
        const auto& record = backgrounds[idx];
        const PixelPoint origin = sample_patch_origin(record, patch_size, rng);
        const BBox hole = translated(central_hole(patch_size), origin.x, origin.y);
        if (intersects_any(hole, record.annotations())) continue;
        return std::make_pair(idx, mask_center(extract_patch(record, origin, patch_size)));
    }
    return std::nullopt;
}

struct CalibrationOptions {
    int n_samples = 2000;
    int n_knots = 50;
    std::uint64_t seed = 0xC0FFEE;
};

/// Empirical-CDF mapping for `bank` under the toy generator with
/// quality ~ U[0,1] on toy scenes.
inline ScoreMapping calibrate_acceptance_mapping(const std::vector<DetectorTemplate>& bank,
                                                 int patch_size,
                                                 const CalibrationOptions& options = {}) {
    ToyDetectorParams raw;
    raw.templates = bank;
    raw.detection_threshold = 0.0;
    const ToyDetector detector(raw);
    ToySceneParams scene;
    scene.n_images = 24;
    scene.image_size = std::max(256, 2 * patch_size);
    const Dataset backgrounds = make_toy_dataset(scene, options.seed);
    std::mt19937_64 rng(options.seed + 1);
    const ToyGeneratorParams gen_params;
    std::vector<double> samples;
    samples.reserve(static_cast<std::size_t>(options.n_samples));
    while (samples.size() < static_cast<std::size_t>(options.n_samples)) {
        auto picked = sample_clear_patch(backgrounds, patch_size, rng);
        if (!picked) {
            throw std::runtime_error("calibration scenes have no clear patch");
        }
        const auto result = toy_generate(picked->second, gen_params, rng);
        samples.push_back(raw_hole_score(detector, result, picked->second));
    }
    return ScoreMapping::from_samples(std::move(samples), options.n_knots, raw.detection_threshold);
}

/// The acceptance detector used with toy backends: canonical sprite bank,
/// zero correlation threshold, calibrated mapping. Cached per patch size.
inline ToyDetectorParams acceptance_detector_params(int patch_size) {
    static std::mutex mutex;
    static std::map<int, ToyDetectorParams> cache;
    std::lock_guard lock(mutex);
    if (const auto it = cache.find(patch_size); it != cache.end()) {
        return it->second;
    }
    ToyDetectorParams p;
    p.templates = vehicle_template_bank(patch_size);
    p.detection_threshold = 0.0;
    p.mapping = calibrate_acceptance_mapping(p.templates, patch_size);
    cache.emplace(patch_size, p);
    return p;
}

struct ToyTrainingOptions {
    int template_side = 32;
    std::size_t max_templates = 12;
    double detection_threshold = 0.5;
};

/// "Trains" an evaluation detector: templates are grey crops centred on
/// evenly spaced training instances, each reporting that instance's box.
inline ToyDetectorParams train_toy_detector(const Dataset& train,
                                            const ToyTrainingOptions& options = {}) {
    std::vector<std::pair<std::size_t, std::size_t>> instances;
    for (std::size_t r = 0; r < train.size(); ++r) {
        if (train[r].width() < options.template_side || train[r].height() < options.template_side) {
            continue;
        }
        for (std::size_t a = 0; a < train[r].annotations().size(); ++a) {
            instances.emplace_back(r, a);
        }
    }
    if (instances.empty()) {
        throw std::invalid_argument("training set has no usable instances");
    }
    const std::size_t k = std::min(options.max_templates, instances.size());
    ToyDetectorParams p;
    p.detection_threshold = options.detection_threshold;
    const int side = options.template_side;
    for (std::size_t i = 0; i < k; ++i) {
        const auto [r, a] = instances[i * instances.size() / k];
        const auto& record = train[r];
        const BBox& box = record.annotations()[a].bbox;
        const int x = std::clamp(static_cast<int>(std::lround(box.center_x() - 0.5 * side)), 0,
                                 record.width() - side);
        const int y = std::clamp(static_cast<int>(std::lround(box.center_y() - 0.5 * side)), 0,
                                 record.height() - side);
        p.templates.push_back(
            {to_gray(crop(record.pixels(), x, y, side, side)), translated(box, -x, -y)});
    }
    return p;
}

}  // namespace genaug
