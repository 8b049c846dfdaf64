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

// Training-patch export and the generate / score / accept augmentation loop.

#pragma once

#include <algorithm>
#include <array>
#include <chrono>
#include <cmath>
#include <cstdint>
#include <exception>
#include <filesystem>
#include <optional>
#include <random>
#include <stdexcept>
#include <string>
#include <thread>
#include <vector>

#include <nlohmann/json.hpp>

#include "genaug/backend.hpp"
#include "genaug/dataset.hpp"
#include "genaug/patch.hpp"
#include "genaug/toy_backends.hpp"

namespace genaug {

struct AugmentationConfig {
    int patch_size = 96;
    double acceptance_threshold = 0.4;
    int instances_per_image = 2;
    std::size_t target_new_instances = 1000;
    std::size_t max_attempts_per_instance = 100;
    std::uint64_t seed = 0;
    /// Holes must also avoid synthetic instances accepted earlier in the run.
    bool collide_with_synthetic = true;
    /// Candidates evaluated concurrently; results match a sequential run.
    std::size_t threads = 1;
    std::string label = "car";

    void validate() const {
        if (patch_size <= 0 || patch_size % 2 != 0) {
            throw std::invalid_argument("patch_size must be positive and even");
        }
        if (!(acceptance_threshold >= 0.0 && acceptance_threshold <= 1.0)) {
            throw std::invalid_argument("acceptance_threshold must be in [0,1]");
        }
        if (instances_per_image <= 0 || max_attempts_per_instance == 0 || threads == 0) {
            throw std::invalid_argument("counts must be positive");
        }
        if (label.empty()) {
            throw std::invalid_argument("label must be non-empty");
        }
    }
};

struct AugmentationStats {
    std::size_t attempts = 0;
    std::size_t accepted = 0;
    std::size_t rejected_intersection = 0;
    std::size_t rejected_confidence = 0;
    double generate_seconds = 0.0;
    double score_seconds = 0.0;
    double wall_seconds = 0.0;
};

struct AcceptedInstance {
    std::string image_id;
    BBox bbox;
    double score = 0.0;
    std::uint64_t seed = 0;
    /// 1-based attempt number at which the instance was accepted.
    std::size_t attempt = 0;
};

enum class AugmentStatus { Completed, BudgetExhausted };

inline const char* to_string(AugmentStatus s) noexcept {
    return s == AugmentStatus::Completed ? "completed" : "budget_exhausted";
}

struct AugmentOutcome {
    Dataset dataset;
    AugmentationStats stats;
    std::vector<AcceptedInstance> accepted;
    AugmentStatus status = AugmentStatus::Completed;
};

/// A backend failed mid-run; `stats()` covers the work committed before it.
class AugmentationError : public std::runtime_error {
  public:
    AugmentationError(const std::string& what, AugmentationStats stats)
        : std::runtime_error(what), stats_(stats) {}
    [[nodiscard]] const AugmentationStats& stats() const noexcept { return stats_; }

  private:
    AugmentationStats stats_;
};

// ---------------------------------------------------------------------------
// Training stage

struct ExportManifest {
    std::vector<std::filesystem::path> files;
    std::size_t instances = 0;
};

/// One patch per instance, written as a VedaiLike dataset under `out_dir`
/// (`<image-id>_<k>.png/.txt`) plus `manifest.txt`. Each patch lists every
/// annotation that overlaps it, clipped to the patch.
inline ExportManifest export_training_patches(const Dataset& train, int patch_size,
                                              const std::filesystem::path& out_dir) {
    std::vector<ImageRecord> patches;
    for (const auto& record : train.records()) {
        for (std::size_t k = 0; k < record.annotations().size(); ++k) {
            const Patch p = harvest_instance_patch(record, record.annotations()[k], patch_size);
            const BBox window{static_cast<double>(p.origin.x), static_cast<double>(p.origin.y),
                              static_cast<double>(p.origin.x + patch_size),
                              static_cast<double>(p.origin.y + patch_size)};
            std::vector<Annotation> local;
            for (const auto& a : record.annotations()) {
                if (!overlaps(a.bbox, window)) continue;
                local.push_back({clipped(translated(a.bbox, -p.origin.x, -p.origin.y), patch_size,
                                         patch_size),
                                 a.label, a.provenance});
            }
            patches.emplace_back(record.id() + "_" + std::to_string(k), p.pixels,
                                 std::move(local));
        }
    }
    ExportManifest manifest;
    manifest.instances = patches.size();
    const Dataset out(std::move(patches), train.labels());
    save_dataset(out, out_dir, AnnotationFormat::VedaiLike);
    std::string listing;
    for (const auto& r : out.records()) {
        manifest.files.push_back(out_dir / (r.id() + ".png"));
        listing += r.id() + ".png\n";
    }
    detail::write_text(out_dir / "manifest.txt", listing);
    return manifest;
}

// ---------------------------------------------------------------------------
// Augmentation stage

namespace detail {

inline double seconds_since(std::chrono::steady_clock::time_point t0) {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

/// Everything that decides which candidate comes next. Copyable so a batch
/// of speculative candidates can be rolled back to the point after any one.
struct PlannerState {
    std::mt19937_64 rng;
    std::size_t cursor = 0;
    std::size_t consecutive_collisions = 0;
    std::size_t rejected_intersection = 0;
};

struct Candidate {
    std::size_t image = 0;
    MaskedPatch masked;
    std::uint64_t seed = 0;
    PlannerState after;
};

struct Evaluation {
    std::optional<GenerationResult> result;
    double score = 0.0;
    double generate_seconds = 0.0;
    double score_seconds = 0.0;
    std::exception_ptr error;
};

enum class PlanStop { None, AllCapped, Collisions };

class Planner {
  public:
    Planner(const std::vector<ImageRecord>& images, const std::vector<std::vector<Annotation>>& blockers,
            const std::vector<int>& synthetic_count, const AugmentationConfig& config,
            std::vector<std::size_t> order)
        : images_(images), blockers_(blockers), synthetic_count_(synthetic_count), config_(config),
          order_(std::move(order)) {}

    /// Next candidate that survives the collision check, or nullopt with the
    /// reason in `stop`. Collisions along the way are counted in `state`.
    std::optional<Candidate> next(PlannerState& state, PlanStop& stop) const {
        const std::size_t n = order_.size();
        for (;;) {
            std::size_t open = 0;
            std::optional<std::size_t> chosen;
            for (std::size_t k = 0; k < n; ++k) {
                const std::size_t idx = order_[(state.cursor + k) % n];
                if (synthetic_count_[idx] < config_.instances_per_image) {
                    ++open;
                    if (!chosen) {
                        chosen = idx;
                        state.cursor = (state.cursor + k + 1) % n;
                    }
                }
            }
            if (!chosen) {
                stop = PlanStop::AllCapped;
                return std::nullopt;
            }
            if (state.consecutive_collisions >= 100 * open) {
                stop = PlanStop::Collisions;
                return std::nullopt;
            }
            const auto& record = images_[*chosen];
            const PixelPoint origin = sample_patch_origin(record, config_.patch_size, state.rng);
            const BBox hole = translated(central_hole(config_.patch_size), origin.x, origin.y);
            if (intersects_any(hole, blockers_[*chosen])) {
                ++state.consecutive_collisions;
                ++state.rejected_intersection;
                continue;
            }
            state.consecutive_collisions = 0;
            Candidate c;
            c.image = *chosen;
            c.masked = mask_center(extract_patch(record, origin, config_.patch_size));
            c.seed = state.rng();
            c.after = state;
            return c;
        }
    }

  private:
    const std::vector<ImageRecord>& images_;
    const std::vector<std::vector<Annotation>>& blockers_;
    const std::vector<int>& synthetic_count_;
    const AugmentationConfig& config_;
    std::vector<std::size_t> order_;
};

inline Evaluation evaluate_candidate(GeneratorBackend& generator, DetectorBackend& detector,
                                     const Candidate& c) {
    Evaluation e;
    try {
        auto t0 = std::chrono::steady_clock::now();
        e.result = generator.fill(c.masked, c.seed);
        e.generate_seconds = seconds_since(t0);
        t0 = std::chrono::steady_clock::now();
        e.score = score_generated(detector, *e.result, c.masked);
        e.score_seconds = seconds_since(t0);
    } catch (...) {
        e.error = std::current_exception();
    }
    return e;
}

}  // namespace detail

/// Runs the augmentation loop. Images are visited in a seed-shuffled
/// round-robin; each candidate whose hole avoids existing boxes is generated,
/// scored and accepted iff score > threshold. Stops on reaching the target
/// (Completed), or with BudgetExhausted when the attempt budget is spent,
/// every image is at its cap, or 100 x open-images collisions occur in a row.
inline AugmentOutcome augment_dataset(const Dataset& train, GeneratorBackend& generator,
                                      DetectorBackend& detector, const AugmentationConfig& config) {
    config.validate();
    const auto t_start = std::chrono::steady_clock::now();
    for (const auto& r : train.records()) {
        require_fits(r, config.patch_size);
    }
    std::vector<ImageRecord> images(train.records().begin(), train.records().end());
    std::vector<std::vector<Annotation>> blockers;
    blockers.reserve(images.size());
    for (const auto& r : images) {
        blockers.push_back(r.annotations());
    }
    std::vector<int> synthetic_count(images.size(), 0);

    AugmentOutcome out;
    auto& stats = out.stats;
    const auto finish = [&](AugmentStatus status) {
        std::vector<std::string> labels = train.labels();
        labels.push_back(config.label);
        out.dataset = Dataset(std::move(images), std::move(labels));
        out.status = status;
        stats.wall_seconds = detail::seconds_since(t_start);
        return std::move(out);
    };
    if (config.target_new_instances == 0) {
        return finish(AugmentStatus::Completed);
    }
    if (images.empty()) {
        return finish(AugmentStatus::BudgetExhausted);
    }

    std::vector<std::size_t> order(images.size());
    for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
    detail::PlannerState state;
    state.rng.seed(config.seed);
    std::shuffle(order.begin(), order.end(), state.rng);
    const detail::Planner planner(images, blockers, synthetic_count, config, std::move(order));
    const std::size_t budget = config.max_attempts_per_instance * config.target_new_instances;

    for (;;) {
        if (stats.accepted >= config.target_new_instances) {
            return finish(AugmentStatus::Completed);
        }
        if (stats.attempts >= budget) {
            return finish(AugmentStatus::BudgetExhausted);
        }
        const std::size_t width = std::min(config.threads, budget - stats.attempts);
        std::vector<detail::Candidate> batch;
        detail::PlannerState speculative = state;
        detail::PlanStop stop = detail::PlanStop::None;
        while (batch.size() < width) {
            auto c = planner.next(speculative, stop);
            if (!c) break;
            batch.push_back(std::move(*c));
        }
        if (batch.empty()) {
            state = speculative;
            stats.rejected_intersection = state.rejected_intersection;
            return finish(AugmentStatus::BudgetExhausted);
        }
        std::vector<detail::Evaluation> evals(batch.size());
        if (batch.size() == 1) {
            evals[0] = detail::evaluate_candidate(generator, detector, batch[0]);
        } else {
            std::vector<std::jthread> workers;
            for (std::size_t i = 1; i < batch.size(); ++i) {
                workers.emplace_back([&, i] {
                    evals[i] = detail::evaluate_candidate(generator, detector, batch[i]);
                });
            }
            evals[0] = detail::evaluate_candidate(generator, detector, batch[0]);
        }
        // Commit in issue order; an acceptance changes the state the later
        // candidates were planned against, so they are dropped and replanned.
        for (std::size_t i = 0; i < batch.size(); ++i) {
            const auto& c = batch[i];
            auto& e = evals[i];
            state = c.after;
            stats.rejected_intersection = state.rejected_intersection;
            if (e.error) {
                try {
                    std::rethrow_exception(e.error);
                } catch (const std::exception& ex) {
                    throw AugmentationError(ex.what(), stats);
                }
            }
            ++stats.attempts;
            stats.generate_seconds += e.generate_seconds;
            stats.score_seconds += e.score_seconds;
            if (!(e.score > config.acceptance_threshold)) {
                ++stats.rejected_confidence;
                continue;
            }
            const BBox hole = hole_rect_global(c.masked);
            ImageRecord updated = composite_hole(images[c.image], c.masked, *e.result);
            auto annotations = updated.annotations();
            annotations.push_back({hole, config.label, Provenance::Synthetic});
            images[c.image] = updated.with_annotations(std::move(annotations));
            if (config.collide_with_synthetic) {
                blockers[c.image].push_back({hole, config.label, Provenance::Synthetic});
            }
            ++synthetic_count[c.image];
            ++stats.accepted;
            out.accepted.push_back({images[c.image].id(), hole, e.score, c.seed, stats.attempts});
            break;
        }
    }
}

// ---------------------------------------------------------------------------
// Acceptance-rate probe

struct ScoreHistogram {
    /// Bin k counts scores in [k/10, (k+1)/10); a score of exactly 1 goes to bin 9.
    std::array<std::size_t, 10> bins{};
    std::vector<double> scores;

    [[nodiscard]] std::size_t total() const noexcept {
        std::size_t n = 0;
        for (const auto b : bins) n += b;
        return n;
    }
};

inline std::size_t score_bin(double score) noexcept {
    const double clamped = std::clamp(score, 0.0, 1.0);
    return std::min<std::size_t>(9, static_cast<std::size_t>(std::floor(clamped * 10.0)));
}

/// Generates `n_samples` candidates on random clear patches of `backgrounds`
/// and bins their scores; nothing is accepted or composited.
inline ScoreHistogram acceptance_rate_probe(GeneratorBackend& generator, DetectorBackend& detector,
                                            std::size_t n_samples, const Dataset& backgrounds,
                                            std::uint64_t seed, int patch_size = 96) {
    if (n_samples == 0) {
        throw std::invalid_argument("n_samples must be positive");
    }
    for (const auto& r : backgrounds.records()) {
        require_fits(r, patch_size);
    }
    std::mt19937_64 rng(seed);
    ScoreHistogram h;
    h.scores.reserve(n_samples);
    for (std::size_t i = 0; i < n_samples; ++i) {
        auto picked = sample_clear_patch(backgrounds, patch_size, rng);
        if (!picked) {
            throw std::runtime_error("no patch clear of annotations in the probe backgrounds");
        }
        const auto result = generator.fill(picked->second, rng());
        const double s = score_generated(detector, result, picked->second);
        h.scores.push_back(s);
        ++h.bins[score_bin(s)];
    }
    return h;
}

// ---------------------------------------------------------------------------
// Run manifest

inline nlohmann::ordered_json config_json(const AugmentationConfig& c) {
    nlohmann::ordered_json j;
    j["patch_size"] = c.patch_size;
    j["acceptance_threshold"] = c.acceptance_threshold;
    j["instances_per_image"] = c.instances_per_image;
    j["target_new_instances"] = c.target_new_instances;
    j["max_attempts_per_instance"] = c.max_attempts_per_instance;
    j["seed"] = c.seed;
    j["collide_with_synthetic"] = c.collide_with_synthetic;
    j["threads"] = c.threads;
    j["label"] = c.label;
    return j;
}

/// Config echo, stats and accepted instances. Timings are left out unless
/// requested so that replays produce identical files.
inline nlohmann::ordered_json run_manifest(const AugmentationConfig& config,
                                           const AugmentOutcome& outcome,
                                           bool include_timing = false) {
    nlohmann::ordered_json j;
    j["config"] = config_json(config);
    j["status"] = to_string(outcome.status);
    auto& s = j["stats"];
    s["attempts"] = outcome.stats.attempts;
    s["accepted"] = outcome.stats.accepted;
    s["rejected_intersection"] = outcome.stats.rejected_intersection;
    s["rejected_confidence"] = outcome.stats.rejected_confidence;
    if (include_timing) {
        s["generate_seconds"] = outcome.stats.generate_seconds;
        s["score_seconds"] = outcome.stats.score_seconds;
        s["wall_seconds"] = outcome.stats.wall_seconds;
    }
    j["accepted"] = nlohmann::ordered_json::array();
    for (const auto& a : outcome.accepted) {
        nlohmann::ordered_json item;
        item["image_id"] = a.image_id;
        item["bbox"] = {a.bbox.x_min, a.bbox.y_min, a.bbox.x_max, a.bbox.y_max};
        item["score"] = a.score;
        item["seed"] = a.seed;
        item["attempt"] = a.attempt;
        j["accepted"].push_back(std::move(item));
    }
    return j;
}

}  // namespace genaug
