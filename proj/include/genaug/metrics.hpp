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

// Detection evaluation: greedy confidence-ordered matching, cumulative
// precision/recall, and all-points interpolated Average Precision.

#pragma once

#include <algorithm>
#include <cstddef>
#include <filesystem>
#include <fstream>
#include <map>
#include <numeric>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "genaug/dataset.hpp"
#include "genaug/geometry.hpp"

namespace genaug {

struct Detection {
    BBox bbox;
    double confidence = 0.0;
    std::string label = "car";

    friend bool operator==(const Detection&, const Detection&) = default;
};

/// tp_flags follow descending confidence (stable in input order on ties).
struct MatchOutcome {
    std::vector<bool> tp_flags;
    std::size_t fn_count = 0;

    [[nodiscard]] std::size_t tp_count() const noexcept {
        return static_cast<std::size_t>(std::count(tp_flags.begin(), tp_flags.end(), true));
    }
};

struct PrPoint {
    double recall = 0.0;
    double precision = 0.0;
    friend bool operator==(const PrPoint&, const PrPoint&) = default;
};

struct PRCurve {
    std::vector<PrPoint> points;
    /// Set by pr_curve: true positives after each point and the ground-truth
    /// count, so AP can be integrated from exact counts.
    std::vector<std::size_t> cumulative_tp;
    std::size_t total_gt = 0;
};

/// Default IoU thresholds of the evaluation tables.
inline const std::vector<double>& default_iou_thresholds() {
    static const std::vector<double> kThresholds{0.2, 0.5, 0.7};
    return kThresholds;
}

enum class MetricsErrc { ZeroGroundTruth, UnknownImageId, MalformedPrediction };

class MetricsError : public std::runtime_error {
  public:
    MetricsError(MetricsErrc code, const std::string& what)
        : std::runtime_error(what), code_(code) {}
    [[nodiscard]] MetricsErrc code() const noexcept { return code_; }

  private:
    MetricsErrc code_;
};

/// Indices of `preds` by descending confidence, ties in input order.
inline std::vector<std::size_t> confidence_order(std::span<const Detection> preds) {
    std::vector<std::size_t> order(preds.size());
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
        return preds[a].confidence > preds[b].confidence;
    });
    return order;
}

/// Each detection, in confidence order, claims the unmatched ground truth of
/// highest IoU if that IoU reaches the threshold.
inline MatchOutcome match_detections(std::span<const Detection> preds, std::span<const BBox> gts,
                                     double iou_threshold) {
    if (!(iou_threshold > 0.0 && iou_threshold <= 1.0)) {
        throw std::invalid_argument("IoU threshold must be in (0, 1]");
    }
    MatchOutcome out;
    out.tp_flags.reserve(preds.size());
    std::vector<bool> taken(gts.size(), false);
    for (const std::size_t i : confidence_order(preds)) {
        double best = -1.0;
        std::size_t best_gt = gts.size();
        for (std::size_t g = 0; g < gts.size(); ++g) {
            if (taken[g]) {
                continue;
            }
            const double v = iou(preds[i].bbox, gts[g]);
            if (v >= iou_threshold && v > best) {
                best = v;
                best_gt = g;
            }
        }
        if (best_gt < gts.size()) {
            taken[best_gt] = true;
            out.tp_flags.push_back(true);
        } else {
            out.tp_flags.push_back(false);
        }
    }
    out.fn_count = static_cast<std::size_t>(std::count(taken.begin(), taken.end(), false));
    return out;
}

/// Cumulative (recall, precision) after each detection.
inline PRCurve pr_curve(const MatchOutcome& outcome, std::size_t total_gt) {
    if (outcome.tp_count() > total_gt) {
        throw std::invalid_argument("more true positives than ground truths");
    }
    PRCurve curve;
    if (outcome.tp_flags.empty()) {
        return curve;
    }
    if (total_gt == 0) {
        throw MetricsError(MetricsErrc::ZeroGroundTruth,
                           "ZeroGroundTruth: predictions exist but there is no ground truth");
    }
    curve.total_gt = total_gt;
    curve.points.reserve(outcome.tp_flags.size());
    std::size_t tp = 0;
    for (std::size_t i = 0; i < outcome.tp_flags.size(); ++i) {
        tp += outcome.tp_flags[i] ? 1 : 0;
        curve.cumulative_tp.push_back(tp);
        curve.points.push_back({static_cast<double>(tp) / static_cast<double>(total_gt),
                                static_cast<double>(tp) / static_cast<double>(i + 1)});
    }
    return curve;
}

/// Area under the precision envelope (max precision at recall >= r).
/// Curves from pr_curve are integrated from their integer counts in extended
/// precision and rounded once.
inline double average_precision(const PRCurve& curve) {
    const auto& pts = curve.points;
    if (pts.empty()) {
        return 0.0;
    }
    const bool counted = curve.total_gt > 0 && curve.cumulative_tp.size() == pts.size();
    const auto precision = [&](std::size_t i) -> long double {
        if (!counted) return pts[i].precision;
        return static_cast<long double>(curve.cumulative_tp[i]) / static_cast<long double>(i + 1);
    };
    const auto recall_step = [&](std::size_t i) -> long double {
        if (counted) {
            const std::size_t prev = i == 0 ? 0 : curve.cumulative_tp[i - 1];
            return static_cast<long double>(curve.cumulative_tp[i] - prev);
        }
        return static_cast<long double>(pts[i].recall) - (i == 0 ? 0.0L : pts[i - 1].recall);
    };
    std::vector<long double> envelope(pts.size());
    long double running = 0.0L;
    for (std::size_t i = pts.size(); i-- > 0;) {
        running = std::max(running, precision(i));
        envelope[i] = running;
    }
    long double ap = 0.0L;
    for (std::size_t i = 0; i < pts.size(); ++i) {
        ap += recall_step(i) * envelope[i];
    }
    if (counted) ap /= static_cast<long double>(curve.total_gt);
    return std::clamp(static_cast<double>(ap), 0.0, 1.0);
}

/// Per-image detections keyed by image id.
using PredictionSet = std::map<std::string, std::vector<Detection>>;

struct ApAtIou {
    double iou_threshold = 0.0;
    double ap = 0.0;
};

/// Single-class AP over a whole dataset for each IoU threshold. Matching is
/// per image; the flags are then pooled in global confidence order (ties by
/// dataset order, then per-image order).
inline std::vector<ApAtIou> evaluate(const Dataset& ground_truth, const PredictionSet& predictions,
                                     std::span<const double> iou_thresholds) {
    for (const auto& [id, dets] : predictions) {
        if (!ground_truth.index_of(id)) {
            throw MetricsError(MetricsErrc::UnknownImageId, "UnknownImageId: " + id);
        }
    }
    std::vector<ApAtIou> result;
    const std::size_t total_gt = ground_truth.instance_count();
    for (const double t : iou_thresholds) {
        struct Flag {
            double confidence;
            bool tp;
        };
        std::vector<Flag> pooled;
        for (const auto& record : ground_truth.records()) {
            const auto it = predictions.find(record.id());
            if (it == predictions.end() || it->second.empty()) {
                continue;
            }
            std::vector<BBox> gts;
            gts.reserve(record.annotations().size());
            for (const auto& a : record.annotations()) {
                gts.push_back(a.bbox);
            }
            const auto& dets = it->second;
            const auto outcome = match_detections(dets, gts, t);
            const auto order = confidence_order(dets);
            for (std::size_t k = 0; k < order.size(); ++k) {
                pooled.push_back({dets[order[k]].confidence, outcome.tp_flags[k]});
            }
        }
        std::stable_sort(pooled.begin(), pooled.end(),
                         [](const Flag& a, const Flag& b) { return a.confidence > b.confidence; });
        MatchOutcome merged;
        merged.tp_flags.reserve(pooled.size());
        for (const auto& f : pooled) {
            merged.tp_flags.push_back(f.tp);
        }
        merged.fn_count = total_gt - merged.tp_count();
        result.push_back({t, average_precision(pr_curve(merged, total_gt))});
    }
    return result;
}

// Prediction files: `<image-id> <label> <confidence> <x_min> <y_min> <x_max> <y_max>`.

inline PredictionSet read_predictions(const std::filesystem::path& path) {
    PredictionSet out;
    std::ifstream in(path);
    if (!in) {
        throw MetricsError(MetricsErrc::MalformedPrediction, "cannot open " + path.string());
    }
    std::size_t line_no = 0;
    for (std::string line; std::getline(in, line);) {
        ++line_no;
        if (detail::blank(line)) {
            continue;
        }
        const auto tok = detail::split_ws(line);
        const auto fail = [&](const char* why) {
            return MetricsError(MetricsErrc::MalformedPrediction,
                                path.string() + ":" + std::to_string(line_no) + ": " + why);
        };
        if (tok.size() != 7) {
            throw fail("expected 7 fields");
        }
        double v[5];
        for (int k = 0; k < 5; ++k) {
            const auto parsed = detail::parse_double(tok[static_cast<std::size_t>(k) + 2]);
            if (!parsed) {
                throw fail("bad number");
            }
            v[k] = *parsed;
        }
        const BBox box{v[1], v[2], v[3], v[4]};
        if (v[0] < 0.0 || v[0] > 1.0 || !box.valid()) {
            throw fail("confidence outside [0,1] or empty box");
        }
        out[std::string(tok[0])].push_back({box, v[0], std::string(tok[1])});
    }
    return out;
}

inline void write_predictions(const std::filesystem::path& path, const PredictionSet& predictions) {
    std::ofstream out(path, std::ios::trunc);
    for (const auto& [id, dets] : predictions) {
        for (const auto& d : dets) {
            out << id << ' ' << d.label << ' ' << detail::format_exact(d.confidence) << ' '
                << detail::format_exact(d.bbox.x_min) << ' ' << detail::format_exact(d.bbox.y_min)
                << ' ' << detail::format_exact(d.bbox.x_max) << ' '
                << detail::format_exact(d.bbox.y_max) << '\n';
        }
    }
    if (!out) {
        throw MetricsError(MetricsErrc::MalformedPrediction, "cannot write " + path.string());
    }
}

}  // namespace genaug
