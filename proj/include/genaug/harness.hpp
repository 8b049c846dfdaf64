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

// Experiment matrices: acceptance-threshold sweep, dataset-size x
// augmentation-count grid, instance-size histogram, CSV/Markdown reports.

#pragma once

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <functional>
#include <memory>
#include <numeric>
#include <random>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "genaug/backend.hpp"
#include "genaug/dataset.hpp"
#include "genaug/engine.hpp"
#include "genaug/metrics.hpp"
#include "genaug/toy_backends.hpp"

namespace genaug {

enum class HarnessErrc { EmptyDataset, InvalidSpec, MalformedReport };

class HarnessError : public std::runtime_error {
  public:
    HarnessError(HarnessErrc code, const std::string& what) : std::runtime_error(what), code_(code) {}
    [[nodiscard]] HarnessErrc code() const noexcept { return code_; }

  private:
    HarnessErrc code_;
};

inline std::vector<double> default_sweep_thresholds() {
    std::vector<double> t;
    for (int k = 0; k <= 9; ++k) t.push_back(k / 10.0);
    return t;
}

struct SweepSpec {
    std::vector<double> thresholds = default_sweep_thresholds();
    std::vector<double> iou_thresholds = default_iou_thresholds();
    /// Grid only: training-subset sizes.
    std::vector<std::size_t> dataset_sizes;
    /// New instances per image. In the grid 0 is the unaugmented baseline
    /// and the target is n_images * k; the sweep uses the first entry.
    std::vector<int> instances_per_image{2};
    std::vector<std::uint64_t> seeds{0};
    /// Sweep only: accepted instances per row.
    std::size_t target = 1000;
    /// Patch size, attempt budget, threads, label; threshold for the grid.
    AugmentationConfig base;
    /// Fill ReportRow::seconds; off by default so reports replay byte-for-byte.
    bool record_timing = false;

    void validate() const {
        const auto fail = [](const std::string& why) {
            return HarnessError(HarnessErrc::InvalidSpec, "invalid sweep spec: " + why);
        };
        if (thresholds.empty() || iou_thresholds.empty() || instances_per_image.empty() ||
            seeds.empty()) {
            throw fail("lists must be non-empty");
        }
        for (const double t : thresholds) {
            if (!(t >= 0.0 && t <= 1.0)) throw fail("thresholds must lie in [0,1]");
        }
        for (const double t : iou_thresholds) {
            if (!(t > 0.0 && t <= 1.0)) throw fail("IoU thresholds must lie in (0,1]");
        }
        for (const int k : instances_per_image) {
            if (k < 0) throw fail("instances per image must be non-negative");
        }
    }
};

/// One report line. AP values are percentages rounded to 2 decimals, in the
/// order of the sweep's IoU thresholds.
struct ReportRow {
    double threshold = 0.0;
    std::size_t n_images = 0;
    int instances_per_image = 0;
    std::vector<double> ap;
    double ap_avg = 0.0;
    std::size_t attempts = 0;
    double seconds = 0.0;
    bool budget_exhausted = false;

    friend bool operator==(const ReportRow& a, const ReportRow& b) {
        return a.threshold == b.threshold && a.n_images == b.n_images &&
               a.instances_per_image == b.instances_per_image && a.ap == b.ap &&
               a.ap_avg == b.ap_avg && a.attempts == b.attempts && a.seconds == b.seconds;
    }
};

inline double round2(double v) { return std::round(v * 100.0) / 100.0; }

/// AP fractions become 2-decimal percentages; the average is taken over the
/// rounded columns so the report stays self-consistent.
inline ReportRow make_row(double threshold, std::size_t n_images, int k,
                          std::span<const ApAtIou> aps, std::size_t attempts, double seconds) {
    ReportRow row;
    row.threshold = round2(threshold);
    row.n_images = n_images;
    row.instances_per_image = k;
    for (const auto& a : aps) row.ap.push_back(round2(100.0 * a.ap));
    row.ap_avg = row.ap.empty() ? 0.0
                                : round2(std::accumulate(row.ap.begin(), row.ap.end(), 0.0) /
                                         static_cast<double>(row.ap.size()));
    row.attempts = attempts;
    row.seconds = round2(seconds);
    return row;
}

/// Builds the evaluation detector from a (possibly augmented) training set.
using EvalDetectorFactory = std::function<std::unique_ptr<DetectorBackend>(const Dataset&)>;

inline EvalDetectorFactory toy_eval_detector_factory(ToyTrainingOptions options = {}) {
    return [options](const Dataset& train) -> std::unique_ptr<DetectorBackend> {
        return std::make_unique<ToyDetector>(train_toy_detector(train, options));
    };
}

inline std::vector<ApAtIou> evaluate_detector(DetectorBackend& detector, const Dataset& test,
                                              std::span<const double> iou_thresholds) {
    PredictionSet preds;
    for (const auto& r : test.records()) {
        preds[r.id()] = detector.detect(r.pixels());
    }
    return evaluate(test, preds, iou_thresholds);
}

struct SweepBackends {
    GeneratorBackend& generator;
    DetectorBackend& detector;
};

/// Rows ordered by threshold, then seed.
inline std::vector<ReportRow> threshold_sweep(const SweepSpec& spec, const Dataset& train,
                                              const Dataset& test, SweepBackends backends,
                                              const EvalDetectorFactory& eval_factory) {
    spec.validate();
    for (const auto& r : test.records()) {
        if (train.index_of(r.id())) {
            throw HarnessError(HarnessErrc::InvalidSpec, "train and test share image " + r.id());
        }
    }
    std::vector<ReportRow> rows;
    for (const double t : spec.thresholds) {
        for (const auto seed : spec.seeds) {
            const auto t0 = std::chrono::steady_clock::now();
            AugmentationConfig config = spec.base;
            config.acceptance_threshold = t;
            config.target_new_instances = spec.target;
            config.instances_per_image = spec.instances_per_image.front();
            config.seed = seed;
            const auto outcome =
                augment_dataset(train, backends.generator, backends.detector, config);
            const auto detector = eval_factory(outcome.dataset);
            const auto aps = evaluate_detector(*detector, test, spec.iou_thresholds);
            auto row = make_row(t, train.size(), config.instances_per_image, aps,
                                outcome.stats.attempts,
                                spec.record_timing ? detail::seconds_since(t0) : 0.0);
            row.budget_exhausted = outcome.status == AugmentStatus::BudgetExhausted;
            rows.push_back(std::move(row));
        }
    }
    return rows;
}

/// First `n` records of `ds` after a seeded shuffle; prefixes nest.
inline Dataset shuffled_prefix(const Dataset& ds, std::size_t n, std::uint64_t seed) {
    std::vector<std::size_t> order(ds.size());
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::mt19937_64 rng(seed);
    std::shuffle(order.begin(), order.end(), rng);
    std::vector<ImageRecord> records;
    for (std::size_t i = 0; i < n; ++i) records.push_back(ds[order[i]]);
    return Dataset(std::move(records), ds.labels());
}

/// Rows ordered by dataset size, instances per image, seed. k = 0 rows are
/// plain evaluations of the subset and never touch the generator.
inline std::vector<ReportRow> size_grid(const SweepSpec& spec, const Dataset& full_train,
                                        const Dataset& test, SweepBackends backends,
                                        const EvalDetectorFactory& eval_factory) {
    spec.validate();
    if (spec.dataset_sizes.empty()) {
        throw HarnessError(HarnessErrc::InvalidSpec, "grid needs at least one dataset size");
    }
    for (const auto n : spec.dataset_sizes) {
        if (n == 0 || n > full_train.size()) {
            throw HarnessError(HarnessErrc::InvalidSpec,
                               "dataset size " + std::to_string(n) + " outside 1.." +
                                   std::to_string(full_train.size()));
        }
    }
    std::vector<ReportRow> rows;
    for (const auto n : spec.dataset_sizes) {
        for (const int k : spec.instances_per_image) {
            for (const auto seed : spec.seeds) {
                const auto t0 = std::chrono::steady_clock::now();
                const Dataset subset = shuffled_prefix(full_train, n, seed);
                Dataset trained_on = subset;
                std::size_t attempts = 0;
                bool exhausted = false;
                if (k > 0) {
                    AugmentationConfig config = spec.base;
                    config.instances_per_image = k;
                    config.target_new_instances = n * static_cast<std::size_t>(k);
                    config.seed = seed;
                    auto outcome =
                        augment_dataset(subset, backends.generator, backends.detector, config);
                    attempts = outcome.stats.attempts;
                    exhausted = outcome.status == AugmentStatus::BudgetExhausted;
                    trained_on = std::move(outcome.dataset);
                }
                const auto detector = eval_factory(trained_on);
                const auto aps = evaluate_detector(*detector, test, spec.iou_thresholds);
                auto row = make_row(spec.base.acceptance_threshold, n, k, aps, attempts,
                                    spec.record_timing ? detail::seconds_since(t0) : 0.0);
                row.budget_exhausted = exhausted;
                rows.push_back(std::move(row));
            }
        }
    }
    return rows;
}

/// Collapses consecutive rows that share threshold, size and instances per
/// image (the per-seed rows of one cell) into their mean. AP columns and the
/// average are re-rounded; attempts are rounded to the nearest count.
inline std::vector<ReportRow> average_over_seeds(std::span<const ReportRow> rows) {
    std::vector<ReportRow> out;
    std::size_t i = 0;
    while (i < rows.size()) {
        std::size_t j = i + 1;
        while (j < rows.size() && rows[j].threshold == rows[i].threshold &&
               rows[j].n_images == rows[i].n_images &&
               rows[j].instances_per_image == rows[i].instances_per_image) {
            ++j;
        }
        const double n = static_cast<double>(j - i);
        ReportRow r = rows[i];
        double attempts = 0.0;
        r.seconds = 0.0;
        r.budget_exhausted = false;
        std::fill(r.ap.begin(), r.ap.end(), 0.0);
        for (std::size_t k = i; k < j; ++k) {
            if (rows[k].ap.size() != r.ap.size()) {
                throw std::invalid_argument("rows disagree on the AP column count");
            }
            for (std::size_t c = 0; c < r.ap.size(); ++c) r.ap[c] += rows[k].ap[c];
            attempts += static_cast<double>(rows[k].attempts);
            r.seconds += rows[k].seconds;
            r.budget_exhausted = r.budget_exhausted || rows[k].budget_exhausted;
        }
        for (auto& a : r.ap) a = round2(a / n);
        r.ap_avg = r.ap.empty() ? 0.0
                                : round2(std::accumulate(r.ap.begin(), r.ap.end(), 0.0) /
                                         static_cast<double>(r.ap.size()));
        r.attempts = static_cast<std::size_t>(std::llround(attempts / n));
        r.seconds = round2(r.seconds / n);
        out.push_back(std::move(r));
        i = j;
    }
    return out;
}

// ---------------------------------------------------------------------------
// Instance sizes

struct SizeHistogram {
    double bin_width = 1.0;
    /// counts[k]: instances with k*bin_width <= max(w,h) < (k+1)*bin_width.
    std::vector<std::size_t> counts;
    std::vector<std::pair<double, double>> sizes;

    [[nodiscard]] std::size_t total() const noexcept { return sizes.size(); }

    /// Fraction of instances with both sides <= side.
    [[nodiscard]] double coverage(double side) const {
        const auto n = std::count_if(sizes.begin(), sizes.end(), [&](const auto& s) {
            return s.first <= side && s.second <= side;
        });
        return static_cast<double>(n) / static_cast<double>(sizes.size());
    }
};

inline SizeHistogram instance_size_histogram(const Dataset& dataset, double bin_width) {
    if (!(bin_width > 0.0)) {
        throw std::invalid_argument("bin_width must be positive");
    }
    SizeHistogram h;
    h.bin_width = bin_width;
    for (const auto& r : dataset.records()) {
        for (const auto& a : r.annotations()) {
            const double w = a.bbox.width();
            const double ht = a.bbox.height();
            h.sizes.emplace_back(w, ht);
            const auto bin = static_cast<std::size_t>(std::floor(std::max(w, ht) / bin_width));
            if (h.counts.size() <= bin) h.counts.resize(bin + 1, 0);
            ++h.counts[bin];
        }
    }
    if (h.sizes.empty()) {
        throw HarnessError(HarnessErrc::EmptyDataset, "EmptyDataset: no instances to histogram");
    }
    return h;
}

// ---------------------------------------------------------------------------
// Reports

enum class ReportFormat { Csv, Markdown };

/// "ap_02" for 0.2, "ap_075" for 0.75.
inline std::string ap_column_name(double iou_threshold) {
    std::string digits = detail::format_exact(iou_threshold);
    digits.erase(std::remove(digits.begin(), digits.end(), '.'), digits.end());
    return "ap_" + digits;
}

inline std::string csv_header(std::span<const double> iou_thresholds) {
    std::string h = "threshold,n_images,instances_per_image";
    for (const double t : iou_thresholds) h += "," + ap_column_name(t);
    return h + ",ap_avg,attempts,seconds";
}

namespace detail {

inline std::string fixed2(double v) {
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%.2f", v);
    return buf;
}

}  // namespace detail

inline std::string render_report(std::span<const ReportRow> rows, ReportFormat format,
                                 std::span<const double> iou_thresholds = default_iou_thresholds()) {
    if (rows.empty()) {
        throw std::invalid_argument("report needs at least one row");
    }
    for (const auto& r : rows) {
        if (r.ap.size() != iou_thresholds.size()) {
            throw std::invalid_argument("row AP count does not match the IoU thresholds");
        }
    }
    std::ostringstream out;
    if (format == ReportFormat::Csv) {
        out << csv_header(iou_thresholds) << '\n';
        for (const auto& r : rows) {
            out << detail::fixed2(r.threshold) << ',' << r.n_images << ',' << r.instances_per_image;
            for (const double a : r.ap) out << ',' << detail::fixed2(a);
            out << ',' << detail::fixed2(r.ap_avg) << ',' << r.attempts << ','
                << detail::fixed2(r.seconds) << '\n';
        }
        return out.str();
    }
    out << "| Threshold | Images | New per image |";
    for (const double t : iou_thresholds) out << " AP@" << detail::format_exact(t) << " |";
    out << " Average | Iterations | Seconds |\n|---:|---:|---:|";
    for (std::size_t i = 0; i < iou_thresholds.size(); ++i) out << "---:|";
    out << "---:|---:|---:|\n";
    for (const auto& r : rows) {
        out << "| " << detail::fixed2(r.threshold) << " | " << r.n_images << " | "
            << (r.instances_per_image == 0 ? std::string("-") : std::to_string(r.instances_per_image))
            << " |";
        for (const double a : r.ap) out << ' ' << detail::fixed2(a) << " |";
        out << ' ' << detail::fixed2(r.ap_avg) << " | " << r.attempts << " | "
            << detail::fixed2(r.seconds) << " |\n";
    }
    return out.str();
}

inline void emit_report(std::span<const ReportRow> rows, ReportFormat format,
                        const std::filesystem::path& out_path,
                        std::span<const double> iou_thresholds = default_iou_thresholds()) {
    const std::string text = render_report(rows, format, iou_thresholds);
    if (out_path.has_parent_path()) {
        std::error_code ec;
        std::filesystem::create_directories(out_path.parent_path(), ec);
    }
    detail::write_text(out_path, text);
}

/// Inverse of the CSV rendering. The IoU column count is taken from the header.
inline std::vector<ReportRow> parse_csv_report(const std::string& text) {
    std::istringstream in(text);
    std::string line;
    const auto fail = [](const std::string& why) {
        return HarnessError(HarnessErrc::MalformedReport, "malformed CSV report: " + why);
    };
    if (!std::getline(in, line)) throw fail("missing header");
    const auto split = [](const std::string& s) {
        std::vector<std::string> out;
        std::string cell;
        std::istringstream cells(s);
        while (std::getline(cells, cell, ',')) out.push_back(cell);
        return out;
    };
    const auto header = split(line);
    if (header.size() < 7 || header[0] != "threshold" || header[1] != "n_images" ||
        header[2] != "instances_per_image" || header[header.size() - 3] != "ap_avg" ||
        header[header.size() - 2] != "attempts" || header.back() != "seconds") {
        throw fail("unexpected header '" + line + "'");
    }
    const std::size_t n_ap = header.size() - 6;
    std::vector<ReportRow> rows;
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        const auto cells = split(line);
        if (cells.size() != header.size()) throw fail("wrong cell count in '" + line + "'");
        const auto num = [&](std::size_t i) {
            const auto v = detail::parse_double(cells[i]);
            if (!v) throw fail("bad number '" + cells[i] + "'");
            return *v;
        };
        const auto count = [&](std::size_t i) {
            const auto v = detail::parse_index(cells[i]);
            if (!v) throw fail("bad count '" + cells[i] + "'");
            return *v;
        };
        ReportRow r;
        r.threshold = num(0);
        r.n_images = count(1);
        r.instances_per_image = static_cast<int>(count(2));
        for (std::size_t k = 0; k < n_ap; ++k) r.ap.push_back(num(3 + k));
        r.ap_avg = num(3 + n_ap);
        r.attempts = count(4 + n_ap);
        r.seconds = num(5 + n_ap);
        rows.push_back(std::move(r));
    }
    return rows;
}

}  // namespace genaug
