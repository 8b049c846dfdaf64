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

// `genaug` command line. Exit codes: 0 success, 1 usage error, 2 runtime
// failure, 3 augmentation stopped on its budget (partial results written).

#pragma once

#include <chrono>
#include <cstdint>
#include <filesystem>
#include <iostream>
#include <memory>
#include <optional>
#include <ostream>
#include <stdexcept>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include "genaug/genaug.hpp"

namespace genaug::cli {

inline constexpr int kExitOk = 0;
inline constexpr int kExitUsage = 1;
inline constexpr int kExitRuntime = 2;
inline constexpr int kExitBudget = 3;

class UsageError : public std::runtime_error {
  public:
    using std::runtime_error::runtime_error;
};

struct Options {
    std::string command;
    // Data
    std::string data_root;
    std::string test_root;
    std::string format = "vedai";
    std::string out;
    std::string report = "csv";
    std::string predictions;
    std::size_t train_count = 0;
    // Augmentation
    int patch_size = 96;
    double threshold = 0.4;
    std::size_t target = 1000;
    std::vector<int> per_image;
    std::size_t max_attempts = 100;
    bool no_synthetic_collision = false;
    // Run control
    std::uint64_t seed = 0;
    std::vector<std::uint64_t> seeds;
    bool average_seeds = false;
    std::size_t threads = 1;
    double timeout_secs = 30.0;
    bool dry_run = false;
    bool timing = false;
    // Backends
    bool toy_backends = false;
    std::string generator_cmd;
    std::string detector_cmd;
    std::string eval_detector_cmd;
    // Experiments
    std::vector<double> thresholds = default_sweep_thresholds();
    std::vector<double> iou = default_iou_thresholds();
    std::vector<std::size_t> sizes;
    std::size_t samples = 5000;
    double bin_width = 4.0;
    double coverage_side = 48.0;
    // synth
    int images = 30;
    int image_size = 256;
};

inline AnnotationFormat parse_format(const std::string& s) {
    if (s == "vedai") return AnnotationFormat::VedaiLike;
    if (s == "yolo") return AnnotationFormat::YoloTxt;
    throw UsageError("--format must be vedai or yolo");
}

inline nlohmann::ordered_json echo(const Options& o) {
    nlohmann::ordered_json j;
    j["command"] = o.command;
    j["data_root"] = o.data_root;
    j["test_root"] = o.test_root;
    j["format"] = o.format;
    j["out"] = o.out;
    j["report"] = o.report;
    j["predictions"] = o.predictions;
    j["train_count"] = o.train_count;
    j["patch_size"] = o.patch_size;
    j["threshold"] = o.threshold;
    j["target"] = o.target;
    j["per_image"] = o.per_image;
    j["max_attempts_per_instance"] = o.max_attempts;
    j["collide_with_synthetic"] = !o.no_synthetic_collision;
    j["seed"] = o.seed;
    j["seeds"] = o.seeds;
    j["average_seeds"] = o.average_seeds;
    j["threads"] = o.threads;
    j["timeout_secs"] = o.timeout_secs;
    j["dry_run"] = o.dry_run;
    j["timing"] = o.timing;
    j["toy_backends"] = o.toy_backends;
    j["generator_cmd"] = o.generator_cmd;
    j["detector_cmd"] = o.detector_cmd;
    j["eval_detector_cmd"] = o.eval_detector_cmd;
    j["thresholds"] = o.thresholds;
    j["iou"] = o.iou;
    j["sizes"] = o.sizes;
    j["samples"] = o.samples;
    j["bin_width"] = o.bin_width;
    j["coverage_side"] = o.coverage_side;
    j["images"] = o.images;
    j["image_size"] = o.image_size;
    return j;
}

inline ProtocolOptions protocol_options(const Options& o) {
    ProtocolOptions p;
    p.patch_size = o.patch_size;
    p.timeout = std::chrono::milliseconds(static_cast<std::int64_t>(o.timeout_secs * 1000.0));
    return p;
}

struct Backends {
    std::unique_ptr<GeneratorBackend> generator;
    std::unique_ptr<DetectorBackend> detector;
};

/// A command line overrides the toy backend for its role.
inline Backends make_backends(const Options& o) {
    if (!o.toy_backends && (o.generator_cmd.empty() || o.detector_cmd.empty())) {
        throw UsageError("give --toy-backends or both --generator-cmd and --detector-cmd");
    }
    Backends b;
    if (!o.generator_cmd.empty()) {
        b.generator = spawn_generator_pool(o.generator_cmd, o.threads, protocol_options(o));
    } else {
        b.generator = std::make_unique<ToyGenerator>(ToyGeneratorParams{}, o.patch_size);
    }
    if (!o.detector_cmd.empty()) {
        b.detector = spawn_detector_pool(o.detector_cmd, o.threads, protocol_options(o));
    } else {
        b.detector = std::make_unique<ToyDetector>(acceptance_detector_params(o.patch_size));
    }
    return b;
}

inline Dataset load_required(const std::string& root, const Options& o, const char* flag) {
    if (root.empty()) throw UsageError(std::string(flag) + " is required");
    return load_dataset(root, parse_format(o.format));
}

inline int single_per_image(const Options& o, int fallback) {
    if (o.per_image.empty()) return fallback;
    if (o.per_image.size() != 1 || o.per_image.front() <= 0) {
        throw UsageError("--per-image takes one positive count here");
    }
    return o.per_image.front();
}

inline AugmentationConfig augmentation_config(const Options& o) {
    AugmentationConfig c;
    c.patch_size = o.patch_size;
    c.acceptance_threshold = o.threshold;
    c.instances_per_image = single_per_image(o, 2);
    c.target_new_instances = o.target;
    c.max_attempts_per_instance = o.max_attempts;
    c.seed = o.seed;
    c.collide_with_synthetic = !o.no_synthetic_collision;
    c.threads = o.threads;
    try {
        c.validate();
    } catch (const std::invalid_argument& e) {
        throw UsageError(e.what());
    }
    return c;
}

// ---------------------------------------------------------------------------
// Subcommands

inline int cmd_harvest(const Options& o, std::ostream& out) {
    const Dataset ds = load_required(o.data_root, o, "--data-root");
    if (o.out.empty()) throw UsageError("--out is required");
    const auto filtered = filter_oversized(ds, o.patch_size / 2.0);
    if (o.dry_run) {
        out << "would export " << filtered.dataset.instance_count() << " patches to " << o.out
            << " (" << filtered.removed << " oversized instances dropped)\n";
        return kExitOk;
    }
    const auto manifest = export_training_patches(filtered.dataset, o.patch_size, o.out);
    out << "exported " << manifest.instances << " patches to " << o.out << " ("
        << filtered.removed << " oversized instances dropped)\n";
    return kExitOk;
}

inline int cmd_augment(const Options& o, std::ostream& out, std::ostream& err) {
    const Dataset ds = load_required(o.data_root, o, "--data-root");
    const auto config = augmentation_config(o);
    if (o.out.empty()) throw UsageError("--out is required");
    if (o.dry_run) {
        out << "would augment " << ds.size() << " images (" << ds.instance_count()
            << " instances) to " << config.target_new_instances << " new instances, writing "
            << o.out << "\n";
        return kExitOk;
    }
    auto backends = make_backends(o);
    const auto outcome = augment_dataset(ds, *backends.generator, *backends.detector, config);
    save_dataset(outcome.dataset, o.out, parse_format(o.format));
    detail::write_text(std::filesystem::path(o.out) / "manifest.json",
                       run_manifest(config, outcome, o.timing).dump(2) + "\n");
    const auto& s = outcome.stats;
    out << "accepted " << s.accepted << " of " << s.attempts << " attempts ("
        << s.rejected_confidence << " below threshold, " << s.rejected_intersection
        << " patches skipped for overlap)\n";
    if (outcome.status == AugmentStatus::BudgetExhausted) {
        err << "budget exhausted: " << s.accepted << " of " << config.target_new_instances
            << " instances accepted\n";
        return kExitBudget;
    }
    return kExitOk;
}

inline int cmd_evaluate(const Options& o, std::ostream& out) {
    const Dataset gt = load_required(o.data_root, o, "--data-root");
    if (o.predictions.empty() == o.detector_cmd.empty()) {
        throw UsageError("give exactly one of --predictions or --detector-cmd");
    }
    if (o.dry_run) {
        out << "would evaluate " << gt.size() << " images at " << o.iou.size()
            << " IoU thresholds\n";
        return kExitOk;
    }
    std::vector<ApAtIou> aps;
    if (!o.predictions.empty()) {
        aps = evaluate(gt, read_predictions(o.predictions), o.iou);
    } else {
        ProtocolDetector detector(
            spawn_protocol_backend(o.detector_cmd, BackendRole::Detector, protocol_options(o)));
        aps = evaluate_detector(detector, gt, o.iou);
    }
    double sum = 0.0;
    for (const auto& a : aps) {
        out << "AP@" << detail::format_exact(a.iou_threshold) << ' ' << detail::fixed2(a.ap)
            << '\n';
        sum += a.ap;
    }
    out << "average " << detail::fixed2(sum / static_cast<double>(aps.size())) << '\n';
    return kExitOk;
}

inline std::pair<Dataset, Dataset> train_test(const Options& o) {
    const Dataset all = load_required(o.data_root, o, "--data-root");
    if (!o.test_root.empty()) {
        return {all, load_dataset(o.test_root, parse_format(o.format))};
    }
    const std::size_t n_train = o.train_count > 0 ? o.train_count : (2 * all.size() + 2) / 3;
    return split_dataset(all, n_train, o.seed);
}

inline EvalDetectorFactory eval_factory(const Options& o) {
    if (o.eval_detector_cmd.empty()) return toy_eval_detector_factory();
    const auto cmd = o.eval_detector_cmd;
    const auto popts = protocol_options(o);
    return [cmd, popts](const Dataset&) -> std::unique_ptr<DetectorBackend> {
        return std::make_unique<ProtocolDetector>(
            spawn_protocol_backend(cmd, BackendRole::Detector, popts));
    };
}

inline SweepSpec sweep_spec(const Options& o) {
    SweepSpec spec;
    spec.thresholds = o.thresholds;
    spec.iou_thresholds = o.iou;
    spec.seeds = o.seeds.empty() ? std::vector<std::uint64_t>{o.seed} : o.seeds;
    spec.target = o.target;
    spec.base.patch_size = o.patch_size;
    spec.base.acceptance_threshold = o.threshold;
    spec.base.max_attempts_per_instance = o.max_attempts;
    spec.base.collide_with_synthetic = !o.no_synthetic_collision;
    spec.base.threads = o.threads;
    spec.record_timing = o.timing;
    spec.dataset_sizes = o.sizes;
    try {
        spec.validate();
        spec.base.validate();
    } catch (const std::exception& e) {
        throw UsageError(e.what());
    }
    return spec;
}

inline int write_rows(const Options& o, std::vector<ReportRow> rows, std::ostream& out,
                      std::ostream& err) {
    if (o.average_seeds) rows = average_over_seeds(rows);
    const ReportFormat fmt = o.report == "md" ? ReportFormat::Markdown : ReportFormat::Csv;
    if (o.out.empty()) {
        out << render_report(rows, fmt, o.iou);
    } else {
        emit_report(rows, fmt, o.out, o.iou);
        out << "wrote " << rows.size() << " rows to " << o.out << '\n';
    }
    std::size_t exhausted = 0;
    for (const auto& r : rows) exhausted += r.budget_exhausted ? 1 : 0;
    if (exhausted > 0) {
        err << exhausted << " row(s) stopped on the attempt budget before reaching the target\n";
        return kExitBudget;
    }
    return kExitOk;
}

inline int cmd_sweep(const Options& o, std::ostream& out, std::ostream& err) {
    auto spec = sweep_spec(o);
    spec.instances_per_image = {single_per_image(o, 2)};
    const auto [train, test] = train_test(o);
    if (o.dry_run) {
        out << "would sweep " << spec.thresholds.size() << " thresholds x " << spec.seeds.size()
            << " seeds on " << train.size() << " train / " << test.size() << " test images\n";
        return kExitOk;
    }
    auto backends = make_backends(o);
    const auto rows = threshold_sweep(spec, train, test, {*backends.generator, *backends.detector},
                                      eval_factory(o));
    return write_rows(o, rows, out, err);
}

inline int cmd_grid(const Options& o, std::ostream& out, std::ostream& err) {
    auto spec = sweep_spec(o);
    spec.instances_per_image = o.per_image.empty() ? std::vector<int>{0, 1, 2} : o.per_image;
    const auto [train, test] = train_test(o);
    if (spec.dataset_sizes.empty()) spec.dataset_sizes = {train.size()};
    try {
        spec.validate();
    } catch (const std::exception& e) {
        throw UsageError(e.what());
    }
    if (o.dry_run) {
        out << "would run " << spec.dataset_sizes.size() * spec.instances_per_image.size() *
                                   spec.seeds.size()
            << " grid cells on " << train.size() << " train / " << test.size()
            << " test images\n";
        return kExitOk;
    }
    const bool needs_generator = std::any_of(spec.instances_per_image.begin(),
                                             spec.instances_per_image.end(),
                                             [](int k) { return k > 0; });
    Backends backends;
    if (needs_generator) {
        backends = make_backends(o);
    } else {
        backends.generator = std::make_unique<ToyGenerator>(ToyGeneratorParams{}, o.patch_size);
        backends.detector = std::make_unique<ToyDetector>(acceptance_detector_params(o.patch_size));
    }
    const auto rows = size_grid(spec, train, test, {*backends.generator, *backends.detector},
                                eval_factory(o));
    return write_rows(o, rows, out, err);
}

inline int cmd_probe(const Options& o, std::ostream& out) {
    std::optional<Dataset> backgrounds;
    if (!o.data_root.empty()) {
        backgrounds = load_dataset(o.data_root, parse_format(o.format));
    } else {
        ToySceneParams scene;
        scene.image_size = std::max(256, 2 * o.patch_size);
        backgrounds = make_toy_dataset(scene, o.seed + 1);
    }
    if (o.samples == 0) throw UsageError("--samples must be positive");
    if (o.dry_run) {
        out << "would probe " << o.samples << " samples on " << backgrounds->size()
            << " background images\n";
        return kExitOk;
    }
    auto backends = make_backends(o);
    const auto h = acceptance_rate_probe(*backends.generator, *backends.detector, o.samples,
                                         *backgrounds, o.seed, o.patch_size);
    out << "bin,count\n";
    for (std::size_t k = 0; k < h.bins.size(); ++k) {
        out << detail::fixed2(k / 10.0) << '-' << detail::fixed2((k + 1) / 10.0) << ','
            << h.bins[k] << '\n';
    }
    return kExitOk;
}

inline int cmd_hist(const Options& o, std::ostream& out) {
    const Dataset ds = load_required(o.data_root, o, "--data-root");
    if (!(o.bin_width > 0.0)) throw UsageError("--bin-width must be positive");
    if (o.dry_run) {
        out << "would histogram " << ds.instance_count() << " instances\n";
        return kExitOk;
    }
    const auto h = instance_size_histogram(ds, o.bin_width);
    out << "max_side_from,count\n";
    for (std::size_t k = 0; k < h.counts.size(); ++k) {
        out << detail::format_exact(k * h.bin_width) << ',' << h.counts[k] << '\n';
    }
    out << "coverage(" << detail::format_exact(o.coverage_side) << ") "
        << detail::format_exact(h.coverage(o.coverage_side)) << '\n';
    return kExitOk;
}

inline int cmd_synth(const Options& o, std::ostream& out) {
    if (o.out.empty()) throw UsageError("--out is required");
    if (o.images <= 0 || o.image_size < 32) throw UsageError("--images/--image-size too small");
    ToySceneParams scene;
    scene.n_images = o.images;
    scene.image_size = o.image_size;
    if (o.dry_run) {
        out << "would write " << o.images << " toy images to " << o.out << '\n';
        return kExitOk;
    }
    const Dataset ds = make_toy_dataset(scene, o.seed);
    save_dataset(ds, o.out, parse_format(o.format));
    out << "wrote " << ds.size() << " images with " << ds.instance_count() << " instances to "
        << o.out << '\n';
    return kExitOk;
}

// ---------------------------------------------------------------------------

inline int run(int argc, const char* const* argv, std::ostream& out = std::cout,
               std::ostream& err = std::cerr) {
    CLI::App app{"Detector-filtered inpainting augmentation for object detection datasets",
                 "genaug"};
    app.require_subcommand(1);
    Options o;

    const auto data = [&](CLI::App* s) {
        s->add_option("--data-root", o.data_root, "Dataset directory");
        s->add_option("--format", o.format, "Annotation format")
            ->check(CLI::IsMember({"vedai", "yolo"}));
    };
    const auto run_control = [&](CLI::App* s) {
        s->add_option("--seed", o.seed, "Random seed");
        s->add_option("--threads", o.threads, "Concurrent candidates / backend handles")
            ->check(CLI::PositiveNumber);
        s->add_flag("--dry-run", o.dry_run, "Print the resolved plan and exit");
        s->add_option("--out", o.out, "Output path");
    };
    const auto backends = [&](CLI::App* s) {
        s->add_flag("--toy-backends", o.toy_backends, "Use the built-in toy generator/detector");
        s->add_option("--generator-cmd", o.generator_cmd, "Generator process command line");
        s->add_option("--detector-cmd", o.detector_cmd, "Detector process command line");
        s->add_option("--timeout-secs", o.timeout_secs, "Per-request backend timeout")
            ->check(CLI::PositiveNumber);
        s->add_option("--patch-size", o.patch_size, "Patch side w");
    };
    const auto augmentation = [&](CLI::App* s) {
        s->add_option("--threshold", o.threshold, "Acceptance threshold")
            ->check(CLI::Range(0.0, 1.0));
        s->add_option("--target", o.target, "New instances to accept");
        s->add_option("--per-image", o.per_image, "New instances per image")->delimiter(',');
        s->add_option("--max-attempts", o.max_attempts, "Attempt budget per target instance");
        s->add_flag("--no-synthetic-collision", o.no_synthetic_collision,
                    "Let holes overlap earlier synthetic instances");
        s->add_flag("--timing", o.timing, "Record wall-clock times in outputs");
    };
    const auto experiment = [&](CLI::App* s) {
        s->add_option("--test-root", o.test_root, "Held-out test dataset directory");
        s->add_option("--train-count", o.train_count, "Train split size when no --test-root");
        s->add_option("--seeds", o.seeds, "Seeds, one row each")->delimiter(',');
        s->add_flag("--average-seeds", o.average_seeds, "Report the mean over seeds per cell");
        s->add_option("--iou", o.iou, "IoU thresholds")->delimiter(',');
        s->add_option("--report", o.report, "Report format")->check(CLI::IsMember({"csv", "md"}));
        s->add_option("--eval-detector-cmd", o.eval_detector_cmd,
                      "External evaluation detector (default: toy template detector)");
    };

    auto* harvest = app.add_subcommand("harvest", "Export instance-centred training patches");
    data(harvest);
    run_control(harvest);
    harvest->add_option("--patch-size", o.patch_size, "Patch side w");

    auto* augment = app.add_subcommand("augment", "Generate, score and accept new instances");
    data(augment);
    run_control(augment);
    backends(augment);
    augmentation(augment);

    auto* evaluate_cmd = app.add_subcommand("evaluate", "Average Precision of predictions");
    data(evaluate_cmd);
    run_control(evaluate_cmd);
    evaluate_cmd->add_option("--predictions", o.predictions, "Prediction file");
    evaluate_cmd->add_option("--detector-cmd", o.detector_cmd, "Detector process command line");
    evaluate_cmd->add_option("--timeout-secs", o.timeout_secs, "Per-request backend timeout");
    evaluate_cmd->add_option("--iou", o.iou, "IoU thresholds")->delimiter(',');

    auto* sweep = app.add_subcommand("sweep", "Acceptance-threshold sweep");
    data(sweep);
    run_control(sweep);
    backends(sweep);
    augmentation(sweep);
    experiment(sweep);
    sweep->add_option("--thresholds", o.thresholds, "Acceptance thresholds")->delimiter(',');

    auto* grid = app.add_subcommand("grid", "Dataset size x new-instances grid");
    data(grid);
    run_control(grid);
    backends(grid);
    augmentation(grid);
    experiment(grid);
    grid->add_option("--sizes", o.sizes, "Training subset sizes")->delimiter(',');

    auto* probe = app.add_subcommand("probe", "Histogram of detector scores on generated samples");
    data(probe);
    run_control(probe);
    backends(probe);
    probe->add_option("--samples", o.samples, "Generated samples");

    auto* hist = app.add_subcommand("hist", "Instance size histogram and patch coverage");
    data(hist);
    run_control(hist);
    hist->add_option("--bin-width", o.bin_width, "Histogram bin width in pixels");
    hist->add_option("--coverage", o.coverage_side, "Side for the coverage fraction");

    auto* synth = app.add_subcommand("synth", "Write a procedural toy dataset");
    run_control(synth);
    synth->add_option("--format", o.format, "Annotation format")
        ->check(CLI::IsMember({"vedai", "yolo"}));
    synth->add_option("--images", o.images, "Number of images");
    synth->add_option("--image-size", o.image_size, "Image side in pixels");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e, out, err);
        return code == 0 ? kExitOk : kExitUsage;
    }
    o.command = app.get_subcommands().front()->get_name();
    err << "resolved config: " << echo(o).dump() << '\n';

    try {
        if (o.command == "harvest") return cmd_harvest(o, out);
        if (o.command == "augment") return cmd_augment(o, out, err);
        if (o.command == "evaluate") return cmd_evaluate(o, out);
        if (o.command == "sweep") return cmd_sweep(o, out, err);
        if (o.command == "grid") return cmd_grid(o, out, err);
        if (o.command == "probe") return cmd_probe(o, out);
        if (o.command == "hist") return cmd_hist(o, out);
        if (o.command == "synth") return cmd_synth(o, out);
    } catch (const UsageError& e) {
        err << "usage error: " << e.what() << "\n\n" << app.help();
        return kExitUsage;
    } catch (const AugmentationError& e) {
        err << "error: " << e.what() << " (after " << e.stats().attempts << " attempts, "
            << e.stats().accepted << " accepted)\n";
        return kExitRuntime;
    } catch (const std::exception& e) {
        err << "error: " << e.what() << '\n';
        return kExitRuntime;
    }
    return kExitUsage;
}

}  // namespace genaug::cli
