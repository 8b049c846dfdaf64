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
#include <charconv>
#include <cmath>
#include <cstdio>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <memory>
#include <numeric>
#include <optional>
#include <random>
#include <span>
#include <sstream>
#include <stdexcept>
#include <string>
#include <string_view>
#include <system_error>
#include <unordered_map>
#include <unordered_set>
#include <utility>
#include <vector>

#include "genaug/codec.hpp"
#include "genaug/geometry.hpp"
#include "genaug/raster.hpp"

namespace genaug {

enum class Provenance { Original, Synthetic };

struct Annotation {
    BBox bbox;
    std::string label;
    Provenance provenance = Provenance::Original;

    friend bool operator==(const Annotation&, const Annotation&) = default;
};

/// One image with its annotations. Pixels are shared between copies and never
/// mutated; "modifying" a record means constructing a new one.
class ImageRecord {
  public:
    ImageRecord(std::string id, Raster pixels, std::vector<Annotation> annotations = {})
        : ImageRecord(std::move(id), std::make_shared<const Raster>(std::move(pixels)),
                      std::move(annotations)) {}

    ImageRecord(std::string id, std::shared_ptr<const Raster> pixels,
                std::vector<Annotation> annotations)
        : id_(std::move(id)), pixels_(std::move(pixels)), annotations_(std::move(annotations)) {
        if (id_.empty()) {
            throw std::invalid_argument("image id must be non-empty");
        }
        if (!pixels_ || pixels_->empty() || pixels_->channels() != 3) {
            throw std::invalid_argument("image '" + id_ + "' needs a non-empty RGB raster");
        }
        for (const auto& a : annotations_) {
            if (!a.bbox.valid() || a.label.empty() ||
                !inside_bounds(a.bbox, width(), height())) {
                throw std::invalid_argument("image '" + id_ + "' has an invalid annotation " +
                                            to_string(a.bbox));
            }
        }
    }

    [[nodiscard]] const std::string& id() const noexcept { return id_; }
    [[nodiscard]] const Raster& pixels() const noexcept { return *pixels_; }
    [[nodiscard]] const std::shared_ptr<const Raster>& shared_pixels() const noexcept {
        return pixels_;
    }
    [[nodiscard]] int width() const noexcept { return pixels_->width(); }
    [[nodiscard]] int height() const noexcept { return pixels_->height(); }
    [[nodiscard]] const std::vector<Annotation>& annotations() const noexcept {
        return annotations_;
    }

    [[nodiscard]] ImageRecord with_annotations(std::vector<Annotation> annotations) const {
        return {id_, pixels_, std::move(annotations)};
    }
    [[nodiscard]] ImageRecord with_pixels(Raster pixels) const {
        return {id_, std::make_shared<const Raster>(std::move(pixels)), annotations_};
    }

    friend bool operator==(const ImageRecord& a, const ImageRecord& b) {
        return a.id_ == b.id_ && a.annotations_ == b.annotations_ &&
               (a.pixels_ == b.pixels_ || *a.pixels_ == *b.pixels_);
    }

  private:
    std::string id_;
    std::shared_ptr<const Raster> pixels_;
    std::vector<Annotation> annotations_;
};

/// Ordered collection of records with unique ids. The label list keeps
/// first-seen order because the YOLO class index depends on it.
class Dataset {
  public:
    Dataset() = default;

    explicit Dataset(std::vector<ImageRecord> records, std::vector<std::string> labels = {})
        : records_(std::move(records)), labels_(std::move(labels)) {
        std::unordered_set<std::string> seen_labels;
        std::vector<std::string> unique_labels;
        for (auto& l : labels_) {
            if (l.empty()) {
                throw std::invalid_argument("empty class label");
            }
            if (seen_labels.insert(l).second) {
                unique_labels.push_back(l);
            }
        }
        std::unordered_set<std::string> ids;
        for (const auto& r : records_) {
            if (!ids.insert(r.id()).second) {
                throw std::invalid_argument("duplicate image id '" + r.id() + "'");
            }
            for (const auto& a : r.annotations()) {
                if (seen_labels.insert(a.label).second) {
                    unique_labels.push_back(a.label);
                }
            }
        }
        labels_ = std::move(unique_labels);
    }

    [[nodiscard]] std::span<const ImageRecord> records() const noexcept { return records_; }
    [[nodiscard]] const std::vector<std::string>& labels() const noexcept { return labels_; }
    [[nodiscard]] std::size_t size() const noexcept { return records_.size(); }
    [[nodiscard]] bool empty() const noexcept { return records_.empty(); }
    [[nodiscard]] const ImageRecord& operator[](std::size_t i) const { return records_.at(i); }

    [[nodiscard]] std::optional<std::size_t> index_of(std::string_view id) const {
        for (std::size_t i = 0; i < records_.size(); ++i) {
            if (records_[i].id() == id) {
                return i;
            }
        }
        return std::nullopt;
    }

    [[nodiscard]] std::size_t instance_count() const noexcept {
        std::size_t n = 0;
        for (const auto& r : records_) {
            n += r.annotations().size();
        }
        return n;
    }

    friend bool operator==(const Dataset&, const Dataset&) = default;

  private:
    std::vector<ImageRecord> records_;
    std::vector<std::string> labels_;
};

enum class AnnotationFormat { VedaiLike, YoloTxt };

enum class DatasetErrc {
    MissingAnnotation,
    MalformedAnnotation,
    UnreadableImage,
    OutOfBoundsBox,
    InvalidSplit,
    IoFailure,
};

inline const char* to_string(DatasetErrc e) noexcept {
    switch (e) {
        case DatasetErrc::MissingAnnotation: return "MissingAnnotation";
        case DatasetErrc::MalformedAnnotation: return "MalformedAnnotation";
        case DatasetErrc::UnreadableImage: return "UnreadableImage";
        case DatasetErrc::OutOfBoundsBox: return "OutOfBoundsBox";
        case DatasetErrc::InvalidSplit: return "InvalidSplit";
        case DatasetErrc::IoFailure: return "IoFailure";
    }
    return "Unknown";
}

class DatasetError : public std::runtime_error {
  public:
    DatasetError(DatasetErrc code, std::filesystem::path path, std::size_t line,
                 const std::string& detail)
        : std::runtime_error(std::string(to_string(code)) + ": " + path.string() +
                             (line > 0 ? ":" + std::to_string(line) : std::string()) +
                             (detail.empty() ? std::string() : " (" + detail + ")")),
          code_(code),
          path_(std::move(path)),
          line_(line) {}

    [[nodiscard]] DatasetErrc code() const noexcept { return code_; }
    [[nodiscard]] const std::filesystem::path& path() const noexcept { return path_; }
    /// 1-based line number, 0 when the error is not tied to a line.
    [[nodiscard]] std::size_t line() const noexcept { return line_; }

  private:
    DatasetErrc code_;
    std::filesystem::path path_;
    std::size_t line_;
};

/// Normalized YOLO coordinates are written with six decimals, so a loaded
/// coordinate may differ from the saved one by up to this fraction of the
/// image side.
inline constexpr double kYoloQuantum = 1e-6;

namespace detail {

inline std::vector<std::string_view> split_ws(std::string_view line) {
    std::vector<std::string_view> out;
    std::size_t i = 0;
    while (i < line.size()) {
        while (i < line.size() && (line[i] == ' ' || line[i] == '\t' || line[i] == '\r')) {
            ++i;
        }
        std::size_t j = i;
        while (j < line.size() && line[j] != ' ' && line[j] != '\t' && line[j] != '\r') {
            ++j;
        }
        if (j > i) {
            out.push_back(line.substr(i, j - i));
        }
        i = j;
    }
    return out;
}

inline std::optional<double> parse_double(std::string_view s) {
    double v = 0.0;
    const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
    if (ec != std::errc() || ptr != s.data() + s.size() || !std::isfinite(v)) {
        return std::nullopt;
    }
    return v;
}

inline std::optional<std::size_t> parse_index(std::string_view s) {
    std::size_t v = 0;
    const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
    if (ec != std::errc() || ptr != s.data() + s.size()) {
        return std::nullopt;
    }
    return v;
}

/// Shortest representation that parses back to the same double.
inline std::string format_exact(double v) {
    char buf[64];
    const auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), v);
    return {buf, ptr};
}

inline std::string format_fixed6(double v) {
    char buf[64];
    const int n = std::snprintf(buf, sizeof(buf), "%.6f", v);
    return {buf, static_cast<std::size_t>(n)};
}

inline std::optional<Provenance> parse_provenance(std::string_view s) {
    if (s == "orig") return Provenance::Original;
    if (s == "synth") return Provenance::Synthetic;
    return std::nullopt;
}

inline const char* provenance_token(Provenance p) {
    return p == Provenance::Synthetic ? "synth" : "orig";
}

inline std::vector<std::string> read_lines(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) {
        throw DatasetError(DatasetErrc::IoFailure, path, 0, "cannot open");
    }
    std::vector<std::string> lines;
    for (std::string line; std::getline(in, line);) {
        lines.push_back(std::move(line));
    }
    return lines;
}

inline bool blank(std::string_view line) {
    return std::all_of(line.begin(), line.end(),
                       [](char c) { return c == ' ' || c == '\t' || c == '\r'; });
}

inline std::vector<Annotation> parse_vedai(const std::filesystem::path& path, int width,
                                           int height) {
    std::vector<Annotation> out;
    const auto lines = read_lines(path);
    for (std::size_t i = 0; i < lines.size(); ++i) {
        if (blank(lines[i])) {
            continue;
        }
        const auto tok = split_ws(lines[i]);
        if (tok.size() != 5 && tok.size() != 6) {
            throw DatasetError(DatasetErrc::MalformedAnnotation, path, i + 1,
                               "expected 5 or 6 fields");
        }
        const auto x0 = parse_double(tok[1]);
        const auto y0 = parse_double(tok[2]);
        const auto x1 = parse_double(tok[3]);
        const auto y1 = parse_double(tok[4]);
        if (!x0 || !y0 || !x1 || !y1) {
            throw DatasetError(DatasetErrc::MalformedAnnotation, path, i + 1, "bad coordinate");
        }
        Provenance prov = Provenance::Original;
        if (tok.size() == 6) {
            const auto p = parse_provenance(tok[5]);
            if (!p) {
                throw DatasetError(DatasetErrc::MalformedAnnotation, path, i + 1,
                                   "provenance must be orig or synth");
            }
            prov = *p;
        }
        const BBox box{*x0, *y0, *x1, *y1};
        if (!box.valid()) {
            throw DatasetError(DatasetErrc::MalformedAnnotation, path, i + 1, "empty box");
        }
        if (!inside_bounds(box, width, height)) {
            throw DatasetError(DatasetErrc::OutOfBoundsBox, path, i + 1, to_string(box));
        }
        out.push_back({box, std::string(tok[0]), prov});
    }
    return out;
}

inline double snap_to_range(double v, double hi, double tol) {
    if (v < 0.0 && v >= -tol) return 0.0;
    if (v > hi && v <= hi + tol) return hi;
    return v;
}

inline std::vector<Annotation> parse_yolo(const std::filesystem::path& path, int width,
                                          int height, const std::vector<std::string>& classes) {
    std::vector<Annotation> out;
    const auto lines = read_lines(path);
    const double w_img = width;
    const double h_img = height;
    for (std::size_t i = 0; i < lines.size(); ++i) {
        if (blank(lines[i])) {
            continue;
        }
        const auto tok = split_ws(lines[i]);
        if (tok.size() != 5 && tok.size() != 6) {
            throw DatasetError(DatasetErrc::MalformedAnnotation, path, i + 1,
                               "expected 5 or 6 fields");
        }
        const auto cls = parse_index(tok[0]);
        if (!cls || *cls >= classes.size()) {
            throw DatasetError(DatasetErrc::MalformedAnnotation, path, i + 1,
                               "class index not in classes.txt");
        }
        const auto cx = parse_double(tok[1]);
        const auto cy = parse_double(tok[2]);
        const auto bw = parse_double(tok[3]);
        const auto bh = parse_double(tok[4]);
        if (!cx || !cy || !bw || !bh || *bw <= 0.0 || *bh <= 0.0) {
            throw DatasetError(DatasetErrc::MalformedAnnotation, path, i + 1, "bad coordinate");
        }
        Provenance prov = Provenance::Original;
        if (tok.size() == 6) {
            const auto p = parse_provenance(tok[5]);
            if (!p) {
                throw DatasetError(DatasetErrc::MalformedAnnotation, path, i + 1,
                                   "provenance must be orig or synth");
            }
            prov = *p;
        }
        const double tol_x = kYoloQuantum * w_img;
        const double tol_y = kYoloQuantum * h_img;
        const BBox box{snap_to_range((*cx - 0.5 * *bw) * w_img, w_img, tol_x),
                       snap_to_range((*cy - 0.5 * *bh) * h_img, h_img, tol_y),
                       snap_to_range((*cx + 0.5 * *bw) * w_img, w_img, tol_x),
                       snap_to_range((*cy + 0.5 * *bh) * h_img, h_img, tol_y)};
        if (!box.valid()) {
            throw DatasetError(DatasetErrc::MalformedAnnotation, path, i + 1, "empty box");
        }
        if (!inside_bounds(box, w_img, h_img)) {
            throw DatasetError(DatasetErrc::OutOfBoundsBox, path, i + 1, to_string(box));
        }
        out.push_back({box, classes[*cls], prov});
    }
    return out;
}

inline void write_text(const std::filesystem::path& path, const std::string& text) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    out << text;
    if (!out) {
        throw DatasetError(DatasetErrc::IoFailure, path, 0, "write failed");
    }
}

}  // namespace detail

/// Reads `<stem>.png` + `<stem>.txt` pairs from a directory. Records are
/// ordered by id (the file stem). YOLO datasets also need `classes.txt`.
inline Dataset load_dataset(const std::filesystem::path& root, AnnotationFormat format) {
    namespace fs = std::filesystem;
    std::error_code ec;
    if (!fs::is_directory(root, ec)) {
        throw DatasetError(DatasetErrc::IoFailure, root, 0, "not a directory");
    }
    std::vector<fs::path> images;
    for (const auto& entry : fs::directory_iterator(root)) {
        if (entry.is_regular_file() && entry.path().extension() == ".png") {
            images.push_back(entry.path());
        }
    }
    std::sort(images.begin(), images.end(),
              [](const fs::path& a, const fs::path& b) { return a.stem() < b.stem(); });

    std::vector<std::string> classes;
    if (format == AnnotationFormat::YoloTxt) {
        const auto classes_path = root / "classes.txt";
        if (!fs::exists(classes_path)) {
            throw DatasetError(DatasetErrc::MissingAnnotation, classes_path, 0,
                               "YOLO datasets need a class list");
        }
        for (auto& line : detail::read_lines(classes_path)) {
            if (!line.empty() && line.back() == '\r') line.pop_back();
            if (!line.empty()) classes.push_back(std::move(line));
        }
    }

    std::vector<ImageRecord> records;
    records.reserve(images.size());
    for (const auto& image_path : images) {
        auto ann_path = image_path;
        ann_path.replace_extension(".txt");
        if (!fs::exists(ann_path)) {
            throw DatasetError(DatasetErrc::MissingAnnotation, ann_path, 0, "");
        }
        Raster pixels;
        try {
            pixels = read_png(image_path, 3);
        } catch (const CodecError& e) {
            throw DatasetError(DatasetErrc::UnreadableImage, image_path, 0, e.what());
        }
        auto annotations =
            format == AnnotationFormat::VedaiLike
                ? detail::parse_vedai(ann_path, pixels.width(), pixels.height())
                : detail::parse_yolo(ann_path, pixels.width(), pixels.height(), classes);
        records.emplace_back(image_path.stem().string(), std::move(pixels), std::move(annotations));
    }
    return Dataset(std::move(records), std::move(classes));
}

inline void save_dataset(const Dataset& dataset, const std::filesystem::path& root,
                         AnnotationFormat format) {
    namespace fs = std::filesystem;
    std::error_code ec;
    fs::create_directories(root, ec);
    if (ec) {
        throw DatasetError(DatasetErrc::IoFailure, root, 0, ec.message());
    }
    std::unordered_map<std::string, std::size_t> class_index;
    if (format == AnnotationFormat::YoloTxt) {
        std::string text;
        for (std::size_t i = 0; i < dataset.labels().size(); ++i) {
            class_index[dataset.labels()[i]] = i;
            text += dataset.labels()[i] + "\n";
        }
        detail::write_text(root / "classes.txt", text);
    }
    for (const auto& record : dataset.records()) {
        const auto image_path = root / (record.id() + ".png");
        try {
            write_png(image_path, record.pixels());
        } catch (const CodecError& e) {
            throw DatasetError(DatasetErrc::IoFailure, image_path, 0, e.what());
        }
        std::string text;
        const double w = record.width();
        const double h = record.height();
        for (const auto& a : record.annotations()) {
            const auto& b = a.bbox;
            if (format == AnnotationFormat::VedaiLike) {
                text += a.label + " " + detail::format_exact(b.x_min) + " " +
                        detail::format_exact(b.y_min) + " " + detail::format_exact(b.x_max) +
                        " " + detail::format_exact(b.y_max);
            } else {
                text += std::to_string(class_index.at(a.label)) + " " +
                        detail::format_fixed6(b.center_x() / w) + " " +
                        detail::format_fixed6(b.center_y() / h) + " " +
                        detail::format_fixed6(b.width() / w) + " " +
                        detail::format_fixed6(b.height() / h);
            }
            text += " ";
            text += detail::provenance_token(a.provenance);
            text += "\n";
        }
        detail::write_text(root / (record.id() + ".txt"), text);
    }
}

/// Seeded random partition into (train, test); both keep the shuffled order.
inline std::pair<Dataset, Dataset> split_dataset(const Dataset& dataset, std::size_t n_train,
                                                 std::uint64_t seed) {
    if (n_train == 0 || n_train >= dataset.size()) {
        throw DatasetError(DatasetErrc::InvalidSplit, {}, 0,
                           "n_train=" + std::to_string(n_train) + " of " +
                               std::to_string(dataset.size()) + " records");
    }
    std::vector<std::size_t> order(dataset.size());
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::mt19937_64 rng(seed);
    std::shuffle(order.begin(), order.end(), rng);
    std::vector<ImageRecord> train;
    std::vector<ImageRecord> test;
    for (std::size_t i = 0; i < order.size(); ++i) {
        (i < n_train ? train : test).push_back(dataset[order[i]]);
    }
    return {Dataset(std::move(train), dataset.labels()), Dataset(std::move(test), dataset.labels())};
}

struct FilterResult {
    Dataset dataset;
    std::size_t removed = 0;
};

/// Drops annotations whose width or height exceeds max_side. Images stay.
inline FilterResult filter_oversized(const Dataset& dataset, double max_side) {
    if (!(max_side > 0.0)) {
        throw std::invalid_argument("max_side must be positive");
    }
    FilterResult result;
    std::vector<ImageRecord> records;
    records.reserve(dataset.size());
    for (const auto& r : dataset.records()) {
        std::vector<Annotation> kept;
        for (const auto& a : r.annotations()) {
            if (a.bbox.width() > max_side || a.bbox.height() > max_side) {
                ++result.removed;
            } else {
                kept.push_back(a);
            }
        }
        records.push_back(r.with_annotations(std::move(kept)));
    }
    result.dataset = Dataset(std::move(records), dataset.labels());
    return result;
}

}  // namespace genaug
