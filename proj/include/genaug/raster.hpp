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

#include <cstddef>
#include <cstdint>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include <opencv2/core.hpp>
#include <opencv2/imgproc.hpp>

namespace genaug {

/// Interleaved 8-bit raster, row-major. RGB images use 3 channels, masks 1.
class Raster {
  public:
    Raster() = default;

    Raster(int width, int height, int channels, std::uint8_t fill = 0)
        : width_(width), height_(height), channels_(channels) {
        check_shape();
        data_.assign(byte_count(), fill);
    }

    Raster(int width, int height, int channels, std::vector<std::uint8_t> data)
        : width_(width), height_(height), channels_(channels), data_(std::move(data)) {
        check_shape();
        if (data_.size() != byte_count()) {
            throw std::invalid_argument("raster buffer size does not match its shape");
        }
    }

    [[nodiscard]] int width() const noexcept { return width_; }
    [[nodiscard]] int height() const noexcept { return height_; }
    [[nodiscard]] int channels() const noexcept { return channels_; }
    [[nodiscard]] bool empty() const noexcept { return data_.empty(); }

    [[nodiscard]] std::uint8_t& at(int x, int y, int c = 0) noexcept {
        return data_[index(x, y, c)];
    }
    [[nodiscard]] std::uint8_t at(int x, int y, int c = 0) const noexcept {
        return data_[index(x, y, c)];
    }

    [[nodiscard]] std::span<const std::uint8_t> bytes() const noexcept { return data_; }
    [[nodiscard]] std::span<std::uint8_t> bytes() noexcept { return data_; }

    [[nodiscard]] bool contains(int x, int y, int w, int h) const noexcept {
        return x >= 0 && y >= 0 && w >= 0 && h >= 0 && x + w <= width_ && y + h <= height_;
    }

    friend bool operator==(const Raster&, const Raster&) = default;

  private:
    void check_shape() const {
        if (width_ <= 0 || height_ <= 0 || (channels_ != 1 && channels_ != 3)) {
            throw std::invalid_argument("raster shape must be positive with 1 or 3 channels, got " +
                                        std::to_string(width_) + "x" + std::to_string(height_) +
                                        "x" + std::to_string(channels_));
        }
    }
    [[nodiscard]] std::size_t byte_count() const noexcept {
        return static_cast<std::size_t>(width_) * static_cast<std::size_t>(height_) *
               static_cast<std::size_t>(channels_);
    }
    [[nodiscard]] std::size_t index(int x, int y, int c) const noexcept {
        return (static_cast<std::size_t>(y) * static_cast<std::size_t>(width_) +
                static_cast<std::size_t>(x)) *
                   static_cast<std::size_t>(channels_) +
               static_cast<std::size_t>(c);
    }

    int width_ = 0;
    int height_ = 0;
    int channels_ = 0;
    std::vector<std::uint8_t> data_;
};

/// Wraps the raster's storage in a cv::Mat header without copying.
/// The Mat is only valid while the raster is alive and not resized.
inline cv::Mat as_mat(Raster& r) {
    return {r.height(), r.width(), CV_8UC(r.channels()), r.bytes().data()};
}

/// Read-only view. Callers must not write through the returned header.
inline cv::Mat as_mat(const Raster& r) {
    return {r.height(), r.width(), CV_8UC(r.channels()),
            const_cast<std::uint8_t*>(r.bytes().data())};
}

inline Raster from_mat(const cv::Mat& m) {
    if (m.depth() != CV_8U || (m.channels() != 1 && m.channels() != 3)) {
        throw std::invalid_argument("from_mat expects an 8-bit 1- or 3-channel matrix");
    }
    Raster out(m.cols, m.rows, m.channels());
    m.copyTo(as_mat(out));
    return out;
}

/// Copies the w x h window at (x, y). Throws std::out_of_range if it leaves the raster.
inline Raster crop(const Raster& src, int x, int y, int w, int h) {
    if (!src.contains(x, y, w, h) || w == 0 || h == 0) {
        throw std::out_of_range("crop window (" + std::to_string(x) + "," + std::to_string(y) +
                                ") " + std::to_string(w) + "x" + std::to_string(h) +
                                " leaves a " + std::to_string(src.width()) + "x" +
                                std::to_string(src.height()) + " raster");
    }
    Raster out(w, h, src.channels());
    as_mat(src)(cv::Rect(x, y, w, h)).copyTo(as_mat(out));
    return out;
}

/// Writes src into dst with its top-left corner at (x, y).
inline void paste(Raster& dst, const Raster& src, int x, int y) {
    if (src.channels() != dst.channels() || !dst.contains(x, y, src.width(), src.height())) {
        throw std::out_of_range("paste window does not fit the destination raster");
    }
    cv::Mat roi = as_mat(dst)(cv::Rect(x, y, src.width(), src.height()));
    as_mat(src).copyTo(roi);
}

/// ITU-R BT.601 luma; single-channel input is returned unchanged.
inline Raster to_gray(const Raster& src) {
    if (src.channels() == 1) {
        return src;
    }
    Raster out(src.width(), src.height(), 1);
    cv::cvtColor(as_mat(src), as_mat(out), cv::COLOR_RGB2GRAY);
    return out;
}

}  // namespace genaug
