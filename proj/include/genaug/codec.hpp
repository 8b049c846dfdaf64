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

#include <cstdint>
#include <filesystem>
#include <fstream>
#include <iterator>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include <openssl/evp.h>
#include <opencv2/imgcodecs.hpp>
#include <opencv2/imgproc.hpp>

#include "genaug/raster.hpp"

namespace genaug {

class CodecError : public std::runtime_error {
  public:
    using std::runtime_error::runtime_error;
};

// PNG. Rasters are RGB in memory; OpenCV's codec wants BGR.

inline std::vector<std::uint8_t> encode_png(const Raster& image) {
    cv::Mat src = as_mat(image);
    cv::Mat ordered;
    if (image.channels() == 3) {
        cv::cvtColor(src, ordered, cv::COLOR_RGB2BGR);
    } else {
        ordered = src;
    }
    std::vector<std::uint8_t> out;
    const std::vector<int> params{cv::IMWRITE_PNG_COMPRESSION, 3};
    if (!cv::imencode(".png", ordered, out, params)) {
        throw CodecError("PNG encoding failed");
    }
    return out;
}

/// Decodes a PNG into a raster with the requested channel count (1 or 3).
inline Raster decode_png(std::span<const std::uint8_t> bytes, int channels = 3) {
    if (bytes.empty()) {
        throw CodecError("empty PNG buffer");
    }
    const cv::Mat buf(1, static_cast<int>(bytes.size()), CV_8U,
                      const_cast<std::uint8_t*>(bytes.data()));
    const int flags = channels == 1 ? cv::IMREAD_GRAYSCALE : cv::IMREAD_COLOR;
    cv::Mat decoded = cv::imdecode(buf, flags);
    if (decoded.empty()) {
        throw CodecError("not a decodable PNG");
    }
    if (channels == 3) {
        cv::cvtColor(decoded, decoded, cv::COLOR_BGR2RGB);
    }
    return from_mat(decoded);
}

inline std::vector<std::uint8_t> read_file_bytes(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) {
        throw CodecError("cannot open " + path.string());
    }
    return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

inline Raster read_png(const std::filesystem::path& path, int channels = 3) {
    return decode_png(read_file_bytes(path), channels);
}

inline void write_png(const std::filesystem::path& path, const Raster& image) {
    const auto bytes = encode_png(image);
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    out.write(reinterpret_cast<const char*>(bytes.data()),
              static_cast<std::streamsize>(bytes.size()));
    if (!out) {
        throw CodecError("cannot write " + path.string());
    }
}

// Base64 (RFC 4648, padded).

inline std::string base64_encode(std::span<const std::uint8_t> bytes) {
    if (bytes.empty()) {
        return {};
    }
    std::string out(4 * ((bytes.size() + 2) / 3), '\0');
    const int n = EVP_EncodeBlock(reinterpret_cast<unsigned char*>(out.data()), bytes.data(),
                                  static_cast<int>(bytes.size()));
    out.resize(static_cast<std::size_t>(n));
    return out;
}

inline std::vector<std::uint8_t> base64_decode(std::string_view text) {
    if (text.empty()) {
        return {};
    }
    if (text.size() % 4 != 0) {
        throw CodecError("base64 length is not a multiple of 4");
    }
    std::vector<std::uint8_t> out(3 * (text.size() / 4));
    const int n = EVP_DecodeBlock(out.data(), reinterpret_cast<const unsigned char*>(text.data()),
                                  static_cast<int>(text.size()));
    if (n < 0) {
        throw CodecError("invalid base64 payload");
    }
    // EVP_DecodeBlock keeps the zero bytes produced by '=' padding.
    std::size_t padding = 0;
    if (text.back() == '=') {
        ++padding;
        if (text[text.size() - 2] == '=') {
            ++padding;
        }
    }
    out.resize(static_cast<std::size_t>(n) - padding);
    return out;
}

}  // namespace genaug
