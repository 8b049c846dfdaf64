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
#include <condition_variable>
#include <cstdint>
#include <memory>
#include <mutex>
#include <stdexcept>
#include <string>
#include <vector>

#include "genaug/metrics.hpp"
#include "genaug/patch.hpp"
#include "genaug/raster.hpp"

namespace genaug {

struct GeneratorCapabilities {
    int patch_size = 96;
    bool deterministic = false;
};

struct DetectorCapabilities {
    /// Smallest accepted image side; 0 means any.
    int min_input_side = 0;
};

/// Inpainting model seam. Implementations must be safe to call from several
/// threads at once (serializing internally if they need to).
class GeneratorBackend {
  public:
    virtual ~GeneratorBackend() = default;
    [[nodiscard]] virtual GeneratorCapabilities capabilities() const = 0;
    /// Completes the masked patch. `seed` drives stochastic generators; the
    /// returned raster is exactly masked.size() square.
    virtual GenerationResult fill(const MaskedPatch& masked, std::uint64_t seed) = 0;
};

/// Object detector seam; same thread-safety contract as GeneratorBackend.
class DetectorBackend {
  public:
    virtual ~DetectorBackend() = default;
    [[nodiscard]] virtual DetectorCapabilities capabilities() const = 0;
    /// Detections with confidence in [0,1] and boxes inside the image.
    virtual std::vector<Detection> detect(const Raster& image) = 0;
};

enum class BackendErrc {
    SpawnFailure,
    HandshakeMismatch,
    BackendCrashed,
    ResponseTimeout,
    ProtocolError,
    RemoteError,
    WrongRole,
};

inline const char* to_string(BackendErrc e) noexcept {
    switch (e) {
        case BackendErrc::SpawnFailure: return "SpawnFailure";
        case BackendErrc::HandshakeMismatch: return "HandshakeMismatch";
        case BackendErrc::BackendCrashed: return "BackendCrashed";
        case BackendErrc::ResponseTimeout: return "ResponseTimeout";
        case BackendErrc::ProtocolError: return "ProtocolError";
        case BackendErrc::RemoteError: return "RemoteError";
        case BackendErrc::WrongRole: return "WrongRole";
    }
    return "Unknown";
}

class BackendError : public std::runtime_error {
  public:
    BackendError(BackendErrc code, const std::string& detail)
        : std::runtime_error(std::string(to_string(code)) + ": " + detail), code_(code) {}
    [[nodiscard]] BackendErrc code() const noexcept { return code_; }

  private:
    BackendErrc code_;
};

/// Minimum IoU between a detection and the hole for the detection to count
/// as identifying the generated instance.
inline constexpr double kHoleIouGate = 0.25;

/// Detector confidence for the generated instance: the best confidence among
/// detections on the completed patch overlapping the hole with IoU >= 0.25,
/// or 0 when none qualify.
inline double score_generated(DetectorBackend& detector, const GenerationResult& result,
                              const MaskedPatch& masked) {
    if (result.completed().width() != masked.size()) {
        throw PatchError(PatchErrc::GeometryMismatch, "result does not match the masked patch");
    }
    double best = 0.0;
    for (const auto& d : detector.detect(result.completed())) {
        if (iou(d.bbox, masked.hole) >= kHoleIouGate) {
            best = std::max(best, d.confidence);
        }
    }
    return best;
}

namespace detail {

/// Free-list of exclusive handles; acquire blocks until one is idle.
template <class Handle>
class HandlePool {
  public:
    explicit HandlePool(std::vector<std::unique_ptr<Handle>> handles)
        : handles_(std::move(handles)) {
        if (handles_.empty()) {
            throw std::invalid_argument("backend pool needs at least one handle");
        }
        for (auto& h : handles_) {
            idle_.push_back(h.get());
        }
    }

    template <class Fn>
    auto with_handle(Fn&& fn) {
        Handle* h = nullptr;
        {
            std::unique_lock lock(mutex_);
            cv_.wait(lock, [&] { return !idle_.empty(); });
            h = idle_.back();
            idle_.pop_back();
        }
        struct Release {
            HandlePool* pool;
            Handle* handle;
            ~Release() {
                {
                    std::lock_guard lock(pool->mutex_);
                    pool->idle_.push_back(handle);
                }
                pool->cv_.notify_one();
            }
        } release{this, h};
        return fn(*h);
    }

    [[nodiscard]] const Handle& front() const { return *handles_.front(); }
    [[nodiscard]] std::size_t size() const noexcept { return handles_.size(); }

  private:
    std::vector<std::unique_ptr<Handle>> handles_;
    std::vector<Handle*> idle_;
    std::mutex mutex_;
    std::condition_variable cv_;
};

}  // namespace detail

/// Several generator handles behind one interface; concurrency equals the
/// number of handles.
class PooledGenerator final : public GeneratorBackend {
  public:
    explicit PooledGenerator(std::vector<std::unique_ptr<GeneratorBackend>> handles)
        : pool_(std::move(handles)) {}

    [[nodiscard]] GeneratorCapabilities capabilities() const override {
        return pool_.front().capabilities();
    }
    GenerationResult fill(const MaskedPatch& masked, std::uint64_t seed) override {
        return pool_.with_handle([&](GeneratorBackend& g) { return g.fill(masked, seed); });
    }
    [[nodiscard]] std::size_t size() const noexcept { return pool_.size(); }

  private:
    detail::HandlePool<GeneratorBackend> pool_;
};

class PooledDetector final : public DetectorBackend {
  public:
    explicit PooledDetector(std::vector<std::unique_ptr<DetectorBackend>> handles)
        : pool_(std::move(handles)) {}

    [[nodiscard]] DetectorCapabilities capabilities() const override {
        return pool_.front().capabilities();
    }
    std::vector<Detection> detect(const Raster& image) override {
        return pool_.with_handle([&](DetectorBackend& d) { return d.detect(image); });
    }
    [[nodiscard]] std::size_t size() const noexcept { return pool_.size(); }

  private:
    detail::HandlePool<DetectorBackend> pool_;
};

}  // namespace genaug
