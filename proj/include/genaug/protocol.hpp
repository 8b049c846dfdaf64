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

// Client side of the backend wire protocol: newline-delimited JSON over a
// child process's stdin/stdout, one request in flight per handle.
//
//   > {"op":"hello","role":"generator","version":1,"patch_size":96}
//   < {"op":"hello_ack","role":"generator","version":1}
//   > {"op":"generate","id":1,"patch_png":"...","mask_png":"..."}
//   < {"op":"result","id":1,"patch_png":"..."}
//   > {"op":"detect","id":2,"image_png":"..."}
//   < {"op":"detections","id":2,"items":[{"x_min":..,"confidence":..,"label":"car"}]}
//   < {"op":"error","id":2,"message":"..."}

#pragma once

#include <fcntl.h>
#include <poll.h>
#include <signal.h>
#include <sys/socket.h>
#include <sys/types.h>
#include <sys/wait.h>
#include <unistd.h>

#include <cerrno>
#include <chrono>
#include <cstdint>
#include <cstring>
#include <memory>
#include <mutex>
#include <string>
#include <string_view>
#include <thread>
#include <vector>

#include <nlohmann/json.hpp>

#include "genaug/backend.hpp"
#include "genaug/codec.hpp"

namespace genaug {

inline constexpr int kProtocolVersion = 1;

enum class BackendRole { Generator, Detector };

inline const char* to_string(BackendRole r) noexcept {
    return r == BackendRole::Generator ? "generator" : "detector";
}

struct ProtocolOptions {
    int patch_size = 96;
    std::chrono::milliseconds timeout{30000};
};

namespace detail {

/// `/bin/sh -c command` with stdin and stdout bound to one end of a socket
/// pair. stderr is inherited.
class ChildProcess {
  public:
    explicit ChildProcess(const std::string& command) {
        int sv[2];
        if (::socketpair(AF_UNIX, SOCK_STREAM | SOCK_CLOEXEC, 0, sv) != 0) {
            throw BackendError(BackendErrc::SpawnFailure,
                               std::string("socketpair: ") + std::strerror(errno));
        }
        pid_ = ::fork();
        if (pid_ < 0) {
            ::close(sv[0]);
            ::close(sv[1]);
            throw BackendError(BackendErrc::SpawnFailure, std::string("fork: ") + std::strerror(errno));
        }
        if (pid_ == 0) {
            ::dup2(sv[1], STDIN_FILENO);
            ::dup2(sv[1], STDOUT_FILENO);
            ::execl("/bin/sh", "sh", "-c", command.c_str(), static_cast<char*>(nullptr));
            ::_exit(127);
        }
        ::close(sv[1]);
        fd_ = sv[0];
    }

    ChildProcess(const ChildProcess&) = delete;
    ChildProcess& operator=(const ChildProcess&) = delete;

    ~ChildProcess() { terminate(); }

    void write_line(std::string_view line) {
        std::string buf(line);
        buf.push_back('\n');
        std::size_t sent = 0;
        while (sent < buf.size()) {
            const ssize_t n = ::send(fd_, buf.data() + sent, buf.size() - sent, MSG_NOSIGNAL);
            if (n < 0) {
                if (errno == EINTR) continue;
                throw BackendError(BackendErrc::BackendCrashed,
                                   std::string("write to backend failed: ") + std::strerror(errno));
            }
            sent += static_cast<std::size_t>(n);
        }
    }

    /// Next line without its terminator. Throws ResponseTimeout or
    /// BackendCrashed (EOF).
    std::string read_line(std::chrono::milliseconds timeout) {
        const auto deadline = std::chrono::steady_clock::now() + timeout;
        for (;;) {
            if (const auto nl = buffer_.find('\n'); nl != std::string::npos) {
                std::string line = buffer_.substr(0, nl);
                buffer_.erase(0, nl + 1);
                if (!line.empty() && line.back() == '\r') line.pop_back();
                return line;
            }
            const auto left = std::chrono::duration_cast<std::chrono::milliseconds>(
                deadline - std::chrono::steady_clock::now());
            if (left.count() <= 0) {
                throw BackendError(BackendErrc::ResponseTimeout,
                                   "no response within " + std::to_string(timeout.count()) + " ms");
            }
            pollfd pfd{fd_, POLLIN, 0};
            const int ready = ::poll(&pfd, 1, static_cast<int>(left.count()));
            if (ready < 0) {
                if (errno == EINTR) continue;
                throw BackendError(BackendErrc::BackendCrashed,
                                   std::string("poll: ") + std::strerror(errno));
            }
            if (ready == 0) continue;
            char chunk[65536];
            const ssize_t n = ::recv(fd_, chunk, sizeof(chunk), 0);
            if (n < 0) {
                if (errno == EINTR) continue;
                throw BackendError(BackendErrc::BackendCrashed,
                                   std::string("read: ") + std::strerror(errno));
            }
            if (n == 0) {
                throw BackendError(BackendErrc::BackendCrashed,
                                   "backend closed its output (" + exit_description() + ")");
            }
            buffer_.append(chunk, static_cast<std::size_t>(n));
        }
    }

    /// Closes the child's stdin, gives it a moment to exit, then kills it.
    void terminate() noexcept {
        if (fd_ >= 0) {
            ::shutdown(fd_, SHUT_WR);
        }
        if (pid_ > 0 && !reaped_) {
            for (int i = 0; i < 50 && !try_reap(); ++i) {
                std::this_thread::sleep_for(std::chrono::milliseconds(10));
            }
            if (!reaped_) {
                ::kill(pid_, SIGKILL);
                int status = 0;
                ::waitpid(pid_, &status, 0);
                status_ = status;
                reaped_ = true;
            }
        }
        if (fd_ >= 0) {
            ::close(fd_);
            fd_ = -1;
        }
    }

  private:
    bool try_reap() noexcept {
        int status = 0;
        const pid_t r = ::waitpid(pid_, &status, WNOHANG);
        if (r == pid_) {
            status_ = status;
            reaped_ = true;
        }
        return reaped_;
    }

    std::string exit_description() {
        for (int i = 0; i < 20 && !try_reap(); ++i) {
            std::this_thread::sleep_for(std::chrono::milliseconds(5));
        }
        if (!reaped_) return "still running";
        if (WIFEXITED(status_)) return "exit status " + std::to_string(WEXITSTATUS(status_));
        if (WIFSIGNALED(status_)) return "killed by signal " + std::to_string(WTERMSIG(status_));
        return "unknown status";
    }

    int fd_ = -1;
    pid_t pid_ = -1;
    int status_ = 0;
    bool reaped_ = false;
    std::string buffer_;
};

}  // namespace detail

/// One handshaken backend process. Requests are serialized by a mutex so the
/// channel never has more than one outstanding request.
class ProtocolChannel {
  public:
    using Json = nlohmann::ordered_json;

    ProtocolChannel(const std::string& command, BackendRole role, ProtocolOptions options)
        : role_(role), options_(options), child_(std::make_unique<detail::ChildProcess>(command)) {
        Json hello;
        hello["op"] = "hello";
        hello["role"] = to_string(role);
        hello["version"] = kProtocolVersion;
        hello["patch_size"] = options.patch_size;
        Json ack;
        try {
            child_->write_line(hello.dump());
            ack = parse(child_->read_line(options_.timeout));
        } catch (const BackendError& e) {
            if (e.code() == BackendErrc::BackendCrashed) {
                throw BackendError(BackendErrc::SpawnFailure,
                                   "'" + command + "' did not complete the handshake: " + e.what());
            }
            throw;
        }
        if (ack.value("op", "") != "hello_ack") {
            throw BackendError(BackendErrc::HandshakeMismatch, "expected hello_ack, got " + ack.dump());
        }
        if (!ack.contains("version") || ack["version"] != kProtocolVersion) {
            throw BackendError(BackendErrc::HandshakeMismatch,
                               "version: expected " + std::to_string(kProtocolVersion) + ", got " +
                                   ack.value("version", Json()).dump());
        }
        if (ack.value("role", "") != to_string(role)) {
            throw BackendError(BackendErrc::HandshakeMismatch,
                               std::string("role: expected ") + to_string(role) + ", got " +
                                   ack.value("role", Json()).dump());
        }
    }

    [[nodiscard]] BackendRole role() const noexcept { return role_; }
    [[nodiscard]] const ProtocolOptions& options() const noexcept { return options_; }

    /// Sends `body` with a fresh id and returns the matching reply.
    Json request(Json body) {
        std::lock_guard lock(mutex_);
        if (broken_) {
            throw BackendError(BackendErrc::BackendCrashed, "channel unusable after earlier failure");
        }
        const std::int64_t id = next_id_++;
        body["id"] = id;
        try {
            child_->write_line(body.dump());
            Json reply = parse(child_->read_line(options_.timeout));
            if (!reply.contains("id") || reply["id"] != id) {
                throw BackendError(BackendErrc::ProtocolError,
                                   "reply id does not echo request " + std::to_string(id));
            }
            if (reply.value("op", "") == "error") {
                throw BackendError(BackendErrc::RemoteError, reply.value("message", "(no message)"));
            }
            return reply;
        } catch (const BackendError& e) {
            if (e.code() != BackendErrc::RemoteError) {
                broken_ = true;
                child_->terminate();
            }
            throw;
        }
    }

  private:
    static Json parse(const std::string& line) {
        Json j = Json::parse(line, nullptr, false);
        if (j.is_discarded() || !j.is_object()) {
            throw BackendError(BackendErrc::ProtocolError, "reply is not a JSON object: " +
                                                               line.substr(0, 120));
        }
        return j;
    }

    BackendRole role_;
    ProtocolOptions options_;
    std::unique_ptr<detail::ChildProcess> child_;
    std::mutex mutex_;
    std::int64_t next_id_ = 1;
    bool broken_ = false;
};

/// Starts the command and performs the handshake for `role`.
inline std::unique_ptr<ProtocolChannel> spawn_protocol_backend(const std::string& command,
                                                               BackendRole role,
                                                               const ProtocolOptions& options = {}) {
    return std::make_unique<ProtocolChannel>(command, role, options);
}

class ProtocolGenerator final : public GeneratorBackend {
  public:
    explicit ProtocolGenerator(std::unique_ptr<ProtocolChannel> channel)
        : channel_(std::move(channel)) {
        if (!channel_ || channel_->role() != BackendRole::Generator) {
            throw BackendError(BackendErrc::WrongRole, "channel is not a generator");
        }
    }

    [[nodiscard]] GeneratorCapabilities capabilities() const override {
        return {channel_->options().patch_size, false};
    }

    GenerationResult fill(const MaskedPatch& masked, std::uint64_t /*seed*/) override {
        ProtocolChannel::Json req;
        req["op"] = "generate";
        req["id"] = 0;
        req["patch_png"] = base64_encode(encode_png(masked.pixels));
        req["mask_png"] = base64_encode(encode_png(masked.mask));
        const auto reply = channel_->request(std::move(req));
        if (reply.value("op", "") != "result" || !reply.contains("patch_png") ||
            !reply["patch_png"].is_string()) {
            throw BackendError(BackendErrc::ProtocolError, "expected a result reply");
        }
        Raster completed;
        try {
            completed = decode_png(base64_decode(reply["patch_png"].get<std::string>()), 3);
        } catch (const CodecError& e) {
            throw BackendError(BackendErrc::ProtocolError, e.what());
        }
        if (completed.width() != masked.size() || completed.height() != masked.size()) {
            throw BackendError(BackendErrc::ProtocolError,
                               "generated patch is " + std::to_string(completed.width()) + "x" +
                                   std::to_string(completed.height()) + ", expected " +
                                   std::to_string(masked.size()));
        }
        return GenerationResult(std::move(completed));
    }

  private:
    std::unique_ptr<ProtocolChannel> channel_;
};

class ProtocolDetector final : public DetectorBackend {
  public:
    explicit ProtocolDetector(std::unique_ptr<ProtocolChannel> channel)
        : channel_(std::move(channel)) {
        if (!channel_ || channel_->role() != BackendRole::Detector) {
            throw BackendError(BackendErrc::WrongRole, "channel is not a detector");
        }
    }

    [[nodiscard]] DetectorCapabilities capabilities() const override { return {0}; }

    /// Boxes are clipped to the image; boxes that vanish are dropped.
    std::vector<Detection> detect(const Raster& image) override {
        ProtocolChannel::Json req;
        req["op"] = "detect";
        req["id"] = 0;
        req["image_png"] = base64_encode(encode_png(image));
        const auto reply = channel_->request(std::move(req));
        if (reply.value("op", "") != "detections" || !reply.contains("items") ||
            !reply["items"].is_array()) {
            throw BackendError(BackendErrc::ProtocolError, "expected a detections reply");
        }
        std::vector<Detection> out;
        for (const auto& item : reply["items"]) {
            try {
                Detection d;
                d.bbox = {item.at("x_min").get<double>(), item.at("y_min").get<double>(),
                          item.at("x_max").get<double>(), item.at("y_max").get<double>()};
                d.confidence = item.at("confidence").get<double>();
                d.label = item.value("label", std::string("car"));
                if (!(d.confidence >= 0.0 && d.confidence <= 1.0)) {
                    throw BackendError(BackendErrc::ProtocolError, "confidence outside [0,1]");
                }
                d.bbox = clipped(d.bbox, image.width(), image.height());
                if (d.bbox.valid()) out.push_back(std::move(d));
            } catch (const nlohmann::json::exception& e) {
                throw BackendError(BackendErrc::ProtocolError,
                                   std::string("malformed detection item: ") + e.what());
            }
        }
        return out;
    }

  private:
    std::unique_ptr<ProtocolChannel> channel_;
};

/// `count` handshaken generator processes behind one thread-safe interface.
inline std::unique_ptr<PooledGenerator> spawn_generator_pool(const std::string& command,
                                                             std::size_t count,
                                                             const ProtocolOptions& options = {}) {
    std::vector<std::unique_ptr<GeneratorBackend>> handles;
    for (std::size_t i = 0; i < std::max<std::size_t>(1, count); ++i) {
        handles.push_back(std::make_unique<ProtocolGenerator>(
            spawn_protocol_backend(command, BackendRole::Generator, options)));
    }
    return std::make_unique<PooledGenerator>(std::move(handles));
}

inline std::unique_ptr<PooledDetector> spawn_detector_pool(const std::string& command,
                                                           std::size_t count,
                                                           const ProtocolOptions& options = {}) {
    std::vector<std::unique_ptr<DetectorBackend>> handles;
    for (std::size_t i = 0; i < std::max<std::size_t>(1, count); ++i) {
        handles.push_back(std::make_unique<ProtocolDetector>(
            spawn_protocol_backend(command, BackendRole::Detector, options)));
    }
    return std::make_unique<PooledDetector>(std::move(handles));
}

}  // namespace genaug
