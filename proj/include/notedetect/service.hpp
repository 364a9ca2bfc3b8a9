/*
 * Copyright 2026 The notedetect Authors.
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 *     https://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */


// HTTP front for the detector. DetectService holds the request semantics and
// is usable without a socket; HttpServer binds it to cpp-httplib.
//
//   POST /v1/detect   body: JPEG/PNG bytes; query: score_threshold, nms_iou,
//                     image_id (consulted only by fixture backends)
//   GET  /v1/labels   JSON array of the six label names
//   GET  /healthz     {"status": "ok" | "loading", "model", "uptime_s"}
//
// Errors are JSON objects {"error": <class>, "reason": <short reason>}.

#pragma once

#include <atomic>
#include <chrono>
#include <condition_variable>
#include <cstdint>
#include <deque>
#include <memory>
#include <mutex>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "json.hpp"
#include "notedetect/detector.hpp"

namespace httplib {
class Server;
}

namespace notedetect {

inline constexpr std::size_t kMaxPayloadBytes = 8u * 1024u * 1024u;

struct ServiceConfig {
  std::string address = "0.0.0.0";
  int port = 8080;
  std::size_t pool_size = 1;
  // "*" allows any origin; otherwise exact Origin matches are echoed back.
  std::vector<std::string> cors_origins = {"*"};
  std::size_t max_payload_bytes = kMaxPayloadBytes;
  InferOptions defaults;
};

// Fixed set of backend instances handed out first-come first-served.
class BackendPool {
 public:
  explicit BackendPool(std::vector<std::unique_ptr<DetectorBackend>> backends);

  class Lease {
   public:
    Lease(BackendPool& pool, std::size_t index) : pool_(&pool), index_(index) {}
    Lease(Lease&& other) noexcept : pool_(std::exchange(other.pool_, nullptr)), index_(other.index_) {}
    Lease(const Lease&) = delete;
    Lease& operator=(const Lease&) = delete;
    Lease& operator=(Lease&&) = delete;
    ~Lease();

    DetectorBackend& backend() const { return *pool_->backends_[index_]; }

   private:
    BackendPool* pool_;
    std::size_t index_;
  };

  // Blocks until a backend is free; waiters are served in arrival order.
  Lease acquire();

  std::size_t size() const { return backends_.size(); }
  const DetectorBackend& front() const { return *backends_.front(); }

 private:
  void release(std::size_t index);

  std::vector<std::unique_ptr<DetectorBackend>> backends_;
  std::mutex mutex_;
  std::condition_variable cv_;
  std::vector<std::size_t> free_;
  std::uint64_t next_ticket_ = 0;
  std::uint64_t serving_ticket_ = 0;
};

struct DetectParams {
  std::optional<double> score_threshold;
  std::optional<double> nms_iou;
  std::string image_id;
};

struct HttpReply {
  int status = 200;
  nlohmann::json body;
};

class DetectService {
 public:
  explicit DetectService(ServiceConfig config = {});

  // Switches health from "loading" to "ok". Throws ArgumentError when empty.
  void attach_backends(std::vector<std::unique_ptr<DetectorBackend>> backends);
  bool ready() const { return ready_.load(); }

  HttpReply handle_detect(std::span<const std::uint8_t> body, const DetectParams& params);
  HttpReply handle_labels() const;
  HttpReply handle_health() const;

  const ServiceConfig& config() const { return config_; }

 private:
  ServiceConfig config_;
  std::atomic<bool> ready_{false};
  std::shared_ptr<BackendPool> pool_;
  BackendDescriptor descriptor_;
  std::chrono::steady_clock::time_point started_;
};

nlohmann::json error_body(std::string_view error, std::string_view reason, std::string_view detail = {});

// The detection list exactly as the service serializes it.
nlohmann::json detections_to_json(std::span<const Detection> detections);
nlohmann::json detect_response_json(const DetectionResult& result, const BackendDescriptor& model,
                                    double total_ms);

class HttpServer {
 public:
  explicit HttpServer(DetectService& service);
  ~HttpServer();
  HttpServer(const HttpServer&) = delete;
  HttpServer& operator=(const HttpServer&) = delete;

  // Port 0 picks an ephemeral port; returns the bound port. Throws IoError.
  int bind(const std::string& address, int port);
  // Blocks until stop().
  void listen_after_bind();
  // Returns once listen_after_bind is accepting connections.
  void wait_until_ready() const;
  // Safe from any thread, also while listen_after_bind is still starting.
  void stop();

 private:
  DetectService& service_;
  std::unique_ptr<httplib::Server> server_;
  std::atomic<bool> listening_{false};
};

}  // namespace notedetect
