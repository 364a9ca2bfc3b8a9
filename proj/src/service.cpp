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


#include "notedetect/service.hpp"

#include <algorithm>

#include "httplib.h"
#include "notedetect/errors.hpp"
#include "notedetect/io_util.hpp"

namespace notedetect {
namespace {

using Clock = std::chrono::steady_clock;

nlohmann::json box_json(const BoundingBox& b) {
  return {{"xmin", b.xmin}, {"ymin", b.ymin}, {"xmax", b.xmax}, {"ymax", b.ymax}};
}

bool in_unit(double v) { return v >= 0.0 && v <= 1.0; }

}  // namespace

BackendPool::BackendPool(std::vector<std::unique_ptr<DetectorBackend>> backends)
    : backends_(std::move(backends)) {
  if (backends_.empty()) throw ArgumentError("backend pool needs at least one backend");
  for (std::size_t i = backends_.size(); i-- > 0;) {
    if (!backends_[i]) throw ArgumentError("backend pool: null backend");
    free_.push_back(i);
  }
}

BackendPool::Lease::~Lease() {
  if (pool_) pool_->release(index_);
}

BackendPool::Lease BackendPool::acquire() {
  std::unique_lock lock(mutex_);
  const std::uint64_t ticket = next_ticket_++;
  cv_.wait(lock, [&] { return ticket == serving_ticket_ && !free_.empty(); });
  ++serving_ticket_;
  const std::size_t index = free_.back();
  free_.pop_back();
  lock.unlock();
  cv_.notify_all();
  return Lease(*this, index);
}

void BackendPool::release(std::size_t index) {
  {
    std::lock_guard lock(mutex_);
    free_.push_back(index);
  }
  cv_.notify_all();
}

DetectService::DetectService(ServiceConfig config)
    : config_(std::move(config)), started_(Clock::now()) {}

void DetectService::attach_backends(std::vector<std::unique_ptr<DetectorBackend>> backends) {
  auto pool = std::make_shared<BackendPool>(std::move(backends));
  descriptor_ = pool->front().descriptor();
  pool_ = std::move(pool);
  ready_.store(true);
}

nlohmann::json error_body(std::string_view error, std::string_view reason, std::string_view detail) {
  nlohmann::json j = {{"error", error}, {"reason", reason}};
  if (!detail.empty()) j["detail"] = detail;
  return j;
}

nlohmann::json detections_to_json(std::span<const Detection> detections) {
  nlohmann::json arr = nlohmann::json::array();
  for (const auto& d : detections) {
    arr.push_back({{"label", d.label.name()},
                   {"class_id", d.label.id()},
                   {"score", d.score},
                   {"box", box_json(d.box)}});
  }
  return arr;
}

nlohmann::json detect_response_json(const DetectionResult& result, const BackendDescriptor& model,
                                    double total_ms) {
  nlohmann::json j;
  j["detections"] = detections_to_json(result.detections);
  j["image"] = {{"width", result.image_width}, {"height", result.image_height}};
  j["model"] = {{"name", model.name}, {"version", model.version}};
  if (result.empty_message) j["message"] = *result.empty_message;
  j["timing"] = {{"preprocess_ms", result.timing.preprocess_ms},
                 {"inference_ms", result.timing.inference_ms},
                 {"postprocess_ms", result.timing.postprocess_ms},
                 {"total_ms", total_ms}};
  return j;
}

HttpReply DetectService::handle_detect(std::span<const std::uint8_t> body, const DetectParams& params) {
  const auto start = Clock::now();
  if (!ready()) return {503, error_body("unavailable", "model loading")};
  if (body.size() > config_.max_payload_bytes) {
    return {413, error_body("payload_too_large", "payload too large",
                            std::to_string(body.size()) + " bytes exceeds " +
                                std::to_string(config_.max_payload_bytes))};
  }
  InferOptions options = config_.defaults;
  if (params.score_threshold) {
    if (!in_unit(*params.score_threshold)) return {400, error_body("bad_request", "bad parameter", "score_threshold")};
    options.score_threshold = *params.score_threshold;
  }
  if (params.nms_iou) {
    if (!in_unit(*params.nms_iou)) return {400, error_body("bad_request", "bad parameter", "nms_iou")};
    options.nms_iou = *params.nms_iou;
  }

  Image image;
  try {
    image = decode_image(body);
  } catch (const ImageDecodeError& e) {
    return {400, error_body("bad_request", "bad image", e.what())};
  }

  DetectionResult result;
  try {
    auto lease = pool_->acquire();
    result = infer(lease.backend(), image, params.image_id, options);
  } catch (const std::exception& e) {
    return {500, error_body("internal", "inference failed", e.what())};
  }
  const double total_ms = std::chrono::duration<double, std::milli>(Clock::now() - start).count();
  return {200, detect_response_json(result, descriptor_, total_ms)};
}

HttpReply DetectService::handle_labels() const {
  nlohmann::json arr = nlohmann::json::array();
  for (const ClassLabel label : ClassLabel::all()) arr.push_back(label.name());
  return {200, arr};
}

HttpReply DetectService::handle_health() const {
  const double uptime = std::chrono::duration<double>(Clock::now() - started_).count();
  nlohmann::json j;
  if (ready()) {
    j["status"] = "ok";
    j["model"] = {{"name", descriptor_.name}, {"version", descriptor_.version}};
  } else {
    j["status"] = "loading";
    j["model"] = nullptr;
  }
  j["uptime_s"] = uptime;
  return {200, j};
}

HttpServer::HttpServer(DetectService& service)
    : service_(service), server_(std::make_unique<httplib::Server>()) {
  auto& srv = *server_;
  const auto& origins = service_.config().cors_origins;

  const auto apply_cors = [origins](const httplib::Request& req, httplib::Response& res) {
    const bool any = std::find(origins.begin(), origins.end(), "*") != origins.end();
    const std::string origin = req.get_header_value("Origin");
    if (any) {
      res.set_header("Access-Control-Allow-Origin", "*");
    } else if (!origin.empty() && std::find(origins.begin(), origins.end(), origin) != origins.end()) {
      res.set_header("Access-Control-Allow-Origin", origin);
      res.set_header("Vary", "Origin");
    }
  };
  const auto send = [apply_cors](const httplib::Request& req, httplib::Response& res, const HttpReply& reply) {
    apply_cors(req, res);
    res.status = reply.status;
    res.set_content(reply.body.dump(), "application/json");
  };

  // Leave headroom above the service limit so oversize bodies reach
  // handle_detect and get the JSON 413.
  srv.set_payload_max_length(service_.config().max_payload_bytes * 4);

  srv.Post("/v1/detect", [this, send](const httplib::Request& req, httplib::Response& res) {
    DetectParams params;
    for (const char* key : {"score_threshold", "nms_iou"}) {
      if (!req.has_param(key)) continue;
      auto v = parse_double(req.get_param_value(key));
      if (!v) {
        send(req, res, {400, error_body("bad_request", "bad parameter", key)});
        return;
      }
      (std::string_view(key) == "score_threshold" ? params.score_threshold : params.nms_iou) = *v;
    }
    if (req.has_param("image_id")) params.image_id = req.get_param_value("image_id");
    const auto* data = reinterpret_cast<const std::uint8_t*>(req.body.data());
    send(req, res, service_.handle_detect({data, req.body.size()}, params));
  });
  srv.Get("/v1/labels", [this, send](const httplib::Request& req, httplib::Response& res) {
    send(req, res, service_.handle_labels());
  });
  srv.Get("/healthz", [this, send](const httplib::Request& req, httplib::Response& res) {
    send(req, res, service_.handle_health());
  });
  srv.Options(R"(/.*)", [apply_cors](const httplib::Request& req, httplib::Response& res) {
    apply_cors(req, res);
    res.set_header("Access-Control-Allow-Methods", "GET, POST, OPTIONS");
    res.set_header("Access-Control-Allow-Headers", "Content-Type");
    res.status = 204;
  });
  srv.set_error_handler([apply_cors](const httplib::Request& req, httplib::Response& res) {
    if (!res.body.empty()) return;
    apply_cors(req, res);
    const std::string reason = res.status == 413 ? "payload too large"
                               : res.status == 404 ? "not found"
                                                   : httplib::status_message(res.status);
    res.set_content(error_body("http_" + std::to_string(res.status), reason).dump(), "application/json");
  });
}

HttpServer::~HttpServer() { stop(); }

int HttpServer::bind(const std::string& address, int port) {
  int bound = port;
  if (port == 0) {
    bound = server_->bind_to_any_port(address);
  } else if (!server_->bind_to_port(address, port)) {
    bound = -1;
  }
  if (bound <= 0) throw IoError("cannot bind " + address + ":" + std::to_string(port));
  return bound;
}

void HttpServer::listen_after_bind() {
  listening_.store(true);
  server_->listen_after_bind();
}

void HttpServer::wait_until_ready() const { server_->wait_until_ready(); }

void HttpServer::stop() {
  if (!server_) return;
  if (listening_.load()) server_->wait_until_ready();
  server_->stop();
}

}  // namespace notedetect
