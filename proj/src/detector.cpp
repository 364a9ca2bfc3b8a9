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


#include "notedetect/detector.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>

#include <opencv2/core.hpp>
#include <opencv2/dnn.hpp>

#include "notedetect/augment.hpp"
#include "notedetect/errors.hpp"
#include "notedetect/io_util.hpp"

namespace notedetect {
namespace fs = std::filesystem;

namespace {

using Clock = std::chrono::steady_clock;

double elapsed_ms(Clock::time_point since) {
  return std::chrono::duration<double, std::milli>(Clock::now() - since).count();
}

bool in_unit(double v) { return std::isfinite(v) && v >= 0.0 && v <= 1.0; }

}  // namespace

void RawDetections::validate() const {
  if (boxes.size() != scores.size() || class_ids.size() != scores.size()) {
    throw InferenceError("raw detections: list lengths differ (boxes " + std::to_string(boxes.size()) +
                         ", classes " + std::to_string(class_ids.size()) + ", scores " +
                         std::to_string(scores.size()) + ")");
  }
  for (std::size_t i = 0; i < scores.size(); ++i) {
    const auto& b = boxes[i];
    if (!in_unit(scores[i])) throw InferenceError("raw detections: score outside [0, 1]");
    if (!std::all_of(b.begin(), b.end(), in_unit)) {
      throw InferenceError("raw detections: box coordinate outside [0, 1]");
    }
    if (b[0] > b[2] || b[1] > b[3]) throw InferenceError("raw detections: inverted box");
  }
}

StubFixture StubFixture::parse(std::string_view text) {
  StubFixture fixture;
  fixture.digest_ = hex64(fnv1a64(text));
  int line_no = 0;
  for (std::string_view line : split(text, '\n')) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
    if (trim(line).empty() || line.front() == '#') continue;
    const auto fields = split(line, '\t');
    if (fields.size() != 7) {
      throw ParseError("stub fixture: expected 7 tab-separated fields, got " + std::to_string(fields.size()),
                       line_no);
    }
    if (fields[0].empty()) throw ParseError("stub fixture: empty image_id", line_no);
    auto class_id = parse_integer(fields[1]);
    if (!class_id) throw ParseError("stub fixture: class_id is not an integer", line_no);
    std::array<double, 5> v{};
    for (std::size_t k = 0; k < v.size(); ++k) {
      auto parsed = parse_double(fields[k + 2]);
      if (!parsed || !std::isfinite(*parsed)) {
        throw ParseError("stub fixture: field " + std::to_string(k + 3) + " is not a number", line_no);
      }
      v[k] = *parsed;
    }
    if (!in_unit(v[0])) throw ParseError("stub fixture: score outside [0, 1]", line_no);
    for (std::size_t k = 1; k < 5; ++k) {
      if (!in_unit(v[k])) throw ParseError("stub fixture: coordinate outside [0, 1]", line_no);
    }
    if (v[1] > v[3] || v[2] > v[4]) throw ParseError("stub fixture: inverted box", line_no);

    auto& raw = fixture.by_image_[std::string(fields[0])];
    raw.boxes.push_back({v[1], v[2], v[3], v[4]});
    raw.class_ids.push_back(static_cast<int>(*class_id));
    raw.scores.push_back(v[0]);
    ++fixture.rows_;
  }
  return fixture;
}

StubFixture StubFixture::load(const fs::path& path) {
  const std::string text = read_text_file(path);
  try {
    return parse(text);
  } catch (const ParseError& e) {
    throw ParseError(path.filename().string() + ": " + e.message(), e.line());
  }
}

const RawDetections* StubFixture::find(std::string_view image_id) const {
  auto it = by_image_.find(image_id);
  return it == by_image_.end() ? nullptr : &it->second;
}

RawDetections stub_detect(const StubFixture& fixture, std::string_view image_id) {
  if (const RawDetections* raw = fixture.find(image_id)) return *raw;
  return {};
}

StubBackend::StubBackend(std::shared_ptr<const StubFixture> fixture, int input_size)
    : fixture_(std::move(fixture)), input_size_(input_size) {
  if (!fixture_) throw ArgumentError("StubBackend: null fixture");
  if (input_size_ < 1) throw ArgumentError("StubBackend: input size must be positive");
}

BackendDescriptor StubBackend::descriptor() const { return {"stub", fixture_->digest()}; }

RawDetections StubBackend::raw_detect(const ModelInput&, std::string_view image_id) {
  return stub_detect(*fixture_, image_id);
}

struct OnnxBackend::Impl {
  cv::dnn::Net net;
  std::vector<std::string> output_names;
};

BackendDescriptor describe_model_file(const fs::path& model_path) {
  const auto bytes = read_binary_file(model_path);
  return {model_path.stem().string(), "fnv1a64:" + hex64(fnv1a64(bytes))};
}

OnnxBackend::OnnxBackend(const fs::path& model_path, int input_size)
    : impl_(std::make_unique<Impl>()), input_size_(input_size) {
  if (input_size_ < 1) throw ArgumentError("OnnxBackend: input size must be positive");
  descriptor_ = describe_model_file(model_path);
  try {
    impl_->net = cv::dnn::readNetFromONNX(model_path.string());
    impl_->output_names = impl_->net.getUnconnectedOutLayersNames();
  } catch (const cv::Exception& e) {
    throw InferenceError("cannot load model " + model_path.string() + ": " + e.what());
  }
  if (impl_->net.empty() || impl_->output_names.size() < 3) {
    throw InferenceError("model " + model_path.string() + " must expose boxes, classes and scores outputs");
  }
}

OnnxBackend::~OnnxBackend() = default;

RawDetections OnnxBackend::raw_detect(const ModelInput& input, std::string_view) {
  if (input.format != PixelFormat::kRgbFloat01 || input.size != input_size_) {
    throw InferenceError("OnnxBackend: input must be float RGB at the declared size");
  }
  const int dims[] = {1, 3, input.size, input.size};
  cv::Mat blob(4, dims, CV_32F, const_cast<float*>(input.planar.data()));

  std::vector<cv::Mat> outputs;
  try {
    impl_->net.setInput(blob);
    impl_->net.forward(outputs, impl_->output_names);
  } catch (const cv::Exception& e) {
    throw InferenceError(std::string("model forward pass failed: ") + e.what());
  }

  const auto& names = impl_->output_names;
  auto index_of = [&](std::string_view wanted, std::size_t fallback) {
    for (std::size_t i = 0; i < names.size(); ++i) {
      if (names[i] == wanted) return i;
    }
    return fallback;
  };
  const cv::Mat boxes = outputs[index_of("boxes", 0)];
  const cv::Mat classes = outputs[index_of("classes", 1)];
  const cv::Mat scores = outputs[index_of("scores", 2)];
  for (const cv::Mat* m : {&boxes, &classes, &scores}) {
    if (m->depth() != CV_32F) throw InferenceError("model outputs must be float32");
  }
  std::size_t n = scores.total();
  if (boxes.total() != 4 * n || classes.total() != n) {
    throw InferenceError("model outputs disagree in length (boxes " + std::to_string(boxes.total()) +
                         ", classes " + std::to_string(classes.total()) + ", scores " +
                         std::to_string(n) + ")");
  }
  const std::size_t count_index = index_of("num_detections", names.size());
  if (count_index < outputs.size() && outputs[count_index].total() >= 1) {
    const float reported = outputs[count_index].ptr<float>()[0];
    if (reported >= 0 && reported < static_cast<float>(n)) n = static_cast<std::size_t>(reported);
  }

  const float* b = boxes.ptr<float>();
  const float* c = classes.ptr<float>();
  const float* s = scores.ptr<float>();
  RawDetections raw;
  for (std::size_t i = 0; i < n; ++i) {
    std::array<double, 4> box{};
    for (int k = 0; k < 4; ++k) box[k] = std::clamp(static_cast<double>(b[4 * i + k]), 0.0, 1.0);
    if (!std::isfinite(s[i]) || !std::isfinite(c[i])) throw InferenceError("model produced non-finite output");
    raw.boxes.push_back(box);
    raw.class_ids.push_back(static_cast<int>(std::lround(c[i])));
    raw.scores.push_back(std::clamp(static_cast<double>(s[i]), 0.0, 1.0));
  }
  return raw;
}

std::pair<ModelInput, ScaleInfo> preprocess(const Image& image, int input_size, PixelFormat format) {
  if (image.empty()) throw ArgumentError("preprocess: empty image");
  if (image.channels != 3) throw ArgumentError("preprocess: expected a 3-channel image");
  if (input_size < 1) throw ArgumentError("preprocess: input size must be positive");

  ModelInput input;
  input.size = input_size;
  input.format = format;
  const auto scale = AffineTransform<double>::from_coefficients(
      static_cast<double>(input_size) / image.width, 0.0, 0.0,
      0.0, static_cast<double>(input_size) / image.height, 0.0);
  input.rgb = (image.width == input_size && image.height == input_size)
                  ? image
                  : resample_image(image, scale, input_size, input_size);
  if (format == PixelFormat::kRgbFloat01) {
    const std::size_t plane = static_cast<std::size_t>(input_size) * input_size;
    input.planar.resize(plane * 3);
    for (int y = 0; y < input_size; ++y) {
      for (int x = 0; x < input_size; ++x) {
        for (int ch = 0; ch < 3; ++ch) {
          input.planar[ch * plane + static_cast<std::size_t>(y) * input_size + x] =
              static_cast<float>(input.rgb.at(x, y, ch)) / 255.0f;
        }
      }
    }
  }
  return {std::move(input), ScaleInfo{image.width, image.height, input_size}};
}

std::vector<Detection> nms(std::vector<Detection> detections, double iou_threshold) {
  std::stable_sort(detections.begin(), detections.end(),
                   [](const Detection& a, const Detection& b) { return a.score > b.score; });
  std::vector<Detection> kept;
  std::vector<bool> removed(detections.size(), false);
  for (std::size_t i = 0; i < detections.size(); ++i) {
    if (removed[i]) continue;
    kept.push_back(detections[i]);
    for (std::size_t j = i + 1; j < detections.size(); ++j) {
      if (!removed[j] && iou(detections[i].box, detections[j].box) > iou_threshold) removed[j] = true;
    }
  }
  return kept;
}

PostprocessResult postprocess(const RawDetections& raw, const ScaleInfo& scale, double score_threshold,
                              double nms_iou, std::string_view image_id) {
  raw.validate();
  PostprocessResult result;
  std::array<std::vector<Detection>, ClassLabel::kCount> per_class;
  const double w = scale.source_width;
  const double h = scale.source_height;
  for (std::size_t i = 0; i < raw.size(); ++i) {
    if (raw.scores[i] < score_threshold) continue;
    auto label = ClassLabel::try_from_id(raw.class_ids[i]);
    if (!label) {
      ++result.unknown_class_dropped;
      continue;
    }
    const auto& b = raw.boxes[i];
    BoundingBox box{std::clamp(b[1] * w, 0.0, w), std::clamp(b[0] * h, 0.0, h),
                    std::clamp(b[3] * w, 0.0, w), std::clamp(b[2] * h, 0.0, h)};
    if (box.is_degenerate()) continue;
    per_class[label->id()].push_back({std::string(image_id), *label, box, raw.scores[i]});
  }
  for (auto& group : per_class) {
    auto kept = nms(std::move(group), nms_iou);
    result.detections.insert(result.detections.end(), kept.begin(), kept.end());
  }
  std::stable_sort(result.detections.begin(), result.detections.end(),
                   [](const Detection& a, const Detection& b) { return a.score > b.score; });
  return result;
}

DetectionResult infer(DetectorBackend& backend, const Image& image, std::string_view image_id,
                      const InferOptions& options) {
  DetectionResult result;
  auto start = Clock::now();
  auto [input, scale] = preprocess(image, backend.input_size(), backend.pixel_format());
  result.timing.preprocess_ms = elapsed_ms(start);

  start = Clock::now();
  RawDetections raw;
  try {
    raw = backend.raw_detect(input, image_id);
    raw.validate();
  } catch (const InferenceError&) {
    throw;
  } catch (const std::exception& e) {
    throw InferenceError("backend '" + backend.descriptor().name + "' failed: " + e.what());
  }
  result.timing.inference_ms = elapsed_ms(start);

  start = Clock::now();
  auto post = postprocess(raw, scale, options.score_threshold, options.nms_iou, image_id);
  result.timing.postprocess_ms = elapsed_ms(start);

  result.detections = std::move(post.detections);
  result.unknown_class_dropped = post.unknown_class_dropped;
  result.image_width = image.width;
  result.image_height = image.height;
  if (result.detections.empty()) result.empty_message = std::string(kNoNotesMessage);
  return result;
}

std::string_view label_to_phrase(ClassLabel label) { return label.name(); }

}  // namespace notedetect
