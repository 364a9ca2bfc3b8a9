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


// Detection pipeline around a pluggable backend:
// preprocess -> backend raw_detect -> postprocess (threshold, scale, NMS).

#pragma once

#include <array>
#include <filesystem>
#include <map>
#include <memory>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "notedetect/geometry.hpp"
#include "notedetect/image.hpp"
#include "notedetect/labels.hpp"
#include "notedetect/metrics.hpp"

namespace notedetect {

inline constexpr std::string_view kNoNotesMessage = "No currency notes identified";
inline constexpr double kDefaultScoreThreshold = 0.5;
inline constexpr double kDefaultNmsIou = 0.5;
inline constexpr int kDefaultInputSize = 448;

enum class PixelFormat {
  kRgb8,       // interleaved uint8 RGB
  kRgbFloat01  // planar float CHW, values / 255
};

struct BackendDescriptor {
  std::string name;
  std::string version;

  friend bool operator==(const BackendDescriptor&, const BackendDescriptor&) = default;
};

struct ModelInput {
  int size = 0;
  PixelFormat format = PixelFormat::kRgb8;
  Image rgb;                  // always filled: the resized image
  std::vector<float> planar;  // filled for kRgbFloat01
};

struct ScaleInfo {
  int source_width = 0;
  int source_height = 0;
  int input_size = 0;

  friend bool operator==(const ScaleInfo&, const ScaleInfo&) = default;
};

// Parallel lists; boxes are normalized (ymin, xmin, ymax, xmax).
struct RawDetections {
  std::vector<std::array<double, 4>> boxes;
  std::vector<int> class_ids;
  std::vector<double> scores;

  std::size_t size() const { return scores.size(); }
  bool empty() const { return scores.empty(); }
  // Throws InferenceError when lengths differ or values leave their ranges.
  void validate() const;

  friend bool operator==(const RawDetections&, const RawDetections&) = default;
};

// Instances are used by one caller at a time during raw_detect.
class DetectorBackend {
 public:
  virtual ~DetectorBackend() = default;

  virtual int input_size() const = 0;
  virtual PixelFormat pixel_format() const = 0;
  virtual BackendDescriptor descriptor() const = 0;

  // `image_id` identifies the frame for fixture-driven backends; model
  // backends ignore it. Throws InferenceError on failure.
  virtual RawDetections raw_detect(const ModelInput& input, std::string_view image_id) = 0;
};

// Rows of image_id<TAB>class_id<TAB>score<TAB>ymin<TAB>xmin<TAB>ymax<TAB>xmax
// (normalized), grouped by image in file order.
class StubFixture {
 public:
  // Throws ParseError carrying the line number.
  static StubFixture parse(std::string_view text);
  static StubFixture load(const std::filesystem::path& path);

  const RawDetections* find(std::string_view image_id) const;
  std::size_t row_count() const { return rows_; }
  // Digest of the fixture text, used as the backend version.
  const std::string& digest() const { return digest_; }

 private:
  std::map<std::string, RawDetections, std::less<>> by_image_;
  std::size_t rows_ = 0;
  std::string digest_;
};

// Fixture rows for image_id in file order; empty when the id is absent.
RawDetections stub_detect(const StubFixture& fixture, std::string_view image_id);

class StubBackend final : public DetectorBackend {
 public:
  explicit StubBackend(std::shared_ptr<const StubFixture> fixture, int input_size = kDefaultInputSize);

  int input_size() const override { return input_size_; }
  PixelFormat pixel_format() const override { return PixelFormat::kRgb8; }
  BackendDescriptor descriptor() const override;
  RawDetections raw_detect(const ModelInput& input, std::string_view image_id) override;

 private:
  std::shared_ptr<const StubFixture> fixture_;
  int input_size_;
};

// ONNX model run through OpenCV DNN. The model takes a 1x3xSxS float RGB
// tensor in [0, 1] and yields outputs named `boxes`, `classes`, `scores`
// (otherwise the first three outputs in that order), each flattened; boxes
// are normalized (ymin, xmin, ymax, xmax) quadruples.
class OnnxBackend final : public DetectorBackend {
 public:
  // Throws IoError if the file is missing, InferenceError if it does not load.
  OnnxBackend(const std::filesystem::path& model_path, int input_size = kDefaultInputSize);
  ~OnnxBackend() override;
  OnnxBackend(const OnnxBackend&) = delete;
  OnnxBackend& operator=(const OnnxBackend&) = delete;

  int input_size() const override { return input_size_; }
  PixelFormat pixel_format() const override { return PixelFormat::kRgbFloat01; }
  BackendDescriptor descriptor() const override { return descriptor_; }
  RawDetections raw_detect(const ModelInput& input, std::string_view image_id) override;

 private:
  struct Impl;
  std::unique_ptr<Impl> impl_;
  int input_size_;
  BackendDescriptor descriptor_;
};

// Digest-based descriptor of a model file without loading it.
BackendDescriptor describe_model_file(const std::filesystem::path& model_path);

// Plain bilinear square resize; no aspect preservation. Throws ArgumentError
// for an empty image or a non-3-channel image.
std::pair<ModelInput, ScaleInfo> preprocess(const Image& image, int input_size, PixelFormat format);

struct PostprocessResult {
  std::vector<Detection> detections;
  std::size_t unknown_class_dropped = 0;
};

// Score filter, normalized -> source pixels, clamp, per-class NMS, sort by
// descending score. Boxes that collapse after clamping are dropped.
PostprocessResult postprocess(const RawDetections& raw, const ScaleInfo& scale, double score_threshold,
                              double nms_iou, std::string_view image_id = {});

// Greedy: keep the best remaining, discard the rest with IoU > threshold.
std::vector<Detection> nms(std::vector<Detection> detections, double iou_threshold);

struct InferOptions {
  double score_threshold = kDefaultScoreThreshold;
  double nms_iou = kDefaultNmsIou;
};

struct Timing {
  double preprocess_ms = 0.0;
  double inference_ms = 0.0;
  double postprocess_ms = 0.0;
};

struct DetectionResult {
  std::vector<Detection> detections;
  std::optional<std::string> empty_message;  // set iff detections is empty
  int image_width = 0;
  int image_height = 0;
  std::size_t unknown_class_dropped = 0;
  Timing timing;
};

// Throws InferenceError (backend diagnostics included) on backend failure.
DetectionResult infer(DetectorBackend& backend, const Image& image, std::string_view image_id = {},
                      const InferOptions& options = {});

// The utterance for a label: its name verbatim.
std::string_view label_to_phrase(ClassLabel label);

}  // namespace notedetect
