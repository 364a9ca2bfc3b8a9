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


// Detection evaluation: IoU matching, precision/recall curves, and
// COCO-style average precision.
//
// AP for one class at one IoU threshold is the mean of the interpolated
// precision envelope sampled at the 101 recall values 0, 0.01, ..., 1. The
// envelope at recall r is the maximum precision over operating points with
// recall >= r (0 if there are none).

#pragma once

#include <array>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "json.hpp"

#include "notedetect/geometry.hpp"
#include "notedetect/labels.hpp"
#include "notedetect/voc.hpp"

namespace notedetect {

struct Detection {
  std::string image_id;
  ClassLabel label;
  BoundingBox box;
  double score = 0.0;

  friend bool operator==(const Detection&, const Detection&) = default;
};

enum class MatchFlag { kTruePositive, kFalsePositive, kIgnored };

struct MatchResult {
  // flags[i] belongs to the i-th prediction as passed in.
  std::vector<MatchFlag> flags;
  // Ground truths (non-difficult) that no prediction claimed.
  int false_negatives = 0;
  int num_ground_truths = 0;  // non-difficult only

  int true_positives() const;
  int false_positives() const;
};

// Processing order: descending score, ties by ascending xmin then ymin. Each
// prediction claims the unmatched non-difficult ground truth with the highest
// IoU >= threshold (ties by list order). Otherwise a prediction overlapping a
// difficult ground truth at IoU >= threshold is ignored; anything else is a
// false positive. All inputs must share one image and class.
MatchResult match_detections(std::span<const Detection> predictions,
                             std::span<const GroundTruthObject> ground_truths,
                             double iou_threshold);

// Order used by match_detections; exposed for pooling across images.
bool detection_rank_less(const Detection& a, const Detection& b);

struct PrPoint {
  double recall = 0.0;
  double precision = 0.0;

  friend bool operator==(const PrPoint&, const PrPoint&) = default;
};

inline constexpr int kRecallSamples = 101;

struct PRCurve {
  std::vector<PrPoint> points;
  std::array<double, kRecallSamples> envelope{};
  int num_ground_truths = 0;
  bool defined = false;  // false when there are no ground truths
};

// Recall grid value i / 100.
double recall_sample(int i);

// One operating point per flag (kIgnored entries are skipped).
PRCurve precision_recall_curve(std::span<const MatchFlag> ranked_flags, int num_ground_truths);

struct ScoredFlag {
  double score = 0.0;
  bool true_positive = false;
};

// Flags sorted by descending score. Equal scores are one threshold, so a run
// of ties contributes a single operating point at its end.
PRCurve precision_recall_curve(std::span<const ScoredFlag> ranked, int num_ground_truths);

// Mean of the 101-sample envelope; nullopt for an undefined curve.
std::optional<double> average_precision(const PRCurve& curve);

// Arithmetic mean. Throws ArgumentError on an empty list.
double mean_average_precision(std::span<const double> per_class);
// Undefined entries are excluded; nullopt when nothing is left.
std::optional<double> mean_average_precision(std::span<const std::optional<double>> per_class);

// 0.50, 0.55, ..., 0.95.
std::vector<double> default_iou_thresholds();

struct ThresholdEvaluation {
  double iou_threshold = 0.0;
  PRCurve curve;
  std::optional<double> ap;
};

struct ClassEvaluation {
  ClassLabel label = ClassLabel::from_id(0);
  int num_ground_truths = 0;  // non-difficult
  int num_detections = 0;
  std::vector<ThresholdEvaluation> thresholds;
  std::optional<double> ap;    // mean over the report's thresholds
  std::optional<double> ap50;
  std::optional<double> ap75;
};

struct EvaluationReport {
  std::vector<double> iou_thresholds;
  std::vector<ClassEvaluation> classes;  // one per label, id order
  std::optional<double> ap;
  std::optional<double> ap50;
  std::optional<double> ap75;
  // Same value as ap. Kept as its own field for the published table layout.
  std::optional<double> map;
  std::size_t num_images = 0;
  std::size_t num_ground_truths = 0;
  std::size_t num_detections = 0;
};

// Throws ArgumentError when a detection names an image not in the dataset or
// a threshold lies outside (0, 1].
EvaluationReport evaluate(const Dataset& ground_truth, std::span<const Detection> detections,
                          std::span<const double> iou_thresholds);
EvaluationReport evaluate(const Dataset& ground_truth, std::span<const Detection> detections);

nlohmann::json to_json(const EvaluationReport& report);

// Detections interchange: one line per detection,
// image_id<TAB>label<TAB>score<TAB>xmin<TAB>ymin<TAB>xmax<TAB>ymax
// in pixel coordinates. Blank lines and lines starting with '#' are skipped.
std::vector<Detection> parse_detections(std::string_view text);
std::string format_detections(std::span<const Detection> detections);

}  // namespace notedetect
