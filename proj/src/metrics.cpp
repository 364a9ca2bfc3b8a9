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


#include "notedetect/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <numeric>
#include <sstream>

#include "notedetect/errors.hpp"
#include "notedetect/io_util.hpp"

namespace notedetect {
namespace {

constexpr double kThresholdTolerance = 1e-12;

nlohmann::json optional_json(const std::optional<double>& v) {
  return v ? nlohmann::json(*v) : nlohmann::json(nullptr);
}

void fill_envelope(PRCurve& curve) {
  curve.envelope.fill(0.0);
  const auto& pts = curve.points;
  if (pts.empty()) return;
  // Suffix maxima over points in rank order; recall is non-decreasing along ranks.
  std::vector<double> suffix_max(pts.size());
  double running = 0.0;
  for (std::size_t i = pts.size(); i-- > 0;) {
    running = std::max(running, pts[i].precision);
    suffix_max[i] = running;
  }
  std::size_t first = 0;
  for (int s = 0; s < kRecallSamples; ++s) {
    const double r = recall_sample(s);
    while (first < pts.size() && pts[first].recall < r) ++first;
    curve.envelope[s] = first < pts.size() ? suffix_max[first] : 0.0;
  }
}

double mean_of(std::span<const double> values) {
  double sum = 0.0;
  for (double v : values) sum += v;
  return sum / static_cast<double>(values.size());
}

}  // namespace

int MatchResult::true_positives() const {
  return static_cast<int>(std::count(flags.begin(), flags.end(), MatchFlag::kTruePositive));
}

int MatchResult::false_positives() const {
  return static_cast<int>(std::count(flags.begin(), flags.end(), MatchFlag::kFalsePositive));
}

bool detection_rank_less(const Detection& a, const Detection& b) {
  if (a.score != b.score) return a.score > b.score;
  if (a.box.xmin != b.box.xmin) return a.box.xmin < b.box.xmin;
  return a.box.ymin < b.box.ymin;
}

MatchResult match_detections(std::span<const Detection> predictions,
                             std::span<const GroundTruthObject> ground_truths,
                             double iou_threshold) {
  MatchResult result;
  result.flags.assign(predictions.size(), MatchFlag::kFalsePositive);
  for (const auto& gt : ground_truths) {
    if (!gt.difficult) ++result.num_ground_truths;
  }

  std::vector<std::size_t> order(predictions.size());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](std::size_t i, std::size_t j) {
    return detection_rank_less(predictions[i], predictions[j]);
  });

  std::vector<bool> claimed(ground_truths.size(), false);
  int true_positives = 0;
  for (std::size_t i : order) {
    const BoundingBox& box = predictions[i].box;
    std::optional<std::size_t> best;
    double best_iou = 0.0;
    bool overlaps_difficult = false;
    for (std::size_t j = 0; j < ground_truths.size(); ++j) {
      const double v = iou(box, ground_truths[j].box);
      if (v < iou_threshold) continue;
      if (ground_truths[j].difficult) {
        overlaps_difficult = true;
      } else if (!claimed[j] && (!best || v > best_iou)) {
        best = j;
        best_iou = v;
      }
    }
    if (best) {
      claimed[*best] = true;
      result.flags[i] = MatchFlag::kTruePositive;
      ++true_positives;
    } else if (overlaps_difficult) {
      result.flags[i] = MatchFlag::kIgnored;
    }
  }
  result.false_negatives = result.num_ground_truths - true_positives;
  return result;
}

double recall_sample(int i) { return static_cast<double>(i) / 100.0; }

PRCurve precision_recall_curve(std::span<const MatchFlag> ranked_flags, int num_ground_truths) {
  PRCurve curve;
  curve.num_ground_truths = num_ground_truths;
  if (num_ground_truths <= 0) return curve;
  curve.defined = true;
  int tp = 0;
  int seen = 0;
  for (MatchFlag f : ranked_flags) {
    if (f == MatchFlag::kIgnored) continue;
    ++seen;
    if (f == MatchFlag::kTruePositive) ++tp;
    curve.points.push_back({static_cast<double>(tp) / num_ground_truths, static_cast<double>(tp) / seen});
  }
  fill_envelope(curve);
  return curve;
}

PRCurve precision_recall_curve(std::span<const ScoredFlag> ranked, int num_ground_truths) {
  PRCurve curve;
  curve.num_ground_truths = num_ground_truths;
  if (num_ground_truths <= 0) return curve;
  curve.defined = true;
  int tp = 0;
  int seen = 0;
  for (std::size_t i = 0; i < ranked.size(); ++i) {
    ++seen;
    if (ranked[i].true_positive) ++tp;
    if (i + 1 < ranked.size() && ranked[i + 1].score == ranked[i].score) continue;
    curve.points.push_back({static_cast<double>(tp) / num_ground_truths, static_cast<double>(tp) / seen});
  }
  fill_envelope(curve);
  return curve;
}

std::optional<double> average_precision(const PRCurve& curve) {
  if (!curve.defined) return std::nullopt;
  double sum = 0.0;
  for (double p : curve.envelope) sum += p;
  return sum / kRecallSamples;
}

double mean_average_precision(std::span<const double> per_class) {
  if (per_class.empty()) throw ArgumentError("mean_average_precision: empty class list");
  return mean_of(per_class);
}

std::optional<double> mean_average_precision(std::span<const std::optional<double>> per_class) {
  std::vector<double> defined;
  for (const auto& v : per_class) {
    if (v) defined.push_back(*v);
  }
  if (defined.empty()) return std::nullopt;
  return mean_of(defined);
}

std::vector<double> default_iou_thresholds() {
  std::vector<double> t;
  for (int i = 0; i < 10; ++i) t.push_back(static_cast<double>(50 + 5 * i) / 100.0);
  return t;
}

EvaluationReport evaluate(const Dataset& ground_truth, std::span<const Detection> detections,
                          std::span<const double> iou_thresholds) {
  if (iou_thresholds.empty()) throw ArgumentError("evaluate: no IoU thresholds");
  for (double t : iou_thresholds) {
    if (!(t > 0.0 && t <= 1.0)) throw ArgumentError("IoU thresholds must lie in (0, 1]");
  }

  std::map<std::string_view, std::size_t> image_index;
  for (std::size_t i = 0; i < ground_truth.records.size(); ++i) {
    image_index.emplace(ground_truth.records[i].image_id, i);
  }
  const std::size_t n_images = ground_truth.records.size();
  // [class][image] -> detections / ground truths
  std::vector<std::vector<std::vector<Detection>>> dets(
      ClassLabel::kCount, std::vector<std::vector<Detection>>(n_images));
  std::vector<std::vector<std::vector<GroundTruthObject>>> gts(
      ClassLabel::kCount, std::vector<std::vector<GroundTruthObject>>(n_images));

  for (const auto& d : detections) {
    auto it = image_index.find(d.image_id);
    if (it == image_index.end()) {
      throw ArgumentError("detection references unknown image_id '" + d.image_id + "'");
    }
    dets[d.label.id()][it->second].push_back(d);
  }
  EvaluationReport report;
  report.iou_thresholds.assign(iou_thresholds.begin(), iou_thresholds.end());
  report.num_images = n_images;
  report.num_detections = detections.size();
  for (std::size_t i = 0; i < n_images; ++i) {
    for (const auto& obj : ground_truth.records[i].objects) {
      gts[obj.label.id()][i].push_back(obj);
      ++report.num_ground_truths;
    }
  }

  auto curve_for = [&](int cls, double threshold) {
    std::vector<ScoredFlag> pooled;
    int n_gt = 0;
    for (std::size_t i = 0; i < n_images; ++i) {
      const auto& preds = dets[cls][i];
      const MatchResult m = match_detections(preds, gts[cls][i], threshold);
      n_gt += m.num_ground_truths;
      for (std::size_t k = 0; k < preds.size(); ++k) {
        if (m.flags[k] == MatchFlag::kIgnored) continue;
        pooled.push_back({preds[k].score, m.flags[k] == MatchFlag::kTruePositive});
      }
    }
    std::stable_sort(pooled.begin(), pooled.end(),
                     [](const ScoredFlag& a, const ScoredFlag& b) { return a.score > b.score; });
    return precision_recall_curve(pooled, n_gt);
  };

  std::vector<std::optional<double>> class_ap, class_ap50, class_ap75;
  for (const ClassLabel label : ClassLabel::all()) {
    const int cls = label.id();
    ClassEvaluation ce;
    ce.label = label;
    std::optional<double> at50, at75;
    std::vector<double> per_threshold;
    bool defined = true;
    for (double t : iou_thresholds) {
      ThresholdEvaluation te;
      te.iou_threshold = t;
      te.curve = curve_for(cls, t);
      te.ap = average_precision(te.curve);
      if (te.ap) {
        per_threshold.push_back(*te.ap);
      } else {
        defined = false;
      }
      if (std::abs(t - 0.50) < kThresholdTolerance) at50 = te.ap;
      if (std::abs(t - 0.75) < kThresholdTolerance) at75 = te.ap;
      ce.num_ground_truths = te.curve.num_ground_truths;
      ce.thresholds.push_back(std::move(te));
    }
    for (const auto& per_image : dets[cls]) ce.num_detections += static_cast<int>(per_image.size());
    if (defined) ce.ap = mean_of(per_threshold);
    ce.ap50 = at50 ? at50 : average_precision(curve_for(cls, 0.50));
    ce.ap75 = at75 ? at75 : average_precision(curve_for(cls, 0.75));
    class_ap.push_back(ce.ap);
    class_ap50.push_back(ce.ap50);
    class_ap75.push_back(ce.ap75);
    report.classes.push_back(std::move(ce));
  }
  report.ap = mean_average_precision(class_ap);
  report.ap50 = mean_average_precision(class_ap50);
  report.ap75 = mean_average_precision(class_ap75);
  report.map = report.ap;
  return report;
}

EvaluationReport evaluate(const Dataset& ground_truth, std::span<const Detection> detections) {
  const auto thresholds = default_iou_thresholds();
  return evaluate(ground_truth, detections, thresholds);
}

nlohmann::json to_json(const EvaluationReport& report) {
  nlohmann::json j;
  j["iou_thresholds"] = report.iou_thresholds;
  j["ap"] = optional_json(report.ap);
  j["ap50"] = optional_json(report.ap50);
  j["ap75"] = optional_json(report.ap75);
  j["map"] = optional_json(report.map);
  j["map_definition"] = "class mean of per-class AP averaged over iou_thresholds (same value as ap)";
  nlohmann::json per_class = nlohmann::json::object();
  nlohmann::json classes = nlohmann::json::array();
  for (const auto& ce : report.classes) {
    per_class[std::string(ce.label.name())] = optional_json(ce.ap);
    nlohmann::json c;
    c["id"] = ce.label.id();
    c["label"] = ce.label.name();
    c["num_ground_truths"] = ce.num_ground_truths;
    c["num_detections"] = ce.num_detections;
    c["ap"] = optional_json(ce.ap);
    c["ap50"] = optional_json(ce.ap50);
    c["ap75"] = optional_json(ce.ap75);
    nlohmann::json per_threshold = nlohmann::json::array();
    for (const auto& te : ce.thresholds) {
      per_threshold.push_back({{"iou_threshold", te.iou_threshold},
                               {"ap", optional_json(te.ap)},
                               {"envelope", te.curve.defined ? nlohmann::json(te.curve.envelope)
                                                             : nlohmann::json(nullptr)}});
    }
    c["per_threshold"] = std::move(per_threshold);
    classes.push_back(std::move(c));
  }
  j["per_class_ap"] = std::move(per_class);
  j["classes"] = std::move(classes);
  j["counts"] = {{"images", report.num_images},
                 {"ground_truths", report.num_ground_truths},
                 {"detections", report.num_detections}};
  return j;
}

std::vector<Detection> parse_detections(std::string_view text) {
  std::vector<Detection> out;
  int line_no = 0;
  for (std::string_view line : split(text, '\n')) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
    if (trim(line).empty() || line.front() == '#') continue;
    const auto fields = split(line, '\t');
    if (fields.size() != 7) {
      throw ParseError("detections: expected 7 tab-separated fields, got " + std::to_string(fields.size()),
                       line_no);
    }
    if (fields[0].empty()) throw ParseError("detections: empty image_id", line_no);
    auto label = ClassLabel::try_from_name(fields[1]);
    if (!label) throw ParseError("detections: unknown label '" + std::string(fields[1]) + "'", line_no);
    Detection d{std::string(fields[0]), *label, {}, 0.0};
    std::array<double, 5> v{};
    for (std::size_t k = 0; k < v.size(); ++k) {
      auto parsed = parse_double(fields[k + 2]);
      if (!parsed || !std::isfinite(*parsed)) {
        throw ParseError("detections: field " + std::to_string(k + 3) + " is not a number", line_no);
      }
      v[k] = *parsed;
    }
    d.score = v[0];
    if (d.score < 0.0 || d.score > 1.0) throw ParseError("detections: score outside [0, 1]", line_no);
    d.box = {v[1], v[2], v[3], v[4]};
    if (d.box.is_degenerate()) throw ParseError("detections: degenerate box", line_no);
    out.push_back(std::move(d));
  }
  return out;
}

std::string format_detections(std::span<const Detection> detections) {
  std::ostringstream out;
  for (const auto& d : detections) {
    out << d.image_id << '\t' << d.label.name() << '\t' << format_double(d.score) << '\t'
        << format_double(d.box.xmin) << '\t' << format_double(d.box.ymin) << '\t'
        << format_double(d.box.xmax) << '\t' << format_double(d.box.ymax) << '\n';
  }
  return out.str();
}

}  // namespace notedetect
