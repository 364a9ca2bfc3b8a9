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


#include "ap_oracle.hpp"

#include <algorithm>
#include <set>

namespace notedetect::testing {
namespace {

double box_iou(const BoundingBox& a, const BoundingBox& b) {
  const double w = std::max(0.0, std::min(a.xmax, b.xmax) - std::max(a.xmin, b.xmin));
  const double h = std::max(0.0, std::min(a.ymax, b.ymax) - std::max(a.ymin, b.ymin));
  const double inter = w * h;
  const double uni = (a.xmax - a.xmin) * (a.ymax - a.ymin) + (b.xmax - b.xmin) * (b.ymax - b.ymin) - inter;
  return uni > 0 ? inter / uni : 0.0;
}

struct Counts {
  int tp = 0;
  int fp = 0;
};

// Greedy PASCAL-style matching of the detections kept at one score cut.
Counts match_image(std::vector<Detection> preds, const std::vector<GroundTruthObject>& gts, double t) {
  std::sort(preds.begin(), preds.end(), [](const Detection& a, const Detection& b) {
    if (a.score != b.score) return a.score > b.score;
    if (a.box.xmin != b.box.xmin) return a.box.xmin < b.box.xmin;
    return a.box.ymin < b.box.ymin;
  });
  std::vector<char> used(gts.size(), 0);
  Counts c;
  for (const auto& p : preds) {
    int best = -1;
    double best_v = -1;
    bool hits_difficult = false;
    for (std::size_t j = 0; j < gts.size(); ++j) {
      const double v = box_iou(p.box, gts[j].box);
      if (v < t) continue;
      if (gts[j].difficult) {
        hits_difficult = true;
        continue;
      }
      if (!used[j] && v > best_v) {
        best = static_cast<int>(j);
        best_v = v;
      }
    }
    if (best >= 0) {
      used[best] = 1;
      ++c.tp;
    } else if (!hits_difficult) {
      ++c.fp;
    }
  }
  return c;
}

std::optional<double> class_ap(const Dataset& d, const std::vector<Detection>& dets, int cls, double t) {
  int n_gt = 0;
  for (const auto& r : d.records) {
    for (const auto& o : r.objects) n_gt += (o.label.id() == cls && !o.difficult);
  }
  if (n_gt == 0) return std::nullopt;

  std::set<double, std::greater<>> cuts;
  for (const auto& det : dets) {
    if (det.label.id() == cls) cuts.insert(det.score);
  }
  struct Point {
    int tp;
    double precision;
  };
  std::vector<Point> points;
  for (double cut : cuts) {
    Counts total;
    for (const auto& r : d.records) {
      std::vector<Detection> kept;
      for (const auto& det : dets) {
        if (det.label.id() == cls && det.image_id == r.image_id && det.score >= cut) kept.push_back(det);
      }
      std::vector<GroundTruthObject> gts;
      for (const auto& o : r.objects) {
        if (o.label.id() == cls) gts.push_back(o);
      }
      const Counts c = match_image(kept, gts, t);
      total.tp += c.tp;
      total.fp += c.fp;
    }
    if (total.tp + total.fp == 0) continue;
    points.push_back({total.tp, static_cast<double>(total.tp) / (total.tp + total.fp)});
  }

  double sum = 0;
  for (int i = 0; i <= 100; ++i) {
    double best = 0;
    for (const auto& p : points) {
      if (p.tp * 100 >= i * n_gt) best = std::max(best, p.precision);
    }
    sum += best;
  }
  return sum / 101;
}

std::optional<double> mean_defined(const std::vector<std::optional<double>>& v) {
  double sum = 0;
  int n = 0;
  for (const auto& x : v) {
    if (x) {
      sum += *x;
      ++n;
    }
  }
  if (n == 0) return std::nullopt;
  return sum / n;
}

}  // namespace

OracleReport oracle_evaluate(const Dataset& ground_truth, const std::vector<Detection>& detections,
                             const std::vector<double>& iou_thresholds) {
  OracleReport out;
  std::vector<std::optional<double>> at50, at75;
  for (int cls = 0; cls < ClassLabel::kCount; ++cls) {
    std::vector<double> aps;
    bool defined = true;
    for (double t : iou_thresholds) {
      const auto v = class_ap(ground_truth, detections, cls, t);
      if (!v) {
        defined = false;
        break;
      }
      aps.push_back(*v);
    }
    if (defined) {
      double s = 0;
      for (double v : aps) s += v;
      out.per_class.push_back(s / aps.size());
    } else {
      out.per_class.push_back(std::nullopt);
    }
    at50.push_back(class_ap(ground_truth, detections, cls, 0.5));
    at75.push_back(class_ap(ground_truth, detections, cls, 0.75));
  }
  out.ap = mean_defined(out.per_class);
  out.ap50 = mean_defined(at50);
  out.ap75 = mean_defined(at75);
  return out;
}

EvaluationInstance random_instance(std::mt19937_64& rng) {
  std::uniform_int_distribution<int> n_images(1, 5);
  std::uniform_int_distribution<int> n_gt(0, 4);
  std::uniform_int_distribution<int> n_det(0, 6);
  std::uniform_int_distribution<int> label(0, 2);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  std::normal_distribution<double> jitter(0.0, 6.0);
  const bool quantized = unit(rng) < 0.5;

  EvaluationInstance inst;
  const int images = n_images(rng);
  for (int i = 0; i < images; ++i) {
    ImageRecord r;
    r.image_id = "im" + std::to_string(i);
    r.width = 100;
    r.height = 100;
    const int g = n_gt(rng);
    for (int k = 0; k < g; ++k) {
      const double x = std::floor(unit(rng) * 70);
      const double y = std::floor(unit(rng) * 70);
      const double w = 10 + std::floor(unit(rng) * 20);
      const double h = 10 + std::floor(unit(rng) * 20);
      r.objects.push_back({ClassLabel::from_id(label(rng)), BoundingBox{x, y, x + w, y + h}, unit(rng) < 0.15});
    }
    const int n = n_det(rng);
    for (int k = 0; k < n; ++k) {
      Detection d{r.image_id, ClassLabel::from_id(label(rng)), {}, 0.0};
      if (!r.objects.empty() && unit(rng) < 0.7) {
        const auto& src = r.objects[static_cast<std::size_t>(unit(rng) * r.objects.size())];
        if (unit(rng) < 0.8) d.label = src.label;
        d.box = src.box;
        d.box.xmin = std::clamp(d.box.xmin + jitter(rng), 0.0, 98.0);
        d.box.ymin = std::clamp(d.box.ymin + jitter(rng), 0.0, 98.0);
        d.box.xmax = std::clamp(d.box.xmax + jitter(rng), d.box.xmin + 1, 100.0);
        d.box.ymax = std::clamp(d.box.ymax + jitter(rng), d.box.ymin + 1, 100.0);
      } else {
        const double x = unit(rng) * 80;
        const double y = unit(rng) * 80;
        d.box = {x, y, x + 5 + unit(rng) * 15, y + 5 + unit(rng) * 15};
      }
      d.score = quantized ? std::round(unit(rng) * 4) / 4 : unit(rng);
      inst.detections.push_back(d);
    }
    inst.dataset.records.push_back(std::move(r));
  }
  return inst;
}

}  // namespace notedetect::testing
