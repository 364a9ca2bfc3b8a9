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


#pragma once

#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "json.hpp"

namespace notedetect {

struct TrainingLogRecord {
  int epoch = 0;
  std::optional<double> train_total;
  std::optional<double> val_total;
  std::optional<double> detection_loss;
  std::optional<double> classification_loss;
  std::optional<double> box_loss;

  friend bool operator==(const TrainingLogRecord&, const TrainingLogRecord&) = default;
};

struct TrainingSummary {
  TrainingLogRecord final_epoch;
  std::vector<TrainingLogRecord> series;
  // Fraction of consecutive epoch pairs where the total loss went down;
  // nullopt when fewer than two epochs carry the value.
  std::optional<double> train_decrease_fraction;
  std::optional<double> val_decrease_fraction;
};

// Throws ArgumentError for an empty log or epochs that do not strictly increase.
TrainingSummary summarize_training_log(std::span<const TrainingLogRecord> records);

// CSV with header `epoch,train_total,val_total,det_loss,cls_loss,box_loss`;
// blank cells are absent values.
std::vector<TrainingLogRecord> parse_training_log(std::string_view csv);

nlohmann::json to_json(const TrainingSummary& summary);
// Per-epoch table for plotting, same columns as the input log.
std::string format_curve_table(const TrainingSummary& summary);

}  // namespace notedetect
