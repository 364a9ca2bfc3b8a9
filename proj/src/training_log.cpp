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


#include "notedetect/training_log.hpp"

#include <cmath>
#include <sstream>

#include "notedetect/errors.hpp"
#include "notedetect/io_util.hpp"

namespace notedetect {
namespace {

using Field = std::optional<double> TrainingLogRecord::*;

constexpr std::string_view kColumns[] = {"epoch", "train_total", "val_total", "det_loss", "cls_loss", "box_loss"};
constexpr Field kLossFields[] = {&TrainingLogRecord::train_total, &TrainingLogRecord::val_total,
                                 &TrainingLogRecord::detection_loss,
                                 &TrainingLogRecord::classification_loss, &TrainingLogRecord::box_loss};

std::optional<double> decrease_fraction(std::span<const TrainingLogRecord> records, Field field) {
  int pairs = 0;
  int decreases = 0;
  const std::optional<double>* previous = nullptr;
  for (const auto& r : records) {
    const auto& current = r.*field;
    if (!current) continue;
    if (previous) {
      ++pairs;
      if (*current < **previous) ++decreases;
    }
    previous = &current;
  }
  if (pairs == 0) return std::nullopt;
  return static_cast<double>(decreases) / pairs;
}

nlohmann::json record_json(const TrainingLogRecord& r) {
  nlohmann::json j;
  j["epoch"] = r.epoch;
  for (std::size_t i = 0; i < std::size(kLossFields); ++i) {
    const auto& v = r.*kLossFields[i];
    j[std::string(kColumns[i + 1])] = v ? nlohmann::json(*v) : nlohmann::json(nullptr);
  }
  return j;
}

}  // namespace

TrainingSummary summarize_training_log(std::span<const TrainingLogRecord> records) {
  if (records.empty()) throw ArgumentError("training log is empty");
  for (std::size_t i = 1; i < records.size(); ++i) {
    if (records[i].epoch <= records[i - 1].epoch) {
      throw ArgumentError("training log epochs must strictly increase (epoch " +
                          std::to_string(records[i].epoch) + " follows " +
                          std::to_string(records[i - 1].epoch) + ")");
    }
  }
  TrainingSummary s;
  s.final_epoch = records.back();
  s.series.assign(records.begin(), records.end());
  s.train_decrease_fraction = decrease_fraction(records, &TrainingLogRecord::train_total);
  s.val_decrease_fraction = decrease_fraction(records, &TrainingLogRecord::val_total);
  return s;
}

std::vector<TrainingLogRecord> parse_training_log(std::string_view csv) {
  std::vector<TrainingLogRecord> out;
  int line_no = 0;
  bool header_seen = false;
  for (std::string_view line : split(csv, '\n')) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
    if (trim(line).empty()) continue;
    const auto fields = split(line, ',');
    if (fields.size() != std::size(kColumns)) {
      throw ParseError("training log: expected 6 columns, got " + std::to_string(fields.size()), line_no);
    }
    if (!header_seen) {
      for (std::size_t i = 0; i < fields.size(); ++i) {
        if (trim(fields[i]) != kColumns[i]) {
          throw ParseError("training log: expected column '" + std::string(kColumns[i]) + "'", line_no);
        }
      }
      header_seen = true;
      continue;
    }
    TrainingLogRecord r;
    auto epoch = parse_integer(fields[0]);
    if (!epoch || *epoch < 1) throw ParseError("training log: epoch must be a positive integer", line_no);
    r.epoch = static_cast<int>(*epoch);
    for (std::size_t i = 0; i < std::size(kLossFields); ++i) {
      const std::string_view cell = trim(fields[i + 1]);
      if (cell.empty()) continue;
      auto v = parse_double(cell);
      if (!v || !std::isfinite(*v)) {
        throw ParseError("training log: column '" + std::string(kColumns[i + 1]) + "' is not a number", line_no);
      }
      if (*v < 0.0) throw ParseError("training log: negative loss", line_no);
      r.*kLossFields[i] = *v;
    }
    out.push_back(r);
  }
  if (!header_seen) throw ParseError("training log: missing header");
  return out;
}

nlohmann::json to_json(const TrainingSummary& summary) {
  nlohmann::json j;
  j["final"] = record_json(summary.final_epoch);
  j["epochs"] = summary.series.size();
  const auto opt = [](const std::optional<double>& v) { return v ? nlohmann::json(*v) : nlohmann::json(nullptr); };
  j["train_total_decrease_fraction"] = opt(summary.train_decrease_fraction);
  j["val_total_decrease_fraction"] = opt(summary.val_decrease_fraction);
  nlohmann::json series = nlohmann::json::array();
  for (const auto& r : summary.series) series.push_back(record_json(r));
  j["series"] = std::move(series);
  return j;
}

std::string format_curve_table(const TrainingSummary& summary) {
  std::ostringstream out;
  for (std::size_t i = 0; i < std::size(kColumns); ++i) out << (i ? "," : "") << kColumns[i];
  out << '\n';
  for (const auto& r : summary.series) {
    out << r.epoch;
    for (Field f : kLossFields) {
      out << ',';
      if (r.*f) out << format_double(*(r.*f));
    }
    out << '\n';
  }
  return out.str();
}

}  // namespace notedetect
