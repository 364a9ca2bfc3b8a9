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


#include "notedetect/model_select.hpp"

#include <cmath>

#include "notedetect/errors.hpp"
#include "notedetect/io_util.hpp"

namespace notedetect {

VariantSelection select_backend_variant(std::span<const ModelVariantRow> rows, double latency_budget_ms) {
  if (rows.empty()) throw ArgumentError("select_backend_variant: empty variant table");
  const ModelVariantRow* best = nullptr;
  for (const auto& row : rows) {
    if (row.mobile_latency_ms > latency_budget_ms) continue;
    if (!best || row.map_float > best->map_float ||
        (row.map_float == best->map_float && row.mobile_latency_ms < best->mobile_latency_ms)) {
      best = &row;
    }
  }
  if (best) return {*best, false};
  const ModelVariantRow* fastest = &rows.front();
  for (const auto& row : rows) {
    if (row.mobile_latency_ms < fastest->mobile_latency_ms) fastest = &row;
  }
  return {*fastest, true};
}

std::vector<ModelVariantRow> parse_variant_table(std::string_view csv) {
  std::vector<ModelVariantRow> rows;
  int line_no = 0;
  bool header_seen = false;
  for (std::string_view line : split(csv, '\n')) {
    ++line_no;
    line = trim(line);
    if (line.empty()) continue;
    const auto fields = split(line, ',');
    if (!header_seen) {
      static constexpr std::string_view kHeader[] = {"name", "map_float", "map_int8", "params_m",
                                                     "latency_ms"};
      if (fields.size() != 5) throw ParseError("variant table: bad header", line_no);
      for (std::size_t i = 0; i < 5; ++i) {
        if (trim(fields[i]) != kHeader[i]) {
          throw ParseError("variant table: expected column '" + std::string(kHeader[i]) + "'", line_no);
        }
      }
      header_seen = true;
      continue;
    }
    if (fields.size() != 5) throw ParseError("variant table: expected 5 columns", line_no);
    ModelVariantRow row;
    row.name = std::string(trim(fields[0]));
    double* targets[] = {&row.map_float, &row.map_quantized_int8, &row.parameter_count_m,
                         &row.mobile_latency_ms};
    for (std::size_t i = 0; i < 4; ++i) {
      auto v = parse_double(fields[i + 1]);
      if (!v || !std::isfinite(*v)) throw ParseError("variant table: column " + std::to_string(i + 2) + " is not a number", line_no);
      *targets[i] = *v;
    }
    if (row.name.empty()) throw ParseError("variant table: empty name", line_no);
    if (!(row.mobile_latency_ms > 0.0)) {
      throw ValidationError("variant '" + row.name + "': latency must be positive");
    }
    const auto pct = [](double p) { return p >= 0.0 && p <= 100.0; };
    if (!pct(row.map_float) || !pct(row.map_quantized_int8)) {
      throw ValidationError("variant '" + row.name + "': mAP must lie in [0, 100]");
    }
    rows.push_back(std::move(row));
  }
  if (!header_seen) throw ParseError("variant table: missing header");
  return rows;
}

nlohmann::json to_json(const VariantSelection& selection) {
  const auto& r = selection.row;
  return {{"name", r.name},
          {"map_float", r.map_float},
          {"map_int8", r.map_quantized_int8},
          {"params_m", r.parameter_count_m},
          {"latency_ms", r.mobile_latency_ms},
          {"budget_exceeded", selection.budget_exceeded}};
}

}  // namespace notedetect
