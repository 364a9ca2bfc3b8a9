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

#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "json.hpp"

namespace notedetect {

struct ModelVariantRow {
  std::string name;
  double map_float = 0.0;           // percent
  double map_quantized_int8 = 0.0;  // percent
  double parameter_count_m = 0.0;   // millions
  double mobile_latency_ms = 0.0;

  friend bool operator==(const ModelVariantRow&, const ModelVariantRow&) = default;
};

struct VariantSelection {
  ModelVariantRow row;
  bool budget_exceeded = false;
};

// Among rows within the latency budget, the highest float mAP (ties go to
// the lower latency). With no row in budget, the fastest row is returned
// flagged budget_exceeded. Throws ArgumentError on an empty table.
VariantSelection select_backend_variant(std::span<const ModelVariantRow> rows, double latency_budget_ms);

// CSV with header `name,map_float,map_int8,params_m,latency_ms`.
// Throws ParseError (with line) or ValidationError for out-of-range values.
std::vector<ModelVariantRow> parse_variant_table(std::string_view csv);

nlohmann::json to_json(const VariantSelection& selection);

}  // namespace notedetect
