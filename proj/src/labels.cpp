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


#include "notedetect/labels.hpp"

#include <string>

#include "notedetect/errors.hpp"

namespace notedetect {
namespace {

constexpr std::array<std::string_view, ClassLabel::kCount> kNames = {
    "20 Rupees", "50 Rupees", "100 Rupees", "500 Rupees", "1000 Rupees", "5000 Rupees"};

}  // namespace

std::optional<ClassLabel> ClassLabel::try_from_id(int id) {
  if (id < 0 || id >= kCount) return std::nullopt;
  return ClassLabel(id);
}

std::optional<ClassLabel> ClassLabel::try_from_name(std::string_view name) {
  for (int i = 0; i < kCount; ++i) {
    if (kNames[i] == name) return ClassLabel(i);
  }
  return std::nullopt;
}

ClassLabel ClassLabel::from_id(int id) {
  if (auto label = try_from_id(id)) return *label;
  throw LabelError("unknown class id " + std::to_string(id));
}

ClassLabel ClassLabel::from_name(std::string_view name) {
  if (auto label = try_from_name(name)) return *label;
  throw LabelError("unknown class name '" + std::string(name) + "'");
}

const std::array<ClassLabel, ClassLabel::kCount>& ClassLabel::all() {
  static const std::array<ClassLabel, kCount> labels = {
      ClassLabel(0), ClassLabel(1), ClassLabel(2), ClassLabel(3), ClassLabel(4), ClassLabel(5)};
  return labels;
}

std::string_view ClassLabel::name() const { return kNames[id_]; }

}  // namespace notedetect
