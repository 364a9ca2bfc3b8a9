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

#include <array>
#include <compare>
#include <optional>
#include <string_view>

namespace notedetect {

// One of the six banknote denominations. The id <-> name mapping is fixed:
// 20 -> 0, 50 -> 1, 100 -> 2, 500 -> 3, 1000 -> 4, 5000 -> 5.
class ClassLabel {
 public:
  static constexpr int kCount = 6;

  // Throw LabelError for anything outside the fixed set.
  static ClassLabel from_id(int id);
  static ClassLabel from_name(std::string_view name);

  static std::optional<ClassLabel> try_from_id(int id);
  static std::optional<ClassLabel> try_from_name(std::string_view name);

  static const std::array<ClassLabel, kCount>& all();

  constexpr int id() const { return id_; }
  std::string_view name() const;

  friend constexpr auto operator<=>(ClassLabel, ClassLabel) = default;

 private:
  constexpr explicit ClassLabel(int id) : id_(id) {}
  int id_;
};

}  // namespace notedetect
