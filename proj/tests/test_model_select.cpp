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


#include <gtest/gtest.h>

#include "notedetect/errors.hpp"
#include "notedetect/io_util.hpp"
#include "notedetect/model_select.hpp"

namespace notedetect {
namespace {

std::vector<ModelVariantRow> table() { return parse_variant_table(read_text_file(NOTEDETECT_VARIANTS_CSV)); }

TEST(VariantTable, ParsesPublishedRows) {
  const auto rows = table();
  ASSERT_EQ(rows.size(), 6u);
  EXPECT_EQ(rows[2], (ModelVariantRow{"EfficientDet-lite2", 35.06, 34.69, 5.3, 69}));
  EXPECT_EQ(rows[0].mobile_latency_ms, 36);
  EXPECT_EQ(rows[5].name, "EfficientDet-lite4");
}

TEST(SelectVariant, BudgetOf100PicksLite2) {
  const auto rows = table();
  const auto s = select_backend_variant(rows, 100);
  EXPECT_EQ(s.row.name, "EfficientDet-lite2");
  EXPECT_FALSE(s.budget_exceeded);
}

TEST(SelectVariant, BudgetOf36PicksLite0) {
  const auto rows = table();
  EXPECT_EQ(select_backend_variant(rows, 36).row.name, "EfficientDet-lite0");
}

TEST(SelectVariant, TinyBudgetFallsBackFlagged) {
  const auto rows = table();
  const auto s = select_backend_variant(rows, 10);
  EXPECT_EQ(s.row.name, "EfficientDet-lite0");
  EXPECT_TRUE(s.budget_exceeded);
}

TEST(SelectVariant, BudgetSweep) {
  const auto rows = table();
  for (int b = 36; b <= 48; ++b) EXPECT_EQ(select_backend_variant(rows, b).row.name, "EfficientDet-lite0");
  for (int b = 49; b <= 68; ++b) EXPECT_EQ(select_backend_variant(rows, b).row.name, "EfficientDet-lite1");
  for (int b = 69; b <= 115; ++b) EXPECT_EQ(select_backend_variant(rows, b).row.name, "EfficientDet-lite2");
  for (int b = 260; b <= 1000; b += 37) EXPECT_EQ(select_backend_variant(rows, b).row.name, "EfficientDet-lite4");
}

TEST(SelectVariant, TiesGoToLowerLatency) {
  const std::vector<ModelVariantRow> rows{{"slow", 40, 39, 5, 90}, {"fast", 40, 38, 6, 50}};
  EXPECT_EQ(select_backend_variant(rows, 100).row.name, "fast");
}

TEST(SelectVariant, EmptyTableThrows) {
  EXPECT_THROW(select_backend_variant(std::span<const ModelVariantRow>{}, 100), ArgumentError);
}

TEST(VariantTable, RejectsBadInput) {
  EXPECT_THROW(parse_variant_table("name,x\n"), ParseError);
  EXPECT_THROW(parse_variant_table(""), ParseError);
  const std::string header = "name,map_float,map_int8,params_m,latency_ms\n";
  EXPECT_THROW(parse_variant_table(header + "a,1,2,3\n"), ParseError);
  EXPECT_THROW(parse_variant_table(header + "a,1,2,3,zero\n"), ParseError);
  EXPECT_THROW(parse_variant_table(header + "a,1,2,3,0\n"), ValidationError);
  EXPECT_THROW(parse_variant_table(header + "a,101,2,3,10\n"), ValidationError);
  try {
    parse_variant_table(header + "a,1,2,3,4\nb,1\n");
    FAIL();
  } catch (const ParseError& e) {
    EXPECT_EQ(e.line(), 3);
  }
}

TEST(VariantSelectionJson, Fields) {
  const auto rows = table();
  const auto j = to_json(select_backend_variant(rows, 100));
  EXPECT_EQ(j["name"], "EfficientDet-lite2");
  EXPECT_EQ(j["latency_ms"], 69.0);
  EXPECT_EQ(j["budget_exceeded"], false);
}

}  // namespace
}  // namespace notedetect
