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

#include <fstream>
#include <random>

#include "notedetect/detector.hpp"
#include "notedetect/errors.hpp"
#include "test_support.hpp"

namespace notedetect {
namespace {

Detection det(const BoundingBox& b, double score, int label = 2) {
  return {"x", ClassLabel::from_id(label), b, score};
}

RawDetections raw_of(std::initializer_list<std::tuple<int, double, std::array<double, 4>>> rows) {
  RawDetections r;
  for (const auto& [cls, score, box] : rows) {
    r.class_ids.push_back(cls);
    r.scores.push_back(score);
    r.boxes.push_back(box);
  }
  return r;
}

std::shared_ptr<const StubFixture> fixture(std::string_view text) {
  return std::make_shared<StubFixture>(StubFixture::parse(text));
}

TEST(Preprocess, MatchingSizeIsUnchanged) {
  const Image img = testing::pattern_image(448, 448, 4);
  const auto [input, scale] = preprocess(img, 448, PixelFormat::kRgb8);
  EXPECT_EQ(input.rgb, img);
  EXPECT_TRUE(input.planar.empty());
  EXPECT_EQ(scale, (ScaleInfo{448, 448, 448}));
}

TEST(Preprocess, ConstantFieldStaysConstant) {
  const Image gray = Image::filled(640, 480, 3, 128);
  const auto [input, scale] = preprocess(gray, 448, PixelFormat::kRgb8);
  EXPECT_EQ(input.rgb, Image::filled(448, 448, 3, 128));
  EXPECT_EQ(scale, (ScaleInfo{640, 480, 448}));
}

TEST(Preprocess, FloatPlanarLayout) {
  Image img = Image::filled(2, 2, 3, 0);
  img.at(1, 0, 0) = 255;
  img.at(0, 1, 2) = 51;
  const auto [input, scale] = preprocess(img, 2, PixelFormat::kRgbFloat01);
  ASSERT_EQ(input.planar.size(), 12u);
  EXPECT_FLOAT_EQ(input.planar[0 * 4 + 0 * 2 + 1], 1.0f);
  EXPECT_FLOAT_EQ(input.planar[2 * 4 + 1 * 2 + 0], 0.2f);
  EXPECT_FLOAT_EQ(input.planar[1 * 4 + 1 * 2 + 1], 0.0f);
}

TEST(Preprocess, RejectsEmptyImages) {
  EXPECT_THROW(preprocess(Image{}, 448, PixelFormat::kRgb8), ArgumentError);
  EXPECT_THROW(preprocess(Image::filled(4, 4, 1, 0), 448, PixelFormat::kRgb8), ArgumentError);
}

TEST(Postprocess, ScalesToSourcePixels) {
  const auto r = postprocess(raw_of({{2, 0.9, {0.25, 0.25, 0.75, 0.75}}}), {640, 480, 448}, 0.5, 0.5);
  ASSERT_EQ(r.detections.size(), 1u);
  EXPECT_EQ(r.detections[0].box, (BoundingBox{160, 120, 480, 360}));
  EXPECT_EQ(r.detections[0].label.name(), "100 Rupees");
}

TEST(Postprocess, SuppressesSameClassOverlap) {
  // Same-height boxes offset so that IoU = 0.7.
  const double s = 0.3 / 1.7;
  const std::array<double, 4> a{0, 0, 1, 0.5};
  const std::array<double, 4> b{0, s * 0.5, 1, 0.5 + s * 0.5};
  EXPECT_NEAR(iou(BoundingBox{0, 0, 50, 100}, BoundingBox{s * 50, 0, 50 + s * 50, 100}), 0.7, 1e-12);
  const auto same = postprocess(raw_of({{1, 0.9, a}, {1, 0.8, b}}), {100, 100, 448}, 0.5, 0.5);
  ASSERT_EQ(same.detections.size(), 1u);
  EXPECT_EQ(same.detections[0].score, 0.9);
  const auto diff = postprocess(raw_of({{1, 0.9, a}, {3, 0.8, b}}), {100, 100, 448}, 0.5, 0.5);
  EXPECT_EQ(diff.detections.size(), 2u);
}

TEST(Postprocess, ThresholdAndUnknownIds) {
  const auto r = postprocess(raw_of({{0, 0.4, {0, 0, 1, 1}}, {9, 0.9, {0, 0, 1, 1}}, {-1, 0.9, {0, 0, 1, 1}},
                                     {5, 0.5, {0, 0, 0.5, 0.5}}}),
                             {10, 10, 448}, 0.5, 0.5);
  ASSERT_EQ(r.detections.size(), 1u);
  EXPECT_EQ(r.detections[0].label.id(), 5);
  EXPECT_EQ(r.unknown_class_dropped, 2u);
}

TEST(Postprocess, DropsCollapsedBoxes) {
  const auto r = postprocess(raw_of({{0, 0.9, {0.5, 0.2, 0.5, 0.6}}}), {10, 10, 448}, 0.5, 0.5);
  EXPECT_TRUE(r.detections.empty());
}

TEST(Postprocess, SortedByScore) {
  const auto r = postprocess(raw_of({{0, 0.6, {0, 0, 0.1, 0.1}}, {1, 0.95, {0.5, 0.5, 0.6, 0.6}},
                                     {2, 0.7, {0.2, 0.2, 0.3, 0.3}}}),
                             {100, 100, 448}, 0.5, 0.5);
  ASSERT_EQ(r.detections.size(), 3u);
  EXPECT_EQ(r.detections[0].score, 0.95);
  EXPECT_EQ(r.detections[1].score, 0.7);
  EXPECT_EQ(r.detections[2].score, 0.6);
}

TEST(Postprocess, NormalizedRoundTrip) {
  std::mt19937_64 rng(17);
  std::uniform_int_distribution<int> dim(16, 4000);
  for (int i = 0; i < 1000; ++i) {
    const int w = dim(rng);
    const int h = dim(rng);
    const auto box = testing::random_box(rng, w, h, 1.0);
    RawDetections raw;
    raw.boxes.push_back({box.ymin / h, box.xmin / w, box.ymax / h, box.xmax / w});
    raw.class_ids.push_back(i % 6);
    raw.scores.push_back(0.0);
    const auto r = postprocess(raw, {w, h, 448}, 0.0, 0.5);
    ASSERT_EQ(r.detections.size(), 1u);
    const auto& b = r.detections[0].box;
    EXPECT_NEAR(b.xmin, box.xmin, 1e-6);
    EXPECT_NEAR(b.ymin, box.ymin, 1e-6);
    EXPECT_NEAR(b.xmax, box.xmax, 1e-6);
    EXPECT_NEAR(b.ymax, box.ymax, 1e-6);
  }
}

TEST(Postprocess, RejectsInvalidRaw) {
  RawDetections bad;
  bad.scores = {0.5};
  EXPECT_THROW(postprocess(bad, {10, 10, 448}, 0.5, 0.5), InferenceError);
}

TEST(Nms, EmptyAndDisjoint) {
  EXPECT_TRUE(nms({}, 0.5).empty());
  const std::vector<Detection> d{det({0, 0, 10, 10}, 0.3), det({20, 0, 30, 10}, 0.9), det({40, 0, 50, 10}, 0.5)};
  const auto out = nms(d, 0.5);
  ASSERT_EQ(out.size(), 3u);
  EXPECT_EQ(out[0].score, 0.9);
  EXPECT_EQ(out[1].score, 0.5);
  EXPECT_EQ(out[2].score, 0.3);
}

TEST(Nms, ChainKeepsFirstAndThird) {
  const BoundingBox b1{0, 0, 6, 10}, b2{0, 0, 10, 10}, b3{4, 0, 10, 10};
  EXPECT_DOUBLE_EQ(iou(b1, b2), 0.6);
  EXPECT_DOUBLE_EQ(iou(b2, b3), 0.6);
  EXPECT_DOUBLE_EQ(iou(b1, b3), 0.2);
  const auto out = nms({det(b1, 0.9), det(b2, 0.8), det(b3, 0.7)}, 0.5);
  ASSERT_EQ(out.size(), 2u);
  EXPECT_EQ(out[0].box, b1);
  EXPECT_EQ(out[1].box, b3);
}

TEST(Nms, Properties) {
  std::mt19937_64 rng(99);
  std::uniform_int_distribution<int> count(0, 12);
  std::uniform_real_distribution<double> unit(0, 1);
  for (int n = 0; n < 1000; ++n) {
    std::vector<Detection> in;
    const int k = count(rng);
    for (int i = 0; i < k; ++i) in.push_back(det(testing::random_box(rng, 50, 50, 2), unit(rng)));
    const double t = unit(rng);
    const auto out = nms(in, t);
    for (const auto& o : out) EXPECT_NE(std::find(in.begin(), in.end(), o), in.end());
    for (std::size_t i = 0; i < out.size(); ++i) {
      for (std::size_t j = i + 1; j < out.size(); ++j) {
        EXPECT_LE(iou(out[i].box, out[j].box), t);
        EXPECT_GE(out[i].score, out[j].score);
      }
    }
    if (!in.empty()) {
      const auto top = std::max_element(in.begin(), in.end(),
                                        [](const Detection& a, const Detection& b) { return a.score < b.score; });
      ASSERT_FALSE(out.empty());
      EXPECT_EQ(out[0].score, top->score);
    }
  }
}

TEST(StubFixture, RowsInFileOrder) {
  const auto f = StubFixture::parse(
      "x\t2\t0.9\t0.1\t0.1\t0.5\t0.5\n"
      "y\t0\t0.5\t0\t0\t1\t1\n"
      "x\t4\t0.7\t0.2\t0.3\t0.4\t0.6\n");
  EXPECT_EQ(f.row_count(), 3u);
  const auto r = stub_detect(f, "x");
  ASSERT_EQ(r.size(), 2u);
  EXPECT_EQ(r.class_ids, (std::vector<int>{2, 4}));
  EXPECT_EQ(r.scores, (std::vector<double>{0.9, 0.7}));
  EXPECT_EQ(r.boxes[1], (std::array<double, 4>{0.2, 0.3, 0.4, 0.6}));
  EXPECT_TRUE(stub_detect(f, "absent").empty());
}

TEST(StubFixture, ErrorsCarryLineNumbers) {
  auto line_of = [](std::string_view text) {
    try {
      StubFixture::parse(text);
    } catch (const ParseError& e) {
      return e.line();
    }
    return -1;
  };
  EXPECT_EQ(line_of("x\t2\t1.5\t0\t0\t1\t1\n"), 1);
  EXPECT_EQ(line_of("# c\nx\t2\t0.5\t0\t0\t1\t1\nx\t2\t0.5\t0\t0\t1.2\t1\n"), 3);
  EXPECT_EQ(line_of("x\t2\t0.5\t0\t0\t1\n"), 1);
  EXPECT_EQ(line_of("x\ttwo\t0.5\t0\t0\t1\t1\n"), 1);
  EXPECT_EQ(line_of("x\t2\t0.5\t0.6\t0\t0.5\t1\n"), 1);
}

TEST(StubFixture, LoadKeepsLineNumber) {
  testing::TempDir dir;
  const auto path = dir / "f.tsv";
  {
    std::ofstream(path) << "x\t2\t0.5\t0\t0\t1\t1\nx\t2\t7\t0\t0\t1\t1\n";
  }
  try {
    StubFixture::load(path);
    FAIL();
  } catch (const ParseError& e) {
    EXPECT_EQ(e.line(), 2);
    EXPECT_NE(std::string(e.what()).find("f.tsv"), std::string::npos);
  }
  EXPECT_THROW(StubFixture::load(dir / "missing.tsv"), IoError);
}

TEST(Infer, StubPassthrough) {
  StubBackend backend(fixture("a.png\t2\t0.8\t0.1\t0.2\t0.5\t0.6\n"));
  const auto r = infer(backend, Image::filled(200, 100, 3, 9), "a.png");
  ASSERT_EQ(r.detections.size(), 1u);
  EXPECT_EQ(r.detections[0].label.name(), "100 Rupees");
  EXPECT_EQ(r.detections[0].box, (BoundingBox{40, 10, 120, 50}));
  EXPECT_EQ(r.detections[0].image_id, "a.png");
  EXPECT_FALSE(r.empty_message.has_value());
  EXPECT_EQ(r.image_width, 200);
  EXPECT_EQ(r.image_height, 100);
}

TEST(Infer, MissingEntryGivesMessage) {
  StubBackend backend(fixture("a.png\t2\t0.8\t0.1\t0.2\t0.5\t0.6\n"));
  const auto r = infer(backend, Image::filled(20, 10, 3, 9), "other.png");
  EXPECT_TRUE(r.detections.empty());
  EXPECT_EQ(r.empty_message, "No currency notes identified");
}

TEST(Infer, BelowThresholdIsEmpty) {
  StubBackend backend(fixture("a\t2\t0.4\t0.1\t0.2\t0.5\t0.6\n"));
  const auto r = infer(backend, Image::filled(20, 10, 3, 9), "a");
  EXPECT_TRUE(r.detections.empty());
  EXPECT_EQ(r.empty_message, "No currency notes identified");
  const auto lowered = infer(backend, Image::filled(20, 10, 3, 9), "a", {.score_threshold = 0.3});
  EXPECT_EQ(lowered.detections.size(), 1u);
  EXPECT_FALSE(lowered.empty_message.has_value());
}

TEST(Infer, Deterministic) {
  StubBackend backend(fixture("a\t2\t0.9\t0.1\t0.2\t0.5\t0.6\na\t2\t0.8\t0.12\t0.22\t0.5\t0.6\n"));
  const Image img = testing::pattern_image(64, 48, 1);
  const auto a = infer(backend, img, "a");
  const auto b = infer(backend, img, "a");
  EXPECT_EQ(a.detections, b.detections);
  EXPECT_EQ(a.empty_message, b.empty_message);
}

class FailingBackend final : public DetectorBackend {
 public:
  int input_size() const override { return 8; }
  PixelFormat pixel_format() const override { return PixelFormat::kRgb8; }
  BackendDescriptor descriptor() const override { return {"failing", "1"}; }
  RawDetections raw_detect(const ModelInput&, std::string_view) override {
    throw std::runtime_error("accelerator unavailable");
  }
};

TEST(Infer, BackendFailureCarriesDiagnostics) {
  FailingBackend backend;
  try {
    infer(backend, Image::filled(8, 8, 3, 0));
    FAIL();
  } catch (const InferenceError& e) {
    EXPECT_NE(std::string(e.what()).find("accelerator unavailable"), std::string::npos);
    EXPECT_NE(std::string(e.what()).find("failing"), std::string::npos);
  }
}

TEST(StubBackend, DescriptorUsesFixtureDigest) {
  const auto f = fixture("a\t2\t0.9\t0.1\t0.2\t0.5\t0.6\n");
  StubBackend backend(f);
  EXPECT_EQ(backend.descriptor().name, "stub");
  EXPECT_EQ(backend.descriptor().version, f->digest());
  EXPECT_EQ(backend.input_size(), kDefaultInputSize);
}

TEST(OnnxBackend, RunsConstantModel) {
  const std::filesystem::path model = std::filesystem::path(NOTEDETECT_TEST_DATA) / "const_detector.onnx";
  OnnxBackend backend(model, 64);
  EXPECT_EQ(backend.descriptor(), describe_model_file(model));
  EXPECT_EQ(backend.descriptor().name, "const_detector");
  const auto r = infer(backend, testing::pattern_image(640, 480, 3));
  ASSERT_EQ(r.detections.size(), 1u);
  EXPECT_EQ(r.detections[0].label.name(), "100 Rupees");
  EXPECT_NEAR(r.detections[0].score, 0.9, 1e-5);
  EXPECT_NEAR(r.detections[0].box.xmin, 160, 1e-3);
  EXPECT_NEAR(r.detections[0].box.ymin, 120, 1e-3);
  EXPECT_NEAR(r.detections[0].box.xmax, 480, 1e-3);
  EXPECT_NEAR(r.detections[0].box.ymax, 360, 1e-3);
  const auto all = infer(backend, testing::pattern_image(64, 64, 3), "", {.score_threshold = 0.0});
  EXPECT_EQ(all.detections.size(), 2u);
}

TEST(OnnxBackend, LoadFailures) {
  testing::TempDir dir;
  EXPECT_THROW(OnnxBackend(dir / "missing.onnx"), IoError);
  {
    std::ofstream(dir / "junk.onnx") << "not a model";
  }
  EXPECT_THROW(OnnxBackend(dir / "junk.onnx"), InferenceError);
}

TEST(LabelToPhrase, NamesVerbatim) {
  EXPECT_EQ(label_to_phrase(ClassLabel::from_id(2)), "100 Rupees");
  EXPECT_EQ(label_to_phrase(ClassLabel::from_id(0)), "20 Rupees");
  EXPECT_EQ(label_to_phrase(ClassLabel::from_id(5)), "5000 Rupees");
}

}  // namespace
}  // namespace notedetect
