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


// Pascal VOC annotation records and dataset directories.
//
// VOC stores 1-based inclusive integer pixel indices. Internally boxes are
// continuous 0-based with exclusive max edges: on parse xmin and ymin drop by
// one and xmax/ymax are kept; emit reverses this with half-up rounding.

#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "notedetect/geometry.hpp"
#include "notedetect/labels.hpp"

namespace notedetect {

struct GroundTruthObject {
  ClassLabel label;
  BoundingBox box;
  bool difficult = false;

  friend bool operator==(const GroundTruthObject&, const GroundTruthObject&) = default;
};

struct ImageRecord {
  std::string image_id;  // filename stem
  int width = 0;
  int height = 0;
  int depth = 3;
  std::vector<GroundTruthObject> objects;
  std::filesystem::path image_path;

  friend bool operator==(const ImageRecord&, const ImageRecord&) = default;
};

struct Dataset {
  std::vector<ImageRecord> records;

  std::size_t size() const { return records.size(); }
  bool empty() const { return records.empty(); }
  const ImageRecord* find(std::string_view image_id) const;
};

// Throws ParseError (with line when available), LabelError or ValidationError.
ImageRecord parse_voc_annotation(std::string_view xml_text);

// Canonical form: fixed element order, two-space indentation, trailing newline.
std::string emit_voc_annotation(const ImageRecord& record);

// Reads `annotations_dir/*.xml`, resolves each image in `images_dir`, and
// cross-checks the XML size against the decoded image. Records are sorted by
// image_id. Throws LoadError for a missing image and ConsistencyError for a
// size mismatch.
Dataset load_dataset(const std::filesystem::path& annotations_dir,
                     const std::filesystem::path& images_dir);
// `root/annotations` + `root/images`.
Dataset load_dataset(const std::filesystem::path& root);

// Writes `root/annotations/<id>.xml` and copies each record's image to
// `root/images/`. Records' image_path must point at existing files.
void write_dataset(const Dataset& dataset, const std::filesystem::path& root);

struct DatasetSplit {
  Dataset train;
  Dataset validation;
};

// Seeded shuffle; the first ceil(n * train_fraction) records go to train.
DatasetSplit split_dataset(const Dataset& dataset, double train_fraction, std::uint64_t seed);

struct Violation {
  enum class Kind { kDuplicateId, kBadDimensions, kOutOfBounds, kZeroArea };
  Kind kind;
  std::size_t record_index;
  std::string image_id;
  std::optional<std::size_t> object_index;
  std::string message;
};

std::string_view to_string(Violation::Kind kind);

// Every invariant violation in the dataset; empty when valid.
std::vector<Violation> validate_dataset(const Dataset& dataset);

// Violations of a single record (no cross-record checks).
std::vector<Violation> validate_record(const ImageRecord& record, std::size_t record_index = 0);

}  // namespace notedetect
