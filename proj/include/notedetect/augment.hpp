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

#include <cstdint>
#include <filesystem>
#include <functional>
#include <random>
#include <string>
#include <vector>

#include "notedetect/geometry.hpp"
#include "notedetect/image.hpp"
#include "notedetect/voc.hpp"

namespace notedetect {

struct AugmentationSpec {
  double rotation_range = 30.0;  // degrees, symmetric
  double shear_range = 15.0;     // degrees, symmetric, along x
  double zoom_low = 0.8;
  double zoom_high = 1.2;
  double horizontal_flip_prob = 0.5;
  double vertical_flip_prob = 0.5;
  int copies_per_image = 4;
  double min_visibility = 0.25;
  std::uint64_t seed = 0;

  // Throws ArgumentError when a field is out of range.
  void validate() const;
};

// One sampled draw; together with the source size it determines the transform.
struct AugmentationParams {
  double rotation_deg = 0.0;
  double shear_deg = 0.0;
  double zoom = 1.0;
  bool flip_horizontal = false;
  bool flip_vertical = false;

  friend bool operator==(const AugmentationParams&, const AugmentationParams&) = default;
};

struct Provenance {
  std::string image_id;
  std::string source_id;
  AugmentationParams params;
  int attempts = 1;
  bool no_surviving_boxes = false;

  friend bool operator==(const Provenance&, const Provenance&) = default;
};

struct AugmentedRecord {
  ImageRecord record;
  Image image;
  Provenance provenance;
};

using RandomStream = std::mt19937_64;

inline constexpr int kMaxAugmentAttempts = 10;

// Independent stream per record so results do not depend on record order.
RandomStream record_stream(std::uint64_t seed, std::string_view image_id);

AugmentationParams sample_params(const AugmentationSpec& spec, RandomStream& stream);

// Flips, then shear, rotation and zoom, all about the image center.
AffineTransform<double> augmentation_transform(const AugmentationParams& params, int width, int height);

// Each output pixel center is pulled back through the inverse transform and
// bilinearly interpolated; samples that fall outside the source are 0.
// Throws DegeneracyError for a non-invertible transform.
Image resample_image(const Image& src, const AffineTransform<double>& t, int out_width, int out_height);

// Exactly spec.copies_per_image outputs, ids `<image_id>_aug<k>`. A copy that
// loses every box is re-drawn, up to kMaxAugmentAttempts draws in total, and
// is then emitted without boxes and flagged in its provenance.
std::vector<AugmentedRecord> augment_record(const ImageRecord& record, const Image& image,
                                            const AugmentationSpec& spec, RandomStream& stream);

struct AugmentedDataset {
  Dataset dataset;  // originals followed by generated records
  std::vector<AugmentedRecord> generated;
};

using ImageProvider = std::function<Image(const ImageRecord&)>;

// Default provider reads record.image_path. Throws GenerationError on an id
// collision.
AugmentedDataset augment_dataset(const Dataset& dataset, const AugmentationSpec& spec,
                                 const ImageProvider& images = {});

std::string format_provenance_tsv(const std::vector<AugmentedRecord>& generated);

// Originals are copied, generated images written as PNG, plus provenance.tsv.
void write_augmented_dataset(const AugmentedDataset& augmented, const std::filesystem::path& root);

}  // namespace notedetect
