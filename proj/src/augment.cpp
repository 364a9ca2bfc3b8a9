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


#include "notedetect/augment.hpp"

#include <cmath>
#include <set>
#include <sstream>

#include "notedetect/errors.hpp"
#include "notedetect/io_util.hpp"

namespace notedetect {
namespace fs = std::filesystem;

namespace {

std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ull;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ull;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebull;
  return x ^ (x >> 31);
}

double uniform_symmetric(double range, RandomStream& stream) {
  if (range == 0.0) return 0.0;
  return std::uniform_real_distribution<double>(-range, range)(stream);
}

bool bernoulli(double p, RandomStream& stream) {
  // Always consume one draw so the stream layout does not depend on p.
  const double u = std::uniform_real_distribution<double>(0.0, 1.0)(stream);
  return u < p;
}

// Index-space coordinate of a continuous sample, snapped to integers when
// within round-off so exact pixel-center mappings copy pixels unchanged.
double to_index(double continuous, int extent) {
  double f = continuous - 0.5;
  const double r = std::round(f);
  if (std::abs(f - r) < 1e-9) f = r;
  return std::clamp(f, 0.0, static_cast<double>(extent - 1));
}

std::string flips_text(const AugmentationParams& p) {
  if (p.flip_horizontal && p.flip_vertical) return "hv";
  if (p.flip_horizontal) return "h";
  if (p.flip_vertical) return "v";
  return "none";
}

}  // namespace

void AugmentationSpec::validate() const {
  if (!(rotation_range >= 0.0 && rotation_range < 90.0)) {
    throw ArgumentError("rotation range must lie in [0, 90) degrees");
  }
  if (!(shear_range >= 0.0 && shear_range < 45.0)) {
    throw ArgumentError("shear range must lie in [0, 45) degrees");
  }
  if (!(zoom_low > 0.0 && zoom_low <= zoom_high) || !std::isfinite(zoom_high)) {
    throw ArgumentError("zoom range must satisfy 0 < low <= high");
  }
  const auto is_prob = [](double p) { return p >= 0.0 && p <= 1.0; };
  if (!is_prob(horizontal_flip_prob) || !is_prob(vertical_flip_prob)) {
    throw ArgumentError("flip probabilities must lie in [0, 1]");
  }
  if (copies_per_image < 0) throw ArgumentError("copies per image must be non-negative");
  if (!(min_visibility > 0.0 && min_visibility <= 1.0)) {
    throw ArgumentError("min visibility must lie in (0, 1]");
  }
}

RandomStream record_stream(std::uint64_t seed, std::string_view image_id) {
  return RandomStream(splitmix64(seed ^ splitmix64(fnv1a64(image_id))));
}

AugmentationParams sample_params(const AugmentationSpec& spec, RandomStream& stream) {
  AugmentationParams p;
  p.rotation_deg = uniform_symmetric(spec.rotation_range, stream);
  p.shear_deg = uniform_symmetric(spec.shear_range, stream);
  p.zoom = spec.zoom_low == spec.zoom_high
               ? spec.zoom_low
               : std::uniform_real_distribution<double>(spec.zoom_low, spec.zoom_high)(stream);
  p.flip_horizontal = bernoulli(spec.horizontal_flip_prob, stream);
  p.flip_vertical = bernoulli(spec.vertical_flip_prob, stream);
  return p;
}

AffineTransform<double> augmentation_transform(const AugmentationParams& params, int width, int height) {
  const Point2<double> center(width / 2.0, height / 2.0);
  std::vector<AffinePrimitive<double>> steps;
  steps.emplace_back(primitive::Identity<double>{});
  if (params.flip_horizontal) steps.emplace_back(primitive::Flip<double>{primitive::Axis::kHorizontal, center});
  if (params.flip_vertical) steps.emplace_back(primitive::Flip<double>{primitive::Axis::kVertical, center});
  if (params.shear_deg != 0.0) steps.emplace_back(primitive::Shear<double>{params.shear_deg, center});
  if (params.rotation_deg != 0.0) steps.emplace_back(primitive::Rotate<double>{params.rotation_deg, center});
  if (params.zoom != 1.0) steps.emplace_back(primitive::Scale<double>{params.zoom, center});
  return compose_affine<double>(std::span<const AffinePrimitive<double>>(steps));
}

Image resample_image(const Image& src, const AffineTransform<double>& t, int out_width, int out_height) {
  if (src.empty()) throw ArgumentError("resample_image: empty source image");
  if (out_width < 1 || out_height < 1) throw ArgumentError("resample_image: empty output size");
  const AffineTransform<double> inv = t.inverse();
  const int channels = src.channels;
  Image out = Image::filled(out_width, out_height, channels, 0);

  constexpr double kEdgeTol = 1e-9;
  for (int y = 0; y < out_height; ++y) {
    for (int x = 0; x < out_width; ++x) {
      const Point2<double> p = inv.apply(Point2<double>(x + 0.5, y + 0.5));
      const double u = p.x();
      const double v = p.y();
      if (u < -kEdgeTol || v < -kEdgeTol || u > src.width + kEdgeTol || v > src.height + kEdgeTol) {
        continue;
      }
      const double fx = to_index(u, src.width);
      const double fy = to_index(v, src.height);
      const int x0 = static_cast<int>(std::floor(fx));
      const int y0 = static_cast<int>(std::floor(fy));
      const int x1 = std::min(x0 + 1, src.width - 1);
      const int y1 = std::min(y0 + 1, src.height - 1);
      const double wx = fx - x0;
      const double wy = fy - y0;
      for (int c = 0; c < channels; ++c) {
        const double top = (1.0 - wx) * src.at(x0, y0, c) + wx * src.at(x1, y0, c);
        const double bottom = (1.0 - wx) * src.at(x0, y1, c) + wx * src.at(x1, y1, c);
        const double value = (1.0 - wy) * top + wy * bottom;
        out.at(x, y, c) = static_cast<std::uint8_t>(std::clamp(std::lround(value), 0L, 255L));
      }
    }
  }
  return out;
}

std::vector<AugmentedRecord> augment_record(const ImageRecord& record, const Image& image,
                                            const AugmentationSpec& spec, RandomStream& stream) {
  spec.validate();
  std::vector<AugmentedRecord> out;
  out.reserve(static_cast<std::size_t>(spec.copies_per_image));
  const double w = record.width;
  const double h = record.height;

  for (int k = 0; k < spec.copies_per_image; ++k) {
    AugmentationParams params;
    AffineTransform<double> transform;
    std::vector<GroundTruthObject> survivors;
    int attempts = 0;
    while (attempts < kMaxAugmentAttempts) {
      ++attempts;
      params = sample_params(spec, stream);
      transform = augmentation_transform(params, record.width, record.height);
      survivors.clear();
      for (const auto& obj : record.objects) {
        if (auto box = transform_box(transform, obj.box, w, h, spec.min_visibility)) {
          survivors.push_back({obj.label, *box, obj.difficult});
        }
      }
      if (!survivors.empty() || record.objects.empty()) break;
    }

    AugmentedRecord aug;
    aug.record.image_id = record.image_id + "_aug" + std::to_string(k);
    aug.record.width = record.width;
    aug.record.height = record.height;
    aug.record.depth = record.depth;
    aug.record.objects = std::move(survivors);
    aug.record.image_path = aug.record.image_id + ".png";
    aug.image = resample_image(image, transform, record.width, record.height);
    aug.provenance = {aug.record.image_id, record.image_id, params, attempts,
                      aug.record.objects.empty() && !record.objects.empty()};
    out.push_back(std::move(aug));
  }
  return out;
}

AugmentedDataset augment_dataset(const Dataset& dataset, const AugmentationSpec& spec,
                                 const ImageProvider& images) {
  spec.validate();
  const ImageProvider load = images ? images : [](const ImageRecord& r) { return read_image(r.image_path); };

  AugmentedDataset result;
  result.dataset = dataset;
  if (spec.copies_per_image == 0) return result;

  std::set<std::string> ids;
  for (const auto& r : dataset.records) ids.insert(r.image_id);

  for (const auto& record : dataset.records) {
    RandomStream stream = record_stream(spec.seed, record.image_id);
    auto generated = augment_record(record, load(record), spec, stream);
    for (auto& aug : generated) {
      if (!ids.insert(aug.record.image_id).second) {
        throw GenerationError("augmented id '" + aug.record.image_id + "' collides with an existing record");
      }
      result.dataset.records.push_back(aug.record);
      result.generated.push_back(std::move(aug));
    }
  }
  return result;
}

std::string format_provenance_tsv(const std::vector<AugmentedRecord>& generated) {
  std::ostringstream out;
  out << "image_id\tsource_id\trotation_deg\tshear_deg\tzoom\tflips\tattempts\tno_boxes\n";
  for (const auto& aug : generated) {
    const Provenance& p = aug.provenance;
    out << p.image_id << '\t' << p.source_id << '\t' << format_double(p.params.rotation_deg) << '\t'
        << format_double(p.params.shear_deg) << '\t' << format_double(p.params.zoom) << '\t'
        << flips_text(p.params) << '\t' << p.attempts << '\t' << (p.no_surviving_boxes ? 1 : 0) << '\n';
  }
  return out.str();
}

void write_augmented_dataset(const AugmentedDataset& augmented, const fs::path& root) {
  std::set<std::string> generated_ids;
  for (const auto& aug : augmented.generated) generated_ids.insert(aug.record.image_id);

  Dataset originals;
  for (const auto& r : augmented.dataset.records) {
    if (!generated_ids.count(r.image_id)) originals.records.push_back(r);
  }
  write_dataset(originals, root);
  for (const auto& aug : augmented.generated) {
    ImageRecord record = aug.record;
    record.image_path = root / "images" / (record.image_id + ".png");
    write_image(record.image_path, aug.image);
    write_file_atomic(root / "annotations" / (record.image_id + ".xml"), emit_voc_annotation(record));
  }
  write_file_atomic(root / "provenance.tsv", format_provenance_tsv(augmented.generated));
}

}  // namespace notedetect
