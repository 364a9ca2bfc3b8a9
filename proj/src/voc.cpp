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


#include "notedetect/voc.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <numeric>
#include <random>
#include <set>
#include <sstream>

#include <boost/property_tree/ptree.hpp>
#include <boost/property_tree/xml_parser.hpp>

#include "notedetect/errors.hpp"
#include "notedetect/image.hpp"
#include "notedetect/io_util.hpp"

namespace notedetect {
namespace fs = std::filesystem;
namespace pt = boost::property_tree;

namespace {

std::string required_text(const pt::ptree& node, const std::string& path) {
  auto child = node.get_child_optional(path);
  if (!child) throw ParseError("missing VOC element <" + path + ">");
  return std::string(trim(child->data()));
}

double required_number(const pt::ptree& node, const std::string& path) {
  const std::string text = required_text(node, path);
  auto value = parse_double(text);
  if (!value || !std::isfinite(*value)) {
    throw ParseError("element <" + path + "> is not a number: '" + text + "'");
  }
  return *value;
}

int required_dimension(const pt::ptree& node, const std::string& path) {
  const double v = required_number(node, path);
  if (v != std::floor(v) || v < 0 || v > 1e9) {
    throw ParseError("element <" + path + "> is not a non-negative integer");
  }
  return static_cast<int>(v);
}

bool parse_flag(const pt::ptree& node, const std::string& path) {
  auto child = node.get_child_optional(path);
  if (!child) return false;
  const std::string_view text = trim(child->data());
  if (text.empty() || text == "0" || text == "false") return false;
  if (text == "1" || text == "true") return true;
  throw ParseError("element <" + path + "> must be 0 or 1, got '" + std::string(text) + "'");
}

std::string describe_box(const BoundingBox& b) {
  std::ostringstream ss;
  ss << b;
  return ss.str();
}

std::string xml_escape(std::string_view text) {
  std::string out;
  out.reserve(text.size());
  for (char c : text) {
    switch (c) {
      case '&': out += "&amp;"; break;
      case '<': out += "&lt;"; break;
      case '>': out += "&gt;"; break;
      case '"': out += "&quot;"; break;
      case '\'': out += "&apos;"; break;
      default: out += c;
    }
  }
  return out;
}

long long round_half_up(double v) { return static_cast<long long>(std::floor(v + 0.5)); }

std::string box_problem(const BoundingBox& b, int width, int height) {
  if (!(b.xmin < b.xmax)) return "xmin >= xmax";
  if (!(b.ymin < b.ymax)) return "ymin >= ymax";
  if (!b.fits_within(width, height)) return "outside the image bounds";
  return {};
}

}  // namespace

const ImageRecord* Dataset::find(std::string_view image_id) const {
  for (const auto& r : records) {
    if (r.image_id == image_id) return &r;
  }
  return nullptr;
}

ImageRecord parse_voc_annotation(std::string_view xml_text) {
  pt::ptree tree;
  try {
    std::istringstream in{std::string(xml_text)};
    pt::read_xml(in, tree);
  } catch (const pt::xml_parser_error& e) {
    throw ParseError("malformed XML: " + e.message(), static_cast<int>(e.line()));
  }
  auto root = tree.get_child_optional("annotation");
  if (!root) throw ParseError("missing <annotation> root element");

  ImageRecord record;
  const std::string filename = required_text(*root, "filename");
  if (filename.empty()) throw ParseError("empty <filename>");
  record.image_path = filename;
  record.image_id = fs::path(filename).stem().string();
  record.width = required_dimension(*root, "size.width");
  record.height = required_dimension(*root, "size.height");
  record.depth = root->get_child_optional("size.depth") ? required_dimension(*root, "size.depth") : 3;
  if (record.width < 1 || record.height < 1) {
    throw ValidationError("image size " + std::to_string(record.width) + "x" +
                          std::to_string(record.height) + " must be at least 1x1");
  }

  std::size_t index = 0;
  for (const auto& [key, node] : *root) {
    if (key != "object") continue;
    const std::string name = required_text(node, "name");
    auto label = ClassLabel::try_from_name(name);
    if (!label) throw LabelError("object " + std::to_string(index) + ": unknown class name '" + name + "'");

    const double xmin = required_number(node, "bndbox.xmin");
    const double ymin = required_number(node, "bndbox.ymin");
    const double xmax = required_number(node, "bndbox.xmax");
    const double ymax = required_number(node, "bndbox.ymax");
    GroundTruthObject obj{*label, BoundingBox{xmin - 1.0, ymin - 1.0, xmax, ymax},
                          parse_flag(node, "difficult")};
    if (auto problem = box_problem(obj.box, record.width, record.height); !problem.empty()) {
      std::ostringstream ss;
      ss << "object " << index << " ('" << name << "') bndbox (" << xmin << ", " << ymin << ", "
         << xmax << ", " << ymax << ") in " << record.width << "x" << record.height
         << " image: " << problem;
      throw ValidationError(ss.str());
    }
    record.objects.push_back(obj);
    ++index;
  }
  return record;
}

std::string emit_voc_annotation(const ImageRecord& record) {
  std::string filename = record.image_path.filename().string();
  if (filename.empty()) filename = record.image_id;

  std::ostringstream out;
  out << "<annotation>\n";
  out << "  <filename>" << xml_escape(filename) << "</filename>\n";
  out << "  <size>\n";
  out << "    <width>" << record.width << "</width>\n";
  out << "    <height>" << record.height << "</height>\n";
  out << "    <depth>" << record.depth << "</depth>\n";
  out << "  </size>\n";
  for (const auto& obj : record.objects) {
    // 1-based inclusive; a sub-pixel box still keeps one pixel.
    long long xmin = std::clamp<long long>(round_half_up(obj.box.xmin + 1.0), 1, record.width);
    long long ymin = std::clamp<long long>(round_half_up(obj.box.ymin + 1.0), 1, record.height);
    long long xmax = std::clamp<long long>(round_half_up(obj.box.xmax), xmin, record.width);
    long long ymax = std::clamp<long long>(round_half_up(obj.box.ymax), ymin, record.height);
    out << "  <object>\n";
    out << "    <name>" << xml_escape(obj.label.name()) << "</name>\n";
    out << "    <difficult>" << (obj.difficult ? 1 : 0) << "</difficult>\n";
    out << "    <bndbox>\n";
    out << "      <xmin>" << xmin << "</xmin>\n";
    out << "      <ymin>" << ymin << "</ymin>\n";
    out << "      <xmax>" << xmax << "</xmax>\n";
    out << "      <ymax>" << ymax << "</ymax>\n";
    out << "    </bndbox>\n";
    out << "  </object>\n";
  }
  out << "</annotation>\n";
  return out.str();
}

Dataset load_dataset(const fs::path& annotations_dir, const fs::path& images_dir) {
  std::error_code ec;
  if (!fs::is_directory(annotations_dir, ec)) {
    throw IoError("annotations directory not found: " + annotations_dir.string());
  }
  std::vector<fs::path> xml_files;
  for (const auto& entry : fs::directory_iterator(annotations_dir)) {
    if (entry.is_regular_file() && entry.path().extension() == ".xml") xml_files.push_back(entry.path());
  }
  std::sort(xml_files.begin(), xml_files.end());

  std::map<std::string, fs::path> images_by_stem;
  if (fs::is_directory(images_dir, ec)) {
    for (const auto& entry : fs::directory_iterator(images_dir)) {
      if (entry.is_regular_file() && has_image_extension(entry.path())) {
        images_by_stem.emplace(entry.path().stem().string(), entry.path());
      }
    }
  } else if (!xml_files.empty()) {
    throw IoError("images directory not found: " + images_dir.string());
  }

  Dataset dataset;
  for (const auto& xml : xml_files) {
    ImageRecord record;
    try {
      record = parse_voc_annotation(read_text_file(xml));
    } catch (const ParseError& e) {
      throw ParseError(xml.filename().string() + ": " + e.message(), e.line());
    } catch (const LabelError& e) {
      throw LabelError(xml.filename().string() + ": " + e.what());
    } catch (const ValidationError& e) {
      throw ValidationError(xml.filename().string() + ": " + e.what());
    }

    fs::path image = images_dir / record.image_path.filename();
    if (!fs::is_regular_file(image, ec)) {
      auto it = images_by_stem.find(record.image_id);
      if (it == images_by_stem.end()) it = images_by_stem.find(xml.stem().string());
      if (it == images_by_stem.end()) {
        throw LoadError(xml.filename().string() + ": no image file for '" +
                        record.image_path.string() + "' in " + images_dir.string());
      }
      image = it->second;
    }
    const Image pixels = read_image(image);
    if (pixels.width != record.width || pixels.height != record.height) {
      throw ConsistencyError(xml.filename().string() + ": annotation says " +
                             std::to_string(record.width) + "x" + std::to_string(record.height) +
                             " but " + image.filename().string() + " is " +
                             std::to_string(pixels.width) + "x" + std::to_string(pixels.height));
    }
    record.image_path = image;
    dataset.records.push_back(std::move(record));
  }
  std::stable_sort(dataset.records.begin(), dataset.records.end(),
                   [](const ImageRecord& a, const ImageRecord& b) { return a.image_id < b.image_id; });
  return dataset;
}

Dataset load_dataset(const fs::path& root) {
  return load_dataset(root / "annotations", root / "images");
}

void write_dataset(const Dataset& dataset, const fs::path& root) {
  const fs::path ann_dir = root / "annotations";
  const fs::path img_dir = root / "images";
  std::error_code ec;
  fs::create_directories(ann_dir, ec);
  fs::create_directories(img_dir, ec);
  if (ec) throw IoError("cannot create dataset directories under " + root.string());
  for (const auto& record : dataset.records) {
    const fs::path dest = img_dir / record.image_path.filename();
    if (fs::weakly_canonical(record.image_path, ec) != fs::weakly_canonical(dest, ec)) {
      write_file_atomic(dest, read_binary_file(record.image_path));
    }
    ImageRecord out = record;
    out.image_path = dest;
    write_file_atomic(ann_dir / (record.image_id + ".xml"), emit_voc_annotation(out));
  }
}

DatasetSplit split_dataset(const Dataset& dataset, double train_fraction, std::uint64_t seed) {
  if (!(train_fraction > 0.0 && train_fraction < 1.0)) {
    throw ArgumentError("train fraction must lie in the open interval (0, 1)");
  }
  if (dataset.empty()) throw ArgumentError("cannot split an empty dataset");

  std::vector<std::size_t> order(dataset.size());
  std::iota(order.begin(), order.end(), 0);
  std::mt19937_64 rng(seed);
  std::shuffle(order.begin(), order.end(), rng);

  const double n = static_cast<double>(dataset.size());
  const auto n_train = static_cast<std::size_t>(std::ceil(n * train_fraction - 1e-9));
  DatasetSplit split;
  for (std::size_t i = 0; i < order.size(); ++i) {
    (i < n_train ? split.train : split.validation).records.push_back(dataset.records[order[i]]);
  }
  return split;
}

std::string_view to_string(Violation::Kind kind) {
  switch (kind) {
    case Violation::Kind::kDuplicateId: return "duplicate-id";
    case Violation::Kind::kBadDimensions: return "bad-dimensions";
    case Violation::Kind::kOutOfBounds: return "out-of-bounds";
    case Violation::Kind::kZeroArea: return "zero-area";
  }
  return "unknown";
}

std::vector<Violation> validate_record(const ImageRecord& record, std::size_t record_index) {
  std::vector<Violation> out;
  if (record.width < 1 || record.height < 1) {
    out.push_back({Violation::Kind::kBadDimensions, record_index, record.image_id, std::nullopt,
                   "image size " + std::to_string(record.width) + "x" +
                       std::to_string(record.height) + " is not positive"});
  }
  for (std::size_t i = 0; i < record.objects.size(); ++i) {
    const BoundingBox& b = record.objects[i].box;
    if (b.is_degenerate()) {
      out.push_back({Violation::Kind::kZeroArea, record_index, record.image_id, i,
                     "box " + describe_box(b) + " has no area"});
    } else if (!b.fits_within(record.width, record.height)) {
      out.push_back({Violation::Kind::kOutOfBounds, record_index, record.image_id, i,
                     "box " + describe_box(b) + " exceeds " + std::to_string(record.width) + "x" +
                         std::to_string(record.height)});
    }
  }
  return out;
}

std::vector<Violation> validate_dataset(const Dataset& dataset) {
  std::vector<Violation> out;
  std::map<std::string, std::size_t> first_seen;
  for (std::size_t r = 0; r < dataset.records.size(); ++r) {
    const ImageRecord& record = dataset.records[r];
    auto [it, inserted] = first_seen.emplace(record.image_id, r);
    if (!inserted) {
      out.push_back({Violation::Kind::kDuplicateId, r, record.image_id, std::nullopt,
                     "image_id already used by record " + std::to_string(it->second)});
    }
    auto per_record = validate_record(record, r);
    out.insert(out.end(), per_record.begin(), per_record.end());
  }
  return out;
}

}  // namespace notedetect
