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


#include "notedetect/cli.hpp"

#include <csignal>
#include <filesystem>
#include <iomanip>
#include <memory>
#include <optional>
#include <thread>

#include "CLI11.hpp"
#include "notedetect/augment.hpp"
#include "notedetect/detector.hpp"
#include "notedetect/errors.hpp"
#include "notedetect/io_util.hpp"
#include "notedetect/metrics.hpp"
#include "notedetect/model_select.hpp"
#include "notedetect/service.hpp"
#include "notedetect/training_log.hpp"
#include "notedetect/voc.hpp"

namespace notedetect::cli {
namespace {

namespace fs = std::filesystem;

struct AugmentArgs {
  std::string dataset, out;
  std::uint64_t seed = 0;
  AugmentationSpec spec;
};

struct SplitArgs {
  std::string dataset, out;
  std::uint64_t seed = 0;
  double train_fraction = 0.8;
};

struct EvaluateArgs {
  std::string dataset, detections, out;
  std::vector<double> iou_thresholds;
};

struct BackendArgs {
  std::string model, stub_fixture;
  int input_size = kDefaultInputSize;
};

struct InferArgs {
  std::string dataset, image, out;
  BackendArgs backend;
  InferOptions options;
  bool speak_text = false;
};

struct ReportArgs {
  std::string log, out, curves;
};

struct SelectArgs {
  std::string variants, out;
  double budget_ms = 0.0;
};

struct ServeArgs {
  std::string addr = "0.0.0.0";
  int port = 8080;
  std::size_t pool = 1;
  BackendArgs backend;
  InferOptions options;
  std::vector<std::string> cors = {"*"};
};

std::string fmt_optional(const std::optional<double>& v) { return v ? format_fixed4(*v) : "undefined"; }

void add_backend_flags(CLI::App* cmd, BackendArgs& b, bool model_env) {
  auto* model = cmd->add_option("--model", b.model, "ONNX detection model file");
  if (model_env) model->envname("NOTEDETECT_MODEL");
  auto* stub = cmd->add_option("--stub-fixture", b.stub_fixture, "Fixture table for the stub backend");
  model->excludes(stub);
  cmd->add_option("--input-size", b.input_size, "Square model input size in pixels")
      ->capture_default_str()
      ->check(CLI::PositiveNumber);
}

void add_infer_options(CLI::App* cmd, InferOptions& o) {
  cmd->add_option("--score-threshold", o.score_threshold)->capture_default_str()->check(CLI::Range(0.0, 1.0));
  cmd->add_option("--nms-iou", o.nms_iou)->capture_default_str()->check(CLI::Range(0.0, 1.0));
}

std::unique_ptr<DetectorBackend> make_backend(const BackendArgs& b) {
  if (!b.stub_fixture.empty()) {
    auto fixture = std::make_shared<const StubFixture>(StubFixture::load(b.stub_fixture));
    return std::make_unique<StubBackend>(std::move(fixture), b.input_size);
  }
  if (!b.model.empty()) return std::make_unique<OnnxBackend>(b.model, b.input_size);
  throw ArgumentError("one of --model or --stub-fixture is required");
}

int do_augment(const AugmentArgs& a, std::ostream& out) {
  const Dataset input = load_dataset(a.dataset);
  AugmentationSpec spec = a.spec;
  spec.seed = a.seed;
  const AugmentedDataset result = augment_dataset(input, spec);
  write_augmented_dataset(result, a.out);
  out << "input records: " << input.size() << '\n';
  out << "output records: " << result.dataset.size() << '\n';
  return kExitOk;
}

int do_split(const SplitArgs& a, std::ostream& out) {
  const Dataset input = load_dataset(a.dataset);
  const DatasetSplit split = split_dataset(input, a.train_fraction, a.seed);
  write_dataset(split.train, fs::path(a.out) / "train");
  write_dataset(split.validation, fs::path(a.out) / "validation");
  out << "train: " << split.train.size() << '\n';
  out << "validation: " << split.validation.size() << '\n';
  return kExitOk;
}

int do_validate(const std::string& root, std::ostream& out) {
  const fs::path ann_dir = fs::path(root) / "annotations";
  if (!fs::is_directory(ann_dir)) throw IoError("annotations directory not found: " + ann_dir.string());
  std::vector<fs::path> files;
  for (const auto& e : fs::directory_iterator(ann_dir)) {
    if (e.is_regular_file() && e.path().extension() == ".xml") files.push_back(e.path());
  }
  std::sort(files.begin(), files.end());

  std::vector<std::string> problems;
  Dataset dataset;
  for (const auto& file : files) {
    try {
      ImageRecord record = parse_voc_annotation(read_text_file(file));
      const fs::path image = fs::path(root) / "images" / record.image_path.filename();
      if (!fs::is_regular_file(image)) {
        problems.push_back(file.filename().string() + ": missing image " + image.filename().string());
      } else {
        const Image pixels = read_image(image);
        if (pixels.width != record.width || pixels.height != record.height) {
          problems.push_back(file.filename().string() + ": size mismatch with " + image.filename().string());
        }
      }
      dataset.records.push_back(std::move(record));
    } catch (const IoError&) {
      throw;
    } catch (const Error& e) {
      problems.push_back(file.filename().string() + ": " + e.what());
    }
  }
  for (const auto& v : validate_dataset(dataset)) {
    problems.push_back(v.image_id + ": " + std::string(to_string(v.kind)) + ": " + v.message);
  }
  if (problems.empty()) {
    out << "valid: " << dataset.size() << " records\n";
    return kExitOk;
  }
  for (const auto& p : problems) out << p << '\n';
  out << problems.size() << " violation(s)\n";
  return kExitValidation;
}

int do_evaluate(const EvaluateArgs& a, std::ostream& out) {
  const Dataset gt = load_dataset(a.dataset);
  const auto detections = parse_detections(read_text_file(a.detections));
  const auto thresholds = a.iou_thresholds.empty() ? default_iou_thresholds() : a.iou_thresholds;
  const EvaluationReport report = evaluate(gt, detections, thresholds);
  if (!a.out.empty()) write_file_atomic(a.out, to_json(report).dump(2) + "\n");
  for (const auto& c : report.classes) {
    if (c.ap) out << "AP (" << c.label.name() << ") " << format_fixed4(*c.ap) << '\n';
  }
  out << "AP " << fmt_optional(report.ap) << '\n';
  out << "AP50 " << fmt_optional(report.ap50) << '\n';
  out << "AP75 " << fmt_optional(report.ap75) << '\n';
  out << "mAP " << fmt_optional(report.map) << '\n';
  return kExitOk;
}

int do_infer(const InferArgs& a, std::ostream& out, std::ostream& err) {
  if (a.dataset.empty() == a.image.empty()) throw ArgumentError("exactly one of --dataset or --image is required");
  std::vector<std::pair<std::string, fs::path>> inputs;
  if (!a.dataset.empty()) {
    for (const auto& r : load_dataset(a.dataset).records) inputs.emplace_back(r.image_id, r.image_path);
  } else if (fs::is_directory(a.image)) {
    std::vector<fs::path> files;
    for (const auto& e : fs::directory_iterator(a.image)) {
      if (e.is_regular_file() && has_image_extension(e.path())) files.push_back(e.path());
    }
    std::sort(files.begin(), files.end());
    for (const auto& f : files) inputs.emplace_back(f.stem().string(), f);
  } else {
    inputs.emplace_back(fs::path(a.image).stem().string(), a.image);
  }

  auto backend = make_backend(a.backend);
  std::vector<Detection> all;
  std::size_t unknown = 0;
  for (const auto& [id, path] : inputs) {
    const DetectionResult result = infer(*backend, read_image(path), id, a.options);
    unknown += result.unknown_class_dropped;
    if (a.speak_text) {
      if (result.empty_message) {
        out << id << ": " << *result.empty_message << '\n';
      } else {
        for (const auto& d : result.detections) out << id << ": " << label_to_phrase(d.label) << '\n';
      }
    }
    all.insert(all.end(), result.detections.begin(), result.detections.end());
  }
  if (unknown > 0) err << "warning: dropped " << unknown << " detection(s) with unknown class ids\n";
  const std::string text = format_detections(all);
  if (a.out.empty()) {
    if (!a.speak_text) out << text;
  } else {
    write_file_atomic(a.out, text);
  }
  if (!a.speak_text) err << "images: " << inputs.size() << ", detections: " << all.size() << '\n';
  return kExitOk;
}

int do_report(const ReportArgs& a, std::ostream& out) {
  const auto records = parse_training_log(read_text_file(a.log));
  const TrainingSummary summary = summarize_training_log(records);
  if (!a.out.empty()) write_file_atomic(a.out, to_json(summary).dump(2) + "\n");
  if (!a.curves.empty()) write_file_atomic(a.curves, format_curve_table(summary));
  const auto& f = summary.final_epoch;
  out << "epochs " << summary.series.size() << " (final epoch " << f.epoch << ")\n";
  out << "train_total " << fmt_optional(f.train_total) << '\n';
  out << "val_total " << fmt_optional(f.val_total) << '\n';
  out << "det_loss " << fmt_optional(f.detection_loss) << '\n';
  out << "cls_loss " << fmt_optional(f.classification_loss) << '\n';
  out << "box_loss " << fmt_optional(f.box_loss) << '\n';
  out << "train_total_decrease_fraction " << fmt_optional(summary.train_decrease_fraction) << '\n';
  return kExitOk;
}

int do_select(const SelectArgs& a, std::ostream& out) {
  const auto rows = parse_variant_table(read_text_file(a.variants));
  const VariantSelection sel = select_backend_variant(rows, a.budget_ms);
  if (!a.out.empty()) write_file_atomic(a.out, to_json(sel).dump(2) + "\n");
  out << sel.row.name << '\n';
  out << "map_float " << format_fixed4(sel.row.map_float) << ", latency_ms "
      << format_double(sel.row.mobile_latency_ms) << '\n';
  if (sel.budget_exceeded) out << "budget exceeded\n";
  return kExitOk;
}

int do_serve(const ServeArgs& a, std::ostream& out) {
  if (a.backend.model.empty() && a.backend.stub_fixture.empty()) {
    throw ArgumentError("serve needs --model (or NOTEDETECT_MODEL) or --stub-fixture");
  }
  if (a.pool < 1) throw ArgumentError("--pool must be at least 1");
  ServiceConfig config;
  config.address = a.addr;
  config.port = a.port;
  config.pool_size = a.pool;
  config.cors_origins = a.cors;
  config.defaults = a.options;

  sigset_t signals;
  sigemptyset(&signals);
  sigaddset(&signals, SIGINT);
  sigaddset(&signals, SIGTERM);
  pthread_sigmask(SIG_BLOCK, &signals, nullptr);

  DetectService service(config);
  HttpServer server(service);
  const int port = server.bind(config.address, config.port);
  std::thread listener([&] { server.listen_after_bind(); });
  server.wait_until_ready();
  out << "listening on " << config.address << ':' << port << std::endl;

  try {
    std::vector<std::unique_ptr<DetectorBackend>> backends;
    for (std::size_t i = 0; i < a.pool; ++i) backends.push_back(make_backend(a.backend));
    service.attach_backends(std::move(backends));
    out << "model ready" << std::endl;
  } catch (...) {
    server.stop();
    listener.join();
    throw;
  }

  int received = 0;
  sigwait(&signals, &received);
  server.stop();
  listener.join();
  return kExitOk;
}

}  // namespace

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Banknote detection toolkit: dataset augmentation, evaluation, inference and serving",
               "notedetect"};
  app.require_subcommand(1, 1);

  AugmentArgs aug;
  auto* augment = app.add_subcommand("augment", "Expand a VOC dataset with geometric augmentation");
  augment->add_option("--dataset", aug.dataset, "Input dataset directory")->required();
  augment->add_option("--out", aug.out, "Output dataset directory")->required();
  augment->add_option("--seed", aug.seed, "Random seed")->required();
  augment->add_option("--copies", aug.spec.copies_per_image)->capture_default_str();
  augment->add_option("--rotation", aug.spec.rotation_range, "Rotation range, +/- degrees")->capture_default_str();
  augment->add_option("--shear", aug.spec.shear_range, "Shear range, +/- degrees")->capture_default_str();
  augment->add_option("--zoom-low", aug.spec.zoom_low)->capture_default_str();
  augment->add_option("--zoom-high", aug.spec.zoom_high)->capture_default_str();
  augment->add_option("--hflip", aug.spec.horizontal_flip_prob)->capture_default_str();
  augment->add_option("--vflip", aug.spec.vertical_flip_prob)->capture_default_str();
  augment->add_option("--min-visibility", aug.spec.min_visibility)->capture_default_str();

  SplitArgs spl;
  auto* split = app.add_subcommand("split", "Seeded train/validation split");
  split->add_option("--dataset", spl.dataset)->required();
  split->add_option("--out", spl.out, "Directory receiving train/ and validation/")->required();
  split->add_option("--seed", spl.seed)->required();
  split->add_option("--train-fraction", spl.train_fraction)->capture_default_str();

  std::string validate_root;
  auto* validate = app.add_subcommand("validate", "Check a dataset against its invariants");
  validate->add_option("--dataset", validate_root)->required();

  EvaluateArgs ev;
  auto* evaluate_cmd = app.add_subcommand("evaluate", "AP/AP50/AP75/mAP of a detections file");
  evaluate_cmd->add_option("--dataset", ev.dataset, "Ground-truth dataset")->required();
  evaluate_cmd->add_option("--detections", ev.detections, "Detections interchange file")->required();
  evaluate_cmd->add_option("--out", ev.out, "JSON report path");
  evaluate_cmd->add_option("--iou-thresholds", ev.iou_thresholds, "Comma-separated IoU thresholds")
      ->delimiter(',');

  InferArgs inf;
  auto* infer_cmd = app.add_subcommand("infer", "Run detection on images");
  infer_cmd->add_option("--dataset", inf.dataset, "Dataset directory (uses its images)");
  infer_cmd->add_option("--image", inf.image, "Image file or directory");
  infer_cmd->add_option("--out", inf.out, "Detections output file");
  infer_cmd->add_flag("--speak-text", inf.speak_text, "Print the spoken phrase per image");
  add_backend_flags(infer_cmd, inf.backend, false);
  add_infer_options(infer_cmd, inf.options);

  ReportArgs rep;
  auto* report = app.add_subcommand("report", "Summarize a training log");
  report->add_option("--log", rep.log, "Training log CSV")->required();
  report->add_option("--out", rep.out, "JSON summary path");
  report->add_option("--curves", rep.curves, "Per-epoch curve table path");

  SelectArgs sel;
  auto* select = app.add_subcommand("select-model", "Pick a model variant under a latency budget");
  select->add_option("--variants", sel.variants, "Variant table CSV")->required();
  select->add_option("--budget-ms", sel.budget_ms, "Mobile latency budget in ms")->required();
  select->add_option("--out", sel.out, "JSON output path");

  ServeArgs srv;
  auto* serve = app.add_subcommand("serve", "Serve detection over HTTP");
  serve->add_option("--addr", srv.addr)->envname("NOTEDETECT_ADDR")->capture_default_str();
  serve->add_option("--port", srv.port)->capture_default_str()->check(CLI::Range(0, 65535));
  serve->add_option("--pool", srv.pool, "Backend instances")->capture_default_str();
  serve->add_option("--cors", srv.cors, "Allowed origins")->delimiter(',')->capture_default_str();
  add_backend_flags(serve, srv.backend, true);
  add_infer_options(serve, srv.options);

  std::vector<std::string> reversed(args.rbegin(), args.rend());
  try {
    app.parse(reversed);
  } catch (const CLI::ParseError& e) {
    if (e.get_exit_code() == 0) {
      out << app.help();
      return kExitOk;
    }
    err << "error: " << e.what() << "\n\n" << app.help();
    return kExitUsage;
  }

  try {
    if (augment->parsed()) return do_augment(aug, out);
    if (split->parsed()) return do_split(spl, out);
    if (validate->parsed()) return do_validate(validate_root, out);
    if (evaluate_cmd->parsed()) return do_evaluate(ev, out);
    if (infer_cmd->parsed()) return do_infer(inf, out, err);
    if (report->parsed()) return do_report(rep, out);
    if (select->parsed()) return do_select(sel, out);
    if (serve->parsed()) return do_serve(srv, out);
  } catch (const ArgumentError& e) {
    err << "error: " << e.what() << '\n';
    return kExitUsage;
  } catch (const IoError& e) {
    err << "error: " << e.what() << '\n';
    return kExitIo;
  } catch (const InferenceError& e) {
    err << "error: " << e.what() << '\n';
    return kExitIo;
  } catch (const Error& e) {
    err << "error: " << e.what() << '\n';
    return kExitValidation;
  } catch (const fs::filesystem_error& e) {
    err << "error: " << e.what() << '\n';
    return kExitIo;
  }
  err << app.help();
  return kExitUsage;
}

}  // namespace notedetect::cli
