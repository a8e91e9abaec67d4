// Copyright 2026 The mmfusion Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include "mmfusion/cli.hpp"

#include <CLI11.hpp>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <memory>
#include <ostream>
#include <set>
#include <sstream>

#include "mmfusion/anchor_gen.hpp"
#include "mmfusion/bev_encoder.hpp"
#include "mmfusion/config.hpp"
#include "mmfusion/dataset.hpp"
#include "mmfusion/detector/model.hpp"
#include "mmfusion/detector/trainer.hpp"
#include "mmfusion/error.hpp"
#include "mmfusion/eval_ap.hpp"
#include "mmfusion/geometry.hpp"
#include "mmfusion/image.hpp"
#include "mmfusion/kitti_io.hpp"
#include "mmfusion/nn/checkpoint.hpp"
#include "mmfusion/synthetic.hpp"
#include "mmfusion/viz.hpp"

namespace fs = std::filesystem;

namespace mmfusion::cli {
namespace {

struct GlobalOptions {
  std::string config_path;
  std::optional<std::uint64_t> seed;
  std::string out;
  std::string root;
  std::string subset = "training";
};

fs::path data_root(const GlobalOptions& g) {
  if (!g.root.empty()) return g.root;
  if (const char* env = std::getenv(kDataRootVariable); env != nullptr && *env != '\0') return env;
  throw ValueError(std::string("no dataset root: pass --root or set ") + kDataRootVariable);
}

fs::path require_out(const GlobalOptions& g) {
  if (g.out.empty()) throw ValueError("--out is required");
  return g.out;
}

DetectorConfig load_config(const GlobalOptions& g, const fs::path& fallback = {}) {
  DetectorConfig cfg = DetectorConfig::full_scale();
  if (!g.config_path.empty()) {
    cfg = load_detector_config(kitti::read_text_file(g.config_path));
  } else if (!fallback.empty() && fs::exists(fallback)) {
    cfg = load_detector_config(kitti::read_text_file(fallback));
  }
  if (g.seed) cfg.seed = *g.seed;
  return cfg;
}

std::vector<std::string> frame_list(const data::KittiDataset& ds, const std::string& split) {
  if (split.empty()) return ds.frame_ids();
  if (!fs::exists(split)) throw IoError("split file not found: " + split);
  return data::read_split(split);
}

void write_manifest(const fs::path& dir, const GlobalOptions& g, const std::string& root,
                    const std::string& split, std::uint64_t seed) {
  std::ostringstream os;
  os << "config = " << g.config_path << "\n"
     << "root = " << root << "\n"
     << "split = " << split << "\n"
     << "out = " << dir.string() << "\n"
     << "seed = " << seed << "\n";
  kitti::write_text_file(dir / "run.txt", os.str());
}

std::vector<Box3D> car_boxes(std::span<const GroundTruthObject> objects, const Calibration& calib) {
  std::vector<Box3D> boxes;
  for (const GroundTruthObject& o : objects) {
    if (o.class_name == "Car") boxes.push_back(geometry::box_from_label(o, calib));
  }
  return boxes;
}

int cmd_bev(const GlobalOptions& g, const std::string& frame_id) {
  const fs::path out = require_out(g);
  const DetectorConfig cfg = load_config(g);
  data::KittiDataset ds(data_root(g), g.subset);
  const bev::BevMaps maps = bev::encode_bev(ds.load_cloud(frame_id), cfg.grid);
  const std::vector<std::byte> bytes = bev::serialize_bev(maps);
  kitti::write_binary_file(out, bytes);
  return 0;
}

int cmd_anchors(const GlobalOptions& g, const std::string& split, int clusters, std::ostream& out) {
  const fs::path path = require_out(g);
  const DetectorConfig cfg = load_config(g);
  const std::string root = data_root(g).string();
  data::KittiDataset ds(root, g.subset);
  const std::vector<std::string> ids = frame_list(ds, split);
  if (ids.empty()) throw ValueError("no frames to cluster");
  std::vector<GroundTruthObject> cars;
  for (const std::string& id : ids) {
    for (GroundTruthObject& o : ds.load_labels(id)) {
      if (o.class_name == "Car") cars.push_back(std::move(o));
    }
  }
  const std::vector<anchors::DimPair> dims = anchors::cluster_dimensions(cars, clusters, cfg.seed);
  kitti::write_text_file(path, anchors::write_dims_file("Car", dims));
  const Calibration calib = kitti::parse_calibration(kitti::read_text_file(ds.paths(ids.front()).calib));
  const anchors::AnchorSet lattice = anchors::generate_anchors(
      cfg.grid, dims, kitti::kDefaultGroundPlane, calib, cfg.anchor_height, cfg.anchor_stride);
  out << cars.size() << " Car labels, " << dims.size() << " clusters, " << lattice.size()
      << " anchors per frame before filtering\n";
  return 0;
}

int cmd_train(const GlobalOptions& g, const std::string& split, const std::string& dims_file,
              std::ostream& out) {
  const fs::path dir = require_out(g);
  DetectorConfig cfg = load_config(g);
  if (!dims_file.empty()) cfg.anchor_dims = anchors::parse_dims_file(kitti::read_text_file(dims_file), "Car");
  const std::string root = data_root(g).string();
  data::KittiDataset ds(root, g.subset);
  const std::vector<std::string> ids = frame_list(ds, split);

  fs::create_directories(dir);
  kitti::write_text_file(dir / "config.txt", cfg.to_text());
  write_manifest(dir, g, root, split, cfg.seed);

  detector::Detector det(cfg);
  det.initialize(cfg.seed);
  std::ofstream log(dir / "train_log.csv");
  log << "iteration,frame,loss,rpn_cls,rpn_reg,dh_cls,dh_reg,learning_rate\n";
  detector::TrainOptions options;
  options.checkpoint_dir = dir;
  options.on_step = [&](const detector::TrainLogEntry& e) {
    char line[256];
    std::snprintf(line, sizeof(line), "%ld,%s,%.6f,%.6f,%.6f,%.6f,%.6f,%.6g\n", e.iteration,
                  e.frame_id.c_str(), e.loss.total(), e.loss.rpn_classification,
                  e.loss.rpn_regression, e.loss.dh_classification, e.loss.dh_regression,
                  e.learning_rate);
    log << line;
    if ((e.iteration + 1) % 100 == 0 || e.iteration + 1 == cfg.iterations) {
      std::snprintf(line, sizeof(line), "iter %ld loss %.4f lr %.3g\n", e.iteration + 1,
                    e.loss.total(), e.learning_rate);
      out << line << std::flush;
    }
  };
  detector::train(det, ids.size(), [&](std::size_t i) {
    return detector::prepare_frame(ds.load(ids[i]), cfg);
  }, options);
  return 0;
}

int cmd_infer(const GlobalOptions& g, const std::string& split, const std::string& checkpoint,
              std::ostream& out) {
  const fs::path dir = require_out(g);
  if (checkpoint.empty()) throw ValueError("--checkpoint is required");
  const DetectorConfig cfg = load_config(g, fs::path(checkpoint).parent_path() / "config.txt");
  const std::string root = data_root(g).string();
  data::KittiDataset ds(root, g.subset);
  const std::vector<std::string> ids = frame_list(ds, split);

  detector::Detector det(cfg);
  std::vector<nn::Parameter*> params = det.parameters();
  nn::load_checkpoint(fs::path(checkpoint), params);

  fs::create_directories(dir);
  write_manifest(dir, g, root, split, cfg.seed);
  std::size_t total = 0;
  for (const std::string& id : ids) {
    data::Frame frame = ds.load(id, false);
    const detector::PreparedFrame prepared = detector::prepare_frame(frame, cfg);
    const std::vector<Detection> dets = det.detect(prepared);
    total += dets.size();
    kitti::write_text_file(dir / (id + ".txt"),
                           kitti::write_detections(dets, frame.calib, frame.image.size()));
  }
  out << total << " detections over " << ids.size() << " frames\n";
  return 0;
}

eval::FrameObjects read_label_dir(const fs::path& dir, std::span<const std::string> ids,
                                  bool missing_is_empty) {
  eval::FrameObjects objects;
  for (const std::string& id : ids) {
    const fs::path file = dir / (id + ".txt");
    if (!fs::exists(file)) {
      if (!missing_is_empty) throw IoError("missing label file for frame " + id);
      objects[id] = {};
      continue;
    }
    objects[id] = kitti::parse_labels(kitti::read_text_file(file));
  }
  return objects;
}

std::vector<std::string> ids_in_dir(const fs::path& dir) {
  std::vector<std::string> ids;
  if (!fs::is_directory(dir)) throw IoError("not a directory: " + dir.string());
  for (const auto& entry : fs::directory_iterator(dir)) {
    if (entry.path().extension() == ".txt") ids.push_back(entry.path().stem().string());
  }
  std::sort(ids.begin(), ids.end());
  return ids;
}

int cmd_eval(const GlobalOptions& g, const std::string& det_dir, const std::string& gt_dir,
             const std::string& split, const std::string& metric, bool r40, std::ostream& out) {
  if (det_dir.empty() || gt_dir.empty()) throw ValueError("--det and --gt are required");
  std::vector<std::string> ids;
  if (!split.empty()) {
    if (!fs::exists(split)) throw IoError("split file not found: " + split);
    ids = data::read_split(split);
  } else {
    ids = ids_in_dir(gt_dir);
  }
  const std::set<std::string> wanted(ids.begin(), ids.end());
  std::vector<std::string> unexpected;
  for (const std::string& id : ids_in_dir(det_dir)) {
    if (wanted.count(id) == 0) unexpected.push_back(id);
  }
  if (!unexpected.empty()) {
    std::string msg = "detections for frames without ground truth:";
    for (const std::string& id : unexpected) msg += " " + id;
    throw ValueError(msg);
  }
  const eval::FrameObjects gts = read_label_dir(gt_dir, ids, false);
  const eval::FrameObjects dets = read_label_dir(det_dir, ids, true);

  std::vector<eval::Metric> metrics;
  if (metric == "bev" || metric == "both") metrics.push_back(eval::Metric::kBev);
  if (metric == "3d" || metric == "both") metrics.push_back(eval::Metric::k3d);
  const eval::Interpolation mode = r40 ? eval::Interpolation::kR40 : eval::Interpolation::kR11;
  std::vector<eval::EvalResult> results;
  for (eval::Metric m : metrics) results.push_back(eval::evaluate(dets, gts, m, mode));

  out << eval::format_table(results);
  const std::string csv = eval::format_csv(results);
  if (g.out.empty()) {
    out << csv;
  } else {
    kitti::write_text_file(g.out, csv);
  }
  return 0;
}

int cmd_viz(const GlobalOptions& g, const std::string& frame_id, const std::string& det_file) {
  const fs::path path = require_out(g);
  const DetectorConfig cfg = load_config(g);
  data::KittiDataset ds(data_root(g), g.subset);
  const data::FramePaths paths = ds.paths(frame_id);
  const Calibration calib = kitti::parse_calibration(kitti::read_text_file(paths.calib));
  const bev::BevMaps maps = bev::encode_bev(ds.load_cloud(frame_id), cfg.grid);

  std::vector<Box3D> truth;
  if (fs::exists(paths.label)) truth = car_boxes(ds.load_labels(frame_id), calib);
  std::vector<Box3D> dets;
  if (!det_file.empty()) {
    dets = car_boxes(kitti::parse_labels(kitti::read_text_file(det_file)), calib);
  }
  image::write_png(path, viz::render_bev(maps, truth, dets));
  return 0;
}

int cmd_synth(const GlobalOptions& g, int count, std::ostream& out) {
  const fs::path root = require_out(g);
  if (count <= 0) throw ValueError("--count must be positive");
  const std::uint64_t seed = g.seed.value_or(1);
  const std::vector<data::Frame> frames = synth::make_frames(count, seed);
  std::vector<std::string> ids;
  for (const data::Frame& f : frames) {
    data::write_frame(root, f, g.subset);
    ids.push_back(f.id);
  }
  kitti::write_text_file(root / "all.txt", data::format_split(ids));
  write_manifest(root, g, root.string(), (root / "all.txt").string(), seed);
  out << frames.size() << " frames written to " << root.string() << "\n";
  return 0;
}

}  // namespace

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"LIDAR and camera fusion 3D car detector"};
  app.require_subcommand(1);
  GlobalOptions g;
  std::uint64_t seed = 0;
  app.add_option("--config", g.config_path, "Detector config file (key = value)");
  auto* seed_opt = app.add_option("--seed", seed, "Random seed");
  app.add_option("--out", g.out, "Output file or directory");
  app.add_option("--root", g.root, std::string("Dataset root (default: $") + kDataRootVariable + ")");
  app.add_option("--subset", g.subset, "Dataset subset directory")->capture_default_str();

  std::string frame_id, split, det_dir, gt_dir, det_file, checkpoint, dims_file;
  std::string metric = "both";
  int clusters = 2, count = 8;
  bool r40 = false;
  std::function<int()> action;

  auto* bev = app.add_subcommand("bev", "Write the BEV maps of one frame");
  bev->add_option("--frame", frame_id, "Frame id")->required();
  bev->callback([&] { action = [&] { return cmd_bev(g, frame_id); }; });

  auto* anc = app.add_subcommand("anchors", "Cluster Car sizes into an anchor dims file");
  anc->add_option("--split", split, "Split file (default: every frame)");
  anc->add_option("--clusters", clusters, "Number of size clusters")->capture_default_str();
  anc->callback([&] { action = [&] { return cmd_anchors(g, split, clusters, out); }; });

  auto* train = app.add_subcommand("train", "Train the detector");
  train->add_option("--split", split, "Split file (default: every frame)");
  train->add_option("--anchors", dims_file, "Anchor dims file");
  train->callback([&] { action = [&] { return cmd_train(g, split, dims_file, out); }; });

  auto* infer = app.add_subcommand("infer", "Run a checkpoint and write KITTI result files");
  infer->add_option("--checkpoint", checkpoint, "Checkpoint file")->required();
  infer->add_option("--split", split, "Split file (default: every frame)");
  infer->callback([&] { action = [&] { return cmd_infer(g, split, checkpoint, out); }; });

  auto* ev = app.add_subcommand("eval", "Average precision of result files against labels");
  ev->add_option("--det", det_dir, "Directory of result files")->required();
  ev->add_option("--gt", gt_dir, "Directory of label files")->required();
  ev->add_option("--split", split, "Split file (default: every label file)");
  ev->add_option("--metric", metric, "bev, 3d or both")
      ->check(CLI::IsMember({"bev", "3d", "both"}))
      ->capture_default_str();
  ev->add_flag("--r40", r40, "40-point interpolation instead of 11-point");
  ev->callback([&] { action = [&] { return cmd_eval(g, det_dir, gt_dir, split, metric, r40, out); }; });

  auto* vz = app.add_subcommand("viz", "Render a BEV picture with box outlines to PNG");
  vz->add_option("--frame", frame_id, "Frame id")->required();
  vz->add_option("--det", det_file, "Result file to overlay");
  vz->callback([&] { action = [&] { return cmd_viz(g, frame_id, det_file); }; });

  auto* syn = app.add_subcommand("synth", "Write a procedural dataset");
  syn->add_option("--count", count, "Number of frames")->capture_default_str();
  syn->callback([&] { action = [&] { return cmd_synth(g, count, out); }; });

  std::vector<std::string> reversed(args.rbegin(), args.rend());
  if (!reversed.empty()) reversed.pop_back();
  try {
    app.parse(reversed);
  } catch (const CLI::Success&) {
    out << app.help();
    return 0;
  } catch (const CLI::Error& e) {
    err << "error: " << e.what() << "\n";
    return 2;
  }
  if (seed_opt->count() > 0) g.seed = seed;

  try {
    return action ? action() : 2;
  } catch (const std::exception& e) {
    std::string msg = e.what();
    for (char& c : msg) {
      if (c == '\n') c = ' ';
    }
    err << "error: " << msg << "\n";
    return 2;
  }
}

}  // namespace mmfusion::cli
