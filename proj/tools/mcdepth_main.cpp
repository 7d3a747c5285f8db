// Copyright 2026 The mcdepth Authors
// SPDX-License-Identifier: Apache-2.0
//
// mcdepth: data generation, projection, stereo, training, evaluation,
// gradient checks, disparity reports and the consistency A/B run.

#include <chrono>
#include <cstdlib>
#include <filesystem>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <spdlog/spdlog.h>

#include "mcdepth/cloud.hpp"
#include "mcdepth/config.hpp"
#include "mcdepth/dataset.hpp"
#include "mcdepth/error.hpp"
#include "mcdepth/experiment.hpp"
#include "mcdepth/geom.hpp"
#include "mcdepth/gradcheck.hpp"
#include "mcdepth/io.hpp"
#include "mcdepth/manifest.hpp"
#include "mcdepth/metrics.hpp"
#include "mcdepth/stereo.hpp"
#include "mcdepth/train.hpp"

namespace fs = std::filesystem;
using namespace mcdepth;

namespace {

constexpr int kExitConfig = 2;
constexpr int kExitData = 3;
constexpr int kExitAcceptance = 4;

struct Common {
  std::string config;
  std::optional<std::uint64_t> seed;
  std::string out;
  double cap_sparse = kDefaultSparseCap;
  double cap_dense = kDefaultDenseCap;
};

using Clock = std::chrono::steady_clock;

void configure_logging() {
  spdlog::set_level(spdlog::level::warn);
  if (const char* env = std::getenv("MCDEPTH_LOG")) {
    const auto level = spdlog::level::from_str(env);
    // from_str maps unknown names to "off"
    if (level != spdlog::level::off || std::string(env) == "off") spdlog::set_level(level);
  }
  spdlog::set_pattern("[%H:%M:%S.%e] [%l] %v");
}

KeyValues load_config(const std::string& path) { return path.empty() ? KeyValues{} : KeyValues::read(path); }

void write_manifest(const fs::path& dir, RunManifest m, Clock::time_point start) {
  m.wall_time_s = std::chrono::duration<double>(Clock::now() - start).count();
  io::write_text(dir / "manifest.txt", m.format());
}

fs::path require_out(const Common& c) {
  if (c.out.empty()) fail(ErrorKind::kConfig, "--out is required");
  fs::create_directories(c.out);
  return c.out;
}

// ---------------------------------------------------------------- gen

struct GenArgs {
  std::string preset = "orchard";
  int count = -1;
  int width = 128;
  int height = 96;
  double focal = 100.0;
};

int run_gen(const Common& c, const GenArgs& a) {
  const auto start = Clock::now();
  KeyValues kv = load_config(c.config);
  if (!kv.has("tag")) kv.set("tag", a.preset == "stereo" ? "dense_and_sparse" : "sparse_only");
  if (a.preset != "orchard" && a.preset != "stereo") fail(ErrorKind::kConfig, "--preset must be orchard or stereo");
  if (!kv.has("width")) kv.set("width", a.width);
  if (!kv.has("height")) kv.set("height", a.height);
  if (!kv.has("fx")) kv.set("fx", a.focal);
  if (!kv.has("name")) kv.set("name", a.preset);
  if (a.count >= 0) kv.set("count", a.count);
  if (c.seed) kv.set("seed", *c.seed);
  kv.set("sparse_cap", c.cap_sparse);
  kv.set("dense_cap", c.cap_dense);
  const DatasetSpec spec = DatasetSpec::from_kv(kv);
  const fs::path out = require_out(c);
  const Dataset ds = generate_dataset(spec);

  RunManifest m;
  m.command = "gen";
  m.config_hash = config_hash(spec.to_kv());
  m.seed = spec.seed;
  m.outputs = {out.string()};
  m.wall_time_s = std::chrono::duration<double>(Clock::now() - start).count();
  write_dataset(out, ds, m.format());
  io::write_text(out / "dataset.cfg", spec.to_kv().format());
  std::cout << "wrote " << ds.samples.size() << " samples to " << out.string() << '\n';
  return 0;
}

// ---------------------------------------------------------------- project

struct ProjectArgs {
  std::string cloud;
  std::string calib;
  double z_min = kDefaultZMin;
};

int run_project(const Common& c, const ProjectArgs& a) {
  const auto start = Clock::now();
  const Calibration calib = read_calibration(a.calib);
  PointCloud cloud = read_cloud(a.cloud);
  if (cloud.frame != kCameraFrame) {
    const auto it = calib.extrinsics.find(cloud.frame);
    if (it == calib.extrinsics.end()) {
      fail(ErrorKind::kConfig, "calibration has no T_" + cloud.frame + " for the cloud's frame");
    }
    const PointCloud clouds[] = {cloud};
    const RigidTransform ext[] = {it->second};
    cloud = merge(clouds, ext);
  }
  const DepthMap depth = project(cloud, calib.intrinsics, a.z_min, c.cap_sparse);
  const fs::path out = require_out(c);
  io::write_depth_pfm(out / "sparse.pfm", depth);
  RunManifest m;
  m.command = "project";
  KeyValues kv;
  kv.set("z_min", a.z_min);
  kv.set("z_max", c.cap_sparse);
  m.config_hash = config_hash(kv);
  m.inputs = {a.cloud, a.calib};
  m.outputs = {(out / "sparse.pfm").string()};
  write_manifest(out, m, start);
  std::cout << depth.count_valid() << " valid pixels of " << depth.size() << '\n';
  return 0;
}

// ---------------------------------------------------------------- stereo

struct StereoArgs {
  std::string left;
  std::string right;
  std::string calib;
  int max_disparity = 64;
  int block_radius = 3;
  bool no_lr_check = false;
  bool no_subpixel = false;
};

int run_stereo(const Common& c, const StereoArgs& a) {
  const auto start = Clock::now();
  const Calibration calib = read_calibration(a.calib);
  if (!calib.baseline) fail(ErrorKind::kConfig, "calibration needs a baseline for stereo");
  StereoRig rig;
  rig.K = calib.intrinsics;
  rig.baseline = *calib.baseline;
  rig.max_disparity = a.max_disparity;
  rig.block_radius = a.block_radius;
  rig.left_right_check = !a.no_lr_check;
  rig.subpixel = !a.no_subpixel;
  const Image left = io::read_pnm(a.left);
  const Image right = io::read_pnm(a.right);
  const DisparityMap disparity = match(left, right, rig);
  const DepthMap depth = disparity_to_depth(disparity, rig, c.cap_dense);
  const fs::path out = require_out(c);
  io::write_disparity_pfm(out / "disparity.pfm", disparity);
  io::write_depth_pfm(out / "dense.pfm", depth);
  RunManifest m;
  m.command = "stereo";
  KeyValues kv;
  kv.set("max_disparity", rig.max_disparity);
  kv.set("block_radius", rig.block_radius);
  kv.set("left_right_check", rig.left_right_check);
  kv.set("subpixel", rig.subpixel);
  kv.set("z_max", c.cap_dense);
  m.config_hash = config_hash(kv);
  m.inputs = {a.left, a.right, a.calib};
  m.outputs = {(out / "disparity.pfm").string(), (out / "dense.pfm").string()};
  write_manifest(out, m, start);
  std::cout << depth.count_valid() << " valid pixels of " << depth.size() << '\n';
  return 0;
}

// ---------------------------------------------------------------- train

struct TrainArgs {
  std::string dense;
  std::string sparse;
  std::vector<std::string> val;
  std::string consistency;
  bool freeze_weights = false;
  int epochs = -1;
  std::string resume;
};

KeyValues canonical_kv(const CanonicalSpace& space) {
  KeyValues kv;
  kv.set("f_mc", space.f_mc);
  for (std::size_t i = 0; i < space.source_focals.size(); ++i) {
    kv.set("source_focal_" + std::to_string(i), space.source_focals[i]);
  }
  return kv;
}

int run_train(const Common& c, const TrainArgs& a) {
  const auto start = Clock::now();
  KeyValues kv = load_config(c.config);
  if (c.seed) kv.set("seed", *c.seed);
  if (!a.consistency.empty()) {
    if (a.consistency != "on" && a.consistency != "off") fail(ErrorKind::kConfig, "--consistency must be on or off");
    kv.set("consistency", a.consistency == "on");
  }
  if (a.freeze_weights) kv.set("freeze_weights", true);
  if (a.epochs > 0) kv.set("epochs", a.epochs);
  kv.set("depth_cap_sparse", c.cap_sparse);
  kv.set("depth_cap_dense", c.cap_dense);
  const TrainConfig config = TrainConfig::from_kv(kv);
  if (a.dense.empty() && a.sparse.empty()) fail(ErrorKind::kConfig, "train needs --dense and/or --sparse data");

  std::optional<Dataset> dense, sparse;
  if (!a.dense.empty()) dense = read_dataset(a.dense);
  if (!a.sparse.empty()) sparse = read_dataset(a.sparse);
  if (dense && dense->tag != DatasetTag::kDenseAndSparse) {
    fail(ErrorKind::kData, "--dense dataset is not dense_and_sparse");
  }
  std::vector<Dataset> val_sets;
  for (const auto& v : a.val) val_sets.push_back(read_dataset(v));

  const fs::path out = require_out(c);
  FitOptions options;
  for (std::size_t i = 0; i < val_sets.size(); ++i) {
    options.validation.push_back({fs::path(a.val[i]).filename().string(), &val_sets[i]});
  }
  if (!a.resume.empty()) options.resume = TrainerState::load(a.resume);

  std::ostringstream step_log, epoch_log;
  options.on_step = [&](const StepRecord& s) { step_log << format_step(s) << '\n'; };
  options.on_epoch = [&](const EpochRecord& e) { epoch_log << format_epoch(e) << '\n'; };
  const TrainResult result = fit(dense ? &*dense : nullptr, sparse ? &*sparse : nullptr, config, options);

  result.state.save(out);
  io::write_text(out / "train.log", step_log.str());
  io::write_text(out / "epochs.log", epoch_log.str());
  io::write_text(out / "config.txt", config.to_kv().format());
  io::write_text(out / "canonical.txt", canonical_kv(result.space).format());
  RunManifest m;
  m.command = "train";
  m.config_hash = config_hash(config.to_kv());
  m.seed = config.seed;
  if (!a.dense.empty()) m.inputs.push_back(a.dense);
  if (!a.sparse.empty()) m.inputs.push_back(a.sparse);
  for (const auto& v : a.val) m.inputs.push_back(v);
  m.outputs = {(out / "model.ckpt").string(), (out / "trainer.state").string(), (out / "train.log").string()};
  write_manifest(out, m, start);
  if (!result.epochs.empty()) std::cout << format_epoch(result.epochs.back()) << '\n';
  return 0;
}

// ---------------------------------------------------------------- eval

struct EvalArgs {
  std::string pred;
  std::string gt;
  std::string model;
  std::string data;
  double z_cap = -1.0;
};

int run_eval(const Common& c, const EvalArgs& a) {
  const auto start = Clock::now();
  const fs::path out = require_out(c);
  RunManifest m;
  m.command = "eval";
  std::string text;
  if (!a.pred.empty() || !a.gt.empty()) {
    if (a.pred.empty() || a.gt.empty()) fail(ErrorKind::kConfig, "eval needs both --pred and --gt");
    const DepthMap pred = io::read_depth_pfm(a.pred, DepthKind::kDense);
    const DepthMap gt = io::read_depth_pfm(a.gt, DepthKind::kSparse);
    const double cap = a.z_cap >= 0.0 ? a.z_cap : c.cap_sparse;
    text = format_metrics(evaluate(pred, gt, cap));
    m.inputs = {a.pred, a.gt};
    KeyValues kv;
    kv.set("z_cap", cap);
    m.config_hash = config_hash(kv);
  } else {
    if (a.model.empty() || a.data.empty()) fail(ErrorKind::kConfig, "eval needs --pred/--gt or --model/--data");
    const DepthNet model = DepthNet::load(fs::path(a.model) / "model.ckpt");
    const KeyValues canon = KeyValues::read(fs::path(a.model) / "canonical.txt");
    CanonicalSpace space;
    space.f_mc = canon.get_double("f_mc", 0.0);
    if (!(space.f_mc > 0.0)) fail(ErrorKind::kData, "canonical.txt has no positive f_mc");
    const Dataset data = read_dataset(a.data);
    const ValidationSplit splits[] = {{fs::path(a.data).filename().string(), &data}};
    std::ostringstream body;
    for (const auto& row : validate(model, space, splits, {c.cap_sparse, c.cap_dense})) {
      body << "[" << row.split << "/" << row.mask << "]\n" << format_metrics(row.metrics);
    }
    text = body.str();
    m.inputs = {a.model, a.data};
    KeyValues kv;
    kv.set("depth_cap_sparse", c.cap_sparse);
    kv.set("depth_cap_dense", c.cap_dense);
    m.config_hash = config_hash(kv);
  }
  io::write_text(out / "metrics.txt", text);
  m.outputs = {(out / "metrics.txt").string()};
  write_manifest(out, m, start);
  std::cout << text;
  return 0;
}

// ---------------------------------------------------------------- gradcheck

struct GradcheckArgs {
  int trials = 100;
  std::string filter;
};

int run_gradcheck_cmd(const Common& c, const GradcheckArgs& a) {
  const auto start = Clock::now();
  GradcheckOptions opt;
  opt.trials = a.trials;
  opt.filter = a.filter;
  if (c.seed) opt.seed = *c.seed;
  const GradcheckReport report = run_gradcheck(opt);
  const std::string text = format_gradcheck(report);
  std::cout << text;
  if (!c.out.empty()) {
    const fs::path out = require_out(c);
    io::write_text(out / "gradcheck.txt", text);
    RunManifest m;
    m.command = "gradcheck";
    KeyValues kv;
    kv.set("trials", opt.trials);
    kv.set("epsilon", opt.epsilon);
    kv.set("tolerance", opt.tolerance);
    kv.set("filter", opt.filter);
    m.config_hash = config_hash(kv);
    m.seed = opt.seed;
    m.outputs = {(out / "gradcheck.txt").string()};
    write_manifest(out, m, start);
  }
  return report.passed() ? 0 : kExitAcceptance;
}

// ---------------------------------------------------------------- report

struct ReportArgs {
  std::string data;
};

int run_report(const Common& c, const ReportArgs& a) {
  const auto start = Clock::now();
  const Dataset data = read_dataset(a.data);
  std::vector<DisparityStats> uncapped, capped;
  int skipped = 0;
  for (const auto& s : data.samples) {
    if (!s.dense) continue;
    try {
      const DisparityReport r = disparity_report(*s.dense, s.sparse, {c.cap_sparse, c.cap_dense});
      uncapped.push_back(r.uncapped);
      if (r.capped.n > 0) capped.push_back(r.capped);
    } catch (const Error& e) {
      if (e.kind() != ErrorKind::kEmptyOverlap) throw;
      ++skipped;
    }
  }
  if (uncapped.empty()) fail(ErrorKind::kData, "report: no sample has overlapping dense and sparse depth");
  std::string text = format_disparity(aggregate(uncapped), aggregate(capped));
  if (skipped) text += "skipped_images: " + std::to_string(skipped) + "\n";
  const fs::path out = require_out(c);
  io::write_text(out / "report.txt", text);
  RunManifest m;
  m.command = "report";
  KeyValues kv;
  kv.set("depth_cap_sparse", c.cap_sparse);
  kv.set("depth_cap_dense", c.cap_dense);
  m.config_hash = config_hash(kv);
  m.inputs = {a.data};
  m.outputs = {(out / "report.txt").string()};
  write_manifest(out, m, start);
  std::cout << text;
  return 0;
}

// ---------------------------------------------------------------- ab

struct AbArgs {
  std::vector<std::uint64_t> seeds;
  int epochs = -1;
};

int run_ab_cmd(const Common& c, const AbArgs& a) {
  const auto start = Clock::now();
  KeyValues kv = load_config(c.config);
  if (a.epochs > 0) {
    kv.set("epochs", a.epochs);
    if (!kv.has("t_max")) kv.set("t_max", a.epochs);
  }
  kv.set("depth_cap_sparse", c.cap_sparse);
  kv.set("depth_cap_dense", c.cap_dense);
  if (c.seed) kv.set("seed", *c.seed);
  KeyValues merged = AbConfig{}.to_kv();
  merged.merge(kv);
  const AbConfig base = AbConfig::from_kv(merged);
  std::vector<std::uint64_t> seeds = a.seeds;
  if (seeds.empty()) seeds.push_back(base.seed);

  const fs::path out = require_out(c);
  std::ostringstream all;
  bool passed = true;
  for (std::uint64_t seed : seeds) {
    AbConfig cfg = base;
    cfg.seed = seed;
    cfg.train.seed = seed;
    const AbCorpus corpus = make_ab_corpus(cfg);
    const AbResult result = run_ab(cfg, corpus);
    all << "seed " << seed << " (" << corpus.total_samples() << " samples, " << cfg.image_size << "x"
        << cfg.image_size << ")\n"
        << format_ab_table(result) << '\n';
    std::cout << "seed " << seed << '\n' << format_ab_table(result) << std::flush;
    passed = passed && result.passed();
  }
  io::write_text(out / "ab.txt", all.str());
  io::write_text(out / "config.txt", base.to_kv().format());
  RunManifest m;
  m.command = "ab";
  m.config_hash = config_hash(base.to_kv());
  m.seed = seeds.front();
  m.outputs = {(out / "ab.txt").string()};
  write_manifest(out, m, start);
  return passed ? 0 : kExitAcceptance;
}

void add_common(CLI::App* app, Common& c, bool caps = true) {
  app->add_option("--config", c.config, "key = value configuration file");
  app->add_option("--seed", c.seed, "random seed");
  app->add_option("--out", c.out, "output directory");
  if (caps) {
    app->add_option("--depth-cap-sparse", c.cap_sparse, "sparse depth cap in meters")->capture_default_str();
    app->add_option("--depth-cap-dense", c.cap_dense, "dense depth cap in meters")->capture_default_str();
  }
}

int exit_code(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::kConfig:
    case ErrorKind::kInvalidInput:
      return kExitConfig;
    default:
      return kExitData;
  }
}

}  // namespace

int main(int argc, char** argv) {
  configure_logging();
  CLI::App app{"mcdepth: metric depth from mixed sparse and dense supervision"};
  app.set_version_flag("--version", MCDEPTH_VERSION);
  app.require_subcommand(1);

  Common common;
  GenArgs gen;
  auto* gen_cmd = app.add_subcommand("gen", "generate a synthetic dataset split");
  add_common(gen_cmd, common);
  gen_cmd->add_option("--preset", gen.preset, "orchard (sparse only) or stereo (dense and sparse)")->capture_default_str();
  gen_cmd->add_option("--count", gen.count, "number of samples");
  gen_cmd->add_option("--width", gen.width)->capture_default_str();
  gen_cmd->add_option("--height", gen.height)->capture_default_str();
  gen_cmd->add_option("--focal", gen.focal)->capture_default_str();

  ProjectArgs proj;
  auto* proj_cmd = app.add_subcommand("project", "project a point cloud to a sparse depth map");
  add_common(proj_cmd, common);
  proj_cmd->add_option("--cloud", proj.cloud)->required();
  proj_cmd->add_option("--calib", proj.calib)->required();
  proj_cmd->add_option("--z-min", proj.z_min)->capture_default_str();

  StereoArgs st;
  auto* st_cmd = app.add_subcommand("stereo", "block-matching stereo to disparity and dense depth");
  add_common(st_cmd, common);
  st_cmd->add_option("--left", st.left)->required();
  st_cmd->add_option("--right", st.right)->required();
  st_cmd->add_option("--calib", st.calib)->required();
  st_cmd->add_option("--max-disparity", st.max_disparity)->capture_default_str();
  st_cmd->add_option("--block-radius", st.block_radius)->capture_default_str();
  st_cmd->add_flag("--no-lr-check", st.no_lr_check);
  st_cmd->add_flag("--no-subpixel", st.no_subpixel);

  TrainArgs tr;
  auto* tr_cmd = app.add_subcommand("train", "train the depth network");
  add_common(tr_cmd, common);
  tr_cmd->add_option("--dense", tr.dense, "dense_and_sparse dataset directory");
  tr_cmd->add_option("--sparse", tr.sparse, "sparse_only dataset directory");
  tr_cmd->add_option("--val", tr.val, "validation dataset directory (repeatable)");
  tr_cmd->add_option("--consistency", tr.consistency, "on or off");
  tr_cmd->add_flag("--freeze-weights", tr.freeze_weights, "keep alpha, beta, gamma fixed");
  tr_cmd->add_option("--epochs", tr.epochs);
  tr_cmd->add_option("--resume", tr.resume, "directory with model.ckpt and trainer.state");

  EvalArgs ev;
  auto* ev_cmd = app.add_subcommand("eval", "depth metrics");
  add_common(ev_cmd, common);
  ev_cmd->add_option("--pred", ev.pred, "predicted depth PFM");
  ev_cmd->add_option("--gt", ev.gt, "ground-truth depth PFM");
  ev_cmd->add_option("--z-cap", ev.z_cap, "depth cap for --pred/--gt (default: sparse cap)");
  ev_cmd->add_option("--model", ev.model, "train output directory");
  ev_cmd->add_option("--data", ev.data, "dataset directory");

  GradcheckArgs gc;
  auto* gc_cmd = app.add_subcommand("gradcheck", "finite-difference gradient suites");
  add_common(gc_cmd, common, false);
  gc_cmd->add_option("--trials", gc.trials)->capture_default_str();
  gc_cmd->add_option("--filter", gc.filter, "only suites containing this string");

  ReportArgs rp;
  auto* rp_cmd = app.add_subcommand("report", "dense vs sparse disagreement before and after caps");
  add_common(rp_cmd, common);
  rp_cmd->add_option("--data", rp.data)->required();

  AbArgs ab;
  auto* ab_cmd = app.add_subcommand("ab", "consistency on/off comparison on a synthetic corpus");
  add_common(ab_cmd, common);
  ab_cmd->add_option("--seeds", ab.seeds, "several seeds")->delimiter(',');
  ab_cmd->add_option("--epochs", ab.epochs);

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForVersion& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    std::cerr << "error: kind=config message=\"" << e.what() << "\"\n";
    return kExitConfig;
  }

  try {
    if (*gen_cmd) return run_gen(common, gen);
    if (*proj_cmd) return run_project(common, proj);
    if (*st_cmd) return run_stereo(common, st);
    if (*tr_cmd) return run_train(common, tr);
    if (*ev_cmd) return run_eval(common, ev);
    if (*gc_cmd) return run_gradcheck_cmd(common, gc);
    if (*rp_cmd) return run_report(common, rp);
    if (*ab_cmd) return run_ab_cmd(common, ab);
  } catch (const Error& e) {
    std::cerr << "error: kind=" << to_string(e.kind()) << " message=\"" << e.what() << "\"\n";
    return exit_code(e.kind());
  } catch (const std::exception& e) {
    std::cerr << "error: kind=data message=\"" << e.what() << "\"\n";
    return kExitData;
  }
  return kExitConfig;
}
