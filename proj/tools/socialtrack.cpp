// Command-line entry points: track, eval, simulate, train-stmp, bench.

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cstdio>
#include <filesystem>
#include <iostream>
#include <memory>
#include <mutex>
#include <random>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include <CLI11.hpp>

#include "socialtrack/bench.hpp"
#include "socialtrack/io.hpp"
#include "socialtrack/metrics.hpp"
#include "socialtrack/pipeline.hpp"
#include "socialtrack/scenesim.hpp"
#include "socialtrack/stmp.hpp"

namespace fs = std::filesystem;
using namespace socialtrack;

namespace {

constexpr int kUsageError = 2;

struct UsageError : Error {
  using Error::Error;
};

double seconds_since(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

// Sequence metadata file: the meta keys of the run config.
std::string format_seqinfo(const SequenceMeta& m) {
  std::ostringstream os;
  os << "image_width = " << config::detail::fmt_double(m.image_width) << "\n"
     << "image_height = " << config::detail::fmt_double(m.image_height) << "\n"
     << "frame_count = " << m.frame_count << "\n"
     << "frame_rate = " << config::detail::fmt_double(m.frame_rate) << "\n";
  return os.str();
}

RunConfig load_config(const std::string& path, const std::string& seqinfo) {
  if (path.empty()) throw UsageError("--config is required");
  if (!fs::exists(path)) throw UsageError("config file not found: " + path);
  RunConfig cfg;
  run_schema().parse_file(cfg, path);
  if (!seqinfo.empty()) run_schema().parse_file(cfg, seqinfo);
  run_schema().apply_env(cfg);
  cfg.validate();
  return cfg;
}

std::shared_ptr<const stmp::CascadeNet> load_net(const RunConfig& cfg) {
  if (!cfg.enable_stmp || cfg.stmp_checkpoint.empty()) return nullptr;
  return std::make_shared<const stmp::CascadeNet>(stmp::load_checkpoint(cfg.stmp_checkpoint));
}

struct TrackArgs {
  std::string config, det, out, seqinfo;
  int jobs = 1;
  bool no_vackf = false, no_gmcs = false, no_stmp = false;
};

struct SequenceJob {
  std::string name;
  fs::path det;
  fs::path out;
};

int cmd_track(const TrackArgs& a) {
  const auto t0 = std::chrono::steady_clock::now();
  RunConfig cfg = load_config(a.config, a.seqinfo);
  if (a.no_vackf) cfg.motion_model = "linear";
  if (a.no_gmcs) cfg.enable_gmcs = false;
  if (a.no_stmp) cfg.enable_stmp = false;
  const auto net = load_net(cfg);

  std::string out = a.out.empty() ? cfg.output : a.out;
  if (out.empty()) throw UsageError("no output path (--out or config key 'output')");

  std::vector<SequenceJob> jobs;
  fs::path echo;
  if (fs::is_directory(a.det)) {
    for (const auto& e : fs::directory_iterator(a.det)) {
      if (e.is_regular_file() && e.path().extension() == ".txt") {
        jobs.push_back({e.path().stem().string(), e.path(), fs::path(out) / e.path().filename()});
      }
    }
    std::sort(jobs.begin(), jobs.end(), [](const auto& x, const auto& y) { return x.name < y.name; });
    echo = fs::path(out) / "run.cfg";
  } else if (fs::is_regular_file(a.det)) {
    jobs.push_back({fs::path(a.det).stem().string(), a.det, out});
    echo = fs::path(out + ".cfg");
  } else {
    throw IoError("detections not found: " + a.det);
  }

  std::vector<long> counts(jobs.size(), 0);
  std::vector<int> frames(jobs.size(), 0);
  std::vector<std::string> errors(jobs.size());
  auto run_one = [&](std::size_t k) {
    try {
      const auto dets = io::read_detections(jobs[k].det.string());
      if (dets.reordered_lines > 0) {
        std::fprintf(stderr, "warning: %s: %zu lines out of frame order, regrouped\n", jobs[k].det.c_str(),
                     dets.reordered_lines);
      }
      TrackerOptions opt = tracker_options(cfg, net);
      const int last = std::max(dets.max_frame, dets.frames.empty() ? 0 : cfg.meta.frame_count);
      const auto outputs = run_tracker(opt, dets.frames, last);
      std::vector<int> ids;
      for (const auto& o : outputs) ids.push_back(o.id);
      std::sort(ids.begin(), ids.end());
      counts[k] = std::unique(ids.begin(), ids.end()) - ids.begin();
      frames[k] = last;
      write_tracks(jobs[k].out.string(), outputs);
    } catch (const std::exception& e) {
      errors[k] = e.what();
    }
  };
  const std::size_t n_workers = std::clamp<std::size_t>(static_cast<std::size_t>(std::max(a.jobs, 1)), 1, jobs.size());
  std::atomic<std::size_t> next{0};
  std::vector<std::thread> pool;
  for (std::size_t w = 0; w < n_workers; ++w) {
    pool.emplace_back([&] {
      for (std::size_t k = next++; k < jobs.size(); k = next++) run_one(k);
    });
  }
  for (auto& t : pool) t.join();

  int status = 0;
  for (std::size_t k = 0; k < jobs.size(); ++k) {
    if (!errors[k].empty()) {
      std::fprintf(stderr, "error: %s: %s\n", jobs[k].name.c_str(), errors[k].c_str());
      status = 1;
    }
  }
  io::write_text_atomic(echo.string(), run_schema().dump(cfg));
  long total_tracks = 0;
  int total_frames = 0;
  for (std::size_t k = 0; k < jobs.size(); ++k) {
    total_tracks += counts[k];
    total_frames += frames[k];
  }
  std::printf("sequences=%zu tracks=%ld frames=%d time=%.2fs\n", jobs.size(), total_tracks, total_frames,
              seconds_since(t0));
  return status;
}

int cmd_eval(const std::string& gt_path, const std::string& res_path, const std::string& out) {
  const auto gt = io::read_rows(gt_path);
  const auto hyp = io::read_rows(res_path);
  int gt_last = 0, hyp_last = 0;
  for (const auto& r : gt) gt_last = std::max(gt_last, r.frame);
  for (const auto& r : hyp) hyp_last = std::max(hyp_last, r.frame);
  if (hyp_last > gt_last) {
    throw Error("sequence length mismatch: result reaches frame " + std::to_string(hyp_last) +
                " but ground truth ends at frame " + std::to_string(gt_last));
  }
  const auto r = metrics::evaluate(gt, hyp);
  std::printf("%8s %8s %8s %6s %6s %6s %5s %5s\n", "MOTA", "MOTP", "IDF1", "IDSW", "FP", "FN", "MT", "ML");
  std::printf("%8.1f %8.1f %8.1f %6ld %6ld %6ld %5d %5d\n", 100 * r.mota, 100 * r.motp, 100 * r.idf1, r.idsw, r.fp,
              r.fn, r.mt, r.ml);
  if (!out.empty()) {
    char buf[1024];
    std::snprintf(buf, sizeof buf,
                  "mota = %.6f\nmotp = %.6f\nidf1 = %.6f\nidp = %.6f\nidr = %.6f\nidsw = %ld\nfp = %ld\nfn = %ld\n"
                  "gt = %ld\ntp = %ld\nidtp = %ld\nidfp = %ld\nidfn = %ld\nmt = %d\nml = %d\ngt_tracks = %d\n",
                  r.mota, r.motp, r.idf1, r.idp, r.idr, r.idsw, r.fp, r.fn, r.gt, r.tp, r.idtp, r.idfp, r.idfn, r.mt,
                  r.ml, r.num_gt_tracks);
    io::write_text_atomic(out, buf);
  }
  return 0;
}

sim::SceneConfig load_scene(const std::string& path) {
  sim::SceneConfig sc;
  if (!path.empty()) sim::scene_schema().parse_file(sc, path);
  sim::scene_schema().apply_env(sc);
  sc.validate();
  return sc;
}

int cmd_simulate(const std::string& scene_path, const std::string& out, long seed) {
  sim::SceneConfig sc = load_scene(scene_path);
  if (seed >= 0) sc.seed = static_cast<std::uint64_t>(seed);
  const sim::Scene scene = sim::generate(sc);
  const fs::path dir(out);
  io::write_rows((dir / "gt.txt").string(), scene.gt);
  io::write_rows((dir / "det.txt").string(), to_rows(scene.detections));
  io::write_text_atomic((dir / "seqinfo.cfg").string(), format_seqinfo(scene.meta));
  io::write_text_atomic((dir / "scene.cfg").string(), sim::dump_scene_config(sc));
  std::printf("targets=%d frames=%d detections=%zu out=%s\n", sc.total_targets(), sc.frames,
              scene.detections.size(), out.c_str());
  return 0;
}

struct TrainArgs {
  std::string config, seqinfo, out, scene;
  std::vector<std::string> gt;
  int scenes = 0;
};

int cmd_train(const TrainArgs& a) {
  const auto t0 = std::chrono::steady_clock::now();
  const RunConfig cfg = load_config(a.config, a.seqinfo);
  const stmp::NetConfig net_cfg = cfg.net_config();
  std::vector<stmp::TrainSample> samples;
  SequenceMeta meta = cfg.meta;
  for (const auto& path : a.gt) {
    const auto rows = io::read_rows(path);
    const auto w = stmp::extract_windows(trajectories_from_rows(rows), meta, net_cfg.window());
    samples.insert(samples.end(), w.begin(), w.end());
  }
  if (a.scenes > 0) {
    const sim::SceneConfig base = load_scene(a.scene);
    for (int k = 0; k < a.scenes; ++k) {
      sim::SceneConfig sc = base;
      sc.seed = base.seed + static_cast<std::uint64_t>(k);
      const auto scene = sim::generate(sc);
      meta = scene.meta;
      const auto w = stmp::extract_windows(trajectories_from_rows(scene.gt), scene.meta, net_cfg.window());
      samples.insert(samples.end(), w.begin(), w.end());
    }
  }
  if (samples.empty()) throw UsageError("no training windows (give --gt files or --scenes)");

  std::mt19937_64 rng(static_cast<std::uint64_t>(cfg.stmp_seed) ^ 0x9e3779b97f4a7c15ULL);
  std::shuffle(samples.begin(), samples.end(), rng);
  if (samples.size() > static_cast<std::size_t>(cfg.stmp_max_samples)) samples.resize(cfg.stmp_max_samples);
  const std::size_t hold = samples.size() >= 10 ? samples.size() / 10 : 0;
  const std::span<const stmp::TrainSample> all(samples);
  const auto held = all.first(hold);
  const auto fit = all.subspan(hold);

  RunConfig with_meta = cfg;
  with_meta.meta = meta;
  const auto result =
      stmp::train(stmp::CascadeNet::random(net_cfg, cfg.train_options().seed), fit, with_meta.train_options());
  stmp::save_checkpoint(result.net, a.out);
  std::printf("samples=%zu final_loss=%.3e", fit.size(), result.loss_curve.back());
  if (!held.empty()) {
    std::printf(" holdout_mse=%.3e last_position_mse=%.3e", stmp::evaluate_mse(result.net, held),
                stmp::last_position_mse(held));
  }
  std::printf(" time=%.1fs out=%s\n", seconds_since(t0), a.out.c_str());
  return 0;
}

struct BenchArgs {
  std::string config, scene, checkpoint;
  int seeds = 20;
  int jobs = 1;
  int epochs = 0;
};

int cmd_bench(const BenchArgs& a) {
  const auto t0 = std::chrono::steady_clock::now();
  sim::BenchConfig bc;
  bc.scene = load_scene(a.scene);
  bc.n_seeds = a.seeds;
  bc.jobs = a.jobs;
  RunConfig rc;
  if (!a.config.empty()) rc = load_config(a.config, "");
  bc.tracker = tracker_options(rc, nullptr);
  bc.net = rc.net_config();
  bc.train = rc.train_options();
  bc.train_input_noise_px = rc.stmp_input_noise_px;
  bc.max_train_samples = static_cast<std::size_t>(rc.stmp_max_samples);
  if (a.epochs > 0) bc.train.epochs = a.epochs;
  std::shared_ptr<const stmp::CascadeNet> net;
  std::string ckpt = a.checkpoint.empty() ? rc.stmp_checkpoint : a.checkpoint;
  if (!ckpt.empty()) net = std::make_shared<const stmp::CascadeNet>(stmp::load_checkpoint(ckpt));

  const auto res = sim::ablation_bench(bc, net);
  std::printf("%-12s %8s %8s %8s %8s\n", "variant", "IDSW", "MOTA", "IDF1", "MOTP");
  for (const auto& row : res.rows) {
    std::printf("%-12s %8.2f %8.1f %8.1f %8.1f\n", sim::variant_name(row.variant), row.mean_idsw,
                100 * row.mean_mota, 100 * row.mean_idf1, 100 * row.mean_motp);
  }
  std::printf("seeds=%d time=%.1fs\n", bc.n_seeds, seconds_since(t0));
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Social-group aware multi-object tracker"};
  app.require_subcommand(1);

  TrackArgs ta;
  auto* track = app.add_subcommand("track", "Track detections from a file or a directory of files");
  track->add_option("--config", ta.config, "run configuration file");
  track->add_option("--det", ta.det, "detection file or directory of *.txt files")->required();
  track->add_option("--out", ta.out, "result file (or directory when --det is a directory)");
  track->add_option("--seqinfo", ta.seqinfo, "sequence metadata file (as written by simulate)");
  track->add_option("--jobs", ta.jobs, "sequences tracked in parallel")->check(CLI::PositiveNumber);
  track->add_flag("--disable-vackf", ta.no_vackf, "use the linear constant-velocity filter");
  track->add_flag("--disable-gmcs", ta.no_gmcs, "no group motion compensation");
  track->add_flag("--disable-stmp", ta.no_stmp, "no memory predictor");

  std::string gt_path, res_path, eval_out;
  auto* eval = app.add_subcommand("eval", "Score a result file against ground truth");
  eval->add_option("--gt", gt_path, "ground-truth file")->required();
  eval->add_option("--result", res_path, "tracker output")->required();
  eval->add_option("--out", eval_out, "key = value report");

  std::string scene_path, sim_out;
  long seed = -1;
  auto* simulate = app.add_subcommand("simulate", "Generate a synthetic sequence");
  simulate->add_option("--scene", scene_path, "scene configuration file");
  simulate->add_option("--out", sim_out, "output directory")->required();
  simulate->add_option("--seed", seed, "override the scene seed");

  TrainArgs tr;
  auto* train = app.add_subcommand("train-stmp", "Train the memory predictor");
  train->add_option("--config", tr.config, "run configuration file");
  train->add_option("--seqinfo", tr.seqinfo, "sequence metadata for --gt files");
  train->add_option("--gt", tr.gt, "ground-truth files (repeatable)");
  train->add_option("--scene", tr.scene, "scene configuration for simulated training data");
  train->add_option("--scenes", tr.scenes, "number of simulated scenes");
  train->add_option("--out", tr.out, "checkpoint path")->required();

  BenchArgs ba;
  auto* bench = app.add_subcommand("bench", "Ablation benchmark on simulated scenes");
  bench->add_option("--config", ba.config, "run configuration file (tracker and training settings)");
  bench->add_option("--scene", ba.scene, "scene configuration file");
  bench->add_option("--seeds", ba.seeds, "number of scenes")->check(CLI::PositiveNumber);
  bench->add_option("--jobs", ba.jobs, "worker threads")->check(CLI::PositiveNumber);
  bench->add_option("--epochs", ba.epochs, "override training epochs");
  bench->add_option("--checkpoint", ba.checkpoint, "use a trained predictor instead of training");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : kUsageError;
  }

  try {
    if (*track) return cmd_track(ta);
    if (*eval) return cmd_eval(gt_path, res_path, eval_out);
    if (*simulate) return cmd_simulate(scene_path, sim_out, seed);
    if (*train) return cmd_train(tr);
    if (*bench) return cmd_bench(ba);
  } catch (const UsageError& e) {
    std::fprintf(stderr, "usage error: %s\n", e.what());
    return kUsageError;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 1;
  }
  return 0;
}
