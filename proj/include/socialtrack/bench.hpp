#pragma once

// Ablation benchmark on synthetic scenes: the same seeds are tracked by four
// cumulative tracker variants and scored against ground truth.

#include <array>
#include <memory>
#include <numeric>
#include <random>
#include <string>
#include <thread>
#include <vector>

#include "socialtrack/metrics.hpp"
#include "socialtrack/pipeline.hpp"
#include "socialtrack/scenesim.hpp"
#include "socialtrack/stmp.hpp"

namespace socialtrack::sim {

enum class Variant { BaselineKf, Vackf, VackfGmcs, VackfGmcsStmp };

inline constexpr std::array<Variant, 4> kVariants{Variant::BaselineKf, Variant::Vackf, Variant::VackfGmcs,
                                                  Variant::VackfGmcsStmp};

inline const char* variant_name(Variant v) {
  switch (v) {
    case Variant::BaselineKf: return "baseline-KF";
    case Variant::Vackf: return "+VACKF";
    case Variant::VackfGmcs: return "+GMCS";
    case Variant::VackfGmcsStmp: return "+STMP";
  }
  return "?";
}

inline TrackerOptions variant_options(TrackerOptions base, Variant v) {
  base.motion = v == Variant::BaselineKf ? vackf::MotionModel::Linear : vackf::MotionModel::Vackf;
  base.enable_gmcs = v == Variant::VackfGmcs || v == Variant::VackfGmcsStmp;
  base.enable_stmp = v == Variant::VackfGmcsStmp;
  return base;
}

struct BenchConfig {
  SceneConfig scene;
  int n_seeds = 20;
  std::uint64_t first_seed = 1;
  TrackerOptions tracker;
  // STMP is trained on ground truth of separate scenes (seeds offset below).
  int train_scenes = 4;
  std::uint64_t train_seed_offset = 100000;
  std::size_t max_train_samples = 3000;
  stmp::NetConfig net;
  stmp::TrainOptions train;
  double train_input_noise_px = 0.5;  // overrides train.input_noise
  int jobs = 1;
};

struct VariantRow {
  Variant variant = Variant::BaselineKf;
  std::vector<metrics::EvalReport> runs;  // one per seed, in seed order
  double mean_idsw = 0, mean_mota = 0, mean_idf1 = 0, mean_motp = 0;
};

struct BenchResult {
  std::array<VariantRow, 4> rows;
  double stmp_train_loss = 0.0;
};

/// Trains the memory predictor on ground-truth windows of dedicated scenes.
inline stmp::TrainResult train_stmp_on_scenes(const BenchConfig& cfg) {
  std::vector<stmp::TrainSample> samples;
  for (int k = 0; k < cfg.train_scenes; ++k) {
    SceneConfig sc = cfg.scene;
    sc.seed = cfg.train_seed_offset + static_cast<std::uint64_t>(k);
    const Scene scene = generate(sc);
    auto windows = stmp::extract_windows(trajectories_from_rows(scene.gt), scene.meta, cfg.net.window());
    samples.insert(samples.end(), windows.begin(), windows.end());
  }
  std::mt19937_64 rng(cfg.train.seed ^ 0x9e3779b97f4a7c15ULL);
  std::shuffle(samples.begin(), samples.end(), rng);
  if (samples.size() > cfg.max_train_samples) samples.resize(cfg.max_train_samples);
  stmp::TrainOptions opt = cfg.train;
  opt.input_noise = {cfg.train_input_noise_px / cfg.scene.image_width, cfg.train_input_noise_px / cfg.scene.image_height};
  return stmp::train(stmp::CascadeNet::random(cfg.net, cfg.train.seed), samples, opt);
}

inline metrics::EvalReport run_variant(const TrackerOptions& base, Variant v, const Scene& scene) {
  TrackerOptions opt = variant_options(base, v);
  opt.meta = scene.meta;
  const auto outputs = run_tracker(opt, scene);
  const auto rows = to_rows(outputs);
  return metrics::evaluate(scene.gt, rows);
}

/// Runs every variant on every seed. If `net` is null the predictor is trained
/// first. Seeds may run on several threads; reduction is in seed order.
inline BenchResult ablation_bench(const BenchConfig& cfg, std::shared_ptr<const stmp::CascadeNet> net = nullptr) {
  BenchResult result;
  if (!net) {
    auto trained = train_stmp_on_scenes(cfg);
    result.stmp_train_loss = trained.loss_curve.empty() ? 0.0 : trained.loss_curve.back();
    net = std::make_shared<const stmp::CascadeNet>(std::move(trained.net));
  }
  TrackerOptions base = cfg.tracker;
  base.stmp_net = net;

  const int n = cfg.n_seeds;
  std::vector<std::array<metrics::EvalReport, 4>> per_seed(n);
  auto work = [&](int k) {
    SceneConfig sc = cfg.scene;
    sc.seed = cfg.first_seed + static_cast<std::uint64_t>(k);
    const Scene scene = generate(sc);
    for (std::size_t v = 0; v < kVariants.size(); ++v) per_seed[k][v] = run_variant(base, kVariants[v], scene);
  };
  const int jobs = std::max(1, std::min(cfg.jobs, n));
  if (jobs == 1) {
    for (int k = 0; k < n; ++k) work(k);
  } else {
    std::vector<std::thread> pool;
    for (int j = 0; j < jobs; ++j) {
      pool.emplace_back([&, j] {
        for (int k = j; k < n; k += jobs) work(k);
      });
    }
    for (auto& t : pool) t.join();
  }

  for (std::size_t v = 0; v < kVariants.size(); ++v) {
    VariantRow& row = result.rows[v];
    row.variant = kVariants[v];
    for (int k = 0; k < n; ++k) row.runs.push_back(per_seed[k][v]);
    for (const auto& r : row.runs) {
      row.mean_idsw += static_cast<double>(r.idsw);
      row.mean_mota += r.mota;
      row.mean_idf1 += r.idf1;
      row.mean_motp += r.motp;
    }
    if (n > 0) {
      row.mean_idsw /= n;
      row.mean_mota /= n;
      row.mean_idf1 /= n;
      row.mean_motp /= n;
    }
  }
  return result;
}

}  // namespace socialtrack::sim
