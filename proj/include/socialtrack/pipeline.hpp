#pragma once

// Glue between the tracker, file formats and configuration.

#include <map>
#include <memory>
#include <span>
#include <string>
#include <vector>

#include "socialtrack/association.hpp"
#include "socialtrack/config.hpp"
#include "socialtrack/io.hpp"
#include "socialtrack/scenesim.hpp"
#include "socialtrack/stmp.hpp"

namespace socialtrack {

/// Every tunable of a tracking run.
struct RunConfig {
  AssocConfig assoc;
  vackf::NoiseConfig noise;
  std::string motion_model = "vackf";
  bool enable_gmcs = true;
  bool enable_stmp = true;
  std::string stmp_checkpoint;
  SequenceMeta meta;
  std::string output;

  // STMP training
  std::string stmp_hidden = "64,32,16";
  int stmp_fc_hidden = 32;
  int stmp_epochs = 100;
  double stmp_lr = 0.01;
  int stmp_batch_size = 64;
  long stmp_seed = 7;
  long stmp_max_samples = 3000;
  double stmp_input_noise_px = 0.5;

  vackf::MotionModel motion() const {
    if (motion_model == "vackf") return vackf::MotionModel::Vackf;
    if (motion_model == "linear") return vackf::MotionModel::Linear;
    throw ConfigError("motion_model must be 'vackf' or 'linear', got '" + motion_model + "'");
  }

  stmp::NetConfig net_config() const {
    int h[3] = {0, 0, 0};
    if (std::sscanf(stmp_hidden.c_str(), " %d , %d , %d", &h[0], &h[1], &h[2]) != 3) {
      throw ConfigError("stmp_hidden must be three comma separated sizes");
    }
    auto cfg = stmp::NetConfig::with_hidden(h[0], h[1], h[2], stmp_fc_hidden);
    cfg.validate();
    return cfg;
  }

  stmp::TrainOptions train_options() const {
    stmp::TrainOptions t;
    t.epochs = stmp_epochs;
    t.lr0 = stmp_lr;
    t.batch_size = stmp_batch_size;
    t.seed = static_cast<std::uint64_t>(stmp_seed);
    t.input_noise = {stmp_input_noise_px / meta.image_width, stmp_input_noise_px / meta.image_height};
    return t;
  }

  void validate() const {
    assoc.validate();
    noise.validate();
    meta.validate();
    motion();
    net_config();
    if (stmp_epochs < 1 || stmp_batch_size < 1 || !(stmp_lr > 0) || stmp_max_samples < 1 ||
        !(stmp_input_noise_px >= 0)) {
      throw ConfigError("STMP training settings must be positive");
    }
  }
};

inline const config::Schema<RunConfig>& run_schema() {
  static const config::Schema<RunConfig> schema = [] {
    config::Schema<RunConfig> s;
    auto assoc = [](auto member) {
      return [member](RunConfig& c) -> auto& { return c.assoc.*member; };
    };
    auto noise = [](auto member) {
      return [member](RunConfig& c) -> auto& { return c.noise.*member; };
    };
    auto meta = [](auto member) {
      return [member](RunConfig& c) -> auto& { return c.meta.*member; };
    };
    auto real = [&s](const std::string& key, auto ref) {
      s.add(
          key, [ref, key](RunConfig& c, const std::string& v) { ref(c) = config::parse_double(key, v); },
          [ref](const RunConfig& c) { return config::detail::fmt_double(ref(const_cast<RunConfig&>(c))); });
    };
    auto integer = [&s](const std::string& key, auto ref) {
      s.add(
          key,
          [ref, key](RunConfig& c, const std::string& v) {
            ref(c) = static_cast<std::remove_reference_t<decltype(ref(c))>>(config::parse_int(key, v));
          },
          [ref](const RunConfig& c) { return std::to_string(ref(const_cast<RunConfig&>(c))); });
    };
    real("tau_high", assoc(&AssocConfig::tau_high));
    real("tau_low", assoc(&AssocConfig::tau_low));
    real("iou_gate_first", assoc(&AssocConfig::iou_gate_first));
    real("iou_gate_second", assoc(&AssocConfig::iou_gate_second));
    real("iou_gate_tentative", assoc(&AssocConfig::iou_gate_tentative));
    integer("track_buffer", assoc(&AssocConfig::track_buffer));
    integer("min_hits", assoc(&AssocConfig::min_hits));
    real("gmcs_sim_threshold", assoc(&AssocConfig::gmcs_sim_threshold));
    integer("max_pseudo_frames", assoc(&AssocConfig::max_pseudo_frames));
    real("std_position", noise(&vackf::NoiseConfig::std_position));
    real("std_velocity", noise(&vackf::NoiseConfig::std_velocity));
    real("std_accel", noise(&vackf::NoiseConfig::std_accel));
    real("std_measurement", noise(&vackf::NoiseConfig::std_measurement));
    real("init_position_scale", noise(&vackf::NoiseConfig::init_position_scale));
    real("init_velocity_scale", noise(&vackf::NoiseConfig::init_velocity_scale));
    real("accel_threshold", noise(&vackf::NoiseConfig::accel_threshold));
    real("accel_decay_rate", noise(&vackf::NoiseConfig::accel_decay_rate));
    s.text("motion_model", &RunConfig::motion_model)
        .boolean("enable_gmcs", &RunConfig::enable_gmcs)
        .boolean("enable_stmp", &RunConfig::enable_stmp)
        .text("stmp_checkpoint", &RunConfig::stmp_checkpoint);
    real("image_width", meta(&SequenceMeta::image_width));
    real("image_height", meta(&SequenceMeta::image_height));
    integer("frame_count", meta(&SequenceMeta::frame_count));
    real("frame_rate", meta(&SequenceMeta::frame_rate));
    s.text("output", &RunConfig::output)
        .text("stmp_hidden", &RunConfig::stmp_hidden)
        .integer("stmp_fc_hidden", &RunConfig::stmp_fc_hidden)
        .integer("stmp_epochs", &RunConfig::stmp_epochs)
        .real("stmp_lr", &RunConfig::stmp_lr)
        .integer("stmp_batch_size", &RunConfig::stmp_batch_size)
        .integer("stmp_seed", &RunConfig::stmp_seed)
        .integer("stmp_max_samples", &RunConfig::stmp_max_samples)
        .real("stmp_input_noise_px", &RunConfig::stmp_input_noise_px);
    return s;
  }();
  return schema;
}

inline RunConfig load_run_config(const std::string& path) {
  RunConfig cfg;
  run_schema().parse_file(cfg, path);
  run_schema().apply_env(cfg);
  cfg.validate();
  return cfg;
}

inline TrackerOptions tracker_options(const RunConfig& cfg, std::shared_ptr<const stmp::CascadeNet> net) {
  TrackerOptions opt;
  opt.assoc = cfg.assoc;
  opt.noise = cfg.noise;
  opt.motion = cfg.motion();
  opt.enable_gmcs = cfg.enable_gmcs;
  opt.enable_stmp = cfg.enable_stmp && net != nullptr;
  opt.stmp_net = std::move(net);
  opt.meta = cfg.meta;
  return opt;
}

/// Runs the tracker over frames 1..last_frame; frames without detections are
/// stepped with an empty list.
inline std::vector<TrackOutput> run_tracker(const TrackerOptions& opt,
                                            const std::map<int, std::vector<Detection>>& frames, int last_frame) {
  Tracker tracker(opt);
  std::vector<TrackOutput> out;
  const std::vector<Detection> none;
  for (int f = 1; f <= last_frame; ++f) {
    const auto it = frames.find(f);
    const auto step = tracker.step(f, it == frames.end() ? none : it->second);
    out.insert(out.end(), step.begin(), step.end());
  }
  return out;
}

inline std::map<int, std::vector<Detection>> by_frame(std::span<const Detection> dets) {
  std::map<int, std::vector<Detection>> out;
  for (const auto& d : dets) out[d.frame].push_back(d);
  return out;
}

inline std::vector<TrackOutput> run_tracker(const TrackerOptions& opt, const sim::Scene& scene) {
  return run_tracker(opt, by_frame(scene.detections), scene.meta.frame_count);
}

inline std::vector<TrackBox> to_rows(std::span<const TrackOutput> outputs) {
  std::vector<TrackBox> rows;
  rows.reserve(outputs.size());
  for (const auto& o : outputs) rows.push_back({o.frame, o.id, o.box, 1.0, o.class_id, 1.0});
  return rows;
}

inline std::vector<TrackBox> to_rows(std::span<const Detection> dets) {
  std::vector<TrackBox> rows;
  rows.reserve(dets.size());
  for (const auto& d : dets) rows.push_back({d.frame, -1, d.bbox, d.score, d.class_id, 1.0});
  return rows;
}

inline void write_tracks(const std::string& path, std::span<const TrackOutput> outputs) {
  io::write_rows(path, to_rows(outputs));
}

/// Ground-truth rows grouped into per-id center trajectories.
inline stmp::Trajectories trajectories_from_rows(std::span<const TrackBox> rows) {
  stmp::Trajectories out;
  for (const auto& r : rows) out[r.id].push_back({r.frame, {r.bbox.x_center, r.bbox.y_center}});
  return out;
}

}  // namespace socialtrack
