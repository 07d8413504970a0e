#pragma once

// Seeded synthetic scenes: groups of co-moving targets plus solitary ones,
// with acceleration events, occlusion windows and clutter detections.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <random>
#include <string>
#include <vector>

#include "socialtrack/config.hpp"
#include "socialtrack/errors.hpp"
#include "socialtrack/model.hpp"

namespace socialtrack::sim {

/// Frames [first, last] (inclusive) during which `target` (0-based) is not
/// detected.
struct OcclusionSpan {
  int target = 0;
  int first = 1;
  int last = 1;
};

struct SceneConfig {
  int n_groups = 4;
  int targets_per_group = 5;
  int solo_targets = 4;
  int frames = 300;
  double image_width = 1920.0;
  double image_height = 1080.0;
  int num_classes = 1;

  double speed_min = 1.5;  // group speed range, px/frame
  double speed_max = 5.0;
  double turn_std = 0.004;       // heading random walk, rad/frame
  double member_spacing = 1.5;   // grid pitch in target widths
  double jitter_std = 0.03;      // member offset velocity noise, px/frame
  double width_min = 18.0;
  double width_max = 30.0;
  double aspect_min = 0.6;       // height / width
  double aspect_max = 0.9;

  double accel_event_prob = 0.02;  // per group per frame
  double accel_magnitude = 0.25;   // px/frame^2
  int accel_duration_min = 8;
  int accel_duration_max = 24;

  double occlusion_fraction = 0.15;  // share of each target's frames occluded
  int occlusion_min = 6;
  int occlusion_max = 18;
  std::vector<OcclusionSpan> occlusions;  // explicit extra windows

  double clutter_rate = 0.3;  // probability per clutter slot per frame
  int clutter_slots = 3;
  double bbox_noise_std = 1.0;  // px
  double score_mean = 0.85;
  double score_std = 0.08;
  double clutter_score_mean = 0.3;
  double clutter_score_std = 0.1;

  std::uint64_t seed = 1;

  int total_targets() const { return n_groups * targets_per_group + solo_targets; }

  void validate() const {
    if (n_groups < 0 || targets_per_group < 0 || solo_targets < 0 || total_targets() == 0) {
      throw ConfigError("scene needs at least one target");
    }
    if (frames < 9) throw ConfigError("scene needs at least 9 frames");
    if (!(image_width > 0 && image_height > 0)) throw ConfigError("image size must be positive");
    if (num_classes < 1) throw ConfigError("num_classes must be >= 1");
    if (!(speed_min >= 0 && speed_max >= speed_min)) throw ConfigError("invalid speed range");
    if (!(width_min > 0 && width_max >= width_min && aspect_min > 0 && aspect_max >= aspect_min)) {
      throw ConfigError("invalid target size range");
    }
    for (double r : {accel_event_prob, occlusion_fraction, clutter_rate}) {
      if (!(r >= 0.0 && r <= 1.0)) throw ConfigError("rates must lie in [0, 1]");
    }
    if (accel_duration_min < 1 || accel_duration_max < accel_duration_min) {
      throw ConfigError("invalid acceleration duration range");
    }
    if (occlusion_min < 1 || occlusion_max < occlusion_min) throw ConfigError("invalid occlusion length range");
    if (clutter_slots < 0) throw ConfigError("clutter_slots must be >= 0");
    if (!(jitter_std >= 0 && bbox_noise_std >= 0 && score_std >= 0 && clutter_score_std >= 0 && turn_std >= 0)) {
      throw ConfigError("noise levels must be >= 0");
    }
    for (const auto& o : occlusions) {
      if (o.target < 0 || o.target >= total_targets()) throw ConfigError("occlusion targets an unknown target");
      if (o.first < 1 || o.last > frames || o.first > o.last) throw ConfigError("occlusion span out of range");
    }
  }
};

inline const config::Schema<SceneConfig>& scene_schema() {
  static const config::Schema<SceneConfig> schema = [] {
    config::Schema<SceneConfig> s;
    s.integer("n_groups", &SceneConfig::n_groups)
        .integer("targets_per_group", &SceneConfig::targets_per_group)
        .integer("solo_targets", &SceneConfig::solo_targets)
        .integer("frames", &SceneConfig::frames)
        .real("image_width", &SceneConfig::image_width)
        .real("image_height", &SceneConfig::image_height)
        .integer("num_classes", &SceneConfig::num_classes)
        .real("speed_min", &SceneConfig::speed_min)
        .real("speed_max", &SceneConfig::speed_max)
        .real("turn_std", &SceneConfig::turn_std)
        .real("member_spacing", &SceneConfig::member_spacing)
        .real("jitter_std", &SceneConfig::jitter_std)
        .real("width_min", &SceneConfig::width_min)
        .real("width_max", &SceneConfig::width_max)
        .real("aspect_min", &SceneConfig::aspect_min)
        .real("aspect_max", &SceneConfig::aspect_max)
        .real("accel_event_prob", &SceneConfig::accel_event_prob)
        .real("accel_magnitude", &SceneConfig::accel_magnitude)
        .integer("accel_duration_min", &SceneConfig::accel_duration_min)
        .integer("accel_duration_max", &SceneConfig::accel_duration_max)
        .real("occlusion_fraction", &SceneConfig::occlusion_fraction)
        .integer("occlusion_min", &SceneConfig::occlusion_min)
        .integer("occlusion_max", &SceneConfig::occlusion_max)
        .real("clutter_rate", &SceneConfig::clutter_rate)
        .integer("clutter_slots", &SceneConfig::clutter_slots)
        .real("bbox_noise_std", &SceneConfig::bbox_noise_std)
        .real("score_mean", &SceneConfig::score_mean)
        .real("score_std", &SceneConfig::score_std)
        .real("clutter_score_mean", &SceneConfig::clutter_score_mean)
        .real("clutter_score_std", &SceneConfig::clutter_score_std)
        .integer("seed", &SceneConfig::seed);
    // occlusion = target:first-last, may repeat
    s.add(
        "occlusion",
        [](SceneConfig& c, const std::string& v) {
          OcclusionSpan o;
          if (std::sscanf(v.c_str(), " %d : %d - %d", &o.target, &o.first, &o.last) != 3) {
            throw ConfigError("occlusion: expected target:first-last, got '" + v + "'");
          }
          c.occlusions.push_back(o);
        },
        [](const SceneConfig& c) {
          std::string out;
          for (std::size_t k = 0; k < c.occlusions.size(); ++k) {
            const auto& o = c.occlusions[k];
            out += (k ? " " : "") + std::to_string(o.target) + ":" + std::to_string(o.first) + "-" +
                   std::to_string(o.last);
          }
          return out;
        });
    return s;
  }();
  return schema;
}

/// Config echo. Each explicit occlusion is written on its own line so the
/// file parses back to the same config.
inline std::string dump_scene_config(const SceneConfig& cfg) {
  std::string out;
  for (const auto& f : scene_schema().fields()) {
    if (f.key == "occlusion") continue;
    out += f.key + " = " + f.get(cfg) + "\n";
  }
  for (const auto& o : cfg.occlusions) {
    out += "occlusion = " + std::to_string(o.target) + ":" + std::to_string(o.first) + "-" +
           std::to_string(o.last) + "\n";
  }
  return out;
}

struct Scene {
  std::vector<TrackBox> gt;          // id = target index + 1
  std::vector<Detection> detections;  // sorted by frame
  SequenceMeta meta;
  std::vector<OcclusionSpan> occlusions;  // generated and explicit windows
  std::vector<int> group_of;              // group index per target; solos get their own
};

namespace detail {

struct GroupState {
  double x = 0, y = 0, heading = 0, speed = 0;
  double accel = 0;
  int accel_left = 0;
  int class_id = 1;
};

struct Member {
  int group = 0;
  double home_x = 0, home_y = 0;  // formation offset
  double off_x = 0, off_y = 0;    // drift around the formation slot
  double vel_x = 0, vel_y = 0;
  double width = 20, height = 15;
};

inline double clamp_score(double s) { return std::clamp(s, 0.0, 1.0); }

}  // namespace detail

inline Scene generate(const SceneConfig& cfg) {
  cfg.validate();
  constexpr double kPi = 3.14159265358979323846;
  std::mt19937_64 rng(cfg.seed);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  std::normal_distribution<double> gauss(0.0, 1.0);
  auto uniform = [&](double lo, double hi) { return lo + (hi - lo) * unit(rng); };

  const int n_group_like = cfg.n_groups + cfg.solo_targets;
  const int n_targets = cfg.total_targets();
  const double W = cfg.image_width;
  const double H = cfg.image_height;
  const double margin = 0.12 * std::min(W, H);

  std::vector<detail::GroupState> groups(n_group_like);
  for (int g = 0; g < n_group_like; ++g) {
    auto& s = groups[g];
    s.x = uniform(margin, W - margin);
    s.y = uniform(margin, H - margin);
    s.heading = uniform(-kPi, kPi);
    s.speed = uniform(cfg.speed_min, cfg.speed_max);
    s.class_id = 1 + g % cfg.num_classes;
  }

  Scene scene;
  std::vector<detail::Member> members(n_targets);
  for (int t = 0; t < n_targets; ++t) {
    auto& m = members[t];
    m.width = uniform(cfg.width_min, cfg.width_max);
    m.height = m.width * uniform(cfg.aspect_min, cfg.aspect_max);
    if (t < cfg.n_groups * cfg.targets_per_group) {
      m.group = t / cfg.targets_per_group;
      const int slot = t % cfg.targets_per_group;
      const int cols = std::max(1, static_cast<int>(std::ceil(std::sqrt(static_cast<double>(cfg.targets_per_group)))));
      const double pitch = cfg.member_spacing * cfg.width_max;
      m.home_x = (slot % cols - 0.5 * (cols - 1)) * pitch;
      m.home_y = (slot / cols) * pitch;
    } else {
      m.group = cfg.n_groups + (t - cfg.n_groups * cfg.targets_per_group);
    }
    scene.group_of.push_back(m.group);
  }

  // Occlusion windows: random non-overlapping spans per target, then explicit ones.
  std::vector<std::vector<bool>> occluded(n_targets, std::vector<bool>(cfg.frames + 1, false));
  const int budget = static_cast<int>(std::lround(cfg.occlusion_fraction * cfg.frames));
  const int earliest = std::min(cfg.frames, 12);
  for (int t = 0; t < n_targets; ++t) {
    int used = 0;
    for (int attempt = 0; attempt < 200 && used < budget; ++attempt) {
      const int len = std::min(budget - used,
                               cfg.occlusion_min + static_cast<int>(unit(rng) * (cfg.occlusion_max - cfg.occlusion_min + 1)));
      if (len < cfg.occlusion_min && used > 0) break;
      const int hi = cfg.frames - len + 1;
      if (hi < earliest) break;
      const int first = earliest + static_cast<int>(unit(rng) * (hi - earliest + 1));
      const int last = std::min(cfg.frames, first + len - 1);
      bool clash = false;
      for (int f = std::max(1, first - 10); f <= std::min(cfg.frames, last + 10); ++f) clash = clash || occluded[t][f];
      if (clash) continue;
      for (int f = first; f <= last; ++f) occluded[t][f] = true;
      scene.occlusions.push_back({t, first, last});
      used += last - first + 1;
    }
  }
  for (const auto& o : cfg.occlusions) {
    for (int f = o.first; f <= o.last; ++f) occluded[o.target][f] = true;
    scene.occlusions.push_back(o);
  }

  for (int frame = 1; frame <= cfg.frames; ++frame) {
    if (frame > 1) {
      for (auto& s : groups) {
        if (s.accel_left > 0) {
          s.speed += s.accel;
          --s.accel_left;
          if (s.speed <= cfg.speed_min || s.speed >= cfg.speed_max) s.accel_left = 0;
          s.speed = std::clamp(s.speed, cfg.speed_min, cfg.speed_max);
        } else if (unit(rng) < cfg.accel_event_prob) {
          const double mid = 0.5 * (cfg.speed_min + cfg.speed_max);
          const double sign = unit(rng) < (s.speed < mid ? 0.75 : 0.25) ? 1.0 : -1.0;
          s.accel = sign * cfg.accel_magnitude;
          s.accel_left = cfg.accel_duration_min +
                         static_cast<int>(unit(rng) * (cfg.accel_duration_max - cfg.accel_duration_min + 1));
        }
        s.heading += cfg.turn_std * gauss(rng);
        // Steer back towards the image center near the borders.
        if (s.x < margin || s.x > W - margin || s.y < margin || s.y > H - margin) {
          const double want = std::atan2(H / 2 - s.y, W / 2 - s.x);
          const double diff = std::remainder(want - s.heading, 2 * kPi);
          s.heading += std::clamp(diff, -0.03, 0.03);
        }
        s.x += s.speed * std::cos(s.heading);
        s.y += s.speed * std::sin(s.heading);
      }
      for (auto& m : members) {
        // Offset velocity: damped random walk pulled back to the slot.
        m.vel_x = 0.9 * m.vel_x - 0.02 * m.off_x + cfg.jitter_std * gauss(rng);
        m.vel_y = 0.9 * m.vel_y - 0.02 * m.off_y + cfg.jitter_std * gauss(rng);
        m.off_x = std::clamp(m.off_x + m.vel_x, -0.25 * m.width, 0.25 * m.width);
        m.off_y = std::clamp(m.off_y + m.vel_y, -0.25 * m.width, 0.25 * m.width);
      }
    }

    for (int t = 0; t < n_targets; ++t) {
      const auto& m = members[t];
      const auto& g = groups[m.group];
      BBox box;
      box.width = m.width;
      box.height = m.height;
      box.x_center = std::clamp(g.x + m.home_x + m.off_x, m.width / 2, W - m.width / 2);
      box.y_center = std::clamp(g.y + m.home_y + m.off_y, m.height / 2, H - m.height / 2);
      const bool hidden = occluded[t][frame];
      scene.gt.push_back({frame, t + 1, box, 1.0, g.class_id, hidden ? 0.0 : 1.0});
      if (hidden) continue;
      Detection d;
      d.frame = frame;
      d.class_id = g.class_id;
      d.bbox = box;
      if (cfg.bbox_noise_std > 0) {
        d.bbox.x_center += cfg.bbox_noise_std * gauss(rng);
        d.bbox.y_center += cfg.bbox_noise_std * gauss(rng);
        d.bbox.width = std::max(2.0, d.bbox.width + 0.5 * cfg.bbox_noise_std * gauss(rng));
        d.bbox.height = std::max(2.0, d.bbox.height + 0.5 * cfg.bbox_noise_std * gauss(rng));
      }
      d.score = detail::clamp_score(cfg.score_mean + cfg.score_std * gauss(rng));
      scene.detections.push_back(d);
    }
    for (int k = 0; k < cfg.clutter_slots; ++k) {
      if (!(unit(rng) < cfg.clutter_rate)) continue;
      Detection d;
      d.frame = frame;
      d.bbox.width = uniform(cfg.width_min, cfg.width_max);
      d.bbox.height = d.bbox.width * uniform(cfg.aspect_min, cfg.aspect_max);
      d.bbox.x_center = uniform(d.bbox.width / 2, W - d.bbox.width / 2);
      d.bbox.y_center = uniform(d.bbox.height / 2, H - d.bbox.height / 2);
      d.score = detail::clamp_score(cfg.clutter_score_mean + cfg.clutter_score_std * gauss(rng));
      d.class_id = 1 + static_cast<int>(unit(rng) * cfg.num_classes) % cfg.num_classes;
      scene.detections.push_back(d);
    }
  }

  scene.meta.image_width = W;
  scene.meta.image_height = H;
  scene.meta.frame_count = cfg.frames;
  scene.meta.frame_rate = 30.0;
  return scene;
}

}  // namespace socialtrack::sim
