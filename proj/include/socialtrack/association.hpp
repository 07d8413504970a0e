#pragma once

// Per-frame tracking loop: two-round association by detection confidence,
// track lifecycle, and pseudo-observations for tracks left unmatched.

#include <algorithm>
#include <memory>
#include <optional>
#include <span>
#include <vector>

#include <Eigen/Core>

#include "socialtrack/errors.hpp"
#include "socialtrack/gmcs.hpp"
#include "socialtrack/hungarian.hpp"
#include "socialtrack/linear_kf.hpp"
#include "socialtrack/model.hpp"
#include "socialtrack/stmp.hpp"
#include "socialtrack/track.hpp"
#include "socialtrack/vackf.hpp"

namespace socialtrack {

struct AssocConfig {
  double tau_high = 0.6;
  double tau_low = 0.1;
  double iou_gate_first = 0.2;
  double iou_gate_second = 0.5;
  double iou_gate_tentative = 0.3;
  int track_buffer = 30;
  int min_hits = 3;
  double gmcs_sim_threshold = 0.5;
  // Consecutive frames a confirmed track may be carried by pseudo-observations.
  int max_pseudo_frames = 30;

  void validate() const {
    if (!(0.0 <= tau_low && tau_low < tau_high && tau_high <= 1.0)) {
      throw ConfigError("require 0 <= tau_low < tau_high <= 1");
    }
    for (double g : {iou_gate_first, iou_gate_second, iou_gate_tentative}) {
      if (!(g >= 0.0 && g <= 1.0)) throw ConfigError("IoU gates must lie in [0, 1]");
    }
    if (track_buffer < 1 || min_hits < 1) throw ConfigError("track_buffer and min_hits must be >= 1");
    if (max_pseudo_frames < 0) throw ConfigError("max_pseudo_frames must be >= 0");
  }
};

struct Assignment {
  std::vector<MatchPair> matched;  // (track index, detection index)
  std::vector<int> unmatched_tracks;
  std::vector<int> unmatched_dets;
};

struct SplitDetections {
  std::vector<Detection> high;
  std::vector<Detection> low;
};

inline SplitDetections split_detections(std::span<const Detection> dets, const AssocConfig& cfg) {
  SplitDetections out;
  for (const Detection& d : dets) {
    if (d.score >= cfg.tau_high) {
      out.high.push_back(d);
    } else if (d.score >= cfg.tau_low) {
      out.low.push_back(d);
    }
  }
  return out;
}

/// Gated min-cost matching on 1 - IoU between predicted track boxes and
/// detections. Pairs below the IoU gate or of different classes are never
/// matched.
inline Assignment associate(std::span<const Track* const> tracks, std::span<const Detection> dets, double gate) {
  Assignment out;
  const int m = static_cast<int>(tracks.size());
  const int n = static_cast<int>(dets.size());
  std::vector<bool> track_used(m, false), det_used(n, false);
  if (m > 0 && n > 0) {
    // Larger than any sum of admissible costs, so the solver first maximizes
    // the number of admissible pairs.
    const double forbidden = static_cast<double>(std::min(m, n)) + 1.0;
    Eigen::MatrixXd cost(m, n);
    Eigen::Matrix<bool, Eigen::Dynamic, Eigen::Dynamic> allowed(m, n);
    for (int i = 0; i < m; ++i) {
      const BBox tb = tracks[i]->box();
      for (int j = 0; j < n; ++j) {
        const double o = tracks[i]->class_id == dets[j].class_id ? iou(tb, dets[j].bbox) : 0.0;
        allowed(i, j) = o > 0.0 && o >= gate;
        cost(i, j) = allowed(i, j) ? 1.0 - o : forbidden;
      }
    }
    for (const auto& [r, c] : hungarian(cost)) {
      if (!allowed(r, c)) continue;
      out.matched.emplace_back(r, c);
      track_used[r] = true;
      det_used[c] = true;
    }
  }
  for (int i = 0; i < m; ++i)
    if (!track_used[i]) out.unmatched_tracks.push_back(i);
  for (int j = 0; j < n; ++j)
    if (!det_used[j]) out.unmatched_dets.push_back(j);
  return out;
}

inline Assignment associate(const std::vector<Track>& tracks, std::span<const Detection> dets, double gate) {
  std::vector<const Track*> ptrs;
  for (const auto& t : tracks) ptrs.push_back(&t);
  return associate(std::span<const Track* const>(ptrs), dets, gate);
}

struct TrackerOptions {
  AssocConfig assoc;
  vackf::NoiseConfig noise;
  vackf::MotionModel motion = vackf::MotionModel::Vackf;
  bool enable_gmcs = true;
  bool enable_stmp = true;
  std::shared_ptr<const stmp::CascadeNet> stmp_net;
  SequenceMeta meta;

  void validate() const {
    assoc.validate();
    noise.validate();
    meta.validate();
  }
};

struct TrackOutput {
  int frame = 0;
  int id = 0;
  int class_id = 1;
  BBox box;
};

struct TrackerStats {
  long real_updates = 0;
  long gmcs_updates = 0;
  long stmp_updates = 0;
  long coasted = 0;
  long dropped_numeric = 0;
};

class Tracker {
 public:
  explicit Tracker(TrackerOptions options) : opt_(std::move(options)) { opt_.validate(); }

  /// Processes one frame and returns the confirmed tracks updated in it,
  /// ordered by id.
  std::vector<TrackOutput> step(int frame, std::span<const Detection> dets) {
    if (frame <= last_frame_) {
      throw FrameOrderError("frame " + std::to_string(frame) + " does not follow frame " +
                            std::to_string(last_frame_));
    }
    const int elapsed = last_frame_ == 0 ? 1 : frame - last_frame_;
    last_frame_ = frame;
    const AssocConfig& cfg = opt_.assoc;

    for (Track& t : tracks_) {
      guarded(t, [&] {
        for (int k = 0; k < elapsed; ++k) t.filter = vackf::predict(t.filter, 1.0, opt_.noise, opt_.motion);
      });
    }
    purge();

    const SplitDetections split = split_detections(dets, cfg);
    std::vector<bool> matched(tracks_.size(), false);

    // First round: confirmed and lost tracks against confident detections.
    std::vector<int> pool;
    for (int i = 0; i < static_cast<int>(tracks_.size()); ++i) {
      const auto s = tracks_[i].status;
      if (s == TrackStatus::Confirmed || s == TrackStatus::Lost) pool.push_back(i);
    }
    const Assignment first = associate(pointers(pool), split.high, cfg.iou_gate_first);
    std::vector<const Track*> high_quality;
    for (const auto& [ti, di] : first.matched) {
      Track& t = tracks_[pool[ti]];
      apply_detection(t, split.high[di].bbox, frame);
      matched[pool[ti]] = true;
      if (t.status != TrackStatus::Removed) high_quality.push_back(&t);
    }

    // Second round: still-confirmed leftovers against low-confidence detections.
    std::vector<int> leftovers;
    for (int ti : first.unmatched_tracks) {
      if (tracks_[pool[ti]].status == TrackStatus::Confirmed) leftovers.push_back(pool[ti]);
    }
    const Assignment second = associate(pointers(leftovers), split.low, cfg.iou_gate_second);
    for (const auto& [ti, di] : second.matched) {
      apply_detection(tracks_[leftovers[ti]], split.low[di].bbox, frame);
      matched[leftovers[ti]] = true;
    }

    // Tentative tracks against the confident detections nobody claimed.
    std::vector<int> tentative;
    for (int i = 0; i < static_cast<int>(tracks_.size()); ++i) {
      if (tracks_[i].status == TrackStatus::Tentative) tentative.push_back(i);
    }
    std::vector<Detection> remaining_high;
    for (int di : first.unmatched_dets) remaining_high.push_back(split.high[di]);
    const Assignment third = associate(pointers(tentative), remaining_high, cfg.iou_gate_tentative);
    for (const auto& [ti, di] : third.matched) {
      apply_detection(tracks_[tentative[ti]], remaining_high[di].bbox, frame);
      matched[tentative[ti]] = true;
    }
    for (int ti : third.unmatched_tracks) tracks_[tentative[ti]].status = TrackStatus::Removed;

    // Unmatched confirmed tracks: group compensation, then memory prediction,
    // else coast and become lost.
    const std::size_t existing = tracks_.size();
    for (std::size_t i = 0; i < existing; ++i) {
      Track& t = tracks_[i];
      if (matched[i] || t.status == TrackStatus::Removed || t.status == TrackStatus::Tentative) continue;
      ++t.frames_since_detection;
      std::optional<Eigen::Vector2d> center;
      if (t.status == TrackStatus::Confirmed && t.frames_since_detection <= cfg.max_pseudo_frames) {
        center = pseudo_center(t, high_quality, frame);
      }
      if (center) {
        const BBox z{center->x(), center->y(), t.box().width, t.box().height};
        guarded(t, [&] { t.filter = vackf::update(t.filter, z, opt_.noise, opt_.motion); });
        if (t.status == TrackStatus::Removed) continue;
        t.frames_since_update = 0;
        t.record(frame);
      } else {
        ++stats_.coasted;
        ++t.frames_since_update;
        t.status = TrackStatus::Lost;
        if (t.frames_since_detection > cfg.track_buffer) t.status = TrackStatus::Removed;
      }
    }

    for (int di : third.unmatched_dets) spawn(remaining_high[di], frame);

    std::vector<TrackOutput> out;
    for (const Track& t : tracks_) {
      if (t.status == TrackStatus::Confirmed && t.frames_since_update == 0) {
        out.push_back({frame, t.id, t.class_id, t.box()});
      }
    }
    purge();
    return out;
  }

  const std::vector<Track>& tracks() const { return tracks_; }
  const TrackerStats& stats() const { return stats_; }
  const TrackerOptions& options() const { return opt_; }

 private:
  template <typename F>
  void guarded(Track& t, F&& f) {
    try {
      f();
    } catch (const CovarianceNotPSD&) {
      t.status = TrackStatus::Removed;
      ++stats_.dropped_numeric;
    } catch (const SingularInnovation&) {
      t.status = TrackStatus::Removed;
      ++stats_.dropped_numeric;
    }
  }

  void purge() {
    std::erase_if(tracks_, [](const Track& t) { return t.status == TrackStatus::Removed; });
  }

  std::vector<const Track*> pointers(const std::vector<int>& idx) const {
    std::vector<const Track*> out;
    out.reserve(idx.size());
    for (int i : idx) out.push_back(&tracks_[i]);
    return out;
  }

  void apply_detection(Track& t, const BBox& box, int frame) {
    guarded(t, [&] { t.filter = vackf::update(t.filter, box, opt_.noise, opt_.motion); });
    if (t.status == TrackStatus::Removed) return;
    ++stats_.real_updates;
    ++t.hits;
    t.frames_since_update = 0;
    t.frames_since_detection = 0;
    if (t.status == TrackStatus::Lost) t.status = TrackStatus::Confirmed;
    if (t.status == TrackStatus::Tentative && t.hits >= opt_.assoc.min_hits) t.status = TrackStatus::Confirmed;
    t.record(frame);
  }

  std::optional<Eigen::Vector2d> pseudo_center(const Track& t, const std::vector<const Track*>& high_quality,
                                               int frame) {
    bool had_neighbors = false;
    if (opt_.enable_gmcs) {
      const auto neighbors = gmcs::select_neighbors(t, high_quality, opt_.assoc.gmcs_sim_threshold);
      had_neighbors = !neighbors.empty();
      if (had_neighbors) {
        try {
          const auto comp = gmcs::compensate(t, neighbors, frame);
          ++stats_.gmcs_updates;
          return comp.center;
        } catch (const MissingHistory&) {
          had_neighbors = false;
        }
      }
    }
    if (opt_.enable_stmp && opt_.stmp_net && !had_neighbors) {
      try {
        const Eigen::Vector2d p = stmp::predict_center(*opt_.stmp_net, t, opt_.meta, frame);
        ++stats_.stmp_updates;
        return p;
      } catch (const WindowTooShort&) {
      }
    }
    return std::nullopt;
  }

  void spawn(const Detection& d, int frame) {
    Track t;
    t.id = next_id_++;
    t.class_id = d.class_id;
    t.status = opt_.assoc.min_hits <= 1 ? TrackStatus::Confirmed : TrackStatus::Tentative;
    t.filter = vackf::initiate(d.bbox, opt_.noise, opt_.motion);
    t.hits = 1;
    t.record(frame);
    tracks_.push_back(std::move(t));
  }

  TrackerOptions opt_;
  std::vector<Track> tracks_;
  int next_id_ = 1;
  int last_frame_ = 0;
  TrackerStats stats_;
};

}  // namespace socialtrack
