#pragma once

// Group motion compensation: when a track goes unmatched, nearby co-moving
// tracks that were matched this frame vouch for where it should be.

#include <algorithm>
#include <cmath>
#include <limits>
#include <optional>
#include <span>
#include <vector>

#include <Eigen/Core>

#include "socialtrack/errors.hpp"
#include "socialtrack/track.hpp"

namespace socialtrack::gmcs {

inline constexpr double kCoincidentWeight = 1e6;
inline constexpr double kMinSpeed = 1e-6;

struct NeighborScore {
  double d_sim = 0.0;
  double v_sim = 1.0;
  double s = 0.0;  // -inf when the pair moves in opposing directions
};

struct Neighbor {
  const Track* track = nullptr;
  double s = 0.0;
};

struct Contributor {
  int track_id = 0;
  double weight = 0.0;
  Eigen::Vector2d estimate = Eigen::Vector2d::Zero();
};

struct Compensation {
  Eigen::Vector2d center = Eigen::Vector2d::Zero();
  std::vector<Contributor> contributors;
  double total_weight = 0.0;
};

/// Score from raw kinematics. Returns nullopt when either speed is ~0 and the
/// heading comparison is undefined.
inline std::optional<NeighborScore> score(const Eigen::Vector2d& p, const Eigen::Vector2d& v, double width,
                                          const Eigen::Vector2d& p_high, const Eigen::Vector2d& v_high) {
  const double speed = v.norm();
  const double speed_high = v_high.norm();
  if (speed < kMinSpeed || speed_high < kMinSpeed) return std::nullopt;
  NeighborScore out;
  out.d_sim = (p - p_high).norm() / width;
  const double cosine = std::clamp(v.dot(v_high) / (speed * speed_high), -1.0, 1.0);
  out.v_sim = 2.0 - cosine;
  if (out.v_sim >= 2.0) {
    out.s = -std::numeric_limits<double>::infinity();
  } else if (out.d_sim == 0.0) {
    out.s = kCoincidentWeight;
  } else {
    out.s = 1.0 / (out.d_sim * out.v_sim);
  }
  return out;
}

/// Similarity between an unmatched track (current predicted state) and a
/// matched one (current updated state).
inline NeighborScore similarity(const Track& low, const Track& high) {
  auto s = score(low.position(), low.velocity(), low.box().width, high.position(), high.velocity());
  if (!s) throw ZeroVelocity("similarity undefined for a stationary track");
  return *s;
}

/// Same-class candidates whose finite similarity exceeds `threshold`, ordered
/// by track id.
inline std::vector<Neighbor> select_neighbors(const Track& low, std::span<const Track* const> candidates,
                                              double threshold) {
  std::vector<Neighbor> out;
  for (const Track* h : candidates) {
    if (h == nullptr || h == &low || h->class_id != low.class_id) continue;
    auto s = score(low.position(), low.velocity(), low.box().width, h->position(), h->velocity());
    if (!s || !std::isfinite(s->s) || !(s->s > threshold)) continue;
    out.push_back({h, s->s});
  }
  std::stable_sort(out.begin(), out.end(),
                   [](const Neighbor& a, const Neighbor& b) { return a.track->id < b.track->id; });
  return out;
}

namespace detail {

// Previous-frame record, tolerating at most `max_gap` missing frames.
inline const HistoryEntry& previous_entry(const Track& t, int frame, int max_gap) {
  const HistoryEntry* e = t.entry_before(frame);
  if (e == nullptr || frame - e->frame > max_gap + 1) {
    throw MissingHistory("track " + std::to_string(t.id) + " has no recent history before frame " +
                         std::to_string(frame));
  }
  return *e;
}

}  // namespace detail

/// Weighted position estimate assuming fixed relative velocity to each
/// neighbor: estimate_i = p_prev + (v_prev - v_prev_i + v_i) * dt, where dt is
/// the frame distance to the track's previous record.
inline Compensation compensate(const Track& low, std::span<const Neighbor> neighbors, int frame,
                               int max_gap = 1) {
  if (neighbors.empty()) throw MissingHistory("compensation needs at least one neighbor");
  const HistoryEntry& prev = detail::previous_entry(low, frame, max_gap);
  const double dt = static_cast<double>(frame - prev.frame);

  Compensation out;
  Eigen::Vector2d acc = Eigen::Vector2d::Zero();
  for (const Neighbor& n : neighbors) {
    const HistoryEntry& nprev = detail::previous_entry(*n.track, frame, max_gap);
    const Eigen::Vector2d estimate =
        prev.position + ((prev.velocity - nprev.velocity) + n.track->velocity()) * dt;
    acc += n.s * estimate;
    out.total_weight += n.s;
    out.contributors.push_back({n.track->id, n.s, estimate});
  }
  out.center = acc / out.total_weight;
  return out;
}

}  // namespace socialtrack::gmcs
