#pragma once

#include <Eigen/Core>

#include "socialtrack/track.hpp"
#include "socialtrack/vackf.hpp"

namespace testing_support {

// Track whose filter mean sits at `pos` moving with `vel`, plus optional
// history entries (frame, position, velocity).
inline socialtrack::Track make_track(int id, Eigen::Vector2d pos, Eigen::Vector2d vel, double width = 10.0,
                                     int class_id = 1) {
  using namespace socialtrack;
  Track t;
  t.id = id;
  t.class_id = class_id;
  t.status = TrackStatus::Confirmed;
  t.filter = vackf::initiate({pos.x(), pos.y(), width, width}, {});
  t.filter.x(vackf::kVx) = vel.x();
  t.filter.x(vackf::kVy) = vel.y();
  return t;
}

inline void add_history(socialtrack::Track& t, int frame, Eigen::Vector2d pos, Eigen::Vector2d vel) {
  t.history.push_back({frame, pos, vel});
}

}  // namespace testing_support
