#pragma once

#include <deque>
#include <optional>

#include <Eigen/Core>

#include "socialtrack/errors.hpp"
#include "socialtrack/model.hpp"
#include "socialtrack/vackf.hpp"

namespace socialtrack {

enum class TrackStatus { Tentative, Confirmed, Lost, Removed };

inline const char* to_string(TrackStatus s) {
  switch (s) {
    case TrackStatus::Tentative: return "Tentative";
    case TrackStatus::Confirmed: return "Confirmed";
    case TrackStatus::Lost: return "Lost";
    case TrackStatus::Removed: return "Removed";
  }
  return "?";
}

struct HistoryEntry {
  int frame = 0;
  Eigen::Vector2d position = Eigen::Vector2d::Zero();
  Eigen::Vector2d velocity = Eigen::Vector2d::Zero();
};

struct Track {
  static constexpr std::size_t kHistoryCap = 30;

  int id = 0;
  int class_id = 1;
  TrackStatus status = TrackStatus::Tentative;
  vackf::FilterState filter;
  std::deque<HistoryEntry> history;
  int frames_since_update = 0;
  // Real detections only; pseudo-observations do not reset it.
  int frames_since_detection = 0;
  int hits = 0;

  BBox box() const { return filter.box(); }
  Eigen::Vector2d position() const { return filter.position(); }
  Eigen::Vector2d velocity() const { return filter.velocity(); }

  /// Appends the current filter estimate for `frame`. Frames must strictly
  /// increase; the oldest entry is evicted beyond the cap.
  void record(int frame) {
    if (!history.empty() && history.back().frame >= frame) {
      throw FrameOrderError("track history frames must strictly increase");
    }
    history.push_back({frame, position(), velocity()});
    while (history.size() > kHistoryCap) history.pop_front();
  }

  /// Most recent entry strictly before `frame`, if any.
  const HistoryEntry* entry_before(int frame) const {
    for (auto it = history.rbegin(); it != history.rend(); ++it) {
      if (it->frame < frame) return &*it;
    }
    return nullptr;
  }

  /// Length of the run of consecutive frames ending exactly at `last_frame`.
  int consecutive_run_ending_at(int last_frame) const {
    int run = 0;
    int expect = last_frame;
    for (auto it = history.rbegin(); it != history.rend(); ++it) {
      if (it->frame > expect) continue;
      if (it->frame != expect) break;
      ++run;
      --expect;
    }
    return run;
  }
};

}  // namespace socialtrack
