#pragma once

#include <algorithm>
#include <cmath>

#include "socialtrack/errors.hpp"

namespace socialtrack {

/// Axis-aligned box in center form. Edge-based (left, top) coordinates only
/// appear at file boundaries.
struct BBox {
  double x_center = 0.0;
  double y_center = 0.0;
  double width = 1.0;
  double height = 1.0;

  double left() const { return x_center - width / 2.0; }
  double top() const { return y_center - height / 2.0; }
  double right() const { return x_center + width / 2.0; }
  double bottom() const { return y_center + height / 2.0; }
  double area() const { return width * height; }

  bool valid() const {
    return std::isfinite(x_center) && std::isfinite(y_center) && std::isfinite(width) &&
           std::isfinite(height) && width > 0.0 && height > 0.0;
  }

  friend bool operator==(const BBox&, const BBox&) = default;
};

struct Detection {
  int frame = 1;
  BBox bbox;
  double score = 1.0;
  int class_id = 1;
};

/// One labeled box of a trajectory: a ground-truth row or a tracker output row.
struct TrackBox {
  int frame = 1;
  int id = 0;
  BBox bbox;
  double score = 1.0;
  int class_id = 1;
  double visibility = 1.0;
};

struct SequenceMeta {
  double image_width = 1920.0;
  double image_height = 1080.0;
  int frame_count = 1;
  double frame_rate = 30.0;

  void validate() const {
    if (!(image_width > 0 && image_height > 0 && frame_count > 0 && frame_rate > 0)) {
      throw ConfigError("sequence metadata must be positive");
    }
  }
};

struct Ltwh {
  double left = 0.0;
  double top = 0.0;
  double width = 0.0;
  double height = 0.0;
};

inline Ltwh bbox_to_ltwh(const BBox& b) { return {b.left(), b.top(), b.width, b.height}; }

inline BBox ltwh_to_bbox(const Ltwh& r) {
  return {r.left + r.width / 2.0, r.top + r.height / 2.0, r.width, r.height};
}

/// Intersection over union. Degenerate or disjoint boxes give 0.
inline double iou(const BBox& a, const BBox& b) {
  if (a == b) return a.area() > 0.0 ? 1.0 : 0.0;
  const double iw = std::min(a.right(), b.right()) - std::max(a.left(), b.left());
  const double ih = std::min(a.bottom(), b.bottom()) - std::max(a.top(), b.top());
  if (iw <= 0.0 || ih <= 0.0) return 0.0;
  const double inter = iw * ih;
  const double uni = a.area() + b.area() - inter;
  if (!(uni > 0.0)) return 0.0;
  return std::clamp(inter / uni, 0.0, 1.0);
}

}  // namespace socialtrack
