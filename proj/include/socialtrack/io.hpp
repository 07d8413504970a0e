#pragma once

// MOTChallenge-style comma separated text files:
//
//   frame,id,left,top,width,height,conf[,class[,visibility[,unused]]]
//
// Raw detections carry id -1. Written files use fixed two-decimal floats so
// identical runs produce identical bytes.

#include <algorithm>
#include <cerrno>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include "socialtrack/errors.hpp"
#include "socialtrack/model.hpp"

namespace socialtrack::io {

struct DetectionFile {
  std::map<int, std::vector<Detection>> frames;
  int max_frame = 0;
  std::size_t reordered_lines = 0;  // lines whose frame went backwards
};

namespace detail {

inline std::vector<std::string> split_csv(const std::string& line) {
  std::vector<std::string> out;
  std::string field;
  std::istringstream ss(line);
  while (std::getline(ss, field, ',')) out.push_back(field);
  if (!line.empty() && line.back() == ',') out.emplace_back();
  return out;
}

inline std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r\n");
  if (b == std::string::npos) return {};
  const auto e = s.find_last_not_of(" \t\r\n");
  return s.substr(b, e - b + 1);
}

inline double to_double(const std::string& raw, const std::string& source, std::size_t line) {
  const std::string s = trim(raw);
  char* end = nullptr;
  errno = 0;
  const double v = std::strtod(s.c_str(), &end);
  if (s.empty() || end != s.c_str() + s.size() || errno == ERANGE || !std::isfinite(v)) {
    throw ParseError(source, line, "invalid number '" + s + "'");
  }
  return v;
}

inline int to_int(const std::string& raw, const std::string& source, std::size_t line) {
  const double v = to_double(raw, source, line);
  if (v != static_cast<double>(static_cast<long>(v))) throw ParseError(source, line, "expected an integer");
  return static_cast<int>(v);
}

}  // namespace detail

/// Parses rows of a MOT text stream. Blank lines and '#' comments are skipped.
inline std::vector<TrackBox> read_rows(std::istream& is, const std::string& source = "<stream>") {
  std::vector<TrackBox> rows;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(is, line)) {
    ++lineno;
    const std::string t = detail::trim(line);
    if (t.empty() || t.front() == '#') continue;
    const auto f = detail::split_csv(t);
    if (f.size() < 7 || f.size() > 10) {
      throw ParseError(source, lineno, "expected 7 to 10 fields, got " + std::to_string(f.size()));
    }
    TrackBox r;
    r.frame = detail::to_int(f[0], source, lineno);
    r.id = detail::to_int(f[1], source, lineno);
    const Ltwh box{detail::to_double(f[2], source, lineno), detail::to_double(f[3], source, lineno),
                   detail::to_double(f[4], source, lineno), detail::to_double(f[5], source, lineno)};
    r.score = detail::to_double(f[6], source, lineno);
    if (f.size() > 7) r.class_id = detail::to_int(f[7], source, lineno);
    if (f.size() > 8) r.visibility = detail::to_double(f[8], source, lineno);
    if (r.frame < 1) throw ParseError(source, lineno, "frame must be >= 1");
    if (!(box.width > 0 && box.height > 0)) throw ParseError(source, lineno, "box width and height must be positive");
    r.bbox = ltwh_to_bbox(box);
    rows.push_back(r);
  }
  return rows;
}

inline std::vector<TrackBox> read_rows(const std::string& path) {
  std::ifstream is(path);
  if (!is) throw IoError("cannot open " + path);
  return read_rows(is, path);
}

inline DetectionFile detections_from_rows(const std::vector<TrackBox>& rows, const std::string& source) {
  DetectionFile out;
  int last = 0;
  for (std::size_t k = 0; k < rows.size(); ++k) {
    const TrackBox& r = rows[k];
    if (r.score < 0.0 || r.score > 1.0) {
      throw ParseError(source, k + 1, "detection confidence must lie in [0, 1]");
    }
    if (r.frame < last) ++out.reordered_lines;
    last = r.frame;
    out.frames[r.frame].push_back({r.frame, r.bbox, r.score, r.class_id});
    out.max_frame = std::max(out.max_frame, r.frame);
  }
  return out;
}

inline DetectionFile read_detections(std::istream& is, const std::string& source = "<stream>") {
  return detections_from_rows(read_rows(is, source), source);
}

inline DetectionFile read_detections(const std::string& path) {
  std::ifstream is(path);
  if (!is) throw IoError("cannot open " + path);
  return read_detections(is, path);
}

inline std::string format_row(const TrackBox& r) {
  const Ltwh b = bbox_to_ltwh(r.bbox);
  char buf[160];
  std::snprintf(buf, sizeof buf, "%d,%d,%.2f,%.2f,%.2f,%.2f,%.2f,%d,%.2f", r.frame, r.id, b.left, b.top, b.width,
                b.height, r.score, r.class_id, r.visibility);
  return buf;
}

/// Writes the whole file through a temporary sibling and a rename.
inline void write_text_atomic(const std::string& path, const std::string& content) {
  namespace fs = std::filesystem;
  const fs::path target(path);
  if (target.has_parent_path()) fs::create_directories(target.parent_path());
  const fs::path tmp = target.string() + ".tmp";
  {
    std::ofstream os(tmp, std::ios::binary | std::ios::trunc);
    if (!os) throw IoError("cannot open " + tmp.string() + " for writing");
    os << content;
    if (!os) throw IoError("failed writing " + tmp.string());
  }
  std::error_code ec;
  fs::rename(tmp, target, ec);
  if (ec) throw IoError("cannot move " + tmp.string() + " to " + path + ": " + ec.message());
}

/// Rows sorted by frame then id.
inline std::string format_rows(std::vector<TrackBox> rows) {
  std::stable_sort(rows.begin(), rows.end(), [](const TrackBox& a, const TrackBox& b) {
    return a.frame != b.frame ? a.frame < b.frame : a.id < b.id;
  });
  std::string out;
  for (const auto& r : rows) {
    out += format_row(r);
    out += '\n';
  }
  return out;
}

inline void write_rows(const std::string& path, std::vector<TrackBox> rows) {
  write_text_atomic(path, format_rows(std::move(rows)));
}

}  // namespace socialtrack::io
