#pragma once

// CLEAR-MOT and identity metrics over per-frame box rows.

#include <algorithm>
#include <map>
#include <set>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Core>

#include "socialtrack/errors.hpp"
#include "socialtrack/hungarian.hpp"
#include "socialtrack/model.hpp"

namespace socialtrack::metrics {

inline constexpr double kMatchIou = 0.5;

struct Correspondence {
  int gt_id = 0;
  int hyp_id = 0;
  double iou = 0.0;
};

struct FrameMatch {
  int frame = 0;
  std::vector<Correspondence> pairs;
  int tp = 0, fp = 0, fn = 0, idsw = 0;
};

struct FrameMatchState {
  std::vector<FrameMatch> frames;
  long tp = 0, fp = 0, fn = 0, idsw = 0;
  long num_gt = 0, num_hyp = 0;
  double iou_sum = 0.0;
  std::map<int, int> gt_length;   // frames each GT id is present
  std::map<int, int> gt_matched;  // frames each GT id is matched
};

struct EvalReport {
  double mota = 0.0, motp = 0.0, idf1 = 0.0, idp = 0.0, idr = 0.0;
  long fp = 0, fn = 0, idsw = 0, gt = 0, tp = 0;
  long idtp = 0, idfp = 0, idfn = 0;
  int mt = 0, ml = 0, num_gt_tracks = 0;
};

namespace detail {

inline std::map<int, std::vector<const TrackBox*>> by_frame(std::span<const TrackBox> rows) {
  std::map<int, std::vector<const TrackBox*>> out;
  for (const auto& r : rows) out[r.frame].push_back(&r);
  for (auto& [f, v] : out) {
    std::stable_sort(v.begin(), v.end(), [](const TrackBox* a, const TrackBox* b) { return a->id < b->id; });
  }
  return out;
}

}  // namespace detail

/// Frame-by-frame CLEAR matching. Correspondences from the previous frame are
/// kept while their IoU stays >= 0.5; the rest are matched by min-cost
/// assignment on 1 - IoU gated at 0.5. A GT matched to a different hypothesis
/// id than at its last match counts as an identity switch.
inline FrameMatchState match_frames(std::span<const TrackBox> gt, std::span<const TrackBox> hyp) {
  FrameMatchState st;
  const auto gt_frames = detail::by_frame(gt);
  const auto hyp_frames = detail::by_frame(hyp);
  std::set<int> frames;
  for (const auto& [f, _] : gt_frames) frames.insert(f);
  for (const auto& [f, _] : hyp_frames) frames.insert(f);

  const std::vector<const TrackBox*> none;
  std::map<int, int> previous;      // gt id -> hyp id, previous frame only
  std::map<int, int> last_matched;  // gt id -> hyp id at last match
  for (int f : frames) {
    const auto git = gt_frames.find(f);
    const auto hit = hyp_frames.find(f);
    const auto& g = git == gt_frames.end() ? none : git->second;
    const auto& h = hit == hyp_frames.end() ? none : hit->second;

    FrameMatch fm;
    fm.frame = f;
    std::vector<bool> g_used(g.size(), false), h_used(h.size(), false);
    auto add = [&](std::size_t gi, std::size_t hj, double o) {
      g_used[gi] = h_used[hj] = true;
      fm.pairs.push_back({g[gi]->id, h[hj]->id, o});
    };

    for (std::size_t gi = 0; gi < g.size(); ++gi) {
      const auto p = previous.find(g[gi]->id);
      if (p == previous.end()) continue;
      for (std::size_t hj = 0; hj < h.size(); ++hj) {
        if (h_used[hj] || h[hj]->id != p->second) continue;
        const double o = iou(g[gi]->bbox, h[hj]->bbox);
        if (o >= kMatchIou) add(gi, hj, o);
        break;
      }
    }

    std::vector<std::size_t> gr, hr;
    for (std::size_t i = 0; i < g.size(); ++i)
      if (!g_used[i]) gr.push_back(i);
    for (std::size_t j = 0; j < h.size(); ++j)
      if (!h_used[j]) hr.push_back(j);
    if (!gr.empty() && !hr.empty()) {
      const double forbidden = static_cast<double>(std::min(gr.size(), hr.size())) + 1.0;
      Eigen::MatrixXd cost(gr.size(), hr.size());
      Eigen::MatrixXd ious(gr.size(), hr.size());
      for (std::size_t a = 0; a < gr.size(); ++a) {
        for (std::size_t b = 0; b < hr.size(); ++b) {
          const double o = iou(g[gr[a]]->bbox, h[hr[b]]->bbox);
          ious(a, b) = o;
          cost(a, b) = o >= kMatchIou ? 1.0 - o : forbidden;
        }
      }
      for (const auto& [a, b] : hungarian(cost)) {
        if (ious(a, b) >= kMatchIou) add(gr[a], hr[b], ious(a, b));
      }
    }

    previous.clear();
    for (const auto& c : fm.pairs) {
      const auto lm = last_matched.find(c.gt_id);
      if (lm != last_matched.end() && lm->second != c.hyp_id) ++fm.idsw;
      last_matched[c.gt_id] = c.hyp_id;
      previous[c.gt_id] = c.hyp_id;
      st.iou_sum += c.iou;
      ++st.gt_matched[c.gt_id];
    }
    for (const TrackBox* b : g) ++st.gt_length[b->id];
    fm.tp = static_cast<int>(fm.pairs.size());
    fm.fn = static_cast<int>(g.size()) - fm.tp;
    fm.fp = static_cast<int>(h.size()) - fm.tp;
    st.tp += fm.tp;
    st.fn += fm.fn;
    st.fp += fm.fp;
    st.idsw += fm.idsw;
    st.num_gt += static_cast<long>(g.size());
    st.num_hyp += static_cast<long>(h.size());
    st.frames.push_back(std::move(fm));
  }
  return st;
}

inline double mota(long fn, long fp, long idsw, long gt) {
  if (gt <= 0) throw ZeroGT("MOTA undefined without ground truth");
  return 1.0 - static_cast<double>(fn + fp + idsw) / static_cast<double>(gt);
}

/// Mean IoU over all matches.
inline double motp(const FrameMatchState& st) {
  if (st.tp <= 0) throw NoMatches("MOTP undefined without matches");
  return st.iou_sum / static_cast<double>(st.tp);
}

struct IdentityScores {
  double idf1 = 0.0, idp = 0.0, idr = 0.0;
  long idtp = 0, idfp = 0, idfn = 0;
};

/// Per-(gt id, hyp id) count of frames where both boxes overlap by IoU >= 0.5.
inline std::map<std::pair<int, int>, long> overlap_counts(std::span<const TrackBox> gt,
                                                          std::span<const TrackBox> hyp) {
  std::map<std::pair<int, int>, long> counts;
  const auto gf = detail::by_frame(gt);
  const auto hf = detail::by_frame(hyp);
  for (const auto& [f, gs] : gf) {
    const auto it = hf.find(f);
    if (it == hf.end()) continue;
    for (const TrackBox* g : gs) {
      for (const TrackBox* h : it->second) {
        if (iou(g->bbox, h->bbox) >= kMatchIou) ++counts[{g->id, h->id}];
      }
    }
  }
  return counts;
}

inline IdentityScores identity_scores(long idtp, long total_gt, long total_hyp) {
  IdentityScores s;
  s.idtp = idtp;
  s.idfn = total_gt - idtp;
  s.idfp = total_hyp - idtp;
  if (total_gt + total_hyp > 0) s.idf1 = 2.0 * idtp / static_cast<double>(total_gt + total_hyp);
  if (total_hyp > 0) s.idp = idtp / static_cast<double>(total_hyp);
  if (total_gt > 0) s.idr = idtp / static_cast<double>(total_gt);
  return s;
}

/// Identity F1 under the one-to-one trajectory pairing that maximizes IDTP.
inline IdentityScores idf1(std::span<const TrackBox> gt, std::span<const TrackBox> hyp) {
  std::vector<int> gids, hids;
  for (const auto& r : gt) gids.push_back(r.id);
  for (const auto& r : hyp) hids.push_back(r.id);
  std::sort(gids.begin(), gids.end());
  gids.erase(std::unique(gids.begin(), gids.end()), gids.end());
  std::sort(hids.begin(), hids.end());
  hids.erase(std::unique(hids.begin(), hids.end()), hids.end());

  long idtp = 0;
  const auto counts = overlap_counts(gt, hyp);
  if (!gids.empty() && !hids.empty() && !counts.empty()) {
    std::map<int, int> gi, hi;
    for (std::size_t k = 0; k < gids.size(); ++k) gi[gids[k]] = static_cast<int>(k);
    for (std::size_t k = 0; k < hids.size(); ++k) hi[hids[k]] = static_cast<int>(k);
    Eigen::MatrixXd cost = Eigen::MatrixXd::Zero(gids.size(), hids.size());
    for (const auto& [key, n] : counts) cost(gi[key.first], hi[key.second]) = -static_cast<double>(n);
    for (const auto& [r, c] : hungarian(cost)) idtp += static_cast<long>(-cost(r, c));
  }
  return identity_scores(idtp, static_cast<long>(gt.size()), static_cast<long>(hyp.size()));
}

struct TrackedCounts {
  int mt = 0;
  int ml = 0;
};

/// Mostly tracked: matched in more than 80% of the GT trajectory's frames.
/// Mostly lost: matched in less than 20%.
inline TrackedCounts mt_ml(const FrameMatchState& st) {
  TrackedCounts out;
  for (const auto& [id, len] : st.gt_length) {
    const auto it = st.gt_matched.find(id);
    const int hit = it == st.gt_matched.end() ? 0 : it->second;
    const double ratio = static_cast<double>(hit) / static_cast<double>(len);
    if (ratio > 0.8) ++out.mt;
    if (ratio < 0.2) ++out.ml;
  }
  return out;
}

inline EvalReport evaluate(std::span<const TrackBox> gt, std::span<const TrackBox> hyp) {
  const FrameMatchState st = match_frames(gt, hyp);
  EvalReport r;
  r.fp = st.fp;
  r.fn = st.fn;
  r.idsw = st.idsw;
  r.gt = st.num_gt;
  r.tp = st.tp;
  r.mota = mota(st.fn, st.fp, st.idsw, st.num_gt);
  r.motp = st.tp > 0 ? motp(st) : 0.0;
  const IdentityScores ids = idf1(gt, hyp);
  r.idf1 = ids.idf1;
  r.idp = ids.idp;
  r.idr = ids.idr;
  r.idtp = ids.idtp;
  r.idfp = ids.idfp;
  r.idfn = ids.idfn;
  const TrackedCounts c = mt_ml(st);
  r.mt = c.mt;
  r.ml = c.ml;
  r.num_gt_tracks = static_cast<int>(st.gt_length.size());
  return r;
}

}  // namespace socialtrack::metrics
