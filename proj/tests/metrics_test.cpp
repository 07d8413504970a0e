#include <algorithm>
#include <random>

#include <gtest/gtest.h>

#include "socialtrack/metrics.hpp"
#include "oracles.hpp"

using namespace socialtrack;
using namespace socialtrack::metrics;

namespace {

TrackBox row(int frame, int id, double x, double y = 50, double w = 10, double h = 10) {
  return {frame, id, {x, y, w, h}, 1.0, 1, 1.0};
}

std::vector<TrackBox> walk(int id, int frames, double x0, double step) {
  std::vector<TrackBox> out;
  for (int f = 1; f <= frames; ++f) out.push_back(row(f, id, x0 + step * f));
  return out;
}

}  // namespace

TEST(MatchFrames, PerfectTracker) {
  std::vector<TrackBox> gt = walk(1, 5, 0, 3);
  const auto more = walk(2, 5, 100, -2);
  gt.insert(gt.end(), more.begin(), more.end());
  const auto st = match_frames(gt, gt);
  EXPECT_EQ(st.fp, 0);
  EXPECT_EQ(st.fn, 0);
  EXPECT_EQ(st.idsw, 0);
  EXPECT_EQ(st.tp, 10);
  const auto r = evaluate(gt, gt);
  EXPECT_EQ(r.mota, 1.0);
  EXPECT_EQ(r.motp, 1.0);
  EXPECT_EQ(r.idf1, 1.0);
}

TEST(MatchFrames, SilentTracker) {
  const auto gt = walk(1, 7, 0, 3);
  const auto st = match_frames(gt, {});
  EXPECT_EQ(st.fn, 7);
  EXPECT_EQ(st.fp, 0);
  EXPECT_EQ(idf1(gt, {}).idf1, 0.0);
}

TEST(MatchFrames, SwappedIdsCountTwice) {
  // Two targets far apart; the tracker swaps its labels at frame 2 and keeps
  // the swap through frame 3.
  std::vector<TrackBox> gt{row(1, 1, 0), row(2, 1, 0), row(3, 1, 0), row(1, 2, 100), row(2, 2, 100), row(3, 2, 100)};
  std::vector<TrackBox> hyp{row(1, 10, 0), row(2, 20, 0), row(3, 20, 0),
                            row(1, 20, 100), row(2, 10, 100), row(3, 10, 100)};
  const auto st = match_frames(gt, hyp);
  EXPECT_EQ(st.idsw, 2);
  EXPECT_EQ(st.tp, 6);
}

TEST(MatchFrames, PersistsPreviousCorrespondence) {
  // At frame 2 hypothesis 20 overlaps GT 1 better, but 10 still clears the
  // threshold, so the earlier pairing is kept.
  std::vector<TrackBox> gt{row(1, 1, 0), row(2, 1, 0)};
  std::vector<TrackBox> hyp{row(1, 10, 0), row(2, 10, 1.5), row(2, 20, 0)};
  const auto st = match_frames(gt, hyp);
  EXPECT_EQ(st.idsw, 0);
  EXPECT_EQ(st.fp, 1);
  EXPECT_EQ(st.frames[1].pairs.at(0).hyp_id, 10);
}

TEST(Mota, Fixtures) {
  EXPECT_EQ(mota(0, 0, 0, 10), 1.0);
  EXPECT_EQ(mota(1, 0, 1, 4), 0.5);
  EXPECT_LT(mota(3, 3, 1, 4), 0.0);
  EXPECT_THROW(mota(0, 0, 0, 0), ZeroGT);
}

TEST(Mota, HandBuiltThreeFrameFixture) {
  // GT 1 spans frames 1-3, GT 2 only frame 1. Track A and B cover frame 1,
  // nothing in frame 2, track C picks up GT 1 in frame 3.
  std::vector<TrackBox> gt{row(1, 1, 0), row(2, 1, 0), row(3, 1, 0), row(1, 2, 100)};
  std::vector<TrackBox> hyp{row(1, 1, 0), row(1, 2, 100), row(3, 3, 0)};
  const auto r = evaluate(gt, hyp);
  EXPECT_EQ(r.fn, 1);
  EXPECT_EQ(r.fp, 0);
  EXPECT_EQ(r.idsw, 1);
  EXPECT_EQ(r.gt, 4);
  EXPECT_EQ(r.mota, 0.5);
}

TEST(Motp, Fixtures) {
  // Same center, half the height: IoU exactly 0.5.
  std::vector<TrackBox> gt{row(1, 1, 0), row(1, 2, 100)};
  std::vector<TrackBox> hyp{row(1, 1, 0), row(1, 2, 100, 50, 10, 5)};
  EXPECT_EQ(motp(match_frames(gt, hyp)), 0.75);

  std::vector<TrackBox> one{row(1, 2, 100, 50, 10, 5)};
  const std::vector<TrackBox> lone{gt[1]};
  EXPECT_EQ(motp(match_frames(lone, one)), 0.5);
  EXPECT_EQ(motp(match_frames(gt, gt)), 1.0);
  EXPECT_THROW(motp(match_frames(gt, {})), NoMatches);
}

TEST(Idf1, EvenSplit) {
  const int T = 10;
  const auto gt = walk(1, T, 0, 2);
  std::vector<TrackBox> hyp = gt;
  for (auto& r : hyp) r.id = r.frame <= T / 2 ? 7 : 8;
  const auto s = idf1(gt, hyp);
  EXPECT_EQ(s.idf1, 0.5);
  EXPECT_EQ(s.idtp, 5);
  EXPECT_EQ(s.idfp, 5);
  EXPECT_EQ(s.idfn, 5);
}

TEST(Idf1, MatchesBruteForcePairing) {
  std::mt19937_64 rng(31);
  for (int trial = 0; trial < 50; ++trial) {
    std::uniform_int_distribution<int> count(1, 6);
    std::uniform_int_distribution<int> cell(0, 3);
    std::bernoulli_distribution present(0.7);
    const int ng = count(rng), nh = count(rng), frames = 6;
    std::vector<TrackBox> gt, hyp;
    for (int id = 1; id <= ng; ++id)
      for (int f = 1; f <= frames; ++f)
        if (present(rng)) gt.push_back(row(f, id, 20.0 * cell(rng), 20.0 * cell(rng)));
    for (int id = 1; id <= nh; ++id)
      for (int f = 1; f <= frames; ++f)
        if (present(rng)) hyp.push_back(row(f, 100 + id, 20.0 * cell(rng) + 1, 20.0 * cell(rng)));
    const auto s = idf1(gt, hyp);
    const long expect = oracles::brute_idtp(gt, hyp);
    ASSERT_EQ(s.idtp, expect) << "trial " << trial;
    const double f1 = gt.size() + hyp.size() ? 2.0 * expect / static_cast<double>(gt.size() + hyp.size()) : 0.0;
    ASSERT_NEAR(s.idf1, f1, 1e-15);
  }
}

TEST(MtMl, StrictBoundaries) {
  auto ratio_case = [](int hit) {
    const auto gt = walk(1, 10, 0, 30);
    std::vector<TrackBox> hyp;
    for (const auto& r : gt)
      if (r.frame <= hit) hyp.push_back({r.frame, 5, r.bbox, 1.0, 1, 1.0});
    return mt_ml(match_frames(gt, hyp));
  };
  EXPECT_EQ(ratio_case(9).mt, 1);
  EXPECT_EQ(ratio_case(1).ml, 1);
  EXPECT_EQ(ratio_case(8).mt, 0);
  EXPECT_EQ(ratio_case(8).ml, 0);
  EXPECT_EQ(ratio_case(2).ml, 0);
}

TEST(Evaluate, CountIdentities) {
  std::mt19937_64 rng(8);
  std::normal_distribution<double> g(0, 3);
  std::vector<TrackBox> gt, hyp;
  for (int id = 1; id <= 4; ++id) {
    for (int f = 1; f <= 30; ++f) {
      gt.push_back(row(f, id, 40.0 * id + f, 50));
      if (f % 7) hyp.push_back(row(f, id % 3 + 10, 40.0 * id + f + g(rng), 50 + g(rng)));
    }
  }
  const auto r = evaluate(gt, hyp);
  EXPECT_EQ(r.fn + r.tp, static_cast<long>(gt.size()));
  EXPECT_EQ(r.fp + r.tp, static_cast<long>(hyp.size()));
  EXPECT_LE(r.mt + r.ml, r.num_gt_tracks);

  // Consistent relabeling of hypothesis ids changes nothing.
  auto relabeled = hyp;
  for (auto& h : relabeled) h.id = 1000 - h.id;
  const auto r2 = evaluate(gt, relabeled);
  EXPECT_EQ(r2.idsw, r.idsw);
  EXPECT_EQ(r2.mota, r.mota);
  EXPECT_EQ(r2.idf1, r.idf1);
  EXPECT_EQ(r2.motp, r.motp);
}
