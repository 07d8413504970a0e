#include <cmath>
#include <limits>
#include <random>

#include <gtest/gtest.h>

#include "socialtrack/gmcs.hpp"
#include "support.hpp"

using namespace socialtrack;
using testing_support::add_history;
using testing_support::make_track;

namespace {

std::vector<const Track*> ptrs(const std::vector<Track>& ts) {
  std::vector<const Track*> out;
  for (const auto& t : ts) out.push_back(&t);
  return out;
}

}  // namespace

TEST(Similarity, HandEvaluatedPair) {
  const auto s = gmcs::score({0, 0}, {1, 0}, 10.0, {30, 40}, {2, 0});
  ASSERT_TRUE(s.has_value());
  EXPECT_NEAR(s->d_sim, 5.0, 1e-12);
  EXPECT_NEAR(s->v_sim, 1.0, 1e-12);
  EXPECT_NEAR(s->s, 0.2, 1e-12);

  const Track low = make_track(1, {0, 0}, {1, 0}, 10);
  const Track high = make_track(2, {30, 40}, {2, 0}, 10);
  EXPECT_NEAR(gmcs::similarity(low, high).s, 0.2, 1e-12);
}

TEST(Similarity, OpposedOrOrthogonalMotionExcluded) {
  const auto anti = gmcs::score({0, 0}, {1, 0}, 10.0, {5, 0}, {-1, 0});
  EXPECT_NEAR(anti->v_sim, 3.0, 1e-12);
  EXPECT_EQ(anti->s, -std::numeric_limits<double>::infinity());
  const auto ortho = gmcs::score({0, 0}, {1, 0}, 10.0, {5, 0}, {0, 1});
  EXPECT_NEAR(ortho->v_sim, 2.0, 1e-12);
  EXPECT_EQ(ortho->s, -std::numeric_limits<double>::infinity());
}

TEST(Similarity, CoincidentCentersGetLargeWeight) {
  const auto s = gmcs::score({3, 3}, {1, 0}, 10.0, {3, 3}, {1, 0.1});
  EXPECT_EQ(s->d_sim, 0.0);
  EXPECT_EQ(s->s, gmcs::kCoincidentWeight);
}

TEST(Similarity, StationaryTrackRaises) {
  const Track low = make_track(1, {0, 0}, {0, 0}, 10);
  const Track high = make_track(2, {30, 40}, {2, 0}, 10);
  EXPECT_THROW(gmcs::similarity(low, high), ZeroVelocity);
  EXPECT_THROW(gmcs::similarity(high, low), ZeroVelocity);
}

TEST(SelectNeighbors, Vacuous) {
  const Track low = make_track(1, {0, 0}, {1, 0}, 10);
  EXPECT_TRUE(gmcs::select_neighbors(low, {}, 0.5).empty());
}

TEST(SelectNeighbors, BelowThreshold) {
  const Track low = make_track(1, {0, 0}, {1, 0}, 10);
  const std::vector<Track> cands{make_track(2, {30, 40}, {2, 0}, 10)};
  EXPECT_TRUE(gmcs::select_neighbors(low, ptrs(cands), 0.5).empty());
}

TEST(SelectNeighbors, KeepsOnlyTheStrongFiniteOne) {
  const Track low = make_track(1, {0, 0}, {1, 0}, 10);
  const std::vector<Track> cands{
      make_track(4, {10.0 / 0.6, 0}, {1, 0}, 10),  // s = 0.6
      make_track(3, {50, 0}, {1, 0}, 10),          // s = 0.2
      make_track(2, {5, 0}, {-1, 0}, 10),          // s = -inf
  };
  const auto n = gmcs::select_neighbors(low, ptrs(cands), 0.5);
  ASSERT_EQ(n.size(), 1u);
  EXPECT_EQ(n[0].track->id, 4);
  EXPECT_NEAR(n[0].s, 0.6, 1e-12);
}

TEST(SelectNeighbors, SameClassOnlyAndOrderedById) {
  const Track low = make_track(1, {0, 0}, {1, 0}, 10, 1);
  const std::vector<Track> cands{
      make_track(9, {5, 0}, {1, 0}, 10, 1),
      make_track(3, {6, 0}, {1, 0}, 10, 1),
      make_track(5, {4, 0}, {1, 0}, 10, 2),
  };
  const auto n = gmcs::select_neighbors(low, ptrs(cands), 0.5);
  ASSERT_EQ(n.size(), 2u);
  EXPECT_EQ(n[0].track->id, 3);
  EXPECT_EQ(n[1].track->id, 9);
}

TEST(SelectNeighbors, MonotoneInThreshold) {
  std::mt19937_64 rng(4);
  std::uniform_real_distribution<double> u(-60, 60);
  for (int trial = 0; trial < 200; ++trial) {
    const Track low = make_track(1, {0, 0}, {2, 0.3}, 12);
    std::vector<Track> cands;
    for (int k = 0; k < 6; ++k) cands.push_back(make_track(k + 2, {u(rng), u(rng)}, {u(rng), u(rng)}, 12));
    std::size_t prev = std::numeric_limits<std::size_t>::max();
    for (double th : {0.0, 0.1, 0.3, 0.5, 1.0, 2.0}) {
      const auto n = gmcs::select_neighbors(low, ptrs(cands), th);
      ASSERT_LE(n.size(), prev);
      prev = n.size();
    }
  }
}

TEST(Compensate, SingleNeighborWithSteadyVelocityTelescopes) {
  Track low = make_track(1, {0, 0}, {0, 0}, 10);
  add_history(low, 9, {40, 20}, {3, -1});
  Track n = make_track(2, {70, 20}, {4, 4}, 10);
  add_history(n, 9, {66, 16}, {4, 4});
  add_history(n, 10, {70, 20}, {4, 4});
  const std::vector<gmcs::Neighbor> nb{{&n, 0.7}};
  const auto c = gmcs::compensate(low, nb, 10);
  EXPECT_NEAR(c.center.x(), 43.0, 1e-9);
  EXPECT_NEAR(c.center.y(), 19.0, 1e-9);
}

TEST(Compensate, HandEvaluatedSingleNeighbor) {
  Track low = make_track(1, {0, 0}, {0, 0}, 10);
  add_history(low, 4, {100, 100}, {5, 0});
  Track n = make_track(2, {0, 0}, {6, 0}, 10);
  add_history(n, 4, {0, 0}, {5, 0});
  const std::vector<gmcs::Neighbor> nb{{&n, 1.0}};
  const auto c = gmcs::compensate(low, nb, 5);
  EXPECT_NEAR(c.center.x(), 106.0, 1e-9);
  EXPECT_NEAR(c.center.y(), 100.0, 1e-9);
}

TEST(Compensate, WeightedMeanOfTwoNeighbors) {
  Track low = make_track(1, {0, 0}, {0, 0}, 10);
  add_history(low, 1, {0, 0}, {10, 0});
  Track a = make_track(2, {0, 0}, {5, 0}, 10);
  add_history(a, 1, {0, 0}, {5, 0});
  Track b = make_track(3, {0, 0}, {13, 0}, 10);
  add_history(b, 1, {0, 0}, {5, 0});
  const std::vector<gmcs::Neighbor> nb{{&a, 0.6}, {&b, 0.2}};
  const auto c = gmcs::compensate(low, nb, 2);
  EXPECT_NEAR(c.center.x(), 12.0, 1e-9);
  EXPECT_NEAR(c.center.y(), 0.0, 1e-9);
  ASSERT_EQ(c.contributors.size(), 2u);
  EXPECT_NEAR(c.contributors[0].estimate.x(), 10.0, 1e-9);
  EXPECT_NEAR(c.contributors[1].estimate.x(), 18.0, 1e-9);
  EXPECT_NEAR(c.total_weight, 0.8, 1e-12);
}

TEST(Compensate, ConvexHullScaleInvarianceAndSharedVelocity) {
  std::mt19937_64 rng(21);
  std::uniform_real_distribution<double> u(-20, 20);
  std::uniform_real_distribution<double> w(0.01, 5.0);
  for (int trial = 0; trial < 300; ++trial) {
    Track low = make_track(1, {0, 0}, {0, 0}, 10);
    add_history(low, 7, {u(rng), u(rng)}, {u(rng), u(rng)});
    std::vector<Track> ns;
    const int k = 1 + trial % 5;
    for (int i = 0; i < k; ++i) {
      ns.push_back(make_track(i + 2, {u(rng), u(rng)}, {u(rng), u(rng)}, 10));
      add_history(ns.back(), 7, {0, 0}, {u(rng), u(rng)});
    }
    std::vector<gmcs::Neighbor> nb;
    for (const auto& n : ns) nb.push_back({&n, w(rng)});
    const auto c = gmcs::compensate(low, nb, 8);

    Eigen::Vector2d lo = c.contributors[0].estimate, hi = lo;
    for (const auto& e : c.contributors) {
      lo = lo.cwiseMin(e.estimate);
      hi = hi.cwiseMax(e.estimate);
    }
    ASSERT_TRUE((c.center.array() >= lo.array() - 1e-9).all());
    ASSERT_TRUE((c.center.array() <= hi.array() + 1e-9).all());

    std::vector<gmcs::Neighbor> scaled = nb;
    for (auto& n : scaled) n.s *= 37.5;
    ASSERT_LT((gmcs::compensate(low, scaled, 8).center - c.center).norm(), 1e-9);
  }

  // Everyone moving with the same velocity v: center = previous position + v.
  Track low = make_track(1, {0, 0}, {0, 0}, 10);
  add_history(low, 3, {10, 20}, {2, -1});
  std::vector<Track> ns;
  for (int i = 0; i < 3; ++i) {
    ns.push_back(make_track(i + 2, {50.0 * i, 0}, {2, -1}, 10));
    add_history(ns.back(), 3, {50.0 * i - 2, 1}, {2, -1});
  }
  std::vector<gmcs::Neighbor> nb;
  for (const auto& n : ns) nb.push_back({&n, 0.3 + n.id});
  const auto c = gmcs::compensate(low, nb, 4);
  EXPECT_NEAR(c.center.x(), 12.0, 1e-12);
  EXPECT_NEAR(c.center.y(), 19.0, 1e-12);
}

TEST(Compensate, MissingHistoryRaises) {
  Track low = make_track(1, {0, 0}, {0, 0}, 10);
  Track n = make_track(2, {0, 0}, {1, 0}, 10);
  add_history(n, 9, {0, 0}, {1, 0});
  const std::vector<gmcs::Neighbor> nb{{&n, 1.0}};
  EXPECT_THROW(gmcs::compensate(low, nb, 10), MissingHistory);  // low has no record

  add_history(low, 7, {0, 0}, {1, 0});
  EXPECT_THROW(gmcs::compensate(low, nb, 10), MissingHistory);  // two-frame gap

  EXPECT_THROW(gmcs::compensate(low, {}, 10), MissingHistory);
}

TEST(Compensate, OneFrameGapScalesDisplacement) {
  Track low = make_track(1, {0, 0}, {0, 0}, 10);
  add_history(low, 8, {0, 0}, {3, 0});
  Track n = make_track(2, {0, 0}, {3, 0}, 10);
  add_history(n, 9, {0, 0}, {3, 0});
  const std::vector<gmcs::Neighbor> nb{{&n, 1.0}};
  const auto c = gmcs::compensate(low, nb, 10);
  EXPECT_NEAR(c.center.x(), 6.0, 1e-12);
}
