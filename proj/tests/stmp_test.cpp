#include <cmath>
#include <random>
#include <sstream>

#include <gtest/gtest.h>

#include "socialtrack/stmp.hpp"
#include "oracles.hpp"
#include "support.hpp"

using namespace socialtrack;
using namespace socialtrack::stmp;

namespace {

double sig(double x) { return 1.0 / (1.0 + std::exp(-x)); }

// Element-by-element LSTM step written without matrix products.
void scalar_cell(const std::vector<double>& x, const std::vector<double>& h, const std::vector<double>& c,
                 const LstmStageWeights& w, std::vector<double>& h_out, std::vector<double>& c_out) {
  const int H = static_cast<int>(h.size());
  const int D = static_cast<int>(x.size());
  h_out.assign(H, 0.0);
  c_out.assign(H, 0.0);
  for (int j = 0; j < H; ++j) {
    double z[4];
    for (int g = 0; g < 4; ++g) {
      const int row = g * H + j;
      double acc = w.bias(row);
      for (int d = 0; d < D; ++d) acc += w.w_input(row, d) * x[d];
      for (int k = 0; k < H; ++k) acc += w.w_hidden(row, k) * h[k];
      z[g] = acc;
    }
    c_out[j] = sig(z[1]) * c[j] + sig(z[0]) * std::tanh(z[2]);
    h_out[j] = sig(z[3]) * std::tanh(c_out[j]);
  }
}

LstmStageWeights random_stage(int in, int hidden, std::mt19937_64& rng, double scale = 0.8) {
  std::uniform_real_distribution<double> u(-scale, scale);
  LstmStageWeights w = LstmStageWeights::zeros(in, hidden);
  for (int i = 0; i < w.w_input.size(); ++i) w.w_input.data()[i] = u(rng);
  for (int i = 0; i < w.w_hidden.size(); ++i) w.w_hidden.data()[i] = u(rng);
  for (int i = 0; i < w.bias.size(); ++i) w.bias.data()[i] = u(rng);
  return w;
}

Batch random_batch(int window, int B, std::mt19937_64& rng) {
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  Batch b;
  b.steps.assign(window, MatrixXd(2, B));
  for (auto& s : b.steps)
    for (int i = 0; i < s.size(); ++i) s.data()[i] = u(rng);
  b.labels.resize(2, B);
  for (int i = 0; i < b.labels.size(); ++i) b.labels.data()[i] = u(rng);
  return b;
}

Trajectories line_track(int id, int first, int last, Eigen::Vector2d start, Eigen::Vector2d vel) {
  Trajectories t;
  for (int f = first; f <= last; ++f) t[id].push_back({f, start + vel * (f - first)});
  return t;
}

std::vector<TrainSample> moving_samples(int n_tracks, std::uint64_t seed, double speed_max) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> pos(200, 800);
  std::uniform_real_distribution<double> vel(-speed_max, speed_max);
  SequenceMeta meta;
  meta.image_width = meta.image_height = 1000;
  std::vector<TrainSample> out;
  for (int k = 0; k < n_tracks; ++k) {
    const auto t = line_track(k, 1, 20, {pos(rng), pos(rng)}, {vel(rng), vel(rng)});
    const auto w = extract_windows(t, meta);
    out.insert(out.end(), w.begin(), w.end());
  }
  return out;
}

}  // namespace

TEST(LstmCell, ZeroWeightsAndStates) {
  const auto w = LstmStageWeights::zeros(3, 5);
  const auto [h, c] = lstm_cell(VectorXd::Zero(3), VectorXd::Zero(5), VectorXd::Zero(5), w);
  EXPECT_EQ(h, VectorXd::Zero(5));
  EXPECT_EQ(c, VectorXd::Zero(5));
}

TEST(LstmCell, CellStateGrowsByAtMostOne) {
  std::mt19937_64 rng(1);
  std::normal_distribution<double> g(0.0, 3.0);
  for (int trial = 0; trial < 200; ++trial) {
    const auto w = random_stage(3, 6, rng, 4.0);
    VectorXd x(3), h(6), c(6);
    for (int i = 0; i < 3; ++i) x(i) = g(rng);
    for (int i = 0; i < 6; ++i) {
      h(i) = std::tanh(g(rng));
      c(i) = g(rng);
    }
    const auto [h2, c2] = lstm_cell(x, h, c, w);
    for (int i = 0; i < 6; ++i) {
      ASSERT_LE(std::abs(c2(i)), std::abs(c(i)) + 1.0 + 1e-12);
      ASSERT_LE(std::abs(h2(i)), 1.0);
    }
  }
}

TEST(LstmCell, MatchesScalarReference) {
  std::mt19937_64 rng(2);
  std::uniform_real_distribution<double> u(-1, 1);
  for (int trial = 0; trial < 20; ++trial) {
    const auto w = random_stage(4, 3, rng);
    std::vector<double> x(4), h(3), c(3);
    for (auto* v : {&x, &h, &c})
      for (auto& e : *v) e = u(rng);
    std::vector<double> he, ce;
    scalar_cell(x, h, c, w, he, ce);
    const auto [hg, cg] = lstm_cell(Eigen::Map<VectorXd>(x.data(), 4), Eigen::Map<VectorXd>(h.data(), 3),
                                    Eigen::Map<VectorXd>(c.data(), 3), w);
    for (int j = 0; j < 3; ++j) {
      EXPECT_NEAR(hg(j), he[j], 1e-14);
      EXPECT_NEAR(cg(j), ce[j], 1e-14);
    }
  }
}

TEST(Forward, ZeroNetReturnsOutputBias) {
  NetConfig cfg;
  cfg.encoding = Encoding::Absolute;
  CascadeNet net = CascadeNet::zeros(cfg);
  net.fc2_b << 0.25, -0.5;
  const std::vector<Eigen::Vector2d> window(8, Eigen::Vector2d(0.3, 0.7));
  const Eigen::Vector2d out = forward(net, window);
  EXPECT_EQ(out, Eigen::Vector2d(0.25, -0.5));

  // Relative encoding reads the bias as an offset from the last position.
  CascadeNet rel = CascadeNet::zeros();
  rel.fc2_b << 1.0, 2.0;
  const Eigen::Vector2d r = forward(rel, window);
  EXPECT_NEAR(r.x(), 0.3 + 1.0 / rel.config.relative_gain, 1e-15);
  EXPECT_NEAR(r.y(), 0.7 + 2.0 / rel.config.relative_gain, 1e-15);
}

TEST(Forward, RejectsShortWindow) {
  const CascadeNet net = CascadeNet::zeros();
  const std::vector<Eigen::Vector2d> window(7, Eigen::Vector2d(0.3, 0.7));
  EXPECT_THROW(forward(net, window), WindowTooShort);
}

TEST(Forward, BatchOrderInvariant) {
  std::mt19937_64 rng(3);
  const CascadeNet net = CascadeNet::random({}, 5);
  Batch b = random_batch(8, 6, rng);
  const MatrixXd out = forward_batch(net, b.steps);
  ASSERT_EQ(out.rows(), 2);
  const std::vector<int> perm{3, 0, 5, 1, 4, 2};
  std::vector<MatrixXd> permuted(8, MatrixXd(2, 6));
  for (int t = 0; t < 8; ++t)
    for (int k = 0; k < 6; ++k) permuted[t].col(k) = b.steps[t].col(perm[k]);
  const MatrixXd out2 = forward_batch(net, permuted);
  // Equal up to rounding: the product kernels may block columns differently.
  for (int k = 0; k < 6; ++k) EXPECT_LT((out2.col(k) - out.col(perm[k])).cwiseAbs().maxCoeff(), 1e-14);
}

TEST(MseLoss, Fixtures) {
  MatrixXd p(2, 1), l(2, 1);
  p << 0, 0;
  l << 3, 4;
  EXPECT_EQ(mse_loss(p, l), 25.0);
  EXPECT_EQ(mse_loss(l, l), 0.0);
  MatrixXd p2(2, 3), l2(2, 3);
  p2 << 1, 2, 3, 4, 5, 6;
  l2 << 0, 2, 1, 1, 5, 9;
  MatrixXd p4(2, 6), l4(2, 6);
  p4 << p2, p2;
  l4 << l2, l2;
  EXPECT_DOUBLE_EQ(mse_loss(p2, l2), mse_loss(p4, l4));
}

TEST(GradientCheck, EveryParameterMatchesCentralDifferences) {
  std::mt19937_64 rng(11);
  const NetConfig cfg = NetConfig::with_hidden(8, 8, 8, 8);
  const Batch b = random_batch(cfg.window(), 4, rng);
  const auto r = oracles::gradient_check(CascadeNet::random(cfg, 77), b, 1e-5);
  EXPECT_EQ(r.checked, CascadeNet::random(cfg, 77).parameter_count());
  EXPECT_LT(r.worst, 1e-4) << "worst at " << r.where;
}

TEST(ExtractWindows, Counts) {
  SequenceMeta meta;
  EXPECT_EQ(extract_windows(line_track(1, 1, 9, {10, 10}, {1, 0}), meta).size(), 1u);
  EXPECT_EQ(extract_windows(line_track(1, 1, 12, {10, 10}, {1, 0}), meta).size(), 4u);
  EXPECT_TRUE(extract_windows(line_track(1, 1, 8, {10, 10}, {1, 0}), meta).empty());
}

TEST(ExtractWindows, NeverSpansGaps) {
  SequenceMeta meta;
  Trajectories t = line_track(7, 1, 15, {10, 10}, {1, 0});
  t[7].erase(t[7].begin() + 4);  // drop frame 5
  const auto w = extract_windows(t, meta);
  EXPECT_EQ(w.size(), 2u);  // frames 6..15 only
  for (const auto& s : w) {
    EXPECT_GE(s.start_frame, 6);
    EXPECT_EQ(s.sequence_id, 7);
  }
}

TEST(ExtractWindows, NormalizesByImageSize) {
  SequenceMeta meta;
  meta.image_width = 200;
  meta.image_height = 100;
  const auto w = extract_windows(line_track(1, 1, 9, {20, 10}, {2, 1}), meta);
  ASSERT_EQ(w.size(), 1u);
  EXPECT_NEAR(w[0].input[0].x(), 0.1, 1e-15);
  EXPECT_NEAR(w[0].input[0].y(), 0.1, 1e-15);
  EXPECT_NEAR(w[0].label.x(), (20 + 16) / 200.0, 1e-15);
  for (const auto& p : w[0].input) EXPECT_TRUE((p.array() >= 0).all() && (p.array() <= 1).all());
}

TEST(Normalize, RoundTrip) {
  SequenceMeta meta;
  std::mt19937_64 rng(6);
  std::uniform_real_distribution<double> u(-3000, 3000);
  for (int k = 0; k < 100; ++k) {
    const Eigen::Vector2d p(u(rng), u(rng));
    EXPECT_LT((denormalize(normalize(p, meta), meta) - p).norm(), 1e-9);
  }
}

TEST(Train, CosineSchedule) {
  EXPECT_DOUBLE_EQ(cosine_lr(0.01, 0, 100), 0.01);
  EXPECT_NEAR(cosine_lr(0.01, 50, 100), 0.005, 1e-15);
  EXPECT_NEAR(cosine_lr(0.01, 100, 100), 0.0, 1e-15);
}

TEST(Train, DeterministicForFixedSeed) {
  const auto samples = moving_samples(10, 3, 5.0);
  const NetConfig cfg = NetConfig::with_hidden(8, 8, 8, 8);
  TrainOptions opt;
  opt.epochs = 3;
  opt.input_noise = {1e-3, 1e-3};
  const auto a = train(CascadeNet::random(cfg, 1), samples, opt);
  const auto b = train(CascadeNet::random(cfg, 1), samples, opt);
  const auto ta = a.net.tensors();
  const auto tb = b.net.tensors();
  for (std::size_t k = 0; k < ta.size(); ++k)
    for (std::size_t j = 0; j < ta[k].size(); ++j) ASSERT_EQ(ta[k][j], tb[k][j]);
  EXPECT_EQ(a.loss_curve, b.loss_curve);
}

TEST(Train, LossCurveFiniteAndDecreasing) {
  int decreasing = 0;
  for (std::uint64_t seed = 1; seed <= 10; ++seed) {
    const auto samples = moving_samples(12, seed, 4.0);
    TrainOptions opt;
    opt.epochs = 8;
    opt.seed = seed;
    const auto r = train(CascadeNet::random(NetConfig::with_hidden(16, 8, 8, 16), seed), samples, opt);
    ASSERT_EQ(r.loss_curve.size(), 8u);
    for (double l : r.loss_curve) ASSERT_TRUE(std::isfinite(l));
    if (r.loss_curve.back() < r.loss_curve.front()) ++decreasing;
  }
  EXPECT_GE(decreasing, 9);
}

TEST(Train, EmptySamplesRejected) {
  EXPECT_THROW(train(CascadeNet::zeros(), {}), ConfigError);
}

TEST(Train, BeatsLastPositionOnConstantVelocity) {
  const auto samples = moving_samples(40, 5, 6.0);
  const auto held = moving_samples(10, 99, 6.0);
  TrainOptions opt;
  opt.epochs = 30;
  const auto r = train(CascadeNet::random(NetConfig::with_hidden(16, 8, 8, 16), 2), samples, opt);
  EXPECT_LT(evaluate_mse(r.net, held), last_position_mse(held));

  // Stationary window: prediction stays at the position.
  const std::vector<Eigen::Vector2d> still(8, Eigen::Vector2d(0.4, 0.6));
  EXPECT_LT((forward(r.net, still) - Eigen::Vector2d(0.4, 0.6)).norm(), 1e-2);
}

TEST(Checkpoint, RoundTripIsBitExact) {
  const CascadeNet net = CascadeNet::random(NetConfig::with_hidden(6, 5, 4, 3), 9);
  std::stringstream ss;
  save_checkpoint(net, ss);
  const CascadeNet back = load_checkpoint(ss);
  EXPECT_EQ(back.config, net.config);
  const auto a = net.tensors();
  const auto b = back.tensors();
  ASSERT_EQ(a.size(), b.size());
  for (std::size_t k = 0; k < a.size(); ++k) {
    ASSERT_EQ(a[k].size(), b[k].size());
    for (std::size_t j = 0; j < a[k].size(); ++j) ASSERT_EQ(a[k][j], b[k][j]);
  }
  std::stringstream again;
  save_checkpoint(back, again);
  std::stringstream first;
  save_checkpoint(net, first);
  EXPECT_EQ(first.str(), again.str());
}

TEST(Checkpoint, RejectsGarbage) {
  std::stringstream ss("not a checkpoint\n");
  EXPECT_THROW(load_checkpoint(ss), ParseError);
  std::stringstream full;
  save_checkpoint(CascadeNet::zeros(NetConfig::with_hidden(2, 2, 2, 2)), full);
  std::string text = full.str();
  text.resize(text.size() / 2);
  std::stringstream cut(text);
  EXPECT_THROW(load_checkpoint(cut), ParseError);
}

TEST(PredictCenter, NeedsEightConsecutiveFrames) {
  const CascadeNet net = CascadeNet::zeros();
  SequenceMeta meta;
  Track t = testing_support::make_track(1, {100, 100}, {1, 0});
  for (int f = 3; f <= 9; ++f) testing_support::add_history(t, f, {100.0 + f, 100}, {1, 0});
  EXPECT_THROW(predict_center(net, t, meta, 10), WindowTooShort);
  testing_support::add_history(t, 10, {110, 100}, {1, 0});
  EXPECT_THROW(predict_center(net, t, meta, 10), WindowTooShort);  // must end at frame - 1
  EXPECT_NO_THROW(predict_center(net, t, meta, 11));
  EXPECT_THROW(predict_center(net, t, meta, 12), WindowTooShort);
}

TEST(PredictCenter, ClampedToSaneBounds) {
  CascadeNet net = CascadeNet::zeros();
  net.fc2_b << 1e9, -1e9;
  SequenceMeta meta;
  Track t = testing_support::make_track(1, {100, 100}, {1, 0});
  for (int f = 1; f <= 8; ++f) testing_support::add_history(t, f, {100.0 + f, 100}, {1, 0});
  const Eigen::Vector2d p = predict_center(net, t, meta, 9);
  EXPECT_EQ(p.x(), 1.5 * meta.image_width);
  EXPECT_EQ(p.y(), -0.5 * meta.image_height);
}
