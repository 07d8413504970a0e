#pragma once

// Spatio-temporal memory prediction: a three-stage cascaded LSTM followed by
// two dense layers that maps the last N normalized centers of a track to its
// next center.
//
// Cascade wiring: stage k+1 consumes the trailing `steps` hidden states of
// stage k, so each stage looks at a shorter and more recent slice of the
// window. The last hidden state of stage 3 feeds fc1 -> relu -> fc2.

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <map>
#include <numeric>
#include <random>
#include <span>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Dense>

#include "socialtrack/errors.hpp"
#include "socialtrack/model.hpp"
#include "socialtrack/track.hpp"

namespace socialtrack::stmp {

using Eigen::MatrixXd;
using Eigen::VectorXd;

inline constexpr int kNumStages = 3;
inline constexpr int kGates = 4;  // input, forget, cell, output

struct StageConfig {
  int input = 2;
  int hidden = 64;
  int steps = 8;
  friend bool operator==(const StageConfig&, const StageConfig&) = default;
};

/// How a window of normalized centers is presented to the network.
/// Absolute feeds the centers as-is. Relative feeds (p_t - p_last) * gain and
/// reads the output as the scaled offset of the next center from p_last.
enum class Encoding { Absolute, Relative };

struct NetConfig {
  std::array<StageConfig, kNumStages> stages{{{2, 64, 8}, {64, 32, 4}, {32, 16, 2}}};
  int fc_hidden = 32;
  Encoding encoding = Encoding::Relative;
  double relative_gain = 100.0;

  int window() const { return stages[0].steps; }

  static NetConfig with_hidden(int h1, int h2, int h3, int fc_hidden = 32) {
    NetConfig c;
    c.stages = {{{2, h1, 8}, {h1, h2, 4}, {h2, h3, 2}}};
    c.fc_hidden = fc_hidden;
    return c;
  }

  void validate() const {
    if (stages[0].input != 2) throw ConfigError("stage 1 input size must be 2");
    for (int k = 0; k < kNumStages; ++k) {
      const auto& s = stages[k];
      if (s.input <= 0 || s.hidden <= 0 || s.steps <= 0) throw ConfigError("stage sizes must be positive");
      if (k > 0) {
        if (s.input != stages[k - 1].hidden) throw ConfigError("stage input must equal previous hidden size");
        if (s.steps > stages[k - 1].steps) throw ConfigError("stage windows must not grow");
      }
    }
    if (fc_hidden <= 0) throw ConfigError("fc_hidden must be positive");
    if (!(relative_gain > 0)) throw ConfigError("relative_gain must be positive");
  }

  friend bool operator==(const NetConfig&, const NetConfig&) = default;
};

/// Gate rows are stacked in the order input, forget, cell, output.
struct LstmStageWeights {
  MatrixXd w_input;   // 4H x D
  MatrixXd w_hidden;  // 4H x H
  VectorXd bias;      // 4H

  int hidden() const { return static_cast<int>(w_hidden.cols()); }
  int input() const { return static_cast<int>(w_input.cols()); }

  static LstmStageWeights zeros(int input, int hidden) {
    return {MatrixXd::Zero(kGates * hidden, input), MatrixXd::Zero(kGates * hidden, hidden),
            VectorXd::Zero(kGates * hidden)};
  }
};

struct CascadeNet {
  NetConfig config;
  std::array<LstmStageWeights, kNumStages> stages;
  MatrixXd fc1_w;  // fc_hidden x H3
  VectorXd fc1_b;
  MatrixXd fc2_w;  // 2 x fc_hidden
  VectorXd fc2_b;

  static CascadeNet zeros(const NetConfig& cfg = {}) {
    cfg.validate();
    CascadeNet net;
    net.config = cfg;
    for (int k = 0; k < kNumStages; ++k) {
      net.stages[k] = LstmStageWeights::zeros(cfg.stages[k].input, cfg.stages[k].hidden);
    }
    const int h3 = cfg.stages[2].hidden;
    net.fc1_w = MatrixXd::Zero(cfg.fc_hidden, h3);
    net.fc1_b = VectorXd::Zero(cfg.fc_hidden);
    net.fc2_w = MatrixXd::Zero(2, cfg.fc_hidden);
    net.fc2_b = VectorXd::Zero(2);
    return net;
  }

  /// Uniform(+-1/sqrt(fan_in)) weights; LSTM fan-in is the hidden size.
  /// Forget-gate biases start at +1.
  static CascadeNet random(const NetConfig& cfg, std::uint64_t seed) {
    CascadeNet net = zeros(cfg);
    std::mt19937_64 rng(seed);
    auto fill = [&rng](auto& m, double bound) {
      std::uniform_real_distribution<double> dist(-bound, bound);
      for (Eigen::Index i = 0; i < m.size(); ++i) m.data()[i] = dist(rng);
    };
    for (auto& st : net.stages) {
      const double bound = 1.0 / std::sqrt(static_cast<double>(st.hidden()));
      fill(st.w_input, bound);
      fill(st.w_hidden, bound);
      fill(st.bias, bound);
      st.bias.segment(st.hidden(), st.hidden()).array() += 1.0;
    }
    const double b1 = 1.0 / std::sqrt(static_cast<double>(net.fc1_w.cols()));
    fill(net.fc1_w, b1);
    fill(net.fc1_b, b1);
    const double b2 = 1.0 / std::sqrt(static_cast<double>(net.fc2_w.cols()));
    fill(net.fc2_w, b2);
    fill(net.fc2_b, b2);
    return net;
  }

  /// Every trainable tensor as a flat span, in a fixed order.
  std::vector<std::span<double>> tensors() {
    std::vector<std::span<double>> out;
    auto add = [&out](auto& m) { out.emplace_back(m.data(), static_cast<std::size_t>(m.size())); };
    for (auto& st : stages) {
      add(st.w_input);
      add(st.w_hidden);
      add(st.bias);
    }
    add(fc1_w);
    add(fc1_b);
    add(fc2_w);
    add(fc2_b);
    return out;
  }

  std::vector<std::span<const double>> tensors() const {
    auto mut = const_cast<CascadeNet*>(this)->tensors();
    return {mut.begin(), mut.end()};
  }

  static std::vector<std::string> tensor_names() {
    std::vector<std::string> names;
    for (int k = 1; k <= kNumStages; ++k) {
      const std::string p = "stage" + std::to_string(k) + ".";
      names.push_back(p + "w_input");
      names.push_back(p + "w_hidden");
      names.push_back(p + "bias");
    }
    for (const char* n : {"fc1.w", "fc1.b", "fc2.w", "fc2.b"}) names.emplace_back(n);
    return names;
  }

  std::size_t parameter_count() const {
    std::size_t n = 0;
    for (auto t : tensors()) n += t.size();
    return n;
  }
};

inline double sigmoid(double x) { return 1.0 / (1.0 + std::exp(-x)); }

/// One LSTM step for a single sample.
inline std::pair<VectorXd, VectorXd> lstm_cell(const VectorXd& x, const VectorXd& h, const VectorXd& c,
                                               const LstmStageWeights& w) {
  const int H = w.hidden();
  const VectorXd z = w.w_input * x + w.w_hidden * h + w.bias;
  const VectorXd i = z.segment(0, H).unaryExpr(&sigmoid);
  const VectorXd f = z.segment(H, H).unaryExpr(&sigmoid);
  const VectorXd g = z.segment(2 * H, H).array().tanh();
  const VectorXd o = z.segment(3 * H, H).unaryExpr(&sigmoid);
  VectorXd c_next = f.cwiseProduct(c) + i.cwiseProduct(g);
  VectorXd h_next = o.cwiseProduct(c_next.array().tanh().matrix());
  return {std::move(h_next), std::move(c_next)};
}

namespace detail {

// Per-step activations of one stage for a batch (columns are samples).
struct StageCache {
  std::vector<MatrixXd> x;        // inputs, D x B
  std::vector<MatrixXd> h;        // h[0] = 0, h[t+1] after step t
  std::vector<MatrixXd> c;        // same indexing as h
  std::vector<MatrixXd> i, f, g, o;
};

inline StageCache stage_forward(const LstmStageWeights& w, std::vector<MatrixXd> inputs) {
  const int H = w.hidden();
  const Eigen::Index B = inputs.front().cols();
  StageCache s;
  s.x = std::move(inputs);
  s.h.push_back(MatrixXd::Zero(H, B));
  s.c.push_back(MatrixXd::Zero(H, B));
  for (const MatrixXd& x : s.x) {
    MatrixXd z = w.w_input * x + w.w_hidden * s.h.back();
    z.colwise() += w.bias;
    MatrixXd i = z.topRows(H).unaryExpr(&sigmoid);
    MatrixXd f = z.middleRows(H, H).unaryExpr(&sigmoid);
    MatrixXd g = z.middleRows(2 * H, H).array().tanh();
    MatrixXd o = z.bottomRows(H).unaryExpr(&sigmoid);
    MatrixXd c = f.cwiseProduct(s.c.back()) + i.cwiseProduct(g);
    s.h.push_back(o.cwiseProduct(c.array().tanh().matrix()));
    s.c.push_back(std::move(c));
    s.i.push_back(std::move(i));
    s.f.push_back(std::move(f));
    s.g.push_back(std::move(g));
    s.o.push_back(std::move(o));
  }
  return s;
}

// Backpropagation through time. `dh_out[t]` is the loss gradient w.r.t. the
// hidden output of step t. Accumulates into `grad`, returns input gradients.
inline std::vector<MatrixXd> stage_backward(const LstmStageWeights& w, const StageCache& s,
                                            const std::vector<MatrixXd>& dh_out, LstmStageWeights& grad) {
  const int H = w.hidden();
  const int T = static_cast<int>(s.x.size());
  const Eigen::Index B = s.x.front().cols();
  std::vector<MatrixXd> dx(T);
  MatrixXd dh_next = MatrixXd::Zero(H, B);
  MatrixXd dc_next = MatrixXd::Zero(H, B);
  MatrixXd dz(kGates * H, B);
  for (int t = T - 1; t >= 0; --t) {
    const MatrixXd dh = dh_out[t] + dh_next;
    const Eigen::ArrayXXd tc = s.c[t + 1].array().tanh();
    const Eigen::ArrayXXd i = s.i[t].array(), f = s.f[t].array(), g = s.g[t].array(), o = s.o[t].array();
    const Eigen::ArrayXXd dc = dc_next.array() + dh.array() * o * (1.0 - tc * tc);
    dz.topRows(H) = (dc * g * i * (1.0 - i)).matrix();
    dz.middleRows(H, H) = (dc * s.c[t].array() * f * (1.0 - f)).matrix();
    dz.middleRows(2 * H, H) = (dc * i * (1.0 - g * g)).matrix();
    dz.bottomRows(H) = (dh.array() * tc * o * (1.0 - o)).matrix();
    dc_next = (dc * f).matrix();

    grad.w_input.noalias() += dz * s.x[t].transpose();
    grad.w_hidden.noalias() += dz * s.h[t].transpose();
    grad.bias += dz.rowwise().sum();
    dx[t].noalias() = w.w_input.transpose() * dz;
    dh_next.noalias() = w.w_hidden.transpose() * dz;
  }
  return dx;
}

struct CascadeCache {
  std::array<StageCache, kNumStages> stages;
  MatrixXd fc1_pre;
  MatrixXd fc1_act;
  MatrixXd out;
};

inline CascadeCache cascade_forward(const CascadeNet& net, std::vector<MatrixXd> steps) {
  CascadeCache cache;
  std::vector<MatrixXd> inputs = std::move(steps);
  for (int k = 0; k < kNumStages; ++k) {
    cache.stages[k] = stage_forward(net.stages[k], std::move(inputs));
    if (k + 1 < kNumStages) {
      const auto& h = cache.stages[k].h;
      const int take = net.config.stages[k + 1].steps;
      inputs.assign(h.end() - take, h.end());
    }
  }
  cache.fc1_pre = net.fc1_w * cache.stages[kNumStages - 1].h.back();
  cache.fc1_pre.colwise() += net.fc1_b;
  cache.fc1_act = cache.fc1_pre.cwiseMax(0.0);
  cache.out = net.fc2_w * cache.fc1_act;
  cache.out.colwise() += net.fc2_b;
  return cache;
}

// `dout` is dLoss/dOutput (2 x B). Gradients accumulate into `grad`.
inline void cascade_backward(const CascadeNet& net, const CascadeCache& cache, const MatrixXd& dout,
                             CascadeNet& grad) {
  grad.fc2_w.noalias() += dout * cache.fc1_act.transpose();
  grad.fc2_b += dout.rowwise().sum();
  MatrixXd dact = net.fc2_w.transpose() * dout;
  const MatrixXd dpre = dact.cwiseProduct((cache.fc1_pre.array() > 0.0).cast<double>().matrix());
  const auto& last = cache.stages[kNumStages - 1];
  grad.fc1_w.noalias() += dpre * last.h.back().transpose();
  grad.fc1_b += dpre.rowwise().sum();

  const Eigen::Index B = dout.cols();
  // Gradient w.r.t. the hidden outputs of the current stage, one per step.
  std::vector<MatrixXd> dh(last.x.size(), MatrixXd::Zero(net.stages[kNumStages - 1].hidden(), B));
  dh.back() = net.fc1_w.transpose() * dpre;
  for (int k = kNumStages - 1; k >= 0; --k) {
    std::vector<MatrixXd> dx = stage_backward(net.stages[k], cache.stages[k], dh, grad.stages[k]);
    if (k == 0) break;
    const int prev_steps = static_cast<int>(cache.stages[k - 1].x.size());
    std::vector<MatrixXd> dprev(prev_steps, MatrixXd::Zero(net.stages[k - 1].hidden(), B));
    const int offset = prev_steps - static_cast<int>(dx.size());
    for (std::size_t t = 0; t < dx.size(); ++t) dprev[offset + t] = std::move(dx[t]);
    dh = std::move(dprev);
  }
}

}  // namespace detail

/// A batch laid out step-major: steps[t] is 2 x B.
struct Batch {
  std::vector<MatrixXd> steps;
  MatrixXd labels;  // 2 x B
};

inline MatrixXd forward_batch(const CascadeNet& net, const std::vector<MatrixXd>& steps) {
  return detail::cascade_forward(net, steps).out;
}

inline Eigen::Vector2d encode_step(const NetConfig& cfg, const Eigen::Vector2d& p, const Eigen::Vector2d& last) {
  return cfg.encoding == Encoding::Absolute ? p : Eigen::Vector2d((p - last) * cfg.relative_gain);
}

inline Eigen::Vector2d decode_output(const NetConfig& cfg, const Eigen::Vector2d& out, const Eigen::Vector2d& last) {
  return cfg.encoding == Encoding::Absolute ? out : Eigen::Vector2d(last + out / cfg.relative_gain);
}

/// Predicts the next normalized center from normalized centers. Uses the
/// trailing `window` entries.
inline Eigen::Vector2d forward(const CascadeNet& net, std::span<const Eigen::Vector2d> window) {
  const int need = net.config.window();
  if (static_cast<int>(window.size()) < need) {
    throw WindowTooShort("need " + std::to_string(need) + " steps, got " + std::to_string(window.size()));
  }
  const Eigen::Vector2d last = window.back();
  std::vector<MatrixXd> steps;
  for (std::size_t t = window.size() - need; t < window.size(); ++t) {
    steps.emplace_back(encode_step(net.config, window[t], last));
  }
  return decode_output(net.config, forward_batch(net, steps).col(0), last);
}

/// Mean over the batch of squared x-error plus squared y-error.
inline double mse_loss(const MatrixXd& pred, const MatrixXd& label) {
  if (pred.rows() != label.rows() || pred.cols() != label.cols()) {
    throw ConfigError("prediction and label batches differ in shape");
  }
  if (pred.cols() == 0) return 0.0;
  return (pred - label).squaredNorm() / static_cast<double>(pred.cols());
}

/// Loss and full gradient over one batch.
inline double loss_and_gradient(const CascadeNet& net, const Batch& batch, CascadeNet& grad) {
  grad = CascadeNet::zeros(net.config);
  const detail::CascadeCache cache = detail::cascade_forward(net, batch.steps);
  const double B = static_cast<double>(batch.labels.cols());
  const MatrixXd dout = 2.0 * (cache.out - batch.labels) / B;
  detail::cascade_backward(net, cache, dout, grad);
  return mse_loss(cache.out, batch.labels);
}

// ---------------------------------------------------------------------------
// Training data

struct TrajectoryPoint {
  int frame = 0;
  Eigen::Vector2d center = Eigen::Vector2d::Zero();
};

using Trajectories = std::map<int, std::vector<TrajectoryPoint>>;

struct TrainSample {
  std::vector<Eigen::Vector2d> input;
  Eigen::Vector2d label = Eigen::Vector2d::Zero();
  int sequence_id = 0;
  int start_frame = 0;
};

inline Eigen::Vector2d normalize(const Eigen::Vector2d& p, const SequenceMeta& meta) {
  return {p.x() / meta.image_width, p.y() / meta.image_height};
}

inline Eigen::Vector2d denormalize(const Eigen::Vector2d& p, const SequenceMeta& meta) {
  return {p.x() * meta.image_width, p.y() * meta.image_height};
}

/// All sliding (window + 1)-frame slices of consecutive frames. Trajectory
/// points may be unsorted; windows never span a frame gap.
inline std::vector<TrainSample> extract_windows(const Trajectories& tracks, const SequenceMeta& meta,
                                                int window = 8) {
  std::vector<TrainSample> out;
  const int span = window + 1;
  for (const auto& [id, raw] : tracks) {
    std::vector<TrajectoryPoint> pts = raw;
    std::sort(pts.begin(), pts.end(), [](const auto& a, const auto& b) { return a.frame < b.frame; });
    std::size_t run_start = 0;
    for (std::size_t k = 0; k <= pts.size(); ++k) {
      const bool breaks = k == pts.size() || (k > run_start && pts[k].frame != pts[k - 1].frame + 1);
      if (!breaks) continue;
      const std::size_t len = k - run_start;
      for (std::size_t s = run_start; len >= static_cast<std::size_t>(span) && s + span <= k; ++s) {
        TrainSample sample;
        sample.sequence_id = id;
        sample.start_frame = pts[s].frame;
        for (int t = 0; t < window; ++t) sample.input.push_back(normalize(pts[s + t].center, meta));
        sample.label = normalize(pts[s + window].center, meta);
        out.push_back(std::move(sample));
      }
      run_start = k;
    }
  }
  return out;
}

/// Encoded network inputs and labels for the selected samples.
inline Batch make_batch(std::span<const TrainSample> samples, std::span<const std::size_t> order,
                        const NetConfig& cfg) {
  const int window = cfg.window();
  const Eigen::Index B = static_cast<Eigen::Index>(order.size());
  Batch batch;
  batch.steps.assign(window, MatrixXd(2, B));
  batch.labels.resize(2, B);
  for (Eigen::Index b = 0; b < B; ++b) {
    const TrainSample& s = samples[order[b]];
    const Eigen::Vector2d last = s.input.back();
    for (int t = 0; t < window; ++t) batch.steps[t].col(b) = encode_step(cfg, s.input[t], last);
    batch.labels.col(b) = encode_step(cfg, s.label, last);
  }
  return batch;
}

/// MSE in normalized image coordinates (comparable to last_position_mse).
inline double evaluate_mse(const CascadeNet& net, std::span<const TrainSample> samples) {
  if (samples.empty()) return 0.0;
  std::vector<std::size_t> idx(samples.size());
  std::iota(idx.begin(), idx.end(), std::size_t{0});
  const Batch b = make_batch(samples, idx, net.config);
  const MatrixXd raw = forward_batch(net, b.steps);
  double acc = 0.0;
  for (std::size_t k = 0; k < samples.size(); ++k) {
    const Eigen::Vector2d p = decode_output(net.config, raw.col(static_cast<Eigen::Index>(k)), samples[k].input.back());
    acc += (p - samples[k].label).squaredNorm();
  }
  return acc / static_cast<double>(samples.size());
}

/// MSE of predicting the last observed position (zero-velocity baseline).
inline double last_position_mse(std::span<const TrainSample> samples) {
  if (samples.empty()) return 0.0;
  double acc = 0.0;
  for (const auto& s : samples) acc += (s.input.back() - s.label).squaredNorm();
  return acc / static_cast<double>(samples.size());
}

// ---------------------------------------------------------------------------
// Training

struct TrainOptions {
  int epochs = 100;
  double lr0 = 0.01;
  int batch_size = 64;
  std::uint64_t seed = 7;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
  // Gaussian noise added to input windows (not labels) each time a sample is
  // drawn, per axis in normalized units. Tracker histories are filtered
  // detections, not clean trajectories.
  Eigen::Vector2d input_noise = Eigen::Vector2d::Zero();
};

struct TrainResult {
  CascadeNet net;
  std::vector<double> loss_curve;  // mean batch loss per epoch, in network (encoded) units
};

/// Cosine annealing from lr0 at epoch 0 towards 0 at `epochs`.
inline double cosine_lr(double lr0, int epoch, int epochs) {
  constexpr double kPi = 3.14159265358979323846;
  return lr0 * 0.5 * (1.0 + std::cos(kPi * epoch / static_cast<double>(epochs)));
}

/// Adam with per-epoch cosine-annealed learning rate.
inline TrainResult train(CascadeNet net, std::span<const TrainSample> samples, const TrainOptions& opt = {}) {
  if (samples.empty()) throw ConfigError("training needs at least one sample");
  if (opt.epochs <= 0 || opt.batch_size <= 0) throw ConfigError("epochs and batch size must be positive");
  const int window = net.config.window();
  for (const auto& s : samples) {
    if (static_cast<int>(s.input.size()) != window) throw ConfigError("sample window does not match the net");
  }

  CascadeNet m = CascadeNet::zeros(net.config);
  CascadeNet v = CascadeNet::zeros(net.config);
  CascadeNet grad = CascadeNet::zeros(net.config);
  std::mt19937_64 rng(opt.seed);
  std::normal_distribution<double> gauss(0.0, 1.0);
  const bool noisy = opt.input_noise.x() > 0 || opt.input_noise.y() > 0;
  std::vector<TrainSample> perturbed;
  std::vector<std::size_t> identity;
  std::vector<std::size_t> order(samples.size());
  std::iota(order.begin(), order.end(), std::size_t{0});

  TrainResult result;
  long step = 0;
  for (int epoch = 0; epoch < opt.epochs; ++epoch) {
    std::shuffle(order.begin(), order.end(), rng);
    const double lr = cosine_lr(opt.lr0, epoch, opt.epochs);
    double epoch_loss = 0.0;
    std::size_t batches = 0;
    for (std::size_t start = 0; start < order.size(); start += opt.batch_size) {
      const std::size_t end = std::min(order.size(), start + static_cast<std::size_t>(opt.batch_size));
      const auto picked = std::span(order).subspan(start, end - start);
      Batch batch;
      if (noisy) {
        perturbed.clear();
        for (std::size_t k : picked) {
          TrainSample s = samples[k];
          for (auto& p : s.input) {
            p.x() += opt.input_noise.x() * gauss(rng);
            p.y() += opt.input_noise.y() * gauss(rng);
          }
          perturbed.push_back(std::move(s));
        }
        identity.resize(perturbed.size());
        std::iota(identity.begin(), identity.end(), std::size_t{0});
        batch = make_batch(perturbed, identity, net.config);
      } else {
        batch = make_batch(samples, picked, net.config);
      }
      const double loss = loss_and_gradient(net, batch, grad);
      if (!std::isfinite(loss)) throw DivergedLoss("training loss became non-finite at epoch " + std::to_string(epoch));
      epoch_loss += loss;
      ++batches;

      ++step;
      const double c1 = 1.0 - std::pow(opt.beta1, static_cast<double>(step));
      const double c2 = 1.0 - std::pow(opt.beta2, static_cast<double>(step));
      auto params = net.tensors();
      auto grads = grad.tensors();
      auto ms = m.tensors();
      auto vs = v.tensors();
      for (std::size_t k = 0; k < params.size(); ++k) {
        for (std::size_t j = 0; j < params[k].size(); ++j) {
          const double g = grads[k][j];
          ms[k][j] = opt.beta1 * ms[k][j] + (1.0 - opt.beta1) * g;
          vs[k][j] = opt.beta2 * vs[k][j] + (1.0 - opt.beta2) * g * g;
          params[k][j] -= lr * (ms[k][j] / c1) / (std::sqrt(vs[k][j] / c2) + opt.eps);
        }
      }
    }
    result.loss_curve.push_back(epoch_loss / static_cast<double>(batches));
  }
  result.net = std::move(net);
  return result;
}

// ---------------------------------------------------------------------------
// Inference on tracks

/// Next-frame center in pixels from the track's last `window` history
/// entries, which must be consecutive and end at `frame - 1`.
inline Eigen::Vector2d predict_center(const CascadeNet& net, const Track& track, const SequenceMeta& meta,
                                      int frame) {
  const int window = net.config.window();
  if (track.consecutive_run_ending_at(frame - 1) < window) {
    throw WindowTooShort("track " + std::to_string(track.id) + " lacks " + std::to_string(window) +
                         " consecutive frames");
  }
  std::vector<Eigen::Vector2d> input;
  for (auto it = track.history.rbegin(); it != track.history.rend() && static_cast<int>(input.size()) < window;
       ++it) {
    if (it->frame < frame) input.push_back(normalize(it->position, meta));
  }
  std::reverse(input.begin(), input.end());
  Eigen::Vector2d p = denormalize(forward(net, input), meta);
  p.x() = std::clamp(p.x(), -0.5 * meta.image_width, 1.5 * meta.image_width);
  p.y() = std::clamp(p.y(), -0.5 * meta.image_height, 1.5 * meta.image_height);
  return p;
}

// ---------------------------------------------------------------------------
// Checkpoint: a line-oriented text file.
//
//   socialtrack-stmp 1
//   stage <input> <hidden> <steps>      (three lines)
//   fc <fc_hidden>
//   encoding <absolute|relative> <gain as hex float>
//   tensor <name> <rows> <cols>
//   <row values as hex floats>          (rows lines)
//   ...
//   end
//
// Hex floats make the round trip bit-exact.

inline void save_checkpoint(const CascadeNet& net, std::ostream& os) {
  os << "socialtrack-stmp 1\n";
  for (const auto& s : net.config.stages) os << "stage " << s.input << ' ' << s.hidden << ' ' << s.steps << '\n';
  os << "fc " << net.config.fc_hidden << '\n';
  {
    char gain[64];
    std::snprintf(gain, sizeof gain, "%a", net.config.relative_gain);
    os << "encoding " << (net.config.encoding == Encoding::Absolute ? "absolute" : "relative") << ' ' << gain
       << '\n';
  }
  auto write = [&os](const std::string& name, const MatrixXd& m) {
    os << "tensor " << name << ' ' << m.rows() << ' ' << m.cols() << '\n';
    char buf[64];
    for (Eigen::Index r = 0; r < m.rows(); ++r) {
      for (Eigen::Index c = 0; c < m.cols(); ++c) {
        std::snprintf(buf, sizeof buf, "%a", m(r, c));
        os << (c ? " " : "") << buf;
      }
      os << '\n';
    }
  };
  for (int k = 0; k < kNumStages; ++k) {
    const std::string p = "stage" + std::to_string(k + 1) + ".";
    write(p + "w_input", net.stages[k].w_input);
    write(p + "w_hidden", net.stages[k].w_hidden);
    write(p + "bias", net.stages[k].bias);
  }
  write("fc1.w", net.fc1_w);
  write("fc1.b", net.fc1_b);
  write("fc2.w", net.fc2_w);
  write("fc2.b", net.fc2_b);
  os << "end\n";
}

inline CascadeNet load_checkpoint(std::istream& is, const std::string& source = "<stream>") {
  std::string line;
  std::size_t lineno = 0;
  auto next = [&]() -> std::istringstream {
    if (!std::getline(is, line)) throw ParseError(source, lineno + 1, "unexpected end of checkpoint");
    ++lineno;
    return std::istringstream(line);
  };
  {
    auto ss = next();
    std::string magic;
    int version = 0;
    ss >> magic >> version;
    if (magic != "socialtrack-stmp" || version != 1) throw ParseError(source, lineno, "not an STMP checkpoint");
  }
  NetConfig cfg;
  for (auto& s : cfg.stages) {
    auto ss = next();
    std::string tag;
    if (!(ss >> tag >> s.input >> s.hidden >> s.steps) || tag != "stage") {
      throw ParseError(source, lineno, "expected stage line");
    }
  }
  {
    auto ss = next();
    std::string tag;
    if (!(ss >> tag >> cfg.fc_hidden) || tag != "fc") throw ParseError(source, lineno, "expected fc line");
  }
  {
    auto ss = next();
    std::string tag, kind, gain;
    if (!(ss >> tag >> kind >> gain) || tag != "encoding" || (kind != "absolute" && kind != "relative")) {
      throw ParseError(source, lineno, "expected encoding line");
    }
    cfg.encoding = kind == "absolute" ? Encoding::Absolute : Encoding::Relative;
    cfg.relative_gain = std::strtod(gain.c_str(), nullptr);
  }
  try {
    cfg.validate();
  } catch (const ConfigError& e) {
    throw ParseError(source, lineno, e.what());
  }
  CascadeNet net = CascadeNet::zeros(cfg);
  auto read = [&](const std::string& name, auto& m) {
    auto ss = next();
    std::string tag, got;
    Eigen::Index rows = 0, cols = 0;
    if (!(ss >> tag >> got >> rows >> cols) || tag != "tensor" || got != name) {
      throw ParseError(source, lineno, "expected tensor " + name);
    }
    if (rows != m.rows() || cols != m.cols()) throw ParseError(source, lineno, "shape mismatch for " + name);
    for (Eigen::Index r = 0; r < rows; ++r) {
      auto row = next();
      std::string tok;
      for (Eigen::Index c = 0; c < cols; ++c) {
        if (!(row >> tok)) throw ParseError(source, lineno, "too few values for " + name);
        char* end = nullptr;
        const double val = std::strtod(tok.c_str(), &end);
        if (end == tok.c_str() || *end != '\0' || !std::isfinite(val)) {
          throw ParseError(source, lineno, "bad value '" + tok + "'");
        }
        m(r, c) = val;
      }
    }
  };
  for (int k = 0; k < kNumStages; ++k) {
    const std::string p = "stage" + std::to_string(k + 1) + ".";
    read(p + "w_input", net.stages[k].w_input);
    read(p + "w_hidden", net.stages[k].w_hidden);
    read(p + "bias", net.stages[k].bias);
  }
  read("fc1.w", net.fc1_w);
  read("fc1.b", net.fc1_b);
  read("fc2.w", net.fc2_w);
  read("fc2.b", net.fc2_b);
  auto ss = next();
  std::string tag;
  if (!(ss >> tag) || tag != "end") throw ParseError(source, lineno, "missing end marker");
  return net;
}

inline void save_checkpoint(const CascadeNet& net, const std::string& path) {
  std::ofstream os(path);
  if (!os) throw IoError("cannot open " + path + " for writing");
  save_checkpoint(net, os);
  if (!os) throw IoError("failed writing " + path);
}

inline CascadeNet load_checkpoint(const std::string& path) {
  std::ifstream is(path);
  if (!is) throw IoError("cannot open " + path);
  return load_checkpoint(is, path);
}

}  // namespace socialtrack::stmp
