#pragma once

// Velocity adaptive cubature Kalman filter.
//
// State layout: [x_c, y_c, w, h, v_x, v_y, v_w, v_h, a] where `a` is a scalar
// acceleration acting along the current heading v / |v|. Observations are the
// box [x_c, y_c, w, h].

#include <array>
#include <cmath>

#include <Eigen/Dense>

#include "socialtrack/errors.hpp"
#include "socialtrack/model.hpp"

namespace socialtrack::vackf {

inline constexpr int kStateDim = 9;
inline constexpr int kObsDim = 4;
inline constexpr int kNumCubaturePoints = 2 * kStateDim;
inline constexpr double kJitter = 1e-9;
inline constexpr double kMinSpeed = 1e-6;
inline constexpr double kMinBoxSide = 1.0;

using StateVector = Eigen::Matrix<double, kStateDim, 1>;
using StateMatrix = Eigen::Matrix<double, kStateDim, kStateDim>;
using ObsVector = Eigen::Matrix<double, kObsDim, 1>;
using ObsMatrix = Eigen::Matrix<double, kObsDim, kObsDim>;
using CrossMatrix = Eigen::Matrix<double, kStateDim, kObsDim>;

enum StateIndex : int { kX = 0, kY, kW, kH, kVx, kVy, kVw, kVh, kAccel };

enum class MotionModel { Vackf, Linear };

struct FilterState {
  StateVector x = StateVector::Zero();
  StateMatrix P = StateMatrix::Identity();

  BBox box() const {
    return {x(kX), x(kY), std::max(x(kW), kMinBoxSide), std::max(x(kH), kMinBoxSide)};
  }
  Eigen::Vector2d position() const { return {x(kX), x(kY)}; }
  Eigen::Vector2d velocity() const { return {x(kVx), x(kVy)}; }
};

/// Noise model. Standard deviations are relative to the box height, which
/// keeps the filter scale-free across small and large targets.
struct NoiseConfig {
  double std_position = 0.05;      // x, y, w, h process std per frame (x h)
  double std_velocity = 0.00625;   // velocity process std per frame (x h)
  double std_accel = 0.005;        // acceleration process std per frame (x h)
  double std_measurement = 0.05;   // observation std (x h)
  double init_position_scale = 2.0;
  double init_velocity_scale = 10.0;
  double accel_threshold = 0.1;    // px/frame^2
  double accel_decay_rate = 0.1;   // 1/frame

  void validate() const {
    if (!(std_position > 0 && std_velocity > 0 && std_accel >= 0 && std_measurement > 0 &&
          init_position_scale > 0 && init_velocity_scale > 0)) {
      throw ConfigError("noise standard deviations must be positive");
    }
    if (!(accel_threshold >= 0)) throw ConfigError("accel_threshold must be >= 0");
    if (!(accel_decay_rate >= 0)) throw ConfigError("accel_decay_rate must be >= 0");
  }

  /// Q(dt): diagonal, linear in dt so that Q(0) = 0.
  StateMatrix process_noise(const StateVector& x, double dt) const {
    const double h = std::max(x(kH), kMinBoxSide);
    const double p = std_position * h;
    const double v = std_velocity * h;
    const double a = std_accel * h;
    StateVector var;
    var << p * p, p * p, p * p, p * p, v * v, v * v, v * v, v * v, a * a;
    return (dt * var).asDiagonal();
  }

  ObsMatrix measurement_noise(const StateVector& x) const {
    const double r = std_measurement * std::max(x(kH), kMinBoxSide);
    return ObsVector::Constant(r * r).asDiagonal();
  }
};

struct CubatureSet {
  std::array<StateVector, kNumCubaturePoints> points;
  double weight = 1.0 / kNumCubaturePoints;

  StateVector mean() const {
    StateVector m = StateVector::Zero();
    for (const auto& p : points) m += p;
    return m * weight;
  }
};

/// Threshold-gated exponential decay of the acceleration state. The test is on
/// |a| so decelerations decay the same way accelerations do.
inline double accel_decay(double a, double dt, const NoiseConfig& noise = {}) {
  if (std::abs(a) <= noise.accel_threshold) return 0.0;
  return a * std::exp(-noise.accel_decay_rate * dt);
}

inline StateVector transition(const StateVector& x, double dt, const NoiseConfig& noise = {}) {
  StateVector out = x;
  const double speed = std::hypot(x(kVx), x(kVy));
  double ux = 0.0;
  double uy = 0.0;
  if (speed >= kMinSpeed) {
    ux = x(kVx) / speed;
    uy = x(kVy) / speed;
  }
  const double a = x(kAccel);
  out(kX) += x(kVx) * dt + 0.5 * a * ux * dt * dt;
  out(kY) += x(kVy) * dt + 0.5 * a * uy * dt * dt;
  out(kVx) += a * ux * dt;
  out(kVy) += a * uy * dt;
  out(kW) += x(kVw) * dt;
  out(kH) += x(kVh) * dt;
  out(kAccel) = accel_decay(a, dt, noise);
  return out;
}

inline StateMatrix symmetrized(const StateMatrix& P) { return 0.5 * (P + P.transpose()); }

/// Third-degree spherical-radial cubature points: mean +/- sqrt(n) * S e_i
/// with S S^T = cov + jitter * I.
inline CubatureSet cubature_points(const StateVector& mean, const StateMatrix& cov) {
  const StateMatrix reg = symmetrized(cov) + kJitter * StateMatrix::Identity();
  Eigen::LLT<StateMatrix> llt(reg);
  if (llt.info() != Eigen::Success || !reg.allFinite()) {
    throw CovarianceNotPSD("state covariance is not positive semi-definite");
  }
  const StateMatrix S = llt.matrixL();
  const double scale = std::sqrt(static_cast<double>(kStateDim));
  CubatureSet set;
  for (int i = 0; i < kStateDim; ++i) {
    set.points[i] = mean + scale * S.col(i);
    set.points[i + kStateDim] = mean - scale * S.col(i);
  }
  return set;
}

inline FilterState initiate(const BBox& box, const NoiseConfig& noise,
                            MotionModel model = MotionModel::Vackf) {
  FilterState s;
  s.x << box.x_center, box.y_center, box.width, box.height, 0, 0, 0, 0, 0;
  const double h = std::max(box.height, kMinBoxSide);
  const double p = noise.init_position_scale * noise.std_position * h;
  const double v = noise.init_velocity_scale * noise.std_velocity * h;
  const double a = model == MotionModel::Vackf ? noise.init_velocity_scale * noise.std_accel * h : 0.0;
  StateVector var;
  var << p * p, p * p, p * p, p * p, v * v, v * v, v * v, v * v, a * a;
  s.P = var.asDiagonal();
  return s;
}

inline FilterState predict(const FilterState& s, double dt, const NoiseConfig& noise) {
  const CubatureSet set = cubature_points(s.x, s.P);
  CubatureSet moved;
  for (int i = 0; i < kNumCubaturePoints; ++i) moved.points[i] = transition(set.points[i], dt, noise);

  FilterState out;
  out.x = moved.mean();
  StateMatrix scatter = StateMatrix::Zero();
  for (const auto& p : moved.points) {
    const StateVector d = p - out.x;
    scatter.noalias() += d * d.transpose();
  }
  out.P = symmetrized(scatter * moved.weight + noise.process_noise(s.x, dt));
  return out;
}

namespace detail {

inline ObsVector observe(const StateVector& x) { return x.head<kObsDim>(); }

inline ObsVector to_obs(const BBox& b) { return {b.x_center, b.y_center, b.width, b.height}; }

inline void clamp_size(StateVector& x) {
  x(kW) = std::max(x(kW), kMinBoxSide);
  x(kH) = std::max(x(kH), kMinBoxSide);
}

}  // namespace detail

/// Cubature measurement update against the observed box.
inline FilterState update(const FilterState& s, const BBox& z, const NoiseConfig& noise) {
  const CubatureSet set = cubature_points(s.x, s.P);
  const StateVector x_mean = set.mean();

  std::array<ObsVector, kNumCubaturePoints> obs;
  ObsVector z_mean = ObsVector::Zero();
  for (int i = 0; i < kNumCubaturePoints; ++i) {
    obs[i] = detail::observe(set.points[i]);
    z_mean += obs[i];
  }
  z_mean *= set.weight;

  ObsMatrix Pzz = ObsMatrix::Zero();
  CrossMatrix Pxz = CrossMatrix::Zero();
  for (int i = 0; i < kNumCubaturePoints; ++i) {
    const ObsVector dz = obs[i] - z_mean;
    Pzz.noalias() += dz * dz.transpose();
    Pxz.noalias() += (set.points[i] - x_mean) * dz.transpose();
  }
  Pzz = Pzz * set.weight + noise.measurement_noise(s.x);
  Pzz = 0.5 * (Pzz + Pzz.transpose());
  Pxz *= set.weight;

  Eigen::LLT<ObsMatrix> llt(Pzz + kJitter * ObsMatrix::Identity());
  if (llt.info() != Eigen::Success || !Pzz.allFinite()) {
    throw SingularInnovation("innovation covariance is not invertible");
  }
  // K = Pxz Pzz^-1, solved as (Pzz^-1 Pxz^T)^T since Pzz is symmetric.
  const CrossMatrix K = llt.solve(Pxz.transpose()).transpose();

  FilterState out;
  out.x = s.x + K * (detail::to_obs(z) - z_mean);
  out.P = symmetrized(s.P - K * Pzz * K.transpose());
  detail::clamp_size(out.x);
  return out;
}

}  // namespace socialtrack::vackf
