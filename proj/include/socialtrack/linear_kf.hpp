#pragma once

// Constant-velocity linear Kalman filter on the same 9-dim state layout with
// the acceleration entry pinned at zero. Serves as the baseline motion model.

#include "socialtrack/vackf.hpp"

namespace socialtrack::vackf {

inline StateMatrix constant_velocity_matrix(double dt) {
  StateMatrix F = StateMatrix::Identity();
  for (int i = 0; i < 4; ++i) F(i, i + 4) = dt;
  F(kAccel, kAccel) = 0.0;
  return F;
}

inline FilterState linear_predict(const FilterState& s, double dt, const NoiseConfig& noise) {
  const StateMatrix F = constant_velocity_matrix(dt);
  StateMatrix Q = noise.process_noise(s.x, dt);
  Q(kAccel, kAccel) = 0.0;
  FilterState out;
  out.x = F * s.x;
  out.P = symmetrized(F * s.P * F.transpose() + Q);
  return out;
}

inline FilterState linear_update(const FilterState& s, const BBox& z, const NoiseConfig& noise) {
  Eigen::Matrix<double, kObsDim, kStateDim> H = Eigen::Matrix<double, kObsDim, kStateDim>::Zero();
  H.leftCols<kObsDim>().setIdentity();
  ObsMatrix S = H * s.P * H.transpose() + noise.measurement_noise(s.x);
  Eigen::LLT<ObsMatrix> llt(S);
  if (llt.info() != Eigen::Success) throw SingularInnovation("innovation covariance is not invertible");
  const CrossMatrix K = llt.solve(H * s.P).transpose();
  FilterState out;
  out.x = s.x + K * (detail::to_obs(z) - H * s.x);
  out.P = symmetrized(s.P - K * S * K.transpose());
  detail::clamp_size(out.x);
  return out;
}

inline FilterState predict(const FilterState& s, double dt, const NoiseConfig& noise, MotionModel model) {
  return model == MotionModel::Vackf ? predict(s, dt, noise) : linear_predict(s, dt, noise);
}

inline FilterState update(const FilterState& s, const BBox& z, const NoiseConfig& noise, MotionModel model) {
  return model == MotionModel::Vackf ? update(s, z, noise) : linear_update(s, z, noise);
}

}  // namespace socialtrack::vackf
