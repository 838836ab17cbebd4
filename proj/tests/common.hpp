#pragma once

#include <cmath>
#include <random>

#include "rigidflow/geometry.hpp"
#include "rigidflow/warp.hpp"

namespace testutil {

using namespace rigidflow;

inline Raster<double> random_raster(std::mt19937_64& rng, int w, int h, int c, double lo = 0.0, double hi = 1.0) {
  std::uniform_real_distribution<double> d(lo, hi);
  Raster<double> r(w, h, c);
  for (auto& v : r.values()) v = d(rng);
  return r;
}

inline FlowField random_flow(std::mt19937_64& rng, int w, int h, double mag) {
  FlowField f(w, h);
  f.uv = random_raster(rng, w, h, 2, -mag, mag);
  return f;
}

inline Mask random_mask(std::mt19937_64& rng, int w, int h, double p = 0.5) {
  std::bernoulli_distribution d(p);
  Mask m(w, h);
  for (auto& v : m.values()) v = d(rng) ? 1 : 0;
  return m;
}

inline PoseSE3 random_pose(std::mt19937_64& rng, double max_angle, double max_trans) {
  std::normal_distribution<double> n(0.0, 1.0);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  Eigen::Vector3d axis(n(rng), n(rng), n(rng));
  Eigen::Vector3d t(n(rng), n(rng), n(rng));
  return {rotation_exp(axis.normalized() * max_angle * u(rng)), t.normalized() * max_trans * u(rng)};
}

inline double max_abs_diff(const Raster<double>& a, const Raster<double>& b) {
  double m = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) m = std::max(m, std::abs(a.values()[i] - b.values()[i]));
  return m;
}

// Norm-wise relative error ||a - n|| / max(||a||, ||n||); 0 when both vanish.
template <typename V>
double relative_error(const V& analytic, const V& numeric) {
  double d = 0.0, na = 0.0, nn = 0.0;
  for (std::size_t i = 0; i < analytic.size(); ++i) {
    d += (analytic[i] - numeric[i]) * (analytic[i] - numeric[i]);
    na += analytic[i] * analytic[i];
    nn += numeric[i] * numeric[i];
  }
  const double scale = std::sqrt(std::max(na, nn));
  return scale == 0.0 ? 0.0 : std::sqrt(d) / scale;
}

inline double rotation_error_deg(const PoseSE3& a, const PoseSE3& b) {
  return rotation_angle(a.rotation() * b.rotation().transpose()) * 180.0 / M_PI;
}

inline double translation_error(const PoseSE3& a, const PoseSE3& b) {
  return (a.translation() - b.translation()).norm();
}

inline double mask_iou(const Mask& a, const Mask& b) {
  std::size_t inter = 0, uni = 0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    inter += a.values()[i] && b.values()[i];
    uni += a.values()[i] || b.values()[i];
  }
  return uni == 0 ? 1.0 : static_cast<double>(inter) / static_cast<double>(uni);
}

}  // namespace testutil
