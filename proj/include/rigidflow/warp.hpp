#pragma once

#include <cmath>

#include "rigidflow/geometry.hpp"
#include "rigidflow/raster.hpp"

namespace rigidflow {

// Per-pixel displacement from frame 1 to frame 2, in pixels. Channel 0 is
// the horizontal component u, channel 1 the vertical component v.
struct FlowField {
  Raster<double> uv;

  FlowField() = default;
  FlowField(int width, int height) : uv(width, height, 2) {}
  int width() const { return uv.width(); }
  int height() const { return uv.height(); }
  double& u(int x, int y) { return uv.at(x, y, 0); }
  double& v(int x, int y) { return uv.at(x, y, 1); }
  double u(int x, int y) const { return uv.at(x, y, 0); }
  double v(int x, int y) const { return uv.at(x, y, 1); }
};

// Mirror x -> W-1-x; the horizontal component changes sign.
FlowField flip_horizontal(const FlowField& flow);

// Bilinear kernel footprint of a sample position. The two columns x0, x0+1
// carry weights 1-fx and fx (likewise for rows); this is the tent kernel
// max(0, 1-|m-s|) restricted to its nonzero support.
struct BilinearTap {
  int x0;
  int y0;
  double fx;
  double fy;

  static BilinearTap at(double sx, double sy) {
    const double fx0 = std::floor(sx);
    const double fy0 = std::floor(sy);
    return {static_cast<int>(fx0), static_cast<int>(fy0), sx - fx0, sy - fy0};
  }
};

// True when the sample position lies inside [0, W-1] x [0, H-1].
inline bool sample_in_bounds(double sx, double sy, int width, int height) {
  return sx >= 0.0 && sy >= 0.0 && sx <= width - 1 && sy <= height - 1;
}

struct WarpResult {
  Raster<double> values;
  Mask in_bounds;
};

// output(x, y) = sum_{m,n} source(m, n) k(m - (x + u)) k(n - (y + v)) with the
// tent kernel k. Neighbors outside the raster contribute zero.
WarpResult bilinear_warp(const Raster<double>& source, const FlowField& flow);

// Q2 sampled at p + F12(p). A point is valid when its sample is in bounds and
// every neighbor with nonzero kernel weight is valid.
PointCloud warp_cloud(const PointCloud& cloud2, const FlowField& flow12);

// Bilinear splat of unit mass from every pixel p to p + F21(p); the transpose
// of bilinear_warp. Mass landing outside the raster is dropped.
ScalarField range_map(const FlowField& flow21);

inline constexpr double kDefaultOcclusionThreshold = 0.75;

// Non-occlusion mask of frame 1: 1 where the range map reaches the threshold.
Mask estimate_occlusion(const FlowField& flow21, double threshold = kDefaultOcclusionThreshold);

// Vector-Jacobian products of bilinear_warp, used by the loss gradients.
// The flow product treats each sample's floor cell as fixed (one-sided at
// integer positions); the source product is the bilinear splat of grad_out.
FlowField warp_flow_vjp(const Raster<double>& source, const FlowField& flow, const Raster<double>& grad_out);
Raster<double> warp_source_vjp(const FlowField& flow, const Raster<double>& grad_out);

// Per-pixel Euclidean norm of a - b.
ScalarField flow_magnitude_diff(const FlowField& a, const FlowField& b);

}  // namespace rigidflow
