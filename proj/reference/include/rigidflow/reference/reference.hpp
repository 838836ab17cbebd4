#pragma once

// Serial, straightforward versions of the library kernels. They favour
// literal formulas over speed and serve as test oracles and as the baseline
// of the kernel benchmark.

#include <array>
#include <vector>

#include "rigidflow/eval.hpp"
#include "rigidflow/geometry.hpp"
#include "rigidflow/warp.hpp"

namespace rigidflow::reference {

// Tent kernel max(0, 1 - |d|).
double tent(double d);

// output(x, y) = sum over pixels (m, n) of source(m, n) k(m - sx) k(n - sy).
Raster<double> bilinear_warp(const Raster<double>& source, const FlowField& flow);
ScalarField range_map(const FlowField& flow21);

PointCloud backproject(const DepthMap& depth, const Intrinsics& k);
// Flow and validity of project(pose * backproject(depth)) - p.
FlowField rigid_flow(const DepthMap& depth, const PoseSE3& pose, const Intrinsics& k, Mask* valid = nullptr);

Mask motion_mask(const FlowField& f_opt, const FlowField& f_rig, const Mask& non_occluded, double delta);

// Per-pixel SSIM with explicit window sums over the clipped window.
ScalarField ssim(const Raster<double>& a, const Raster<double>& b, int radius);
double photometric_loss(const Raster<double>& target, const Raster<double>& recon, const ScalarField& weight,
                        double alpha, int radius);
double smoothness_loss(const FlowField& flow, const Raster<double>& image, const Mask& region, double beta);
double consistency_loss(const FlowField& a, const FlowField& b, const Mask& moving);

// Region by full sort of (residual, raster index).
Mask select_region(const PointCloud& q_hat, const PointCloud& q_tilde, const Mask& non_occluded, double fraction);
// Closed-form absolute orientation through the unit quaternion that
// maximizes q^T N q (largest eigenvector of the 4x4 Horn matrix).
PoseSE3 align_quaternion(const PointCloud& q_hat, const PointCloud& q_tilde, const Mask& region);

// Metric oracles.
struct FlowOracle {
  double epe_sum = 0.0;
  long long count = 0;
  long long outliers = 0;
};
FlowOracle flow_oracle(const FlowField& pred, const FlowField& gt, const Mask& region);
eval::DepthEval depth_oracle(const DepthMap& pred, const DepthMap& gt, double cap, const StereoRig* rig);
eval::SegEval seg_oracle(const Mask& pred, const Mask& gt);
// Snippet error of scaled positions, minimized by a dense scan over the scale
// followed by bracketing refinement.
double ate_snippet_scan(const std::vector<Eigen::Vector3d>& pred, const std::vector<Eigen::Vector3d>& gt);
eval::OdomErrors kitti_odom_oracle(const std::vector<PoseSE3>& pred, const std::vector<PoseSE3>& gt);

}  // namespace rigidflow::reference
