#pragma once

#include <cstddef>

#include "rigidflow/geometry.hpp"
#include "rigidflow/warp.hpp"

namespace rigidflow {

struct RigidFlow {
  FlowField flow;
  Mask valid;
};

// Flow induced by camera motion over a static scene:
// project(pose * backproject(depth1)) - pixel grid.
RigidFlow rigid_flow(const DepthMap& depth1, const PoseSE3& pose, const Intrinsics& k);

inline constexpr double kRegionFraction = 0.25;

// The round(fraction * N) eligible pixels with the smallest |q_hat - q_tilde|,
// where eligible means non-occluded and valid in both clouds. Ties at the
// cut-off go to the earlier pixel in raster order.
Mask select_region(const PointCloud& q_hat, const PointCloud& q_tilde, const Mask& non_occluded,
                   double fraction = kRegionFraction);

// Least-squares rigid transform taking q_hat onto q_tilde over the region
// (SVD of the cross-covariance with a determinant guard against reflections).
PoseSE3 align_svd(const PointCloud& q_hat, const PointCloud& q_tilde, const Mask& region);

struct AlignmentResult {
  PoseSE3 delta;    // correction found by the alignment
  PoseSE3 refined;  // delta applied after the initial pose
  Mask region;
  double rms_before = 0.0;  // over the region, meters
  double rms_after = 0.0;
  std::size_t eligible_count = 0;
  std::size_t region_count = 0;
};

struct RefineOptions {
  double region_fraction = kRegionFraction;
  // Select/align passes; 1 is the single-pass procedure. Later passes
  // re-rank residuals under the pose found so far.
  int iterations = 1;
};

AlignmentResult refine_pose(const DepthMap& depth1, const DepthMap& depth2, const FlowField& flow12,
                            const PoseSE3& pose_init, const Intrinsics& k, const Mask& non_occluded,
                            const RefineOptions& options = {});

// Root-mean-square of |pose * q_hat - q_tilde| over the region.
double region_rms(const PointCloud& q_hat, const PointCloud& q_tilde, const Mask& region,
                  const PoseSE3& pose = PoseSE3::identity());

}  // namespace rigidflow
