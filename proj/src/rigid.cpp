#include "rigidflow/rigid.hpp"

#include <algorithm>
#include <cmath>
#include <string>
#include <vector>

#include <Eigen/SVD>

namespace rigidflow {

RigidFlow rigid_flow(const DepthMap& depth1, const PoseSE3& pose, const Intrinsics& k) {
  const PointCloud moved = transform(backproject(depth1, k), pose);
  const PixelCoords proj = project(moved, k);
  const int w = depth1.width();
  const int h = depth1.height();
  RigidFlow out{FlowField(w, h), proj.valid};
#pragma omp parallel for schedule(static)
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      if (!proj.valid.at(x, y)) continue;
      out.flow.u(x, y) = proj.coords.at(x, y, 0) - x;
      out.flow.v(x, y) = proj.coords.at(x, y, 1) - y;
    }
  }
  return out;
}

Mask select_region(const PointCloud& q_hat, const PointCloud& q_tilde, const Mask& non_occluded,
                   double fraction) {
  require_same_extent(q_hat.points, q_tilde.points, "select_region");
  require_same_extent(q_hat.points, non_occluded, "select_region");
  const int w = q_hat.width();
  const int h = q_hat.height();
  const std::size_t n = static_cast<std::size_t>(w) * h;

  std::vector<double> residual(n, -1.0);
#pragma omp parallel for schedule(static)
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      if (!non_occluded.at(x, y) || !q_hat.valid.at(x, y) || !q_tilde.valid.at(x, y)) continue;
      residual[static_cast<std::size_t>(y) * w + x] = (q_hat.point(x, y) - q_tilde.point(x, y)).norm();
    }
  }

  std::vector<std::size_t> eligible;
  eligible.reserve(n);
  for (std::size_t i = 0; i < n; ++i)
    if (residual[i] >= 0.0) eligible.push_back(i);
  if (eligible.empty()) throw EmptyRegionError("select_region: no non-occluded pixel is valid in both clouds");

  const auto keep = static_cast<std::size_t>(std::llround(fraction * static_cast<double>(eligible.size())));
  const auto by_residual = [&](std::size_t a, std::size_t b) {
    return residual[a] < residual[b] || (residual[a] == residual[b] && a < b);
  };
  if (keep < eligible.size()) {
    std::nth_element(eligible.begin(), eligible.begin() + static_cast<std::ptrdiff_t>(keep), eligible.end(),
                     by_residual);
  }

  Mask region(w, h);
  auto rv = region.values();
  for (std::size_t i = 0; i < std::min(keep, eligible.size()); ++i) rv[eligible[i]] = 1;
  return region;
}

PoseSE3 align_svd(const PointCloud& q_hat, const PointCloud& q_tilde, const Mask& region) {
  require_same_extent(q_hat.points, q_tilde.points, "align_svd");
  require_same_extent(q_hat.points, region, "align_svd");
  const int w = q_hat.width();
  const int h = q_hat.height();

  std::size_t count = 0;
  Eigen::Vector3d mean_hat = Eigen::Vector3d::Zero();
  Eigen::Vector3d mean_tilde = Eigen::Vector3d::Zero();
  for (int y = 0; y < h; ++y)
    for (int x = 0; x < w; ++x) {
      if (!region.at(x, y)) continue;
      mean_hat += q_hat.point(x, y);
      mean_tilde += q_tilde.point(x, y);
      ++count;
    }
  if (count < 3) {
    throw SingularConfigurationError("align_svd: region holds " + std::to_string(count) +
                                     " points, at least 3 are required");
  }
  mean_hat /= static_cast<double>(count);
  mean_tilde /= static_cast<double>(count);

  Eigen::Matrix3d cov = Eigen::Matrix3d::Zero();
  for (int y = 0; y < h; ++y)
    for (int x = 0; x < w; ++x) {
      if (!region.at(x, y)) continue;
      cov += (q_hat.point(x, y) - mean_hat) * (q_tilde.point(x, y) - mean_tilde).transpose();
    }

  Eigen::JacobiSVD<Eigen::Matrix3d> svd(cov, Eigen::ComputeFullU | Eigen::ComputeFullV);
  const Eigen::Vector3d sv = svd.singularValues();
  if (!(sv(0) > 0.0) || sv(1) <= 1e-12 * sv(0)) {
    throw SingularConfigurationError("align_svd: region points are collinear or coincident");
  }
  const Eigen::Matrix3d& u = svd.matrixU();
  const Eigen::Matrix3d& v = svd.matrixV();
  Eigen::Matrix3d d = Eigen::Matrix3d::Identity();
  d(2, 2) = (v * u.transpose()).determinant() < 0.0 ? -1.0 : 1.0;
  const Eigen::Matrix3d r = v * d * u.transpose();
  return {r, mean_tilde - r * mean_hat};
}

double region_rms(const PointCloud& q_hat, const PointCloud& q_tilde, const Mask& region, const PoseSE3& pose) {
  double sum = 0.0;
  std::size_t count = 0;
  for (int y = 0; y < region.height(); ++y)
    for (int x = 0; x < region.width(); ++x) {
      if (!region.at(x, y)) continue;
      sum += (pose.apply(q_hat.point(x, y)) - q_tilde.point(x, y)).squaredNorm();
      ++count;
    }
  return count ? std::sqrt(sum / static_cast<double>(count)) : 0.0;
}

AlignmentResult refine_pose(const DepthMap& depth1, const DepthMap& depth2, const FlowField& flow12,
                            const PoseSE3& pose_init, const Intrinsics& k, const Mask& non_occluded,
                            const RefineOptions& options) {
  require_same_extent(depth1.values, depth2.values, "refine_pose");
  require_same_extent(depth1.values, flow12.uv, "refine_pose");
  require_same_extent(depth1.values, non_occluded, "refine_pose");
  if (options.iterations < 1) throw InvalidArgument("refine_pose: iterations must be >= 1");

  const PointCloud q1 = backproject(depth1, k);
  const PointCloud q_hat0 = transform(q1, pose_init);
  const PointCloud q_tilde = warp_cloud(backproject(depth2, k), flow12);

  AlignmentResult result;
  PoseSE3 delta = PoseSE3::identity();
  for (int it = 0; it < options.iterations; ++it) {
    const PointCloud q_hat = it == 0 ? q_hat0 : transform(q_hat0, delta);
    result.region = select_region(q_hat, q_tilde, non_occluded, options.region_fraction);
    delta = compose(align_svd(q_hat, q_tilde, result.region), delta);
  }
  result.delta = delta;
  result.refined = compose(delta, pose_init);
  result.region_count = count_set(result.region);
  for (int y = 0; y < q1.height(); ++y)
    for (int x = 0; x < q1.width(); ++x)
      result.eligible_count += non_occluded.at(x, y) && q_hat0.valid.at(x, y) && q_tilde.valid.at(x, y);
  result.rms_before = region_rms(q_hat0, q_tilde, result.region);
  result.rms_after = region_rms(q_hat0, q_tilde, result.region, delta);
  return result;
}

}  // namespace rigidflow
