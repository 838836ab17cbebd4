#pragma once

#include <array>

#include <Eigen/Core>
#include <Eigen/Geometry>

#include "rigidflow/raster.hpp"

namespace rigidflow {

// Pinhole camera without skew.
struct Intrinsics {
  double fx = 1.0;
  double fy = 1.0;
  double cx = 0.0;
  double cy = 0.0;
  int width = 2;
  int height = 2;

  // Throws InvalidArgument when fx/fy are not positive or the image is
  // smaller than 2x2.
  void validate() const;
  Eigen::Matrix3d matrix() const;
  Eigen::Matrix3d inverse_matrix() const;
};

struct StereoRig {
  Intrinsics intrinsics;
  double baseline = 1.0;  // meters
};

// Rigid transform x' = R x + t. A relative pose T12 maps frame-1 camera
// coordinates to frame-2 camera coordinates.
class PoseSE3 {
 public:
  PoseSE3() : rotation_(Eigen::Matrix3d::Identity()), translation_(Eigen::Vector3d::Zero()) {}
  PoseSE3(const Eigen::Matrix3d& rotation, const Eigen::Vector3d& translation)
      : rotation_(rotation), translation_(translation) {}

  static PoseSE3 identity() { return {}; }
  static PoseSE3 from_matrix(const Eigen::Matrix4d& m);

  const Eigen::Matrix3d& rotation() const { return rotation_; }
  const Eigen::Vector3d& translation() const { return translation_; }

  Eigen::Matrix4d matrix() const;
  PoseSE3 inverse() const;
  Eigen::Vector3d apply(const Eigen::Vector3d& p) const { return rotation_ * p + translation_; }

  // Largest deviation of R^T R from I and of det(R) from 1.
  double orthonormality_error() const;

 private:
  Eigen::Matrix3d rotation_;
  Eigen::Vector3d translation_;
};

// Applies b first, then a. The rotation is projected back onto SO(3) when
// floating-point drift exceeds 1e-9.
PoseSE3 compose(const PoseSE3& a, const PoseSE3& b);

// Nearest rotation in the Frobenius sense (polar decomposition via SVD).
Eigen::Matrix3d orthonormalize(const Eigen::Matrix3d& r);

// Six-parameter pose: (rx, ry, rz) axis-angle in radians, then (tx, ty, tz)
// in meters. The translation is taken verbatim.
using Pose6 = std::array<double, 6>;
Eigen::Matrix3d rotation_exp(const Eigen::Vector3d& axis_angle);
Eigen::Vector3d rotation_log(const Eigen::Matrix3d& r);
PoseSE3 pose_from_6dof(const Pose6& params);
Pose6 pose_to_6dof(const PoseSE3& pose);
double rotation_angle(const Eigen::Matrix3d& r);

// d(exp(w) x)/dw = -[exp(w) x]_x * J_l(w); this returns J_l.
Eigen::Matrix3d so3_left_jacobian(const Eigen::Vector3d& axis_angle);
Eigen::Matrix3d skew(const Eigen::Vector3d& v);

struct DepthMap {
  ScalarField values;  // meters
  Mask valid;

  DepthMap() = default;
  DepthMap(int width, int height) : values(width, height), valid(width, height) {}
  int width() const { return values.width(); }
  int height() const { return values.height(); }
};

struct DisparityMap {
  ScalarField values;  // pixels
  Mask valid;

  DisparityMap() = default;
  DisparityMap(int width, int height) : values(width, height), valid(width, height) {}
  int width() const { return values.width(); }
  int height() const { return values.height(); }
};

struct PointCloud {
  Raster<double> points;  // 3 channels, camera frame, meters
  Mask valid;

  PointCloud() = default;
  PointCloud(int width, int height) : points(width, height, 3), valid(width, height) {}
  int width() const { return points.width(); }
  int height() const { return points.height(); }
  Eigen::Vector3d point(int x, int y) const {
    return {points.at(x, y, 0), points.at(x, y, 1), points.at(x, y, 2)};
  }
  void set_point(int x, int y, const Eigen::Vector3d& p) {
    points.at(x, y, 0) = p.x();
    points.at(x, y, 1) = p.y();
    points.at(x, y, 2) = p.z();
  }
};

// Projected pixel coordinates (2 channels: u, v) and their validity.
struct PixelCoords {
  Raster<double> coords;
  Mask valid;
};

// Points at or in front of this depth cannot be projected.
inline constexpr double kMinProjectionDepth = 1e-6;

// Valid depths must be finite and strictly positive.
DepthMap make_depth_map(const ScalarField& values);

PointCloud backproject(const DepthMap& depth, const Intrinsics& k);
PixelCoords project(const PointCloud& cloud, const Intrinsics& k);
PointCloud transform(const PointCloud& cloud, const PoseSE3& pose);

DepthMap disparity_to_depth(const DisparityMap& disparity, const StereoRig& rig);
DisparityMap depth_to_disparity(const DepthMap& depth, const StereoRig& rig);

}  // namespace rigidflow
