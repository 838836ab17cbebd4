#include "rigidflow/geometry.hpp"

#include <cmath>
#include <string>

#include <Eigen/Geometry>
#include <Eigen/SVD>

namespace rigidflow {

void Intrinsics::validate() const {
  if (!(fx > 0.0) || !(fy > 0.0)) throw InvalidArgument("intrinsics: focal lengths must be positive");
  if (width < 2 || height < 2) throw InvalidArgument("intrinsics: image must be at least 2x2");
  if (!std::isfinite(cx) || !std::isfinite(cy)) throw InvalidArgument("intrinsics: principal point not finite");
}

Eigen::Matrix3d Intrinsics::matrix() const {
  Eigen::Matrix3d k;
  k << fx, 0.0, cx, 0.0, fy, cy, 0.0, 0.0, 1.0;
  return k;
}

Eigen::Matrix3d Intrinsics::inverse_matrix() const {
  Eigen::Matrix3d k;
  k << 1.0 / fx, 0.0, -cx / fx, 0.0, 1.0 / fy, -cy / fy, 0.0, 0.0, 1.0;
  return k;
}

PoseSE3 PoseSE3::from_matrix(const Eigen::Matrix4d& m) {
  return {m.topLeftCorner<3, 3>(), m.topRightCorner<3, 1>()};
}

Eigen::Matrix4d PoseSE3::matrix() const {
  Eigen::Matrix4d m = Eigen::Matrix4d::Identity();
  m.topLeftCorner<3, 3>() = rotation_;
  m.topRightCorner<3, 1>() = translation_;
  return m;
}

PoseSE3 PoseSE3::inverse() const {
  Eigen::Matrix3d rt = rotation_.transpose();
  return {rt, -(rt * translation_)};
}

double PoseSE3::orthonormality_error() const {
  double ortho = (rotation_.transpose() * rotation_ - Eigen::Matrix3d::Identity()).cwiseAbs().maxCoeff();
  return std::max(ortho, std::abs(rotation_.determinant() - 1.0));
}

Eigen::Matrix3d orthonormalize(const Eigen::Matrix3d& r) {
  Eigen::JacobiSVD<Eigen::Matrix3d> svd(r, Eigen::ComputeFullU | Eigen::ComputeFullV);
  Eigen::Matrix3d u = svd.matrixU();
  Eigen::Matrix3d v = svd.matrixV();
  Eigen::Matrix3d d = Eigen::Matrix3d::Identity();
  d(2, 2) = (u * v.transpose()).determinant() < 0.0 ? -1.0 : 1.0;
  return u * d * v.transpose();
}

PoseSE3 compose(const PoseSE3& a, const PoseSE3& b) {
  Eigen::Matrix3d r = a.rotation() * b.rotation();
  Eigen::Vector3d t = a.rotation() * b.translation() + a.translation();
  PoseSE3 out(r, t);
  if (out.orthonormality_error() > 1e-9) out = PoseSE3(orthonormalize(r), t);
  return out;
}

Eigen::Matrix3d skew(const Eigen::Vector3d& v) {
  Eigen::Matrix3d s;
  s << 0.0, -v.z(), v.y(), v.z(), 0.0, -v.x(), -v.y(), v.x(), 0.0;
  return s;
}

Eigen::Matrix3d rotation_exp(const Eigen::Vector3d& w) {
  const double theta = w.norm();
  if (theta == 0.0) return Eigen::Matrix3d::Identity();
  return Eigen::AngleAxisd(theta, w / theta).toRotationMatrix();
}

Eigen::Vector3d rotation_log(const Eigen::Matrix3d& r) {
  Eigen::AngleAxisd aa(r);
  return aa.angle() * aa.axis();
}

double rotation_angle(const Eigen::Matrix3d& r) {
  // atan2 form stays accurate near 0 and pi, unlike acos of the trace.
  const Eigen::Vector3d v(r(2, 1) - r(1, 2), r(0, 2) - r(2, 0), r(1, 0) - r(0, 1));
  return std::atan2(0.5 * v.norm(), 0.5 * (r.trace() - 1.0));
}

Eigen::Matrix3d so3_left_jacobian(const Eigen::Vector3d& w) {
  const double theta = w.norm();
  const Eigen::Matrix3d wx = skew(w);
  double a;
  double b;
  if (theta < 1e-5) {
    const double t2 = theta * theta;
    a = 0.5 - t2 / 24.0;
    b = 1.0 / 6.0 - t2 / 120.0;
  } else {
    const double t2 = theta * theta;
    a = (1.0 - std::cos(theta)) / t2;
    b = (theta - std::sin(theta)) / (t2 * theta);
  }
  return Eigen::Matrix3d::Identity() + a * wx + b * wx * wx;
}

PoseSE3 pose_from_6dof(const Pose6& p) {
  return {rotation_exp({p[0], p[1], p[2]}), {p[3], p[4], p[5]}};
}

Pose6 pose_to_6dof(const PoseSE3& pose) {
  const Eigen::Vector3d w = rotation_log(pose.rotation());
  const Eigen::Vector3d& t = pose.translation();
  return {w.x(), w.y(), w.z(), t.x(), t.y(), t.z()};
}

DepthMap make_depth_map(const ScalarField& values) {
  DepthMap d;
  d.values = values;
  d.valid = Mask(values.width(), values.height());
  auto in = values.values();
  auto ok = d.valid.values();
  for (std::size_t i = 0; i < in.size(); ++i) ok[i] = (std::isfinite(in[i]) && in[i] > 0.0) ? 1 : 0;
  return d;
}

namespace {

void require_intrinsics_extent(int width, int height, const Intrinsics& k, const char* what) {
  if (width != k.width || height != k.height) {
    throw DimensionError(std::string(what) + ": raster is " + std::to_string(width) + "x" +
                         std::to_string(height) + " but intrinsics describe " + std::to_string(k.width) +
                         "x" + std::to_string(k.height));
  }
}

}  // namespace

PointCloud backproject(const DepthMap& depth, const Intrinsics& k) {
  require_same_extent(depth.values, depth.valid, "backproject");
  require_intrinsics_extent(depth.width(), depth.height(), k, "backproject");
  const int w = depth.width();
  const int h = depth.height();
  PointCloud cloud(w, h);
  const double ifx = 1.0 / k.fx;
  const double ify = 1.0 / k.fy;
#pragma omp parallel for schedule(static)
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      const double z = depth.values.at(x, y);
      if (!depth.valid.at(x, y) || !std::isfinite(z) || z <= 0.0) continue;
      cloud.points.at(x, y, 0) = z * (x - k.cx) * ifx;
      cloud.points.at(x, y, 1) = z * (y - k.cy) * ify;
      cloud.points.at(x, y, 2) = z;
      cloud.valid.at(x, y) = 1;
    }
  }
  return cloud;
}

PixelCoords project(const PointCloud& cloud, const Intrinsics& k) {
  const int w = cloud.width();
  const int h = cloud.height();
  PixelCoords out{Raster<double>(w, h, 2), Mask(w, h)};
#pragma omp parallel for schedule(static)
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      if (!cloud.valid.at(x, y)) continue;
      const double px = cloud.points.at(x, y, 0);
      const double py = cloud.points.at(x, y, 1);
      const double pz = cloud.points.at(x, y, 2);
      if (!(pz > kMinProjectionDepth) || !std::isfinite(px) || !std::isfinite(py)) continue;
      out.coords.at(x, y, 0) = k.fx * px / pz + k.cx;
      out.coords.at(x, y, 1) = k.fy * py / pz + k.cy;
      out.valid.at(x, y) = 1;
    }
  }
  return out;
}

PointCloud transform(const PointCloud& cloud, const PoseSE3& pose) {
  const int w = cloud.width();
  const int h = cloud.height();
  PointCloud out(w, h);
  out.valid = cloud.valid;
  const Eigen::Matrix3d& r = pose.rotation();
  const Eigen::Vector3d& t = pose.translation();
#pragma omp parallel for schedule(static)
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      if (!cloud.valid.at(x, y)) continue;
      out.set_point(x, y, r * cloud.point(x, y) + t);
    }
  }
  return out;
}

DepthMap disparity_to_depth(const DisparityMap& disparity, const StereoRig& rig) {
  require_same_extent(disparity.values, disparity.valid, "disparity_to_depth");
  const double bf = rig.baseline * rig.intrinsics.fx;
  DepthMap depth(disparity.width(), disparity.height());
  auto d = disparity.values.values();
  auto dv = disparity.valid.values();
  auto z = depth.values.values();
  auto zv = depth.valid.values();
  for (std::size_t i = 0; i < d.size(); ++i) {
    if (dv[i] && std::isfinite(d[i]) && d[i] > 0.0) {
      z[i] = bf / d[i];
      zv[i] = 1;
    }
  }
  return depth;
}

DisparityMap depth_to_disparity(const DepthMap& depth, const StereoRig& rig) {
  require_same_extent(depth.values, depth.valid, "depth_to_disparity");
  const double bf = rig.baseline * rig.intrinsics.fx;
  DisparityMap disp(depth.width(), depth.height());
  auto z = depth.values.values();
  auto zv = depth.valid.values();
  auto d = disp.values.values();
  auto dv = disp.valid.values();
  for (std::size_t i = 0; i < z.size(); ++i) {
    if (zv[i] && std::isfinite(z[i]) && z[i] > 0.0) {
      d[i] = bf / z[i];
      dv[i] = 1;
    }
  }
  return disp;
}

}  // namespace rigidflow
