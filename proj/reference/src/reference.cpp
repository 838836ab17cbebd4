#include "rigidflow/reference/reference.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <numbers>

#include <Eigen/Eigenvalues>

namespace rigidflow::reference {

double tent(double d) { return std::max(0.0, 1.0 - std::abs(d)); }

Raster<double> bilinear_warp(const Raster<double>& source, const FlowField& flow) {
  const int w = source.width();
  const int h = source.height();
  Raster<double> out(w, h, source.channels());
  for (int y = 0; y < h; ++y)
    for (int x = 0; x < w; ++x) {
      const double sx = x + flow.u(x, y);
      const double sy = y + flow.v(x, y);
      // Only pixels within distance 1 carry weight; the window is widened by
      // one on each side so every such pixel is visited.
      const int m0 = std::max(0, static_cast<int>(std::floor(sx)) - 1);
      const int m1 = std::min(w - 1, static_cast<int>(std::floor(sx)) + 2);
      const int n0 = std::max(0, static_cast<int>(std::floor(sy)) - 1);
      const int n1 = std::min(h - 1, static_cast<int>(std::floor(sy)) + 2);
      for (int c = 0; c < source.channels(); ++c) {
        double acc = 0.0;
        for (int n = n0; n <= n1; ++n)
          for (int m = m0; m <= m1; ++m) acc += source.at(m, n, c) * tent(m - sx) * tent(n - sy);
        out.at(x, y, c) = acc;
      }
    }
  return out;
}

ScalarField range_map(const FlowField& flow21) {
  const int w = flow21.width();
  const int h = flow21.height();
  ScalarField v(w, h);
  for (int y = 0; y < h; ++y)
    for (int x = 0; x < w; ++x) {
      const double tx = x + flow21.u(x, y);
      const double ty = y + flow21.v(x, y);
      for (int n = std::max(0, static_cast<int>(std::floor(ty)) - 1);
           n <= std::min(h - 1, static_cast<int>(std::floor(ty)) + 2); ++n)
        for (int m = std::max(0, static_cast<int>(std::floor(tx)) - 1);
             m <= std::min(w - 1, static_cast<int>(std::floor(tx)) + 2); ++m)
          v.at(m, n) += tent(m - tx) * tent(n - ty);
    }
  return v;
}

PointCloud backproject(const DepthMap& depth, const Intrinsics& k) {
  const Eigen::Matrix3d kinv = k.matrix().inverse();
  PointCloud out(depth.width(), depth.height());
  for (int y = 0; y < depth.height(); ++y)
    for (int x = 0; x < depth.width(); ++x) {
      const double z = depth.values.at(x, y);
      if (!depth.valid.at(x, y) || !(z > 0.0) || !std::isfinite(z)) continue;
      out.set_point(x, y, z * (kinv * Eigen::Vector3d(x, y, 1.0)));
      out.valid.at(x, y) = 1;
    }
  return out;
}

FlowField rigid_flow(const DepthMap& depth, const PoseSE3& pose, const Intrinsics& k, Mask* valid) {
  const PointCloud cloud = reference::backproject(depth, k);
  const Eigen::Matrix4d t = pose.matrix();
  const Eigen::Matrix3d km = k.matrix();
  FlowField out(depth.width(), depth.height());
  if (valid) *valid = Mask(depth.width(), depth.height());
  for (int y = 0; y < depth.height(); ++y)
    for (int x = 0; x < depth.width(); ++x) {
      if (!cloud.valid.at(x, y)) continue;
      const Eigen::Vector4d p = t * cloud.point(x, y).homogeneous();
      if (!(p.z() > kMinProjectionDepth)) continue;
      const Eigen::Vector3d q = km * p.head<3>();
      out.u(x, y) = q.x() / q.z() - x;
      out.v(x, y) = q.y() / q.z() - y;
      if (valid) valid->at(x, y) = 1;
    }
  return out;
}

Mask motion_mask(const FlowField& f_opt, const FlowField& f_rig, const Mask& non_occluded, double delta) {
  Mask m(f_opt.width(), f_opt.height());
  for (int y = 0; y < m.height(); ++y)
    for (int x = 0; x < m.width(); ++x) {
      const double d = std::hypot(f_opt.u(x, y) - f_rig.u(x, y), f_opt.v(x, y) - f_rig.v(x, y));
      m.at(x, y) = (non_occluded.at(x, y) && d > delta) ? 1 : 0;
    }
  return m;
}

ScalarField ssim(const Raster<double>& a, const Raster<double>& b, int radius) {
  const int w = a.width();
  const int h = a.height();
  ScalarField out(w, h);
  for (int y = 0; y < h; ++y)
    for (int x = 0; x < w; ++x) {
      double total = 0.0;
      for (int c = 0; c < a.channels(); ++c) {
        std::vector<double> va, vb;
        for (int j = y - radius; j <= y + radius; ++j)
          for (int i = x - radius; i <= x + radius; ++i)
            if (a.contains(i, j)) {
              va.push_back(a.at(i, j, c));
              vb.push_back(b.at(i, j, c));
            }
        const double n = static_cast<double>(va.size());
        const double ma = std::accumulate(va.begin(), va.end(), 0.0) / n;
        const double mb = std::accumulate(vb.begin(), vb.end(), 0.0) / n;
        double sa = 0.0, sb = 0.0, sab = 0.0;
        for (std::size_t i = 0; i < va.size(); ++i) {
          sa += (va[i] - ma) * (va[i] - ma);
          sb += (vb[i] - mb) * (vb[i] - mb);
          sab += (va[i] - ma) * (vb[i] - mb);
        }
        sa /= n;
        sb /= n;
        sab /= n;
        const double c1 = 0.01 * 0.01;
        const double c2 = 0.03 * 0.03;
        total += (2 * ma * mb + c1) * (2 * sab + c2) / ((ma * ma + mb * mb + c1) * (sa + sb + c2));
      }
      out.at(x, y) = total / a.channels();
    }
  return out;
}

double photometric_loss(const Raster<double>& target, const Raster<double>& recon, const ScalarField& weight,
                        double alpha, int radius) {
  const ScalarField s = ssim(target, recon, radius);
  double num = 0.0, den = 0.0;
  for (int y = 0; y < target.height(); ++y)
    for (int x = 0; x < target.width(); ++x) {
      double l1 = 0.0;
      for (int c = 0; c < target.channels(); ++c) l1 += std::abs(target.at(x, y, c) - recon.at(x, y, c));
      l1 /= target.channels();
      num += weight.at(x, y) * (alpha * (1.0 - s.at(x, y)) / 2.0 + (1.0 - alpha) * l1);
      den += weight.at(x, y);
    }
  return den == 0.0 ? 0.0 : num / den;
}

double smoothness_loss(const FlowField& flow, const Raster<double>& image, const Mask& region, double beta) {
  const int w = flow.width();
  const int h = flow.height();
  const auto edge = [&](int x0, int y0, int x1, int y1) {
    double g = 0.0;
    for (int c = 0; c < image.channels(); ++c) g += std::abs(image.at(x1, y1, c) - image.at(x0, y0, c)) / 2.0;
    return std::exp(-beta * g / image.channels());
  };
  double sum = 0.0;
  for (int y = 0; y < h; ++y)
    for (int x = 0; x < w; ++x) {
      if (!region.at(x, y)) continue;
      for (int c = 0; c < 2; ++c) {
        if (x >= 1 && x + 1 < w)
          sum += std::abs(flow.uv.at(x + 1, y, c) + flow.uv.at(x - 1, y, c) - 2 * flow.uv.at(x, y, c)) *
                 edge(x - 1, y, x + 1, y);
        if (y >= 1 && y + 1 < h)
          sum += std::abs(flow.uv.at(x, y + 1, c) + flow.uv.at(x, y - 1, c) - 2 * flow.uv.at(x, y, c)) *
                 edge(x, y - 1, x, y + 1);
      }
    }
  return sum / (w * h);
}

double consistency_loss(const FlowField& a, const FlowField& b, const Mask& moving) {
  double sum = 0.0;
  for (int y = 0; y < a.height(); ++y)
    for (int x = 0; x < a.width(); ++x)
      sum += (std::abs(a.u(x, y) - b.u(x, y)) + std::abs(a.v(x, y) - b.v(x, y))) * (1 - moving.at(x, y));
  return sum / (a.width() * a.height());
}

Mask select_region(const PointCloud& q_hat, const PointCloud& q_tilde, const Mask& non_occluded, double fraction) {
  std::vector<std::pair<double, int>> items;
  const int w = q_hat.width();
  for (int y = 0; y < q_hat.height(); ++y)
    for (int x = 0; x < w; ++x)
      if (non_occluded.at(x, y) && q_hat.valid.at(x, y) && q_tilde.valid.at(x, y))
        items.emplace_back((q_hat.point(x, y) - q_tilde.point(x, y)).norm(), y * w + x);
  std::sort(items.begin(), items.end());
  const auto keep = static_cast<std::size_t>(std::llround(fraction * static_cast<double>(items.size())));
  Mask region(w, q_hat.height());
  for (std::size_t i = 0; i < keep && i < items.size(); ++i)
    region.at(items[i].second % w, items[i].second / w) = 1;
  return region;
}

PoseSE3 align_quaternion(const PointCloud& q_hat, const PointCloud& q_tilde, const Mask& region) {
  std::vector<Eigen::Vector3d> a, b;
  for (int y = 0; y < region.height(); ++y)
    for (int x = 0; x < region.width(); ++x)
      if (region.at(x, y)) {
        a.push_back(q_hat.point(x, y));
        b.push_back(q_tilde.point(x, y));
      }
  Eigen::Vector3d ca = Eigen::Vector3d::Zero(), cb = Eigen::Vector3d::Zero();
  for (std::size_t i = 0; i < a.size(); ++i) {
    ca += a[i];
    cb += b[i];
  }
  ca /= static_cast<double>(a.size());
  cb /= static_cast<double>(b.size());
  Eigen::Matrix3d s = Eigen::Matrix3d::Zero();
  for (std::size_t i = 0; i < a.size(); ++i) s += (a[i] - ca) * (b[i] - cb).transpose();
  const double sxx = s(0, 0), sxy = s(0, 1), sxz = s(0, 2);
  const double syx = s(1, 0), syy = s(1, 1), syz = s(1, 2);
  const double szx = s(2, 0), szy = s(2, 1), szz = s(2, 2);
  Eigen::Matrix4d n;
  n << sxx + syy + szz, syz - szy, szx - sxz, sxy - syx,
       syz - szy, sxx - syy - szz, sxy + syx, szx + sxz,
       szx - sxz, sxy + syx, -sxx + syy - szz, syz + szy,
       sxy - syx, szx + sxz, syz + szy, -sxx - syy + szz;
  Eigen::SelfAdjointEigenSolver<Eigen::Matrix4d> es(n);
  const Eigen::Vector4d q = es.eigenvectors().col(3);
  const Eigen::Quaterniond quat(q(0), q(1), q(2), q(3));
  const Eigen::Matrix3d r = quat.normalized().toRotationMatrix();
  return {r, cb - r * ca};
}

FlowOracle flow_oracle(const FlowField& pred, const FlowField& gt, const Mask& region) {
  FlowOracle o;
  for (int y = 0; y < gt.height(); ++y)
    for (int x = 0; x < gt.width(); ++x) {
      if (!region.at(x, y)) continue;
      const double e = std::hypot(pred.u(x, y) - gt.u(x, y), pred.v(x, y) - gt.v(x, y));
      const double m = std::hypot(gt.u(x, y), gt.v(x, y));
      o.epe_sum += e;
      ++o.count;
      if (!(e < 3.0 || e < 0.05 * m)) ++o.outliers;
    }
  return o;
}

eval::DepthEval depth_oracle(const DepthMap& pred, const DepthMap& gt, double cap, const StereoRig* rig) {
  std::vector<double> p, g;
  for (int y = 0; y < gt.height(); ++y)
    for (int x = 0; x < gt.width(); ++x)
      if (gt.valid.at(x, y) && pred.valid.at(x, y)) {
        g.push_back(std::min(cap, std::max(1e-3, gt.values.at(x, y))));
        p.push_back(std::min(cap, std::max(1e-3, pred.values.at(x, y))));
      }
  eval::DepthEval e;
  const double n = static_cast<double>(g.size());
  double d1 = 0.0;
  for (std::size_t i = 0; i < g.size(); ++i) {
    e.abs_rel += std::abs(p[i] - g[i]) / g[i] / n;
    e.sq_rel += (p[i] - g[i]) * (p[i] - g[i]) / g[i] / n;
    e.rmse += (p[i] - g[i]) * (p[i] - g[i]) / n;
    e.rmse_log += std::pow(std::log(p[i] / g[i]), 2) / n;
    const double t = std::max(p[i] / g[i], g[i] / p[i]);
    e.delta1 += (t < 1.25) / n;
    e.delta2 += (t < std::pow(1.25, 2)) / n;
    e.delta3 += (t < std::pow(1.25, 3)) / n;
    if (rig) {
      const double dg = rig->baseline * rig->intrinsics.fx / g[i];
      const double dp = rig->baseline * rig->intrinsics.fx / p[i];
      const double err = std::abs(dp - dg);
      d1 += !(err < 3.0 || err < 0.05 * dg);
    }
  }
  e.rmse = std::sqrt(e.rmse);
  e.rmse_log = std::sqrt(e.rmse_log);
  if (rig) e.d1_all = 100.0 * d1 / n;
  e.pixels = static_cast<long long>(n);
  return e;
}

eval::SegEval seg_oracle(const Mask& pred, const Mask& gt) {
  eval::SegEval e;
  double tp = 0, tn = 0, fp = 0, fn = 0;
  for (int y = 0; y < gt.height(); ++y)
    for (int x = 0; x < gt.width(); ++x) {
      const bool g = gt.at(x, y), p = pred.at(x, y);
      tp += g && p;
      tn += !g && !p;
      fp += !g && p;
      fn += g && !p;
    }
  const double n = tp + tn + fp + fn;
  e.pixel_acc = (tp + tn) / n;
  std::vector<double> accs, ious;
  double fw = 0.0;
  if (tn + fp > 0) accs.push_back(tn / (tn + fp));
  if (tp + fn > 0) accs.push_back(tp / (tp + fn));
  if (tn + fp + fn > 0) {
    ious.push_back(tn / (tn + fp + fn));
    fw += (tn + fp) / n * tn / (tn + fp + fn);
  }
  if (tp + fp + fn > 0) {
    ious.push_back(tp / (tp + fp + fn));
    fw += (tp + fn) / n * tp / (tp + fp + fn);
  }
  e.mean_acc = std::accumulate(accs.begin(), accs.end(), 0.0) / accs.size();
  e.mean_iou = std::accumulate(ious.begin(), ious.end(), 0.0) / ious.size();
  e.fw_iou = fw;
  return e;
}

double ate_snippet_scan(const std::vector<Eigen::Vector3d>& pred, const std::vector<Eigen::Vector3d>& gt) {
  const auto err = [&](double s) {
    double acc = 0.0;
    for (std::size_t i = 0; i < pred.size(); ++i) acc += (s * pred[i] - gt[i]).squaredNorm();
    return std::sqrt(acc / pred.size());
  };
  double gmax = 0.0, pmin = 1e300;
  for (std::size_t i = 0; i < pred.size(); ++i) {
    gmax = std::max(gmax, gt[i].norm());
    if (pred[i].norm() > 0) pmin = std::min(pmin, pred[i].norm());
  }
  const double range = 4.0 * gmax / pmin;
  double best_s = 0.0, best = err(0.0);
  const int steps = 20000;
  for (int i = -steps; i <= steps; ++i) {
    const double s = range * i / steps;
    const double e = err(s);
    if (e < best) {
      best = e;
      best_s = s;
    }
  }
  double lo = best_s - range / steps, hi = best_s + range / steps;
  for (int it = 0; it < 200; ++it) {
    const double m1 = lo + (hi - lo) / 3, m2 = hi - (hi - lo) / 3;
    if (err(m1) < err(m2)) hi = m2;
    else lo = m1;
  }
  return err(0.5 * (lo + hi));
}

eval::OdomErrors kitti_odom_oracle(const std::vector<PoseSE3>& pred, const std::vector<PoseSE3>& gt) {
  const auto m = [](const PoseSE3& p) { return p.matrix(); };
  std::vector<double> dist{0.0};
  for (std::size_t i = 1; i < gt.size(); ++i)
    dist.push_back(dist.back() + (gt[i].translation() - gt[i - 1].translation()).norm());
  double t_sum = 0.0, r_sum = 0.0;
  int count = 0;
  for (std::size_t f = 0; f < gt.size(); ++f)
    for (double len : eval::kOdomLengths) {
      std::size_t l = f;
      for (; l < gt.size(); ++l)
        if (dist[l] > dist[f] + len) break;
      if (l == gt.size()) continue;
      const Eigen::Matrix4d e = (m(pred[f]).inverse() * m(pred[l])).inverse() * (m(gt[f]).inverse() * m(gt[l]));
      const double d = 0.5 * (e(0, 0) + e(1, 1) + e(2, 2) - 1.0);
      r_sum += std::acos(std::max(std::min(d, 1.0), -1.0)) / len;
      t_sum += e.block<3, 1>(0, 3).norm() / len;
      ++count;
    }
  eval::OdomErrors o;
  o.segments = count;
  if (count) {
    o.t_err_percent = 100.0 * t_sum / count;
    o.r_err_deg_per_100m = r_sum / count * 180.0 / std::numbers::pi * 100.0;
  }
  return o;
}

}  // namespace rigidflow::reference
