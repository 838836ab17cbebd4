#include "rigidflow/eval.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

#include <json.hpp>

#include "rigidflow/error.hpp"

namespace rigidflow::eval {

namespace {

struct Accum {
  double sum = 0.0;
  long long count = 0;
};

Mask region_or_full(const std::optional<Mask>& m, int w, int h, const char* what) {
  if (!m) return full_mask(w, h);
  if (m->width() != w || m->height() != h) throw DimensionError(std::string(what) + " mask size mismatch");
  return *m;
}

std::optional<double> mean_of(const Accum& a) {
  if (a.count == 0) return std::nullopt;
  return a.sum / static_cast<double>(a.count);
}

}  // namespace

FlowEval flow_metrics(const FlowField& pred, const FlowField& gt, const FlowMasks& masks) {
  require_same_extent(pred.uv, gt.uv, "flow_metrics: prediction and ground truth");
  const int w = gt.width();
  const int h = gt.height();
  const Mask valid = region_or_full(masks.valid, w, h, "valid");
  const std::optional<Mask> noc = masks.noc ? std::optional(mask_and(valid, region_or_full(masks.noc, w, h, "noc")))
                                            : std::nullopt;
  std::optional<Mask> occ;
  if (masks.occ) occ = mask_and(valid, region_or_full(masks.occ, w, h, "occ"));
  else if (noc) occ = mask_and(valid, mask_not(*noc));
  const std::optional<Mask> move =
      masks.move ? std::optional(mask_and(valid, region_or_full(masks.move, w, h, "move"))) : std::nullopt;
  std::optional<Mask> stat;
  if (masks.static_) stat = mask_and(valid, region_or_full(masks.static_, w, h, "static"));
  else if (move) stat = mask_and(valid, mask_not(*move));

  // Per row: all, noc, occ, move, static, outliers.
  std::vector<std::array<Accum, 6>> rows(static_cast<std::size_t>(h));
#pragma omp parallel for schedule(static)
  for (int y = 0; y < h; ++y) {
    auto& r = rows[static_cast<std::size_t>(y)];
    for (int x = 0; x < w; ++x) {
      if (!valid.at(x, y)) continue;
      const double du = pred.u(x, y) - gt.u(x, y);
      const double dv = pred.v(x, y) - gt.v(x, y);
      const double e = std::sqrt(du * du + dv * dv);
      const double mag = std::sqrt(gt.u(x, y) * gt.u(x, y) + gt.v(x, y) * gt.v(x, y));
      const auto add = [&](Accum& a) {
        a.sum += e;
        ++a.count;
      };
      add(r[0]);
      if (noc && noc->at(x, y)) add(r[1]);
      if (occ && occ->at(x, y)) add(r[2]);
      if (move && move->at(x, y)) add(r[3]);
      if (stat && stat->at(x, y)) add(r[4]);
      r[5].sum += is_outlier(e, mag) ? 1.0 : 0.0;
    }
  }
  std::array<Accum, 6> t{};
  for (const auto& r : rows)
    for (int i = 0; i < 6; ++i) {
      t[i].sum += r[i].sum;
      t[i].count += r[i].count;
    }
  FlowEval out;
  out.pixels_all = t[0].count;
  out.epe_all = mean_of(t[0]);
  if (noc) out.epe_noc = mean_of(t[1]);
  if (occ) out.epe_occ = mean_of(t[2]);
  if (move) out.epe_move = mean_of(t[3]);
  if (stat) out.epe_static = mean_of(t[4]);
  if (t[0].count > 0) out.fl_all = 100.0 * t[5].sum / static_cast<double>(t[0].count);
  return out;
}

DepthEval depth_metrics(const DepthMap& pred, const DepthMap& gt, double cap, const std::optional<StereoRig>& rig) {
  require_same_extent(pred.values, gt.values, "depth_metrics: prediction and ground truth");
  if (!(cap > kMinEvalDepth)) throw InvalidArgument("depth_metrics: cap must exceed 1e-3 m");
  const int w = gt.width();
  const int h = gt.height();
  // abs_rel, sq_rel, sq, sq_log, d1, delta1..3, count
  std::vector<std::array<double, 9>> rows(static_cast<std::size_t>(h));
#pragma omp parallel for schedule(static)
  for (int y = 0; y < h; ++y) {
    auto& r = rows[static_cast<std::size_t>(y)];
    r.fill(0.0);
    for (int x = 0; x < w; ++x) {
      if (!gt.valid.at(x, y) || !pred.valid.at(x, y)) continue;
      const double g = std::clamp(gt.values.at(x, y), kMinEvalDepth, cap);
      const double p = std::clamp(pred.values.at(x, y), kMinEvalDepth, cap);
      const double d = p - g;
      r[0] += std::abs(d) / g;
      r[1] += d * d / g;
      r[2] += d * d;
      const double dl = std::log(p) - std::log(g);
      r[3] += dl * dl;
      if (rig) {
        const double bf = rig->baseline * rig->intrinsics.fx;
        const double dg = bf / g;
        r[4] += is_outlier(std::abs(bf / p - dg), dg) ? 1.0 : 0.0;
      }
      const double ratio = std::max(p / g, g / p);
      r[5] += ratio < 1.25 ? 1.0 : 0.0;
      r[6] += ratio < 1.25 * 1.25 ? 1.0 : 0.0;
      r[7] += ratio < 1.25 * 1.25 * 1.25 ? 1.0 : 0.0;
      r[8] += 1.0;
    }
  }
  std::array<double, 9> t{};
  for (const auto& r : rows)
    for (int i = 0; i < 9; ++i) t[i] += r[i];
  if (t[8] == 0.0) throw EmptyRegionError("depth_metrics: no pixel is valid in both maps");
  const double n = t[8];
  DepthEval e;
  e.abs_rel = t[0] / n;
  e.sq_rel = t[1] / n;
  e.rmse = std::sqrt(t[2] / n);
  e.rmse_log = std::sqrt(t[3] / n);
  if (rig) e.d1_all = 100.0 * t[4] / n;
  e.delta1 = t[5] / n;
  e.delta2 = t[6] / n;
  e.delta3 = t[7] / n;
  e.pixels = static_cast<long long>(n);
  return e;
}

std::vector<Eigen::Vector3d> snippet_positions(const std::vector<PoseSE3>& rel, std::size_t first, std::size_t count) {
  std::vector<Eigen::Vector3d> out{Eigen::Vector3d::Zero()};
  PoseSE3 acc;
  for (std::size_t i = first; i < first + count; ++i) {
    acc = compose(rel.at(i), acc);
    out.push_back(-(acc.rotation().transpose() * acc.translation()));
  }
  return out;
}

AteResult ate_5frame(const std::vector<PoseSE3>& pred_rel, const std::vector<PoseSE3>& gt_rel, AteVariant variant) {
  if (pred_rel.size() != gt_rel.size()) throw InvalidArgument("ate_5frame: pose sequences differ in length");
  if (gt_rel.size() < 4) throw InvalidArgument("ate_5frame: need at least 4 relative poses (5 frames)");
  const std::size_t snippets = gt_rel.size() - 3;
  std::vector<double> err(snippets, 0.0);
  std::vector<char> used(snippets, 0);
#pragma omp parallel for schedule(static)
  for (std::size_t s = 0; s < snippets; ++s) {
    const auto p = snippet_positions(pred_rel, s, 4);
    const auto g = snippet_positions(gt_rel, s, 4);
    double gp = 0.0, pp = 0.0, gg = 0.0;
    for (std::size_t j = 0; j < p.size(); ++j) {
      gp += g[j].dot(p[j]);
      pp += p[j].squaredNorm();
      gg += g[j].squaredNorm();
    }
    if (pp == 0.0 || gg == 0.0) continue;
    const double scale = gp / pp;
    double acc = 0.0;
    for (std::size_t j = 0; j < p.size(); ++j) {
      const double r = (scale * p[j] - g[j]).norm();
      acc += variant == AteVariant::Rmse ? r * r : r;
    }
    acc /= static_cast<double>(p.size());
    err[s] = variant == AteVariant::Rmse ? std::sqrt(acc) : acc;
    used[s] = 1;
  }
  AteResult out;
  for (std::size_t s = 0; s < snippets; ++s) {
    if (used[s]) out.per_snippet.push_back(err[s]);
    else ++out.skipped;
  }
  out.snippets = static_cast<int>(out.per_snippet.size());
  if (out.snippets == 0) throw EmptyRegionError("ate_5frame: every snippet has zero translation");
  double sum = 0.0;
  for (double v : out.per_snippet) sum += v;
  out.mean = sum / out.snippets;
  double var = 0.0;
  for (double v : out.per_snippet) var += (v - out.mean) * (v - out.mean);
  out.std = std::sqrt(var / out.snippets);
  return out;
}

std::vector<PoseSE3> relative_poses(const std::vector<PoseSE3>& trajectory) {
  std::vector<PoseSE3> out;
  for (std::size_t i = 0; i + 1 < trajectory.size(); ++i)
    out.push_back(compose(trajectory[i + 1].inverse(), trajectory[i]));
  return out;
}

OdomErrors kitti_odom_errors(const std::vector<PoseSE3>& pred, const std::vector<PoseSE3>& gt) {
  if (pred.size() != gt.size()) throw DimensionError("kitti_odom_errors: trajectories differ in length");
  const std::size_t n = gt.size();
  std::vector<double> dist(n, 0.0);
  for (std::size_t i = 1; i < n; ++i) dist[i] = dist[i - 1] + (gt[i].translation() - gt[i - 1].translation()).norm();

  constexpr std::size_t kLengths = std::size(kOdomLengths);
  struct Partial {
    double t = 0.0, r = 0.0;
    int count = 0;
  };
  std::vector<Partial> partial(n);
#pragma omp parallel for schedule(static)
  for (std::size_t first = 0; first < n; ++first) {
    Partial& acc = partial[first];
    for (std::size_t li = 0; li < kLengths; ++li) {
      const double len = kOdomLengths[li];
      std::size_t last = first;
      while (last < n && !(dist[last] > dist[first] + len)) ++last;
      if (last >= n) continue;
      const PoseSE3 dg = compose(gt[first].inverse(), gt[last]);
      const PoseSE3 dp = compose(pred[first].inverse(), pred[last]);
      const PoseSE3 e = compose(dp.inverse(), dg);
      const Eigen::Matrix3d& r = e.rotation();
      const Eigen::Vector3d axis(r(2, 1) - r(1, 2), r(0, 2) - r(2, 0), r(1, 0) - r(0, 1));
      acc.r += std::atan2(0.5 * axis.norm(), 0.5 * (r.trace() - 1.0)) / len;
      acc.t += e.translation().norm() / len;
      ++acc.count;
    }
  }
  Partial total;
  for (const auto& p : partial) {
    total.t += p.t;
    total.r += p.r;
    total.count += p.count;
  }
  if (total.count == 0) throw EmptyRegionError("kitti_odom_errors: ground-truth path is shorter than 100 m");
  OdomErrors out;
  out.segments = total.count;
  out.t_err_percent = 100.0 * total.t / total.count;
  out.r_err_deg_per_100m = 100.0 * (180.0 / std::numbers::pi) * total.r / total.count;
  return out;
}

SegEval seg_metrics(const Mask& pred, const Mask& gt, const std::optional<Mask>& valid) {
  require_same_extent(pred, gt, "seg_metrics: prediction and ground truth");
  const Mask sel = region_or_full(valid, gt.width(), gt.height(), "valid");
  SegEval e;
  for (int y = 0; y < gt.height(); ++y)
    for (int x = 0; x < gt.width(); ++x)
      if (sel.at(x, y)) ++e.confusion[gt.at(x, y) ? 1 : 0][pred.at(x, y) ? 1 : 0];
  const auto& c = e.confusion;
  const double n = static_cast<double>(c[0][0] + c[0][1] + c[1][0] + c[1][1]);
  if (n == 0.0) throw EmptyRegionError("seg_metrics: no pixel selected");
  e.pixel_acc = static_cast<double>(c[0][0] + c[1][1]) / n;
  double acc_sum = 0.0, iou_sum = 0.0, fw = 0.0;
  int acc_classes = 0, iou_classes = 0;
  for (int k = 0; k < 2; ++k) {
    const double gt_k = static_cast<double>(c[k][0] + c[k][1]);
    const double pred_k = static_cast<double>(c[0][k] + c[1][k]);
    const double tp = static_cast<double>(c[k][k]);
    if (gt_k > 0) {
      acc_sum += tp / gt_k;
      ++acc_classes;
    }
    const double uni = gt_k + pred_k - tp;
    if (uni > 0) {
      iou_sum += tp / uni;
      ++iou_classes;
      fw += (gt_k / n) * (tp / uni);
    }
  }
  e.mean_acc = acc_sum / acc_classes;
  e.mean_iou = iou_sum / iou_classes;
  e.fw_iou = fw;
  return e;
}

namespace {

using nlohmann::ordered_json;

ordered_json opt(const std::optional<double>& v) { return v ? ordered_json(*v) : ordered_json(nullptr); }

std::string dump(ordered_json j) { return j.dump(2) + "\n"; }

}  // namespace

std::string to_json(const FlowEval& e) {
  ordered_json j;
  j["format_version"] = kReportFormatVersion;
  j["task"] = "flow";
  j["epe_noc"] = opt(e.epe_noc);
  j["epe_occ"] = opt(e.epe_occ);
  j["epe_all"] = opt(e.epe_all);
  j["epe_move"] = opt(e.epe_move);
  j["epe_static"] = opt(e.epe_static);
  j["fl_all"] = opt(e.fl_all);
  j["pixels_all"] = e.pixels_all;
  return dump(j);
}

std::string to_json(const DepthEval& e) {
  ordered_json j;
  j["format_version"] = kReportFormatVersion;
  j["task"] = "depth";
  j["abs_rel"] = e.abs_rel;
  j["sq_rel"] = e.sq_rel;
  j["rmse"] = e.rmse;
  j["rmse_log"] = e.rmse_log;
  j["d1_all"] = opt(e.d1_all);
  j["delta1"] = e.delta1;
  j["delta2"] = e.delta2;
  j["delta3"] = e.delta3;
  j["pixels"] = e.pixels;
  return dump(j);
}

std::string to_json(const OdomEval& e) {
  ordered_json j;
  j["format_version"] = kReportFormatVersion;
  j["task"] = "odometry";
  j["ate_mean"] = e.ate ? ordered_json(e.ate->mean) : ordered_json(nullptr);
  j["ate_std"] = e.ate ? ordered_json(e.ate->std) : ordered_json(nullptr);
  j["ate_snippets"] = e.ate ? e.ate->snippets : 0;
  j["ate_skipped"] = e.ate ? e.ate->skipped : 0;
  j["t_err_percent"] = e.kitti ? ordered_json(e.kitti->t_err_percent) : ordered_json(nullptr);
  j["r_err_deg_per_100m"] = e.kitti ? ordered_json(e.kitti->r_err_deg_per_100m) : ordered_json(nullptr);
  j["segments"] = e.kitti ? e.kitti->segments : 0;
  return dump(j);
}

std::string to_json(const SegEval& e) {
  ordered_json j;
  j["format_version"] = kReportFormatVersion;
  j["task"] = "segmentation";
  j["pixel_acc"] = e.pixel_acc;
  j["mean_acc"] = e.mean_acc;
  j["mean_iou"] = e.mean_iou;
  j["fw_iou"] = e.fw_iou;
  j["confusion"] = {{e.confusion[0][0], e.confusion[0][1]}, {e.confusion[1][0], e.confusion[1][1]}};
  return dump(j);
}

}  // namespace rigidflow::eval
