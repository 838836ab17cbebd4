#pragma once

#include <optional>
#include <string>
#include <vector>

#include "rigidflow/geometry.hpp"
#include "rigidflow/warp.hpp"

namespace rigidflow::eval {

// A pixel's flow (or disparity) estimate is erroneous when its end-point
// error reaches both 3 px and 5% of the ground-truth magnitude.
inline constexpr double kOutlierAbsolute = 3.0;
inline constexpr double kOutlierRelative = 0.05;
inline bool is_outlier(double error, double gt_magnitude) {
  return error >= kOutlierAbsolute && error >= kOutlierRelative * gt_magnitude;
}

// Masks restrict evaluation; every region is intersected with `valid`
// (all pixels when absent). `occ` defaults to valid & !noc and `static_`
// to valid & !move when only the complement is given.
struct FlowMasks {
  std::optional<Mask> valid;
  std::optional<Mask> noc;
  std::optional<Mask> occ;
  std::optional<Mask> move;
  std::optional<Mask> static_;
};

// Empty regions leave their metric unset.
struct FlowEval {
  std::optional<double> epe_noc, epe_occ, epe_all, epe_move, epe_static;  // pixels
  std::optional<double> fl_all;                                         // percent
  long long pixels_all = 0;
};

FlowEval flow_metrics(const FlowField& pred, const FlowField& gt, const FlowMasks& masks = {});

inline constexpr double kDefaultDepthCap = 80.0;
inline constexpr double kMinEvalDepth = 1e-3;

struct DepthEval {
  double abs_rel = 0, sq_rel = 0, rmse = 0, rmse_log = 0;
  std::optional<double> d1_all;  // percent; needs a stereo rig
  double delta1 = 0, delta2 = 0, delta3 = 0;
  long long pixels = 0;
};

// Evaluated over pixels valid in both maps, after clamping both depths into
// [1e-3, cap]. Throws EmptyRegionError when no pixel qualifies.
DepthEval depth_metrics(const DepthMap& pred, const DepthMap& gt, double cap = kDefaultDepthCap,
                        const std::optional<StereoRig>& rig = std::nullopt);

enum class AteVariant { Rmse, MeanNorm };

struct AteResult {
  double mean = 0.0;
  double std = 0.0;  // population standard deviation over snippets
  int snippets = 0;
  int skipped = 0;   // snippets whose GT (or prediction) has no translation
  std::vector<double> per_snippet;
};

// Relative poses T_{i,i+1} (frame i to frame i+1 coordinates). Every run of
// four consecutive poses forms a 5-frame snippet (stride 1); predicted
// camera positions are rescaled by the least-squares factor before the
// residual is taken. Throws InvalidArgument on fewer than four poses or
// mismatched lengths, EmptyRegionError when every snippet is skipped.
AteResult ate_5frame(const std::vector<PoseSE3>& pred_rel, const std::vector<PoseSE3>& gt_rel,
                     AteVariant variant = AteVariant::Rmse);

// Camera positions of a snippet in its first frame: p_0 = 0 and
// p_j = -R_j^T t_j for the accumulated pose T_{0,j}.
std::vector<Eigen::Vector3d> snippet_positions(const std::vector<PoseSE3>& rel, std::size_t first, std::size_t count);

struct OdomErrors {
  double t_err_percent = 0.0;
  double r_err_deg_per_100m = 0.0;
  int segments = 0;
};

inline constexpr double kOdomLengths[] = {100, 200, 300, 400, 500, 600, 700, 800};

// Absolute camera-to-world trajectories (KITTI pose-file convention).
// Throws EmptyRegionError when the GT path is shorter than every length.
OdomErrors kitti_odom_errors(const std::vector<PoseSE3>& pred, const std::vector<PoseSE3>& gt);

// Relative poses T_{i,i+1} = P_{i+1}^-1 P_i of a camera-to-world trajectory.
std::vector<PoseSE3> relative_poses(const std::vector<PoseSE3>& trajectory);

struct OdomEval {
  std::optional<AteResult> ate;
  std::optional<OdomErrors> kitti;
};

struct SegEval {
  double pixel_acc = 0, mean_acc = 0, mean_iou = 0, fw_iou = 0;
  long long confusion[2][2] = {{0, 0}, {0, 0}};  // [gt][pred]
};

// Two classes (static 0, moving 1). Per-class terms of classes absent from
// both maps are skipped in the class means. Throws EmptyRegionError when the
// optional mask selects nothing.
SegEval seg_metrics(const Mask& pred, const Mask& gt, const std::optional<Mask>& valid = std::nullopt);

// JSON reports with a "format_version" key; unset metrics are null.
inline constexpr int kReportFormatVersion = 1;
std::string to_json(const FlowEval& e);
std::string to_json(const DepthEval& e);
std::string to_json(const OdomEval& e);
std::string to_json(const SegEval& e);

}  // namespace rigidflow::eval
