#pragma once

#include <cstddef>
#include <map>
#include <optional>
#include <string>

#include "rigidflow/geometry.hpp"
#include "rigidflow/warp.hpp"

namespace rigidflow {

// Defaults are the training hyperparameters of the joint depth/flow model.
struct LossWeights {
  double lambda_sm = 10.0;
  double lambda_st = 1.0;
  double lambda_rig = 10.0;
  double lambda_con = 0.01;
  double alpha = 0.85;  // SSIM share of the photometric error
  double beta = 10.0;   // edge-weight falloff of flow smoothness
  double delta = 3.0;   // motion-mask threshold, pixels

  void validate() const;
};

inline constexpr double kSsimC1 = 0.01 * 0.01;
inline constexpr double kSsimC2 = 0.03 * 0.03;

// Absolute residuals at or below this size sit on the kink of |.| and get a
// zero subgradient.
inline constexpr double kL1KinkTolerance = 1e-12;

// Per-pixel SSIM over a (2r+1)^2 uniform window, computed per channel and
// averaged over channels. Windows are truncated at the raster border.
ScalarField ssim(const Image& a, const Image& b, int radius = 1);

struct PhotometricTerm {
  double value = 0.0;
  double support = 0.0;  // sum of weights
  bool empty() const { return support == 0.0; }
};

// (1/sum w) sum_p w_p [alpha (1 - SSIM_p)/2 + (1 - alpha) mean_c |target - recon|].
// Returns 0 with empty() set when the weights sum to zero.
PhotometricTerm photometric_loss(const Image& target, const Image& recon, const ScalarField& weight, double alpha,
                                 int ssim_radius = 1);
// d(photometric_loss)/d(recon); the weight is held constant.
Image photometric_recon_gradient(const Image& target, const Image& recon, const ScalarField& weight, double alpha,
                                 int ssim_radius = 1);

ScalarField to_weight(const Mask& m);
ScalarField weight_product(const ScalarField& w, const Mask& m);

// Edge-aware second-order flow smoothness:
// (1/(H W)) sum_p region_p sum_{d in x,y} sum_{u,v} |F(p-d) - 2F(p) + F(p+d)| exp(-beta |dI/dd|),
// where dI/dd is the channel-averaged central difference of the image. Pixels
// on the border along d are skipped for that direction.
double smoothness_loss(const FlowField& flow, const Image& image, const Mask& region, double beta);
FlowField smoothness_gradient(const FlowField& flow, const Image& image, const Mask& region, double beta);

// One-sided flow consistency: (1/(H W)) sum_p (|du| + |dv|) (1 - moving_p).
double consistency_loss(const FlowField& f_opt, const FlowField& f_rig_refined, const Mask& moving);

struct ConsistencyGradient {
  FlowField d_opt;
  FlowField d_rig;  // identically zero: the rigid flow is a stop-gradient target
};
ConsistencyGradient consistency_gradient(const FlowField& f_opt, const FlowField& f_rig_refined, const Mask& moving);

struct StereoParams {
  double alpha = 0.85;
  double appearance_weight = 1.0;
  double smoothness_weight = 0.1;
  double lr_weight = 1.0;
  double edge_beta = 1.0;
  int ssim_radius = 1;
};

struct StereoTerms {
  double appearance = 0.0;  // left and right reconstruction terms
  double smoothness = 0.0;  // first-order edge-aware disparity smoothness
  double left_right = 0.0;  // left-right disparity consistency
  double total = 0.0;
};

// Rectified pair: a left pixel (x, y) with disparity d appears at (x - d, y) in
// the right image. Left is reconstructed from right along -d_L and right from
// left along +d_R; left-right consistency compares d_L(x) with d_R(x - d_L(x))
// and d_R(x) with d_L(x + d_R(x)).
StereoTerms stereo_loss(const Image& left, const Image& right, const DisparityMap& disp_left,
                        const DisparityMap& disp_right, const StereoParams& params = {});

struct StereoGradient {
  ScalarField d_left;
  ScalarField d_right;
};
StereoGradient stereo_gradient(const Image& left, const Image& right, const DisparityMap& disp_left,
                               const DisparityMap& disp_right, const StereoParams& params = {});

struct RigidTerms {
  PhotometricTerm rig1;
  PhotometricTerm rig2;
};

// rig1 = psi(l1, recon_rig, O1 (1 - M1)), rig2 likewise for the refined
// reconstruction. The optional masks restrict each term further (in-bounds
// samples, valid rigid flow).
RigidTerms rigid_loss(const Image& l1, const Image& recon_rig, const Image& recon_rig_refined, const Mask& non_occluded,
                      const Mask& moving, double alpha, const Mask* valid_rig = nullptr,
                      const Mask* valid_rig_refined = nullptr);

// Everything the total loss consumes. The rigid flows are derived from depth1
// and the two poses.
struct LossInputs {
  Image left1;
  Image right1;
  Image left2;
  FlowField flow_opt;
  DisparityMap disp_left;
  DisparityMap disp_right;
  DepthMap depth1;
  PoseSE3 pose_init;
  PoseSE3 pose_refined;
  Intrinsics intrinsics;
  Mask non_occluded;
  // Absent before the motion mask exists: smoothness then covers every pixel
  // and the rigid/consistency terms treat the whole frame as static.
  std::optional<Mask> moving;
  int ssim_radius = 1;
  StereoParams stereo;  // alpha is overridden by LossWeights::alpha
};

struct LossReport {
  double opt_ph = 0.0;
  double opt_sm = 0.0;
  double stereo = 0.0;
  double rig1 = 0.0;
  double rig2 = 0.0;
  double con = 0.0;
  double total = 0.0;
  StereoTerms stereo_terms;

  double opt_ph_support = 0.0;
  double rig1_support = 0.0;
  double rig2_support = 0.0;
  std::size_t smoothness_pixels = 0;
  std::size_t consistency_pixels = 0;
  std::size_t moving_pixels = 0;
};

double weighted_total(const LossReport& r, const LossWeights& w);
LossReport total_loss(const LossInputs& in, const LossWeights& weights = {});

enum class LossTerm { OptPhotometric, OptSmoothness, Stereo, Rigid1, Rigid2, Consistency, Total };
enum class LossInput { FlowOpt, RigidFlowRefined, DispLeft, DispRight, Depth1, PoseInit, PoseRefined };

std::string to_string(LossTerm t);
std::string to_string(LossInput i);

// Partial derivatives keyed by input name: rasters for dense inputs, 6-vectors
// (axis-angle, translation) for poses.
struct GradientBundle {
  std::map<std::string, Raster<double>> rasters;
  std::map<std::string, Pose6> vectors;
};

// Analytic gradient of one loss term with respect to one input. Paths blocked
// by a stop-gradient (consistency into the rigid flow, pose or depth) return
// zeros; pairs with no path at all throw UnsupportedGradientError.
GradientBundle gradient(LossTerm term, const LossInputs& in, LossInput wrt, const LossWeights& weights = {});

}  // namespace rigidflow
