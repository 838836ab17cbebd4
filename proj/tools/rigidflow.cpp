#include <CLI11.hpp>
#include <json.hpp>

#include <cstdio>
#include <filesystem>
#include <iostream>
#include <optional>
#include <string>

#include "flow_viz.hpp"
#include "rigidflow/error.hpp"
#include "rigidflow/eval.hpp"
#include "rigidflow/io.hpp"
#include "rigidflow/losses.hpp"
#include "rigidflow/parallel.hpp"
#include "rigidflow/rigid.hpp"
#include "rigidflow/segmentation.hpp"
#include "rigidflow/synth.hpp"

namespace fs = std::filesystem;
using namespace rigidflow;
using ordered_json = nlohmann::ordered_json;

namespace {

enum ExitCode { kOk = 0, kOther = 1, kUsage = 2, kFormat = 3, kDimension = 4, kDegenerate = 5 };

template <typename R>
void require_extent(const std::string& name, const R& r, int w, int h) {
  if (r.width() != w || r.height() != h)
    throw DimensionError(name + ": " + std::to_string(r.width()) + "x" + std::to_string(r.height()) +
                         " does not match " + std::to_string(w) + "x" + std::to_string(h));
}

PoseSE3 read_single_pose(const fs::path& p) {
  const auto poses = io::read_poses(p);
  if (poses.size() != 1) throw FormatError(p.string() + ": expected exactly one pose");
  return poses.front();
}

void write_json(const fs::path& p, const std::string& text) { io::write_file_atomic(p, text + "\n"); }

std::string dump(const ordered_json& j) { return j.dump(2); }

Mask flow_valid_and(const io::FlowWithValidity& f, const std::optional<fs::path>& mask_path, const std::string& name) {
  if (!mask_path) return f.valid;
  const Mask m = io::read_mask_png(*mask_path);
  require_extent(name, m, f.flow.width(), f.flow.height());
  return mask_and(f.valid, m);
}

struct SynthArgs {
  std::optional<fs::path> config;
  std::uint64_t seed = 0;
  int width = 128, height = 64;
  bool moving = false;
  fs::path out;
};

int cmd_synth(const SynthArgs& a) {
  synth::SceneConfig cfg;
  if (a.config) {
    cfg = synth::read_scene_config(*a.config);
  } else {
    synth::RandomSceneOptions opt;
    opt.width = a.width;
    opt.height = a.height;
    opt.moving_object = a.moving;
    cfg = synth::random_scene(opt, a.seed);
  }
  const synth::SceneSample s = synth::render(cfg);
  synth::export_sample(s, a.out);
  io::write_file_atomic(a.out / "scene.json", synth::format_scene_config(cfg));
  return kOk;
}

struct RigidFlowArgs {
  fs::path depth, pose, intrinsics, out;
};

int cmd_rigid_flow(const RigidFlowArgs& a) {
  const DepthMap d = io::read_depth_pfm(a.depth);
  const Intrinsics k = io::read_camera(a.intrinsics).intrinsics;
  require_extent(a.depth.string(), d.values, k.width, k.height);
  const RigidFlow r = rigid_flow(d, read_single_pose(a.pose), k);
  io::write_flow_png(a.out, r.flow, r.valid);
  return kOk;
}

struct AlignArgs {
  fs::path depth1, depth2, flow, pose_init, intrinsics, out_pose, report;
  std::optional<fs::path> occlusion;
  int iterations = 1;
  double fraction = kRegionFraction;
};

int cmd_align(const AlignArgs& a) {
  const Intrinsics k = io::read_camera(a.intrinsics).intrinsics;
  const DepthMap d1 = io::read_depth_pfm(a.depth1);
  const DepthMap d2 = io::read_depth_pfm(a.depth2);
  const io::FlowWithValidity f = io::read_flow_png(a.flow);
  require_extent(a.depth1.string(), d1.values, k.width, k.height);
  require_extent(a.depth2.string(), d2.values, k.width, k.height);
  require_extent(a.flow.string(), f.flow, k.width, k.height);
  const Mask noc = flow_valid_and(f, a.occlusion, a.occlusion ? a.occlusion->string() : "");
  const PoseSE3 init = read_single_pose(a.pose_init);
  RefineOptions opt;
  opt.iterations = a.iterations;
  opt.region_fraction = a.fraction;
  const AlignmentResult r = refine_pose(d1, d2, f.flow, init, k, noc, opt);
  io::write_poses(a.out_pose, {r.refined});

  ordered_json j;
  j["format_version"] = eval::kReportFormatVersion;
  j["task"] = "align";
  j["rms_before"] = r.rms_before;
  j["rms_after"] = r.rms_after;
  j["eligible_pixels"] = r.eligible_count;
  j["region_pixels"] = r.region_count;
  j["region_coverage"] = static_cast<double>(r.region_count) / static_cast<double>(k.width * k.height);
  j["delta_rotation_deg"] = rotation_angle(r.delta.rotation()) * 180.0 / M_PI;
  j["delta_translation_m"] = r.delta.translation().norm();
  write_json(a.report, dump(j));
  return kOk;
}

struct SegmentArgs {
  fs::path flow, rigid, out;
  std::optional<fs::path> occlusion, flow21;
  double delta = 3.0;
  double tau = kDefaultOcclusionThreshold;
};

int cmd_segment(const SegmentArgs& a) {
  const io::FlowWithValidity f = io::read_flow_png(a.flow);
  const io::FlowWithValidity r = io::read_flow_png(a.rigid);
  const int w = f.flow.width(), h = f.flow.height();
  require_extent(a.rigid.string(), r.flow, w, h);
  Mask noc;
  if (a.occlusion) {
    noc = io::read_mask_png(*a.occlusion);
    require_extent(a.occlusion->string(), noc, w, h);
  } else if (a.flow21) {
    const io::FlowWithValidity b = io::read_flow_png(*a.flow21);
    require_extent(a.flow21->string(), b.flow, w, h);
    noc = estimate_occlusion(b.flow, a.tau);
  } else {
    throw InvalidArgument("segment: one of --occlusion or --flow21 is required");
  }
  noc = mask_and(noc, mask_and(f.valid, r.valid));
  io::write_mask_png(a.out, motion_mask(f.flow, r.flow, noc, {a.delta}));
  return kOk;
}

struct OcclusionArgs {
  fs::path flow21, out;
  double tau = kDefaultOcclusionThreshold;
};

int cmd_occlusion(const OcclusionArgs& a) {
  io::write_mask_png(a.out, estimate_occlusion(io::read_flow_png(a.flow21).flow, a.tau));
  return kOk;
}

struct LossArgs {
  fs::path left1, right1, left2, flow, disp_left, disp_right, depth1, pose_init, pose_refined, intrinsics, occlusion,
      out;
  std::optional<fs::path> moving;
  LossWeights weights;
};

int cmd_loss(const LossArgs& a) {
  a.weights.validate();
  LossInputs in;
  in.intrinsics = io::read_camera(a.intrinsics).intrinsics;
  const int w = in.intrinsics.width, h = in.intrinsics.height;
  in.left1 = io::read_image_png(a.left1);
  in.right1 = io::read_image_png(a.right1);
  in.left2 = io::read_image_png(a.left2);
  require_extent(a.left1.string(), in.left1, w, h);
  require_extent(a.right1.string(), in.right1, w, h);
  require_extent(a.left2.string(), in.left2, w, h);
  in.flow_opt = io::read_flow_png(a.flow).flow;
  require_extent(a.flow.string(), in.flow_opt, w, h);
  in.disp_left = io::read_disparity_pfm(a.disp_left);
  in.disp_right = io::read_disparity_pfm(a.disp_right);
  require_extent(a.disp_left.string(), in.disp_left.values, w, h);
  require_extent(a.disp_right.string(), in.disp_right.values, w, h);
  in.depth1 = io::read_depth_pfm(a.depth1);
  require_extent(a.depth1.string(), in.depth1.values, w, h);
  in.pose_init = read_single_pose(a.pose_init);
  in.pose_refined = read_single_pose(a.pose_refined);
  in.non_occluded = io::read_mask_png(a.occlusion);
  require_extent(a.occlusion.string(), in.non_occluded, w, h);
  if (a.moving) {
    in.moving = io::read_mask_png(*a.moving);
    require_extent(a.moving->string(), *in.moving, w, h);
  }
  const LossReport r = total_loss(in, a.weights);

  ordered_json j;
  j["format_version"] = eval::kReportFormatVersion;
  j["task"] = "loss";
  j["opt_ph"] = r.opt_ph;
  j["opt_sm"] = r.opt_sm;
  j["stereo"] = r.stereo;
  j["rig1"] = r.rig1;
  j["rig2"] = r.rig2;
  j["con"] = r.con;
  j["total"] = r.total;
  j["stereo_terms"] = {{"appearance", r.stereo_terms.appearance},
                       {"smoothness", r.stereo_terms.smoothness},
                       {"left_right", r.stereo_terms.left_right}};
  j["weights"] = {{"lambda_sm", a.weights.lambda_sm}, {"lambda_st", a.weights.lambda_st},
                  {"lambda_rig", a.weights.lambda_rig}, {"lambda_con", a.weights.lambda_con},
                  {"alpha", a.weights.alpha},         {"beta", a.weights.beta}};
  j["moving_pixels"] = r.moving_pixels;
  write_json(a.out, dump(j));
  return kOk;
}

struct EvalArgs {
  fs::path pred, gt, out;
  std::optional<fs::path> noc, move, valid, intrinsics;
  double cap = eval::kDefaultDepthCap;
  std::string ate_variant = "rmse";
};

int cmd_eval_flow(const EvalArgs& a) {
  const io::FlowWithValidity p = io::read_flow_png(a.pred);
  const io::FlowWithValidity g = io::read_flow_png(a.gt);
  const int w = g.flow.width(), h = g.flow.height();
  require_extent(a.pred.string(), p.flow, w, h);
  eval::FlowMasks m;
  m.valid = g.valid;
  if (a.noc) {
    m.noc = io::read_mask_png(*a.noc);
    require_extent(a.noc->string(), *m.noc, w, h);
  }
  if (a.move) {
    m.move = io::read_mask_png(*a.move);
    require_extent(a.move->string(), *m.move, w, h);
  }
  write_json(a.out, eval::to_json(eval::flow_metrics(p.flow, g.flow, m)));
  return kOk;
}

int cmd_eval_depth(const EvalArgs& a) {
  const DepthMap p = io::read_depth_pfm(a.pred);
  const DepthMap g = io::read_depth_pfm(a.gt);
  require_extent(a.pred.string(), p.values, g.values.width(), g.values.height());
  std::optional<StereoRig> rig;
  if (a.intrinsics) {
    const io::CameraFile cam = io::read_camera(*a.intrinsics);
    if (!cam.baseline) throw FormatError(a.intrinsics->string() + ": baseline required for d1_all");
    rig = StereoRig{cam.intrinsics, *cam.baseline};
  }
  write_json(a.out, eval::to_json(eval::depth_metrics(p, g, a.cap, rig)));
  return kOk;
}

int cmd_eval_odometry(const EvalArgs& a) {
  const auto p = io::read_poses(a.pred);
  const auto g = io::read_poses(a.gt);
  if (p.size() != g.size())
    throw DimensionError(a.pred.string() + ": " + std::to_string(p.size()) + " poses, ground truth has " +
                         std::to_string(g.size()));
  const eval::AteVariant variant = a.ate_variant == "mean-norm" ? eval::AteVariant::MeanNorm : eval::AteVariant::Rmse;
  eval::OdomEval e;
  if (p.size() >= 5) {
    try {
      e.ate = eval::ate_5frame(eval::relative_poses(p), eval::relative_poses(g), variant);
    } catch (const EmptyRegionError&) {
    }
  }
  try {
    e.kitti = eval::kitti_odom_errors(p, g);
  } catch (const EmptyRegionError&) {
  }
  if (!e.ate && !e.kitti) throw EmptyRegionError(a.gt.string() + ": trajectory too short for any odometry metric");
  write_json(a.out, eval::to_json(e));
  return kOk;
}

int cmd_eval_segmentation(const EvalArgs& a) {
  const Mask p = io::read_mask_png(a.pred);
  const Mask g = io::read_mask_png(a.gt);
  require_extent(a.pred.string(), p, g.width(), g.height());
  std::optional<Mask> valid;
  if (a.valid) {
    valid = io::read_mask_png(*a.valid);
    require_extent(a.valid->string(), *valid, g.width(), g.height());
  }
  write_json(a.out, eval::to_json(eval::seg_metrics(p, g, valid)));
  return kOk;
}

struct VizArgs {
  fs::path flow, out;
  double max_magnitude = 0.0;
};

int cmd_flow_viz(const VizArgs& a) {
  const io::FlowWithValidity f = io::read_flow_png(a.flow);
  io::write_image_png(a.out, viz::flow_to_color(f.flow, f.valid, a.max_magnitude));
  return kOk;
}

void add_weight_flags(CLI::App* c, LossWeights& w) {
  c->add_option("--lambda-sm", w.lambda_sm, "flow smoothness weight")->capture_default_str();
  c->add_option("--lambda-st", w.lambda_st, "stereo weight")->capture_default_str();
  c->add_option("--lambda-rig", w.lambda_rig, "rigid photometric weight")->capture_default_str();
  c->add_option("--lambda-con", w.lambda_con, "flow consistency weight")->capture_default_str();
  c->add_option("--alpha", w.alpha, "SSIM share of the photometric error")->capture_default_str();
  c->add_option("--beta", w.beta, "edge weight falloff")->capture_default_str();
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Rigid flow, ego-motion alignment, motion segmentation, losses and metrics"};
  app.require_subcommand(1);
  int threads = 0;
  app.add_option("--threads", threads, "worker threads (default: OpenMP default)");

  SynthArgs synth_args;
  auto* synth_cmd = app.add_subcommand("synth", "render a synthetic scene with ground truth");
  auto* cfg_opt = synth_cmd->add_option("--config", synth_args.config, "scene JSON")->check(CLI::ExistingFile);
  synth_cmd->add_option("--seed", synth_args.seed, "random scene seed")->excludes(cfg_opt);
  synth_cmd->add_option("--width", synth_args.width)->excludes(cfg_opt)->capture_default_str();
  synth_cmd->add_option("--height", synth_args.height)->excludes(cfg_opt)->capture_default_str();
  synth_cmd->add_flag("--moving", synth_args.moving, "add a moving object")->excludes(cfg_opt);
  synth_cmd->add_option("--out", synth_args.out, "output directory")->required();

  RigidFlowArgs rf_args;
  auto* rf_cmd = app.add_subcommand("rigid-flow", "flow induced by depth and camera motion");
  rf_cmd->add_option("--depth", rf_args.depth)->required();
  rf_cmd->add_option("--pose", rf_args.pose)->required();
  rf_cmd->add_option("--intrinsics", rf_args.intrinsics)->required();
  rf_cmd->add_option("--out", rf_args.out)->required();

  AlignArgs al_args;
  auto* al_cmd = app.add_subcommand("align", "refine a pose by point-cloud alignment");
  al_cmd->add_option("--depth1", al_args.depth1)->required();
  al_cmd->add_option("--depth2", al_args.depth2)->required();
  al_cmd->add_option("--flow", al_args.flow, "optical flow frame 1 -> 2")->required();
  al_cmd->add_option("--occlusion", al_args.occlusion, "non-occlusion mask of frame 1");
  al_cmd->add_option("--pose-init", al_args.pose_init)->required();
  al_cmd->add_option("--intrinsics", al_args.intrinsics)->required();
  al_cmd->add_option("--out-pose", al_args.out_pose)->required();
  al_cmd->add_option("--report", al_args.report)->required();
  al_cmd->add_option("--iterations", al_args.iterations)->capture_default_str();
  al_cmd->add_option("--region-fraction", al_args.fraction)->capture_default_str();

  SegmentArgs sg_args;
  auto* sg_cmd = app.add_subcommand("segment", "motion mask from optical and rigid flow");
  sg_cmd->add_option("--flow", sg_args.flow)->required();
  sg_cmd->add_option("--rigid-flow", sg_args.rigid)->required();
  auto* occ_opt = sg_cmd->add_option("--occlusion", sg_args.occlusion, "non-occlusion mask of frame 1");
  sg_cmd->add_option("--flow21", sg_args.flow21, "backward flow for occlusion estimation")->excludes(occ_opt);
  sg_cmd->add_option("--delta", sg_args.delta)->capture_default_str();
  sg_cmd->add_option("--tau", sg_args.tau)->capture_default_str();
  sg_cmd->add_option("--out", sg_args.out)->required();

  OcclusionArgs oc_args;
  auto* oc_cmd = app.add_subcommand("occlusion", "non-occlusion mask from backward flow");
  oc_cmd->add_option("--flow21", oc_args.flow21)->required();
  oc_cmd->add_option("--tau", oc_args.tau)->capture_default_str();
  oc_cmd->add_option("--out", oc_args.out)->required();

  LossArgs ls_args;
  auto* ls_cmd = app.add_subcommand("loss", "evaluate the loss terms");
  ls_cmd->add_option("--left1", ls_args.left1)->required();
  ls_cmd->add_option("--right1", ls_args.right1)->required();
  ls_cmd->add_option("--left2", ls_args.left2)->required();
  ls_cmd->add_option("--flow", ls_args.flow)->required();
  ls_cmd->add_option("--disp-left", ls_args.disp_left)->required();
  ls_cmd->add_option("--disp-right", ls_args.disp_right)->required();
  ls_cmd->add_option("--depth1", ls_args.depth1)->required();
  ls_cmd->add_option("--pose-init", ls_args.pose_init)->required();
  ls_cmd->add_option("--pose-refined", ls_args.pose_refined)->required();
  ls_cmd->add_option("--intrinsics", ls_args.intrinsics)->required();
  ls_cmd->add_option("--occlusion", ls_args.occlusion)->required();
  ls_cmd->add_option("--moving", ls_args.moving);
  ls_cmd->add_option("--out", ls_args.out)->required();
  add_weight_flags(ls_cmd, ls_args.weights);

  EvalArgs ev_args;
  auto* ev_cmd = app.add_subcommand("eval", "benchmark metrics");
  ev_cmd->require_subcommand(1);
  const auto eval_io = [&](CLI::App* c) {
    c->add_option("--pred", ev_args.pred)->required();
    c->add_option("--gt", ev_args.gt)->required();
    c->add_option("--out", ev_args.out)->required();
  };
  auto* ev_flow = ev_cmd->add_subcommand("flow", "EPE and Fl");
  eval_io(ev_flow);
  ev_flow->add_option("--noc", ev_args.noc, "non-occlusion mask");
  ev_flow->add_option("--move", ev_args.move, "moving-object mask");
  auto* ev_depth = ev_cmd->add_subcommand("depth", "depth error and accuracy");
  eval_io(ev_depth);
  ev_depth->add_option("--cap", ev_args.cap)->capture_default_str();
  ev_depth->add_option("--intrinsics", ev_args.intrinsics, "camera file with baseline, enables d1_all");
  auto* ev_odom = ev_cmd->add_subcommand("odometry", "5-frame ATE and KITTI drift");
  eval_io(ev_odom);
  ev_odom->add_option("--ate-variant", ev_args.ate_variant)
      ->check(CLI::IsMember({"rmse", "mean-norm"}))
      ->capture_default_str();
  auto* ev_seg = ev_cmd->add_subcommand("segmentation", "pixel accuracy and IoU");
  eval_io(ev_seg);
  ev_seg->add_option("--valid", ev_args.valid);

  VizArgs vz_args;
  auto* vz_cmd = app.add_subcommand("flow-viz", "colour-coded flow image");
  vz_cmd->add_option("--flow", vz_args.flow)->required();
  vz_cmd->add_option("--max", vz_args.max_magnitude, "normalizing magnitude (default: largest)");
  vz_cmd->add_option("--out", vz_args.out)->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kOk : kUsage;
  }

  try {
    if (threads > 0) set_num_threads(threads);
    if (*synth_cmd) return cmd_synth(synth_args);
    if (*rf_cmd) return cmd_rigid_flow(rf_args);
    if (*al_cmd) return cmd_align(al_args);
    if (*sg_cmd) return cmd_segment(sg_args);
    if (*oc_cmd) return cmd_occlusion(oc_args);
    if (*ls_cmd) return cmd_loss(ls_args);
    if (*ev_flow) return cmd_eval_flow(ev_args);
    if (*ev_depth) return cmd_eval_depth(ev_args);
    if (*ev_odom) return cmd_eval_odometry(ev_args);
    if (*ev_seg) return cmd_eval_segmentation(ev_args);
    if (*vz_cmd) return cmd_flow_viz(vz_args);
  } catch (const InvalidArgument& e) {
    std::cerr << "rigidflow: invalid argument: " << e.what() << "\n";
    return kUsage;
  } catch (const FormatError& e) {
    std::cerr << "rigidflow: malformed input: " << e.what() << "\n";
    return kFormat;
  } catch (const IoError& e) {
    std::cerr << "rigidflow: io error: " << e.what() << "\n";
    return kFormat;
  } catch (const DimensionError& e) {
    std::cerr << "rigidflow: dimension mismatch: " << e.what() << "\n";
    return kDimension;
  } catch (const SingularConfigurationError& e) {
    std::cerr << "rigidflow: degenerate alignment: " << e.what() << "\n";
    return kDegenerate;
  } catch (const EmptyRegionError& e) {
    std::cerr << "rigidflow: empty region: " << e.what() << "\n";
    return kDegenerate;
  } catch (const std::exception& e) {
    std::cerr << "rigidflow: error: " << e.what() << "\n";
    return kOther;
  }
  return kOther;
}
