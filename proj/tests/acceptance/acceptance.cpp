// One line per acceptance criterion; exit status 1 when any criterion fails.

#include <CLI11.hpp>

#include <chrono>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <thread>

#include "common.hpp"
#include "loss_fixture.hpp"
#include "rigidflow/error.hpp"
#include "rigidflow/eval.hpp"
#include "rigidflow/io.hpp"
#include "rigidflow/parallel.hpp"
#include "rigidflow/reference/reference.hpp"
#include "rigidflow/rigid.hpp"
#include "rigidflow/segmentation.hpp"
#include "rigidflow/synth.hpp"

using namespace rigidflow;
using namespace testutil;
namespace fs = std::filesystem;

namespace {

int failures = 0;

void report(int id, const std::string& name, bool pass, const std::string& detail) {
  std::printf("[%s] %d %s: %s\n", pass ? "PASS" : "FAIL", id, name.c_str(), detail.c_str());
  std::fflush(stdout);
  if (!pass) ++failures;
}

template <typename... A>
std::string fmt(const char* f, A... a) {
  char buf[512];
  std::snprintf(buf, sizeof buf, f, a...);
  return buf;
}

synth::SceneSample scene(std::uint64_t seed, bool moving) {
  synth::RandomSceneOptions opt;
  opt.width = 128;
  opt.height = 64;
  opt.moving_object = moving;
  return synth::render(synth::random_scene(opt, seed));
}

double static_epe(const FlowField& f, const synth::SceneSample& s) {
  double sum = 0.0;
  long long n = 0;
  for (int y = 0; y < f.height(); ++y)
    for (int x = 0; x < f.width(); ++x) {
      if (!s.non_occluded1.at(x, y) || s.moving1.at(x, y)) continue;
      sum += std::hypot(f.u(x, y) - s.flow12.u(x, y), f.v(x, y) - s.flow12.v(x, y));
      ++n;
    }
  return sum / static_cast<double>(n);
}

struct RecoveryStats {
  double worst_rot = 0.0, worst_trans = 0.0;
  int failed = 0;
  std::uint64_t worst_seed = 0;
};

void accumulate(RecoveryStats& st, const PoseSE3& est, const PoseSE3& gt, double rot_tol, double trans_tol,
                std::uint64_t seed) {
  const double r = rotation_error_deg(est, gt), t = translation_error(est, gt);
  if (r > st.worst_rot || t > st.worst_trans) st.worst_seed = seed;
  st.worst_rot = std::max(st.worst_rot, r);
  st.worst_trans = std::max(st.worst_trans, t);
  if (r >= rot_tol || t >= trans_tol) ++st.failed;
}

void criterion_1() {
  const int saved = num_threads();
  set_num_threads(1);
  RefineOptions two;
  two.iterations = 2;
  RecoveryStats multi, single;
  double slowest_ms = 0.0;
  for (std::uint64_t seed = 0; seed < 100; ++seed) {
    const synth::SceneSample s = scene(seed, false);
    const PoseSE3 init = synth::perturb_pose(s.camera_motion, 2.0, 0.2, 1000 + seed);
    const auto t0 = std::chrono::steady_clock::now();
    const AlignmentResult r = refine_pose(s.depth1, s.depth2, s.flow12, init, s.intrinsics, s.non_occluded1, two);
    const double ms = std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - t0).count();
    slowest_ms = std::max(slowest_ms, ms);
    accumulate(multi, r.refined, s.camera_motion, 0.05, 5e-3, seed);
    const AlignmentResult r1 = refine_pose(s.depth1, s.depth2, s.flow12, init, s.intrinsics, s.non_occluded1);
    accumulate(single, r1.refined, s.camera_motion, 0.05, 5e-3, seed);
  }
  set_num_threads(saved);
  report(1, "alignment recovery (static, 2 deg / 0.2 m)", multi.failed == 0 && slowest_ms < 200.0,
         fmt("iterations=2: %d/100 out of tolerance, worst %.4f deg / %.2f mm, slowest %.1f ms; "
             "single pass: %d/100 out, worst %.4f deg / %.2f mm",
             multi.failed, multi.worst_rot, 1e3 * multi.worst_trans, slowest_ms, single.failed, single.worst_rot,
             1e3 * single.worst_trans));
}

void criterion_2() {
  RefineOptions two;
  two.iterations = 2;
  RecoveryStats multi, single;
  double worst_share = 0.0, worst_share_single = 0.0, min_cov = 1.0, max_cov = 0.0;
  std::uint64_t share_seed = 0;
  for (std::uint64_t seed = 0; seed < 100; ++seed) {
    const synth::SceneSample s = scene(seed, true);
    const double moving = static_cast<double>(count_set(s.moving1));
    const double cov = moving / static_cast<double>(s.moving1.pixel_count());
    min_cov = std::min(min_cov, cov);
    max_cov = std::max(max_cov, cov);
    const PoseSE3 init = synth::perturb_pose(s.camera_motion, 2.0, 0.2, 2000 + seed);
    const AlignmentResult r = refine_pose(s.depth1, s.depth2, s.flow12, init, s.intrinsics, s.non_occluded1, two);
    const double share = static_cast<double>(count_set(mask_and(r.region, s.moving1))) / moving;
    if (share > worst_share) share_seed = seed;
    worst_share = std::max(worst_share, share);
    accumulate(multi, r.refined, s.camera_motion, 0.1, 1e-2, seed);
    const AlignmentResult r1 = refine_pose(s.depth1, s.depth2, s.flow12, init, s.intrinsics, s.non_occluded1);
    worst_share_single = std::max(worst_share_single,
                                  static_cast<double>(count_set(mask_and(r1.region, s.moving1))) / moving);
    accumulate(single, r1.refined, s.camera_motion, 0.1, 1e-2, seed);
  }
  const bool pass = worst_share < 0.05 && multi.failed == 0 && min_cov >= 0.2 && max_cov <= 0.3;
  report(2, "outlier rejection (moving object)", pass,
         fmt("coverage %.3f..%.3f; iterations=2: worst moving share in R %.2f%% (seed %llu), %d/100 out of "
             "0.1 deg / 1 cm, worst %.4f deg / %.2f mm (seed %llu); single pass: worst share %.2f%%, %d/100 out",
             min_cov, max_cov, 100.0 * worst_share, static_cast<unsigned long long>(share_seed), multi.failed,
             multi.worst_rot, 1e3 * multi.worst_trans, static_cast<unsigned long long>(multi.worst_seed),
             100.0 * worst_share_single, single.failed));
}

void criterion_3() {
  double worst = 0.0;
  long long pixels = 0;
  for (std::uint64_t seed = 0; seed < 50; ++seed) {
    const synth::SceneSample s = scene(seed, false);
    const RigidFlow r = rigid_flow(s.depth1, s.camera_motion, s.intrinsics);
    for (int y = 0; y < 64; ++y)
      for (int x = 0; x < 128; ++x) {
        if (!r.valid.at(x, y) || !s.rigid12_valid.at(x, y)) continue;
        worst = std::max(worst, std::hypot(r.flow.u(x, y) - s.rigid12.u(x, y), r.flow.v(x, y) - s.rigid12.v(x, y)));
        ++pixels;
      }
  }
  report(3, "rigid flow oracle", worst < 1e-4 && pixels > 0,
         fmt("max error %.3g px over %lld pixels in 50 scenes", worst, pixels));
}

void criterion_4() {
  double worst_iou = 1.0;
  bool contained = true;
  for (std::uint64_t seed = 0; seed < 50; ++seed) {
    const synth::SceneSample s = scene(seed, true);
    const RigidFlow rig = rigid_flow(s.depth1, s.camera_motion, s.intrinsics);
    const Mask m = motion_mask(s.flow12, rig.flow, s.non_occluded1, {3.0});
    worst_iou = std::min(worst_iou, mask_iou(m, mask_and(s.moving1, s.non_occluded1)));
    contained = contained && count_set(mask_and(m, mask_not(s.non_occluded1))) == 0;
  }
  report(4, "motion segmentation", worst_iou > 0.95 && contained,
         fmt("worst IoU %.4f over 50 scenes, M1 outside O1: %s", worst_iou, contained ? "never" : "yes"));
}

void criterion_5() {
  int improved = 0;
  for (std::uint64_t seed = 0; seed < 100; ++seed) {
    const synth::SceneSample s = scene(seed, true);
    const PoseSE3 init = synth::perturb_pose(s.camera_motion, 2.0, 0.2, 3000 + seed);
    const AlignmentResult r = refine_pose(s.depth1, s.depth2, s.flow12, init, s.intrinsics, s.non_occluded1);
    const double before = static_epe(rigid_flow(s.depth1, init, s.intrinsics).flow, s);
    const double after = static_epe(rigid_flow(s.depth1, r.refined, s.intrinsics).flow, s);
    improved += after < before;
  }
  report(5, "alignment improves static flow", improved >= 99, fmt("%d/100 trials improved", improved));
}

void criterion_6() {
  std::mt19937_64 rng(606);
  bool fixed = true;
  std::string which;
  {
    const Image a = random_raster(rng, 8, 8, 3);
    const ScalarField w = to_weight(full_mask(8, 8));
    if (photometric_loss(a, a, w, 0.85).value != 0.0) fixed = false, which += " photometric";
    FlowField affine(8, 8);
    for (int y = 0; y < 8; ++y)
      for (int x = 0; x < 8; ++x) {
        affine.u(x, y) = 3 * x - y + 2;
        affine.v(x, y) = x + 5 * y;
      }
    if (smoothness_loss(affine, a, full_mask(8, 8), 10.0) != 0.0) fixed = false, which += " smoothness";
    const FlowField f = random_flow(rng, 8, 8, 2.0);
    if (consistency_loss(f, f, Mask(8, 8)) != 0.0) fixed = false, which += " consistency";
    DisparityMap zero(8, 8);
    zero.valid.fill(1);
    if (stereo_loss(a, a, zero, zero).total != 0.0) fixed = false, which += " stereo";
    const RigidTerms rt = rigid_loss(a, a, a, full_mask(8, 8), Mask(8, 8), 0.85);
    if (rt.rig1.value != 0.0 || rt.rig2.value != 0.0) fixed = false, which += " rigid";
  }

  const LossWeights w;
  double worst = 0.0;
  std::string worst_pair;
  int checks = 0;
  for (const LossPair& pair : differentiable_pairs()) {
    for (int instance = 0; instance < 20; ++instance) {
      const LossInputs in = random_loss_inputs(rng, 8, 8, instance % 2 == 0);
      const double e = relative_error(analytic_gradient(pair.term, in, pair.input, w),
                                      numeric_gradient(pair.term, in, pair.input, w));
      if (e > worst) worst_pair = to_string(pair.term) + "/" + to_string(pair.input);
      worst = std::max(worst, e);
      ++checks;
    }
  }

  bool stop = true;
  for (int instance = 0; instance < 20; ++instance) {
    const LossInputs in = random_loss_inputs(rng);
    for (LossInput i : {LossInput::RigidFlowRefined, LossInput::Depth1, LossInput::PoseRefined})
      for (double v : analytic_gradient(LossTerm::Consistency, in, i, w)) stop = stop && v == 0.0;
  }
  report(6, "loss fixed points and gradients", fixed && worst < 1e-4 && stop,
         fmt("fixed points %s; %d gradient checks, worst relative error %.3g (%s); stop-gradient zeros %s",
             fixed ? "exact" : ("nonzero:" + which).c_str(), checks, worst, worst_pair.c_str(),
             stop ? "exact" : "violated"));
}

void criterion_7() {
  const LossWeights w;
  const bool defaults = w.lambda_sm == 10.0 && w.lambda_st == 1.0 && w.lambda_rig == 10.0 && w.lambda_con == 0.01;
  std::mt19937_64 rng(707);
  double worst = 0.0;
  for (int trial = 0; trial < 50; ++trial) {
    const LossReport r = total_loss(random_loss_inputs(rng, 16, 12, trial % 2 == 0), w);
    const double sum = r.opt_ph + 10.0 * r.opt_sm + 1.0 * r.stereo + 10.0 * (r.rig1 + r.rig2) + 0.01 * r.con;
    worst = std::max(worst, std::abs(r.total - sum) / std::abs(sum));
  }
  report(7, "total loss weighting", defaults && worst < 1e-12,
         fmt("default weights %s, worst relative deviation %.3g over 50 instances", defaults ? "match" : "differ",
             worst));
}

void criterion_8() {
  std::mt19937_64 rng(808);
  double worst = 0.0;
  const auto track = [&](double a, double b) { worst = std::max(worst, std::abs(a - b)); };
  bool perfect = true;
  for (int trial = 0; trial < 20; ++trial) {
    const int w = 8 + trial % 5, h = 6 + trial % 3;
    const FlowField gt = random_flow(rng, w, h, 30.0), pred = random_flow(rng, w, h, 30.0);
    const Mask valid = random_mask(rng, w, h, 0.9), noc = random_mask(rng, w, h, 0.8);
    eval::FlowMasks m;
    m.valid = valid;
    m.noc = noc;
    const eval::FlowEval fe = eval::flow_metrics(pred, gt, m);
    const auto all = reference::flow_oracle(pred, gt, valid);
    const auto n = reference::flow_oracle(pred, gt, mask_and(valid, noc));
    track(*fe.epe_all, all.epe_sum / all.count);
    track(*fe.epe_noc, n.epe_sum / n.count);
    track(*fe.fl_all, 100.0 * all.outliers / all.count);
    const eval::FlowEval fp = eval::flow_metrics(gt, gt, m);
    perfect = perfect && *fp.epe_all == 0.0 && *fp.epe_noc == 0.0 && *fp.fl_all == 0.0;

    Intrinsics k;
    k.fx = k.fy = 700.0;
    k.cx = 0.5 * (w - 1);
    k.cy = 0.5 * (h - 1);
    k.width = w;
    k.height = h;
    const StereoRig rig{k, 0.54};
    DepthMap dg(w, h), dp(w, h);
    dg.values = random_raster(rng, w, h, 1, 0.5, 90.0);
    dg.valid = random_mask(rng, w, h, 0.85);
    dp.values = random_raster(rng, w, h, 1, 0.5, 90.0);
    dp.valid = random_mask(rng, w, h, 0.9);
    const eval::DepthEval de = eval::depth_metrics(dp, dg, 80.0, rig);
    const eval::DepthEval dor = reference::depth_oracle(dp, dg, 80.0, &rig);
    track(de.abs_rel, dor.abs_rel);
    track(de.sq_rel, dor.sq_rel);
    track(de.rmse, dor.rmse);
    track(de.rmse_log, dor.rmse_log);
    track(*de.d1_all, *dor.d1_all);
    track(de.delta1, dor.delta1);
    track(de.delta2, dor.delta2);
    track(de.delta3, dor.delta3);
    const eval::DepthEval dperf = eval::depth_metrics(dg, dg, 80.0, rig);
    perfect = perfect && dperf.abs_rel == 0.0 && dperf.sq_rel == 0.0 && dperf.rmse == 0.0 && dperf.rmse_log == 0.0 &&
              *dperf.d1_all == 0.0 && dperf.delta1 == 1.0 && dperf.delta2 == 1.0 && dperf.delta3 == 1.0;

    const Mask sp = random_mask(rng, w, h, 0.3), sg = random_mask(rng, w, h, 0.3);
    const eval::SegEval se = eval::seg_metrics(sp, sg), so = reference::seg_oracle(sp, sg);
    track(se.pixel_acc, so.pixel_acc);
    track(se.mean_acc, so.mean_acc);
    track(se.mean_iou, so.mean_iou);
    track(se.fw_iou, so.fw_iou);
    const eval::SegEval sperf = eval::seg_metrics(sg, sg);
    perfect = perfect && sperf.pixel_acc == 1.0 && sperf.mean_acc == 1.0 && sperf.mean_iou == 1.0 &&
              sperf.fw_iou == 1.0;
  }

  // Odometry: a drifting prediction along a long winding path.
  std::vector<PoseSE3> gt, pred;
  PoseSE3 g = PoseSE3::identity(), p = PoseSE3::identity();
  for (int i = 0; i < 400; ++i) {
    gt.push_back(g);
    pred.push_back(p);
    const PoseSE3 step = pose_from_6dof({0.0, 0.01 * std::sin(0.05 * i), 0.0, 0.0, 0.0, 1.0});
    g = compose(g, step);
    p = compose(p, compose(step, random_pose(rng, 0.002, 0.02)));
  }
  const eval::OdomErrors oe = eval::kitti_odom_errors(pred, gt);
  const eval::OdomErrors oo = reference::kitti_odom_oracle(pred, gt);
  track(oe.t_err_percent, oo.t_err_percent);
  track(oe.r_err_deg_per_100m, oo.r_err_deg_per_100m);
  const bool segments_match = oe.segments == oo.segments;
  const eval::OdomErrors operf = eval::kitti_odom_errors(gt, gt);
  const eval::AteResult aperf = eval::ate_5frame(eval::relative_poses(gt), eval::relative_poses(gt));
  perfect = perfect && operf.t_err_percent == 0.0 && operf.r_err_deg_per_100m == 0.0 && aperf.mean == 0.0;

  const bool fl_rule = !eval::is_outlier(2.9, 0.0) && !eval::is_outlier(2.9, 1e6) && !eval::is_outlier(4.0, 100.0) &&
                       eval::is_outlier(4.0, 10.0);
  report(8, "metric oracles", worst < 1e-9 && perfect && fl_rule && segments_match,
         fmt("max oracle deviation %.3g; perfect scores %s; Fl boundary cases %s", worst,
             perfect ? "exact" : "not exact", fl_rule ? "as specified" : "wrong"));
}

void criterion_9() {
  std::mt19937_64 rng(909);
  double flow_worst = 0.0, pose_worst = 0.0;
  bool valid_ok = true, pfm_ok = true;
  const fs::path dir = fs::temp_directory_path() / "rigidflow_acceptance_formats";
  fs::create_directories(dir);
  for (int trial = 0; trial < 100; ++trial) {
    const int w = 1 + static_cast<int>(rng() % 64), h = 1 + static_cast<int>(rng() % 32);
    const FlowField f = random_flow(rng, w, h, 511.0);
    const Mask v = random_mask(rng, w, h, 0.8);
    io::write_flow_png(dir / "f.png", f, v);
    const io::FlowWithValidity r = io::read_flow_png(dir / "f.png");
    flow_worst = std::max(flow_worst, max_abs_diff(r.flow.uv, f.uv));
    valid_ok = valid_ok && r.valid == v;

    Raster<float> pf(w, h);
    std::uniform_real_distribution<float> u(-1e6f, 1e6f);
    for (auto& x : pf.values()) x = u(rng);
    io::write_pfm(dir / "d.pfm", pf);
    pfm_ok = pfm_ok && io::read_pfm(dir / "d.pfm") == pf;

    std::vector<PoseSE3> poses;
    for (int i = 0; i < 4; ++i) poses.push_back(random_pose(rng, M_PI, 500.0));
    io::write_poses(dir / "p.txt", poses);
    const auto back = io::read_poses(dir / "p.txt");
    for (std::size_t i = 0; i < poses.size(); ++i)
      pose_worst = std::max(pose_worst, (back[i].matrix() - poses[i].matrix()).cwiseAbs().maxCoeff());
  }
  fs::remove_all(dir);
  const bool pass = flow_worst <= 1.0 / 128.0 && valid_ok && pfm_ok && pose_worst <= 1e-12;
  report(9, "format round trips", pass,
         fmt("flow max error %.5f px (limit 1/128), validity %s; PFM %s; pose max error %.3g", flow_worst,
             valid_ok ? "exact" : "differs", pfm_ok ? "bit-exact" : "differs", pose_worst));
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream s;
  s << in.rdbuf();
  return s.str();
}

int run(const std::string& cmd) {
  const int status = std::system(cmd.c_str());
  return status == -1 ? -1 : WEXITSTATUS(status);
}

// Full synth -> align -> segment -> loss -> eval pipeline into `out`.
std::string pipeline(const std::string& cli, const fs::path& out, int threads) {
  fs::remove_all(out);
  fs::create_directories(out);
  const std::string t = " --threads " + std::to_string(threads);
  const std::string env = "OMP_NUM_THREADS=" + std::to_string(threads) + " ";
  const std::string pre = env + "\"" + cli + "\"" + t + " ";
  const std::string s = (out / "scene").string();
  const std::string o = out.string();

  std::vector<std::string> steps = {
      "synth --seed 11 --moving --width 128 --height 64 --out " + s,
      "rigid-flow --depth " + s + "/depth1.pfm --pose " + o + "/init.txt --intrinsics " + s +
          "/intrinsics.txt --out " + o + "/rigid_init.png",
      "align --depth1 " + s + "/depth1.pfm --depth2 " + s + "/depth2.pfm --flow " + s + "/flow12.png --occlusion " +
          s + "/non_occluded1.png --pose-init " + o + "/init.txt --intrinsics " + s + "/intrinsics.txt --out-pose " +
          o + "/refined.txt --report " + o + "/align.json",
      "rigid-flow --depth " + s + "/depth1.pfm --pose " + o + "/refined.txt --intrinsics " + s +
          "/intrinsics.txt --out " + o + "/rigid_refined.png",
      "occlusion --flow21 " + s + "/flow21.png --out " + o + "/occ_est.png",
      "segment --flow " + s + "/flow12.png --rigid-flow " + o + "/rigid_refined.png --occlusion " + o +
          "/occ_est.png --out " + o + "/moving.png",
      "loss --left1 " + s + "/left1.png --right1 " + s + "/right1.png --left2 " + s + "/left2.png --flow " + s +
          "/flow12.png --disp-left " + s + "/disp_left1.pfm --disp-right " + s + "/disp_right1.pfm --depth1 " + s +
          "/depth1.pfm --pose-init " + o + "/init.txt --pose-refined " + o + "/refined.txt --intrinsics " + s +
          "/intrinsics.txt --occlusion " + o + "/occ_est.png --moving " + o + "/moving.png --out " + o + "/loss.json",
      "eval flow --pred " + o + "/rigid_refined.png --gt " + s + "/flow12.png --noc " + s +
          "/non_occluded1.png --move " + s + "/moving1.png --out " + o + "/eval_flow.json",
      "eval depth --pred " + s + "/depth2.pfm --gt " + s + "/depth1.pfm --intrinsics " + s +
          "/intrinsics.txt --out " + o + "/eval_depth.json",
      "eval segmentation --pred " + o + "/moving.png --gt " + s + "/moving1.png --out " + o + "/eval_seg.json",
      "eval odometry --pred " + o + "/../traj_pred.txt --gt " + o + "/../traj_gt.txt --out " + o + "/eval_odom.json",
      "flow-viz --flow " + o + "/rigid_refined.png --out " + o + "/viz.png",
  };
  // The perturbed initial pose is an input of the pipeline, written before the CLI runs.
  bool first = true;
  for (const std::string& step : steps) {
    const int code = run(pre + step + " 2> " + o + "/stderr.txt");
    if (code != 0) return "step failed (exit " + std::to_string(code) + "): " + step.substr(0, step.find(' '));
    if (first) {
      const synth::SceneSample sample = synth::import_sample(s);
      io::write_poses(out / "init.txt", {synth::perturb_pose(sample.camera_motion, 2.0, 0.2, 77)});
      first = false;
    }
  }
  fs::remove(out / "stderr.txt");
  return {};
}

std::map<std::string, std::string> snapshot(const fs::path& dir) {
  std::map<std::string, std::string> files;
  for (const auto& e : fs::recursive_directory_iterator(dir))
    if (e.is_regular_file()) files[fs::relative(e.path(), dir).string()] = slurp(e.path());
  return files;
}

void criterion_10(const std::string& cli, const fs::path& work) {
  fs::create_directories(work);
  {
    std::vector<PoseSE3> gt, pred;
    std::mt19937_64 rng(1010);
    PoseSE3 g = PoseSE3::identity(), p = PoseSE3::identity();
    for (int i = 0; i < 150; ++i) {
      gt.push_back(g);
      pred.push_back(p);
      const PoseSE3 step = pose_from_6dof({0.0, 0.02 * std::cos(0.1 * i), 0.0, 0.0, 0.0, 1.0});
      g = compose(g, step);
      p = compose(p, compose(step, random_pose(rng, 0.003, 0.03)));
    }
    io::write_poses(work / "traj_gt.txt", gt);
    io::write_poses(work / "traj_pred.txt", pred);
  }
  const int n = std::max(2u, std::thread::hardware_concurrency());
  const std::vector<std::pair<std::string, int>> runs = {{"run_a", 1}, {"run_b", 1}, {"run_c", n}};
  std::vector<std::map<std::string, std::string>> snaps;
  for (const auto& [name, threads] : runs) {
    const std::string err = pipeline(cli, work / name, threads);
    if (!err.empty()) {
      report(10, "CLI determinism", false, name + ": " + err);
      return;
    }
    snaps.push_back(snapshot(work / name));
  }
  std::string diff;
  for (std::size_t i = 1; i < snaps.size(); ++i)
    for (const auto& [file, bytes] : snaps[0]) {
      const auto it = snaps[i].find(file);
      if (it == snaps[i].end() || it->second != bytes) diff += " " + runs[i].first + ":" + file;
    }
  if (snaps[1].size() != snaps[0].size() || snaps[2].size() != snaps[0].size()) diff += " (file sets differ)";
  report(10, "CLI determinism", diff.empty(),
         diff.empty() ? fmt("%zu output files byte-identical across two 1-thread runs and a %d-thread run",
                            snaps[0].size(), n)
                      : "differing outputs:" + diff);
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"acceptance checks"};
  std::string cli;
  std::string workdir = (fs::temp_directory_path() / "rigidflow_acceptance").string();
  std::vector<int> only;
  app.add_option("--cli", cli, "path to the rigidflow executable")->required();
  app.add_option("--workdir", workdir);
  app.add_option("--only", only, "criteria to run (default: all)");
  CLI11_PARSE(app, argc, argv);

  const auto want = [&](int id) { return only.empty() || std::find(only.begin(), only.end(), id) != only.end(); };
  const std::pair<int, std::function<void()>> criteria[] = {
      {1, criterion_1}, {2, criterion_2}, {3, criterion_3}, {4, criterion_4}, {5, criterion_5},
      {6, criterion_6}, {7, criterion_7}, {8, criterion_8}, {9, criterion_9},
      {10, [&] { criterion_10(cli, workdir); }},
  };
  for (const auto& [id, fn] : criteria) {
    if (!want(id)) continue;
    try {
      fn();
    } catch (const std::exception& e) {
      report(id, "criterion", false, std::string("exception: ") + e.what());
    }
  }
  std::printf("%d criteria failed\n", failures);
  return failures == 0 ? 0 : 1;
}
