#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include <Eigen/Geometry>

#include "rigidflow/geometry.hpp"
#include "rigidflow/warp.hpp"

namespace rigidflow::synth {

// Smooth procedural texture: per channel, a sum of seeded 2-D sinusoids over
// surface coordinates (meters), rescaled into [0, 1].
class Texture {
 public:
  explicit Texture(std::uint64_t seed = 1, double period = 1.0);

  std::uint64_t seed() const { return seed_; }
  double period() const { return period_; }  // base wavelength, meters
  Eigen::Vector3d color(double s, double t) const;

 private:
  struct Wave {
    double ks, kt, phase, amplitude;
  };
  static constexpr int kWaves = 6;

  std::uint64_t seed_;
  double period_;
  Wave waves_[3][kWaves];
  double amplitude_sum_[3];
};

// Infinite plane n . X = offset (frame-1 left camera coordinates, n unit).
struct TexturedPlane {
  Eigen::Vector3d normal{0.0, 0.0, 1.0};
  double offset = 10.0;
  Texture texture;
};

// Planar rectangle in frame-1 coordinates, moved rigidly between the frames
// by `motion` (also in frame-1 coordinates).
struct SceneObject {
  Eigen::Vector3d center{0.0, 0.0, 5.0};
  Eigen::Vector3d axis_u{1.0, 0.0, 0.0};  // in-plane unit axes
  Eigen::Vector3d axis_v{0.0, 1.0, 0.0};
  double half_u = 1.0;
  double half_v = 1.0;
  PoseSE3 motion;
  Texture texture;

  bool moving() const;
  // Fronto-parallel rectangle covering [x0, x1] x [y0, y1] of frame 1 at
  // depth z. `motion_6dof` rotates about the rectangle centre, then translates.
  static SceneObject from_image_rect(const Intrinsics& k, double x0, double y0, double x1, double y1, double z,
                                     const Pose6& motion_6dof, const Texture& texture);
};

struct SceneConfig {
  Intrinsics intrinsics;
  double baseline = 0.54;
  PoseSE3 camera_motion;  // T12: frame-1 camera coordinates to frame-2
  std::vector<TexturedPlane> background;
  std::vector<SceneObject> objects;

  void validate() const;
};

struct SceneSample {
  Intrinsics intrinsics;
  double baseline = 0.0;
  PoseSE3 camera_motion;
  Image left1, right1, left2, right2;
  DepthMap depth1;        // left view, frame 1
  DepthMap depth2;        // left view, frame 2
  DepthMap depth_right1;  // right view, frame 1
  FlowField flow12;       // true optical flow including object motion
  Mask flow12_valid;
  FlowField flow21;
  Mask flow21_valid;
  FlowField rigid12;  // flow from camera motion alone
  Mask rigid12_valid;
  Mask non_occluded1;  // frame-1 pixels visible in frame 2
  Mask moving1;        // frame-1 pixels on a moving object
};

// Ray casts every view; the nearest surface wins. Throws InvalidArgument when
// a pixel hits no surface.
SceneSample render(const SceneConfig& config);

// d = baseline * fx / depth on the frame-1 left (or right) view.
DisparityMap stereo_disparity_truth(const SceneSample& sample);
DisparityMap stereo_disparity_truth_right(const SceneSample& sample);

// Seeded perturbation delta * pose whose delta has exactly the requested
// rotation angle (degrees) and translation norm (meters).
PoseSE3 perturb_pose(const PoseSE3& pose, double rot_deg, double trans_m, std::uint64_t seed);

struct RandomSceneOptions {
  int width = 832;
  int height = 256;
  int static_objects = 1;
  bool moving_object = false;
  double moving_coverage_min = 0.20;  // fraction of frame-1 pixels
  double moving_coverage_max = 0.30;
};

// Default intrinsics for an image size (KITTI-like field of view).
Intrinsics default_intrinsics(int width, int height);

// Seeded random scene: a tilted textured back plane, static rectangles and
// optionally one laterally moving rectangle. Deterministic in (options, seed).
SceneConfig random_scene(const RandomSceneOptions& options, std::uint64_t seed);

// Scene description as JSON; see docs/formats.md.
SceneConfig parse_scene_config(const std::string& text, const std::string& origin = "scene config");
SceneConfig read_scene_config(const std::filesystem::path& path);
std::string format_scene_config(const SceneConfig& config);

// Writes every raster and the camera files into `dir` (see docs/formats.md)
// and reads them back.
void export_sample(const SceneSample& sample, const std::filesystem::path& dir);
SceneSample import_sample(const std::filesystem::path& dir);

// Splitmix64-based generator with portable uniform doubles.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : state_(seed) {}
  std::uint64_t next();
  double uniform();  // [0, 1)
  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }
  Eigen::Vector3d unit_vector();

 private:
  std::uint64_t state_;
};

}  // namespace rigidflow::synth
