#include "rigidflow/synth.hpp"

#include "rigidflow/error.hpp"

#include <cmath>
#include <numbers>
#include <optional>
#include <string>

namespace rigidflow::synth {

std::uint64_t Rng::next() {
  std::uint64_t z = (state_ += 0x9E3779B97F4A7C15ULL);
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
  return z ^ (z >> 31);
}

double Rng::uniform() { return static_cast<double>(next() >> 11) * 0x1.0p-53; }

Eigen::Vector3d Rng::unit_vector() {
  const double z = uniform(-1.0, 1.0);
  const double phi = uniform(0.0, 2.0 * std::numbers::pi);
  const double r = std::sqrt(std::max(0.0, 1.0 - z * z));
  return {r * std::cos(phi), r * std::sin(phi), z};
}

Texture::Texture(std::uint64_t seed, double period) : seed_(seed), period_(period) {
  if (!(period > 0.0)) throw InvalidArgument("texture period must be positive");
  Rng rng(seed * 0x2545F4914F6CDD1DULL + 0x1234567ULL);
  for (int c = 0; c < 3; ++c) {
    amplitude_sum_[c] = 0.0;
    for (auto& w : waves_[c]) {
      const double wavelength = period * rng.uniform(0.7, 1.8);
      const double angle = rng.uniform(0.0, std::numbers::pi);
      const double k = 2.0 * std::numbers::pi / wavelength;
      w.ks = k * std::cos(angle);
      w.kt = k * std::sin(angle);
      w.phase = rng.uniform(0.0, 2.0 * std::numbers::pi);
      w.amplitude = rng.uniform(0.4, 1.0);
      amplitude_sum_[c] += w.amplitude;
    }
  }
}

Eigen::Vector3d Texture::color(double s, double t) const {
  Eigen::Vector3d out;
  for (int c = 0; c < 3; ++c) {
    double v = 0.0;
    for (const auto& w : waves_[c]) v += w.amplitude * std::sin(w.ks * s + w.kt * t + w.phase);
    out[c] = 0.5 + 0.45 * v / amplitude_sum_[c];
  }
  return out;
}

bool SceneObject::moving() const {
  return !(motion.rotation() == Eigen::Matrix3d::Identity() && motion.translation() == Eigen::Vector3d::Zero());
}

SceneObject SceneObject::from_image_rect(const Intrinsics& k, double x0, double y0, double x1, double y1, double z,
                                         const Pose6& motion_6dof, const Texture& texture) {
  if (!(z > 0.0)) throw InvalidArgument("object depth must be positive");
  if (!(x1 > x0) || !(y1 > y0)) throw InvalidArgument("object rectangle must have positive extent");
  SceneObject o;
  const double cx = 0.5 * (x0 + x1);
  const double cy = 0.5 * (y0 + y1);
  o.center = {z * (cx - k.cx) / k.fx, z * (cy - k.cy) / k.fy, z};
  o.half_u = 0.5 * z * (x1 - x0) / k.fx;
  o.half_v = 0.5 * z * (y1 - y0) / k.fy;
  const PoseSE3 local = pose_from_6dof(motion_6dof);
  // Rotate about the centre: X' = R (X - c) + c + t.
  o.motion = PoseSE3(local.rotation(), o.center - local.rotation() * o.center + local.translation());
  o.texture = texture;
  return o;
}

void SceneConfig::validate() const {
  intrinsics.validate();
  if (!(baseline > 0.0)) throw InvalidArgument("scene: baseline must be positive");
  if (background.empty() && objects.empty()) throw InvalidArgument("scene: no surfaces");
  if (camera_motion.orthonormality_error() > 1e-9) throw InvalidArgument("scene: camera rotation is not orthonormal");
  for (const auto& p : background) {
    if (std::abs(p.normal.norm() - 1.0) > 1e-9) throw InvalidArgument("scene: plane normal must be unit length");
    if (!(p.offset > 0.0)) throw InvalidArgument("scene: plane offset must be positive (plane in front of camera)");
  }
  for (const auto& o : objects) {
    if (!(o.half_u > 0.0) || !(o.half_v > 0.0)) throw InvalidArgument("scene: object extents must be positive");
    if (std::abs(o.axis_u.norm() - 1.0) > 1e-9 || std::abs(o.axis_v.norm() - 1.0) > 1e-9 ||
        std::abs(o.axis_u.dot(o.axis_v)) > 1e-9)
      throw InvalidArgument("scene: object axes must be orthonormal");
    if (o.motion.orthonormality_error() > 1e-9) throw InvalidArgument("scene: object rotation is not orthonormal");
  }
}

namespace {

// One surface as seen from one view: the inverse of (view o motion) maps view
// coordinates back into frame-1 surface coordinates.
struct PlacedSurface {
  Eigen::Matrix3d to_surface_rot;  // R^T of (view o motion)
  Eigen::Vector3d eye;             // camera centre in surface coordinates
  Eigen::Vector3d normal;
  double offset;
  // Rectangle bounds (objects only).
  bool bounded;
  Eigen::Vector3d center, axis_u, axis_v;
  double half_u, half_v;
};

struct Hit {
  int surface = -1;
  double depth = 0.0;
  Eigen::Vector3d point;  // frame-1 surface coordinates
};

class SceneTracer {
 public:
  SceneTracer(const SceneConfig& config) : config_(config) {
    for (const auto& p : config.background) {
      Eigen::Vector3d up = std::abs(p.normal.y()) < 0.9 ? Eigen::Vector3d(0, 1, 0) : Eigen::Vector3d(1, 0, 0);
      Eigen::Vector3d e1 = up.cross(p.normal).normalized();
      Eigen::Vector3d e2 = p.normal.cross(e1);
      frames_.push_back({p.normal * p.offset, e1, e2});
    }
    for (const auto& o : config.objects) frames_.push_back({o.center, o.axis_u, o.axis_v});
  }

  int surface_count() const { return static_cast<int>(frames_.size()); }
  bool is_moving(int s) const {
    return s >= static_cast<int>(config_.background.size()) && object(s).moving();
  }
  const SceneObject& object(int s) const {
    return config_.objects[static_cast<std::size_t>(s) - config_.background.size()];
  }
  PoseSE3 motion(int s, bool second_frame) const {
    if (!second_frame || s < static_cast<int>(config_.background.size())) return PoseSE3::identity();
    return object(s).motion;
  }

  std::vector<PlacedSurface> place(const PoseSE3& view, bool second_frame) const {
    std::vector<PlacedSurface> out;
    const int nb = static_cast<int>(config_.background.size());
    for (int s = 0; s < surface_count(); ++s) {
      const PoseSE3 full = compose(view, motion(s, second_frame));
      const PoseSE3 inv = full.inverse();
      PlacedSurface ps{};
      ps.to_surface_rot = inv.rotation();
      ps.eye = inv.translation();
      if (s < nb) {
        ps.normal = config_.background[static_cast<std::size_t>(s)].normal;
        ps.offset = config_.background[static_cast<std::size_t>(s)].offset;
        ps.bounded = false;
      } else {
        const SceneObject& o = object(s);
        ps.normal = o.axis_u.cross(o.axis_v);
        ps.offset = ps.normal.dot(o.center);
        ps.bounded = true;
        ps.center = o.center;
        ps.axis_u = o.axis_u;
        ps.axis_v = o.axis_v;
        ps.half_u = o.half_u;
        ps.half_v = o.half_v;
      }
      out.push_back(ps);
    }
    return out;
  }

  // Ray through pixel (px, py) of a view; ray z-component is 1 so the ray
  // parameter equals view depth.
  Hit trace(const std::vector<PlacedSurface>& placed, double px, double py) const {
    const Intrinsics& k = config_.intrinsics;
    const Eigen::Vector3d ray((px - k.cx) / k.fx, (py - k.cy) / k.fy, 1.0);
    Hit best;
    for (int s = 0; s < static_cast<int>(placed.size()); ++s) {
      const PlacedSurface& ps = placed[static_cast<std::size_t>(s)];
      const Eigen::Vector3d dir = ps.to_surface_rot * ray;
      const double denom = ps.normal.dot(dir);
      if (denom == 0.0) continue;
      const double lambda = (ps.offset - ps.normal.dot(ps.eye)) / denom;
      if (!(lambda > kMinProjectionDepth)) continue;
      if (best.surface >= 0 && lambda >= best.depth) continue;
      const Eigen::Vector3d x = ps.eye + lambda * dir;
      if (ps.bounded) {
        const Eigen::Vector3d d = x - ps.center;
        if (std::abs(d.dot(ps.axis_u)) > ps.half_u || std::abs(d.dot(ps.axis_v)) > ps.half_v) continue;
      }
      best = {s, lambda, x};
    }
    return best;
  }

  Eigen::Vector3d color(const Hit& h) const {
    const SurfaceFrame& f = frames_[static_cast<std::size_t>(h.surface)];
    const Eigen::Vector3d d = h.point - f.origin;
    const int nb = static_cast<int>(config_.background.size());
    const Texture& tex = h.surface < nb ? config_.background[static_cast<std::size_t>(h.surface)].texture
                                        : object(h.surface).texture;
    return tex.color(d.dot(f.e1), d.dot(f.e2));
  }

 private:
  struct SurfaceFrame {
    Eigen::Vector3d origin, e1, e2;
  };
  const SceneConfig& config_;
  std::vector<SurfaceFrame> frames_;
};

struct ViewRender {
  std::vector<Hit> hits;
  Image image;
  DepthMap depth;
};

ViewRender render_view(const SceneTracer& tracer, const Intrinsics& k, const PoseSE3& view, bool second_frame,
                       const char* name) {
  const int w = k.width;
  const int h = k.height;
  const auto placed = tracer.place(view, second_frame);
  ViewRender out{std::vector<Hit>(static_cast<std::size_t>(w) * h), Image(w, h, 3), DepthMap(w, h)};
  int missing = -1;
#pragma omp parallel for schedule(static)
  for (int y = 0; y < h; ++y)
    for (int x = 0; x < w; ++x) {
      const Hit hit = tracer.trace(placed, x, y);
      out.hits[static_cast<std::size_t>(y) * w + x] = hit;
      if (hit.surface < 0) {
#pragma omp critical
        if (missing < 0 || y * w + x < missing) missing = y * w + x;
        continue;
      }
      const Eigen::Vector3d c = tracer.color(hit);
      for (int ch = 0; ch < 3; ++ch) out.image.at(x, y, ch) = c[ch];
      out.depth.values.at(x, y) = hit.depth;
      out.depth.valid.at(x, y) = 1;
    }
  if (missing >= 0) {
    throw InvalidArgument(std::string("scene: pixel (") + std::to_string(missing % w) + ", " +
                          std::to_string(missing / w) + ") of the " + name + " view hits no surface");
  }
  return out;
}

std::optional<Eigen::Vector2d> project_point(const Intrinsics& k, const Eigen::Vector3d& p) {
  if (!(p.z() > kMinProjectionDepth)) return std::nullopt;
  return Eigen::Vector2d(k.fx * p.x() / p.z() + k.cx, k.fy * p.y() / p.z() + k.cy);
}

}  // namespace

SceneSample render(const SceneConfig& config) {
  config.validate();
  const Intrinsics& k = config.intrinsics;
  const int w = k.width;
  const int h = k.height;
  const SceneTracer tracer(config);
  const PoseSE3 to_right(Eigen::Matrix3d::Identity(), Eigen::Vector3d(-config.baseline, 0.0, 0.0));
  const PoseSE3& t12 = config.camera_motion;

  const ViewRender l1 = render_view(tracer, k, PoseSE3::identity(), false, "frame-1 left");
  const ViewRender r1 = render_view(tracer, k, to_right, false, "frame-1 right");
  const ViewRender l2 = render_view(tracer, k, t12, true, "frame-2 left");
  const ViewRender r2 = render_view(tracer, k, compose(to_right, t12), true, "frame-2 right");
  const auto placed2 = tracer.place(t12, true);

  SceneSample s;
  s.intrinsics = k;
  s.baseline = config.baseline;
  s.camera_motion = t12;
  s.left1 = l1.image;
  s.right1 = r1.image;
  s.left2 = l2.image;
  s.right2 = r2.image;
  s.depth1 = l1.depth;
  s.depth2 = l2.depth;
  s.depth_right1 = r1.depth;
  s.flow12 = FlowField(w, h);
  s.flow12_valid = Mask(w, h);
  s.flow21 = FlowField(w, h);
  s.flow21_valid = Mask(w, h);
  s.rigid12 = FlowField(w, h);
  s.rigid12_valid = Mask(w, h);
  s.non_occluded1 = Mask(w, h);
  s.moving1 = Mask(w, h);

#pragma omp parallel for schedule(static)
  for (int y = 0; y < h; ++y)
    for (int x = 0; x < w; ++x) {
      const Hit& hit = l1.hits[static_cast<std::size_t>(y) * w + x];
      const bool moving = tracer.is_moving(hit.surface);
      s.moving1.at(x, y) = moving ? 1 : 0;

      const Eigen::Vector3d rigid_pt = t12.apply(hit.point);
      if (auto q = project_point(k, rigid_pt)) {
        s.rigid12.u(x, y) = q->x() - x;
        s.rigid12.v(x, y) = q->y() - y;
        s.rigid12_valid.at(x, y) = 1;
      }
      const Eigen::Vector3d p2 = t12.apply(tracer.motion(hit.surface, true).apply(hit.point));
      const auto q = project_point(k, p2);
      if (!q) continue;
      s.flow12.u(x, y) = q->x() - x;
      s.flow12.v(x, y) = q->y() - y;
      s.flow12_valid.at(x, y) = 1;
      // Visible in frame 2 when the frame-2 ray through the landing point
      // hits the same surface at the same depth.
      const auto snap = [](double c, int n) {
        if (std::abs(c) <= 1e-9) return 0.0;
        if (std::abs(c - (n - 1)) <= 1e-9) return n - 1.0;
        return c;
      };
      const double qx = snap(q->x(), w), qy = snap(q->y(), h);
      if (!sample_in_bounds(qx, qy, w, h)) continue;
      const Hit seen = tracer.trace(placed2, qx, qy);
      if (seen.surface == hit.surface && std::abs(seen.depth - p2.z()) <= 1e-6 * p2.z()) s.non_occluded1.at(x, y) = 1;
    }

#pragma omp parallel for schedule(static)
  for (int y = 0; y < h; ++y)
    for (int x = 0; x < w; ++x) {
      const Hit& hit = l2.hits[static_cast<std::size_t>(y) * w + x];
      if (auto q = project_point(k, hit.point)) {
        s.flow21.u(x, y) = q->x() - x;
        s.flow21.v(x, y) = q->y() - y;
        s.flow21_valid.at(x, y) = 1;
      }
    }
  return s;
}

DisparityMap stereo_disparity_truth(const SceneSample& sample) {
  return depth_to_disparity(sample.depth1, {sample.intrinsics, sample.baseline});
}

DisparityMap stereo_disparity_truth_right(const SceneSample& sample) {
  return depth_to_disparity(sample.depth_right1, {sample.intrinsics, sample.baseline});
}

PoseSE3 perturb_pose(const PoseSE3& pose, double rot_deg, double trans_m, std::uint64_t seed) {
  if (!(rot_deg >= 0.0) || !(rot_deg < 180.0)) throw InvalidArgument("perturb_pose: rotation must be in [0, 180) degrees");
  if (!(trans_m >= 0.0)) throw InvalidArgument("perturb_pose: translation must be non-negative");
  Rng rng(seed);
  const Eigen::Vector3d axis = rng.unit_vector();
  const Eigen::Vector3d dir = rng.unit_vector();
  const double angle = rot_deg * std::numbers::pi / 180.0;
  const PoseSE3 delta(rotation_exp(angle * axis), trans_m * dir);
  return compose(delta, pose);
}

Intrinsics default_intrinsics(int width, int height) {
  Intrinsics k;
  k.fx = 0.58 * width;
  k.fy = k.fx;
  k.cx = 0.5 * (width - 1);
  k.cy = 0.5 * (height - 1);
  k.width = width;
  k.height = height;
  return k;
}

SceneConfig random_scene(const RandomSceneOptions& opt, std::uint64_t seed) {
  Rng rng(seed);
  const double deg = std::numbers::pi / 180.0;
  SceneConfig c;
  c.intrinsics = default_intrinsics(opt.width, opt.height);
  const Intrinsics& k = c.intrinsics;
  c.baseline = 0.54;

  const Pose6 cam{rng.uniform(-1.0, 1.0) * deg, rng.uniform(-3.0, 3.0) * deg, rng.uniform(-1.0, 1.0) * deg,
                  rng.uniform(-0.1, 0.1),      rng.uniform(-0.05, 0.05),    -rng.uniform(0.5, 1.5)};
  c.camera_motion = pose_from_6dof(cam);

  // Texture wavelength of roughly 8-16 pixels at the surface's depth.
  const auto texture_for = [&](double depth) {
    const std::uint64_t tex_seed = rng.next();
    return Texture(tex_seed, rng.uniform(8.0, 16.0) * depth / k.fx);
  };

  {
    const double yaw = rng.uniform(-25.0, 25.0) * deg;
    const double pitch = rng.uniform(-15.0, 15.0) * deg;
    const Eigen::Vector3d n = Eigen::Vector3d(std::tan(yaw), std::tan(pitch), 1.0).normalized();
    const double center_depth = rng.uniform(15.0, 30.0);
    c.background.push_back({n, center_depth * n.z(), texture_for(center_depth)});
  }

  for (int i = 0; i < opt.static_objects; ++i) {
    const double fw = rng.uniform(0.15, 0.35);
    const double fh = rng.uniform(0.25, 0.6);
    const double x0 = rng.uniform(0.0, 1.0 - fw) * (k.width - 1);
    const double y0 = rng.uniform(0.0, 1.0 - fh) * (k.height - 1);
    const double z = rng.uniform(8.0, 13.0);
    c.objects.push_back(SceneObject::from_image_rect(k, x0, y0, x0 + fw * (k.width - 1), y0 + fh * (k.height - 1), z,
                                                     Pose6{}, texture_for(z)));
  }

  if (opt.moving_object) {
    // Shrink the target slightly so pixel discretization stays inside the range.
    const double span = opt.moving_coverage_max - opt.moving_coverage_min;
    const double coverage = rng.uniform(opt.moving_coverage_min + 0.1 * span, opt.moving_coverage_max - 0.1 * span);
    const double fw = rng.uniform(0.35, 0.6);
    const double fh = std::min(0.95, coverage / fw);
    const double rw = fw * k.width;
    const double rh = fh * k.height;
    // Pixel centres inside [x0, x0 + rw) cover about rw columns.
    const double x0 = rng.uniform(0.0, k.width - rw) - 0.5;
    const double y0 = rng.uniform(0.0, k.height - rh) - 0.5;
    const double z = rng.uniform(5.5, 7.5);  // nearer than any static object
    const double side = rng.uniform() < 0.5 ? -1.0 : 1.0;
    const Pose6 motion{0.0, rng.uniform(-3.0, 3.0) * deg, 0.0, side * rng.uniform(1.2, 2.0), rng.uniform(-0.1, 0.1),
                       rng.uniform(-0.3, 0.3)};
    c.objects.push_back(SceneObject::from_image_rect(k, x0, y0, x0 + rw, y0 + rh, z, motion, texture_for(z)));
  }
  return c;
}

}  // namespace rigidflow::synth
