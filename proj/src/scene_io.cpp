#include <json.hpp>

#include "rigidflow/error.hpp"
#include "rigidflow/io.hpp"
#include "rigidflow/synth.hpp"

namespace rigidflow::synth {

namespace {

using nlohmann::json;

struct Reader {
  std::string origin;

  [[noreturn]] void fail(const std::string& what) const { throw FormatError(origin + ": " + what); }

  const json& field(const json& obj, const char* key) const {
    if (!obj.is_object() || !obj.contains(key)) fail(std::string("missing field '") + key + "'");
    return obj.at(key);
  }
  double number(const json& v, const char* key) const {
    if (!v.is_number()) fail(std::string("field '") + key + "' must be a number");
    return v.get<double>();
  }
  double number(const json& obj, const char* key, double fallback) const {
    return obj.contains(key) ? number(obj.at(key), key) : fallback;
  }
  std::vector<double> numbers(const json& v, const char* key, std::size_t n) const {
    if (!v.is_array() || v.size() != n) fail(std::string("field '") + key + "' must be an array of " + std::to_string(n));
    std::vector<double> out;
    for (const auto& e : v) out.push_back(number(e, key));
    return out;
  }
  Eigen::Vector3d vec3(const json& obj, const char* key) const {
    const auto v = numbers(field(obj, key), key, 3);
    return {v[0], v[1], v[2]};
  }
  int integer(const json& obj, const char* key) const {
    const json& v = field(obj, key);
    if (!v.is_number_integer()) fail(std::string("field '") + key + "' must be an integer");
    return v.get<int>();
  }

  // Either {"6dof": [rx, ry, rz, tx, ty, tz]} or {"matrix": [12 numbers]}.
  PoseSE3 pose(const json& v, const char* key) const {
    if (v.is_object() && v.contains("6dof")) {
      const auto p = numbers(v.at("6dof"), key, 6);
      return pose_from_6dof({p[0], p[1], p[2], p[3], p[4], p[5]});
    }
    if (v.is_object() && v.contains("matrix")) {
      const auto m = numbers(v.at("matrix"), key, 12);
      Eigen::Matrix3d r;
      r << m[0], m[1], m[2], m[4], m[5], m[6], m[8], m[9], m[10];
      PoseSE3 p(r, Eigen::Vector3d(m[3], m[7], m[11]));
      if (p.orthonormality_error() > io::kPoseFileOrthonormalityTolerance)
        fail(std::string("field '") + key + "' rotation is not orthonormal");
      if (p.orthonormality_error() <= 1e-14) return p;
      return PoseSE3(orthonormalize(r), p.translation());
    }
    fail(std::string("field '") + key + "' must hold '6dof' or 'matrix'");
  }

  Texture texture(const json& obj) const {
    const json& t = field(obj, "texture");
    const json& seed = field(t, "seed");
    if (!seed.is_number_unsigned() && !(seed.is_number_integer() && seed.get<long long>() >= 0))
      fail("texture seed must be a non-negative integer");
    return Texture(seed.get<std::uint64_t>(), number(field(t, "period"), "period"));
  }
};

json vec_json(const Eigen::Vector3d& v) { return json::array({v.x(), v.y(), v.z()}); }

json pose_json(const PoseSE3& p) {
  json m = json::array();
  for (int r = 0; r < 3; ++r) {
    for (int c = 0; c < 3; ++c) m.push_back(p.rotation()(r, c));
    m.push_back(p.translation()[r]);
  }
  return {{"matrix", m}};
}

json texture_json(const Texture& t) { return {{"seed", t.seed()}, {"period", t.period()}}; }

}  // namespace

SceneConfig parse_scene_config(const std::string& text, const std::string& origin) {
  Reader rd{origin};
  json doc;
  try {
    doc = json::parse(text);
  } catch (const json::parse_error& e) {
    rd.fail(std::string("invalid JSON: ") + e.what());
  }
  SceneConfig c;
  try {
    const json& cam = rd.field(doc, "camera");
    c.intrinsics.fx = rd.number(rd.field(cam, "fx"), "fx");
    c.intrinsics.fy = rd.number(rd.field(cam, "fy"), "fy");
    c.intrinsics.cx = rd.number(rd.field(cam, "cx"), "cx");
    c.intrinsics.cy = rd.number(rd.field(cam, "cy"), "cy");
    c.intrinsics.width = rd.integer(cam, "width");
    c.intrinsics.height = rd.integer(cam, "height");
    c.baseline = rd.number(cam, "baseline", 0.54);
    c.camera_motion = rd.pose(rd.field(doc, "camera_motion"), "camera_motion");

    if (doc.contains("planes")) {
      for (const json& p : doc.at("planes")) {
        TexturedPlane plane;
        plane.normal = rd.vec3(p, "normal");
        if (std::abs(plane.normal.norm() - 1.0) > 1e-14) plane.normal.normalize();
        plane.offset = rd.number(rd.field(p, "offset"), "offset");
        plane.texture = rd.texture(p);
        c.background.push_back(plane);
      }
    }
    if (doc.contains("objects")) {
      for (const json& o : doc.at("objects")) {
        if (o.contains("rect")) {
          const auto r = rd.numbers(o.at("rect"), "rect", 4);
          Pose6 m{};
          if (o.contains("motion_6dof")) {
            const auto v = rd.numbers(o.at("motion_6dof"), "motion_6dof", 6);
            std::copy(v.begin(), v.end(), m.begin());
          }
          c.objects.push_back(SceneObject::from_image_rect(c.intrinsics, r[0], r[1], r[2], r[3],
                                                           rd.number(rd.field(o, "depth"), "depth"), m, rd.texture(o)));
          continue;
        }
        SceneObject obj;
        obj.center = rd.vec3(o, "center");
        obj.axis_u = rd.vec3(o, "axis_u");
        obj.axis_v = rd.vec3(o, "axis_v");
        obj.half_u = rd.number(rd.field(o, "half_u"), "half_u");
        obj.half_v = rd.number(rd.field(o, "half_v"), "half_v");
        if (o.contains("motion")) obj.motion = rd.pose(o.at("motion"), "motion");
        obj.texture = rd.texture(o);
        c.objects.push_back(obj);
      }
    }
  } catch (const json::exception& e) {
    rd.fail(e.what());
  }
  try {
    c.validate();
  } catch (const InvalidArgument& e) {
    rd.fail(e.what());
  }
  return c;
}

SceneConfig read_scene_config(const std::filesystem::path& path) {
  return parse_scene_config(io::read_file(path), path.string());
}

std::string format_scene_config(const SceneConfig& c) {
  json doc;
  const Intrinsics& k = c.intrinsics;
  doc["camera"] = {{"fx", k.fx}, {"fy", k.fy},         {"cx", k.cx},
                   {"cy", k.cy}, {"width", k.width}, {"height", k.height}, {"baseline", c.baseline}};
  doc["camera_motion"] = pose_json(c.camera_motion);
  doc["planes"] = json::array();
  for (const auto& p : c.background)
    doc["planes"].push_back({{"normal", vec_json(p.normal)}, {"offset", p.offset}, {"texture", texture_json(p.texture)}});
  doc["objects"] = json::array();
  for (const auto& o : c.objects) {
    doc["objects"].push_back({{"center", vec_json(o.center)},
                              {"axis_u", vec_json(o.axis_u)},
                              {"axis_v", vec_json(o.axis_v)},
                              {"half_u", o.half_u},
                              {"half_v", o.half_v},
                              {"motion", pose_json(o.motion)},
                              {"texture", texture_json(o.texture)}});
  }
  return doc.dump(2) + "\n";
}

void export_sample(const SceneSample& s, const std::filesystem::path& dir) {
  std::filesystem::create_directories(dir);
  io::write_image_png(dir / "left1.png", s.left1);
  io::write_image_png(dir / "right1.png", s.right1);
  io::write_image_png(dir / "left2.png", s.left2);
  io::write_image_png(dir / "right2.png", s.right2);
  io::write_depth_pfm(dir / "depth1.pfm", s.depth1);
  io::write_depth_pfm(dir / "depth2.pfm", s.depth2);
  io::write_depth_pfm(dir / "depth_right1.pfm", s.depth_right1);
  io::write_disparity_pfm(dir / "disp_left1.pfm", stereo_disparity_truth(s));
  io::write_disparity_pfm(dir / "disp_right1.pfm", stereo_disparity_truth_right(s));
  io::write_flow_png(dir / "flow12.png", s.flow12, s.flow12_valid);
  io::write_flow_png(dir / "flow21.png", s.flow21, s.flow21_valid);
  io::write_flow_png(dir / "rigid12.png", s.rigid12, s.rigid12_valid);
  io::write_mask_png(dir / "non_occluded1.png", s.non_occluded1);
  io::write_mask_png(dir / "moving1.png", s.moving1);
  io::write_poses(dir / "pose.txt", {s.camera_motion});
  io::write_camera(dir / "intrinsics.txt", s.intrinsics, s.baseline);
}

SceneSample import_sample(const std::filesystem::path& dir) {
  SceneSample s;
  const io::CameraFile cam = io::read_camera(dir / "intrinsics.txt");
  s.intrinsics = cam.intrinsics;
  s.baseline = cam.baseline.value_or(0.0);
  const auto poses = io::read_poses(dir / "pose.txt");
  if (poses.size() != 1) throw FormatError((dir / "pose.txt").string() + ": expected exactly one pose");
  s.camera_motion = poses.front();
  s.left1 = io::read_image_png(dir / "left1.png");
  s.right1 = io::read_image_png(dir / "right1.png");
  s.left2 = io::read_image_png(dir / "left2.png");
  s.right2 = io::read_image_png(dir / "right2.png");
  s.depth1 = io::read_depth_pfm(dir / "depth1.pfm");
  s.depth2 = io::read_depth_pfm(dir / "depth2.pfm");
  s.depth_right1 = io::read_depth_pfm(dir / "depth_right1.pfm");
  auto f12 = io::read_flow_png(dir / "flow12.png");
  s.flow12 = std::move(f12.flow);
  s.flow12_valid = std::move(f12.valid);
  auto f21 = io::read_flow_png(dir / "flow21.png");
  s.flow21 = std::move(f21.flow);
  s.flow21_valid = std::move(f21.valid);
  auto r12 = io::read_flow_png(dir / "rigid12.png");
  s.rigid12 = std::move(r12.flow);
  s.rigid12_valid = std::move(r12.valid);
  s.non_occluded1 = io::read_mask_png(dir / "non_occluded1.png");
  s.moving1 = io::read_mask_png(dir / "moving1.png");
  return s;
}

}  // namespace rigidflow::synth
