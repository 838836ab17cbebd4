#include <bit>
#include <cmath>
#include <cstring>
#include <fstream>
#include <iomanip>
#include <sstream>

#include <unistd.h>

#include "png_codec.hpp"
#include "rigidflow/io.hpp"

namespace rigidflow::io {

static_assert(std::endian::native == std::endian::little, "PFM and PNG sample packing assume a little-endian host");

void write_file_atomic(const fs::path& path, const std::string& bytes) {
  fs::path tmp = path;
  tmp += ".tmp." + std::to_string(::getpid());
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw IoError("cannot open " + tmp.string() + " for writing");
    out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
    out.flush();
    if (!out) throw IoError("failed writing " + tmp.string());
  }
  std::error_code ec;
  fs::rename(tmp, path, ec);
  if (ec) {
    fs::remove(tmp, ec);
    throw IoError("cannot move output into place at " + path.string());
  }
}

std::string read_file(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  if (in.bad()) throw IoError("failed reading " + path.string());
  return ss.str();
}

// ---------------------------------------------------------------------------
// PNG rasters

namespace {

std::uint16_t quantize_unit(double v, double scale) {
  const double c = std::clamp(v, 0.0, 1.0);
  return static_cast<std::uint16_t>(std::lround(c * scale));
}

}  // namespace

void write_image_png(const fs::path& path, const Image& image) {
  if (image.channels() != 3 && image.channels() != 1)
    throw FormatError(path.string() + ": image PNGs hold 1 or 3 channels");
  detail::PngData d{image.width(), image.height(), image.channels(), 8, {}};
  d.samples.reserve(image.size());
  for (double v : image.values()) d.samples.push_back(quantize_unit(v, 255.0));
  write_file_atomic(path, detail::encode_png(d));
}

Image read_image_png(const fs::path& path) {
  const detail::PngData d = detail::decode_png(read_file(path), path.string());
  Image img(d.width, d.height, 3);
  const double scale = d.bit_depth == 16 ? 65535.0 : 255.0;
  for (int y = 0; y < d.height; ++y)
    for (int x = 0; x < d.width; ++x)
      for (int c = 0; c < 3; ++c) {
        const int src_c = d.channels == 1 ? 0 : c;
        img.at(x, y, c) = d.samples[(static_cast<std::size_t>(y) * d.width + x) * d.channels + src_c] / scale;
      }
  return img;
}

void write_mask_png(const fs::path& path, const Mask& mask) {
  detail::PngData d{mask.width(), mask.height(), 1, 8, {}};
  d.samples.reserve(mask.size());
  for (auto v : mask.values()) d.samples.push_back(v ? 255 : 0);
  write_file_atomic(path, detail::encode_png(d));
}

Mask read_mask_png(const fs::path& path) {
  const detail::PngData d = detail::decode_png(read_file(path), path.string());
  Mask m(d.width, d.height);
  const unsigned threshold = d.bit_depth == 16 ? 32767 : 127;
  for (int y = 0; y < d.height; ++y)
    for (int x = 0; x < d.width; ++x)
      m.at(x, y) = d.samples[(static_cast<std::size_t>(y) * d.width + x) * d.channels] > threshold ? 1 : 0;
  return m;
}

std::uint16_t encode_flow_component(double f) {
  const double stored = std::round(f * 64.0 + 32768.0);
  return static_cast<std::uint16_t>(std::clamp(stored, 0.0, 65535.0));
}

double decode_flow_component(std::uint16_t stored) { return (static_cast<double>(stored) - 32768.0) / 64.0; }

void write_flow_png(const fs::path& path, const FlowField& flow, const Mask& valid) {
  require_same_extent(flow.uv, valid, path.string().c_str());
  detail::PngData d{flow.width(), flow.height(), 3, 16, {}};
  d.samples.reserve(static_cast<std::size_t>(flow.width()) * flow.height() * 3);
  for (int y = 0; y < flow.height(); ++y)
    for (int x = 0; x < flow.width(); ++x) {
      d.samples.push_back(encode_flow_component(flow.u(x, y)));
      d.samples.push_back(encode_flow_component(flow.v(x, y)));
      d.samples.push_back(valid.at(x, y) ? 1 : 0);
    }
  write_file_atomic(path, detail::encode_png(d));
}

FlowWithValidity read_flow_png(const fs::path& path) {
  const detail::PngData d = detail::decode_png(read_file(path), path.string());
  if (d.bit_depth != 16 || d.channels != 3) throw FormatError(path.string() + ": flow PNG must be 16-bit RGB");
  FlowWithValidity out{FlowField(d.width, d.height), Mask(d.width, d.height)};
  for (int y = 0; y < d.height; ++y)
    for (int x = 0; x < d.width; ++x) {
      const std::size_t i = (static_cast<std::size_t>(y) * d.width + x) * 3;
      out.flow.u(x, y) = decode_flow_component(d.samples[i]);
      out.flow.v(x, y) = decode_flow_component(d.samples[i + 1]);
      out.valid.at(x, y) = d.samples[i + 2] != 0 ? 1 : 0;
    }
  return out;
}

// ---------------------------------------------------------------------------
// PFM

std::string encode_pfm(const Raster<float>& raster) {
  if (raster.channels() != 1) throw FormatError("PFM writer supports single-channel rasters");
  std::string out = "Pf\n" + std::to_string(raster.width()) + " " + std::to_string(raster.height()) + "\n-1\n";
  const std::size_t header = out.size();
  out.resize(header + raster.size() * sizeof(float));
  char* dst = out.data() + header;
  for (int y = raster.height() - 1; y >= 0; --y) {
    std::memcpy(dst, raster.row(y), sizeof(float) * raster.width());
    dst += sizeof(float) * raster.width();
  }
  return out;
}

Raster<float> decode_pfm(const std::string& bytes) {
  std::size_t pos = 0;
  const auto token = [&]() {
    while (pos < bytes.size() && std::isspace(static_cast<unsigned char>(bytes[pos]))) ++pos;
    const std::size_t start = pos;
    while (pos < bytes.size() && !std::isspace(static_cast<unsigned char>(bytes[pos]))) ++pos;
    return bytes.substr(start, pos - start);
  };
  const std::string magic = token();
  if (magic == "PF") throw FormatError("PFM: three-channel files are not supported");
  if (magic != "Pf") throw FormatError("PFM: bad magic '" + magic + "'");
  int width = 0;
  int height = 0;
  double scale = 0.0;
  try {
    width = std::stoi(token());
    height = std::stoi(token());
    scale = std::stod(token());
  } catch (const std::exception&) {
    throw FormatError("PFM: malformed header");
  }
  if (width <= 0 || height <= 0 || scale == 0.0) throw FormatError("PFM: invalid header values");
  ++pos;  // single whitespace byte after the scale
  const std::size_t need = static_cast<std::size_t>(width) * height * sizeof(float);
  if (bytes.size() < pos + need) throw FormatError("PFM: truncated pixel data");
  const bool big_endian = scale > 0.0;
  Raster<float> r(width, height);
  const char* src = bytes.data() + pos;
  for (int y = height - 1; y >= 0; --y) {
    for (int x = 0; x < width; ++x) {
      std::uint32_t bits;
      std::memcpy(&bits, src, 4);
      if (big_endian) bits = __builtin_bswap32(bits);
      r.at(x, y) = std::bit_cast<float>(bits);
      src += 4;
    }
  }
  return r;
}

void write_pfm(const fs::path& path, const Raster<float>& raster) { write_file_atomic(path, encode_pfm(raster)); }

Raster<float> read_pfm(const fs::path& path) {
  try {
    return decode_pfm(read_file(path));
  } catch (const FormatError& e) {
    throw FormatError(path.string() + ": " + e.what());
  }
}

namespace {

Raster<float> to_float(const ScalarField& values, const Mask& valid) {
  Raster<float> r(values.width(), values.height());
  for (int y = 0; y < values.height(); ++y)
    for (int x = 0; x < values.width(); ++x)
      r.at(x, y) = valid.at(x, y) ? static_cast<float>(values.at(x, y)) : 0.0f;
  return r;
}

void from_float(const Raster<float>& r, ScalarField& values, Mask& valid) {
  values = ScalarField(r.width(), r.height());
  valid = Mask(r.width(), r.height());
  for (int y = 0; y < r.height(); ++y)
    for (int x = 0; x < r.width(); ++x) {
      const float v = r.at(x, y);
      if (std::isfinite(v) && v > 0.0f) {
        values.at(x, y) = v;
        valid.at(x, y) = 1;
      }
    }
}

}  // namespace

void write_depth_pfm(const fs::path& path, const DepthMap& depth) { write_pfm(path, to_float(depth.values, depth.valid)); }

DepthMap read_depth_pfm(const fs::path& path) {
  DepthMap d;
  from_float(read_pfm(path), d.values, d.valid);
  return d;
}

void write_disparity_pfm(const fs::path& path, const DisparityMap& disp) {
  write_pfm(path, to_float(disp.values, disp.valid));
}

DisparityMap read_disparity_pfm(const fs::path& path) {
  DisparityMap d;
  from_float(read_pfm(path), d.values, d.valid);
  return d;
}

// ---------------------------------------------------------------------------
// Pose and camera text files

std::string format_poses(const std::vector<PoseSE3>& poses) {
  std::ostringstream ss;
  ss << std::setprecision(17);
  for (const auto& p : poses) {
    const Eigen::Matrix3d& r = p.rotation();
    const Eigen::Vector3d& t = p.translation();
    for (int i = 0; i < 3; ++i) {
      for (int j = 0; j < 3; ++j) ss << r(i, j) << ' ';
      ss << t(i) << (i == 2 ? '\n' : ' ');
    }
  }
  return ss.str();
}

std::vector<PoseSE3> parse_poses(const std::string& text, const std::string& origin) {
  std::vector<PoseSE3> poses;
  std::istringstream lines(text);
  std::string line;
  int line_no = 0;
  while (std::getline(lines, line)) {
    ++line_no;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    std::istringstream ls(line);
    double v[12];
    for (double& x : v)
      if (!(ls >> x)) throw FormatError(origin + ":" + std::to_string(line_no) + ": expected 12 numbers");
    std::string extra;
    if (ls >> extra) throw FormatError(origin + ":" + std::to_string(line_no) + ": more than 12 values");
    Eigen::Matrix3d r;
    r << v[0], v[1], v[2], v[4], v[5], v[6], v[8], v[9], v[10];
    PoseSE3 pose(r, Eigen::Vector3d(v[3], v[7], v[11]));
    if (!(pose.orthonormality_error() <= kPoseFileOrthonormalityTolerance)) {
      throw FormatError(origin + ":" + std::to_string(line_no) + ": rotation is not orthonormal");
    }
    poses.push_back(pose);
  }
  return poses;
}

void write_poses(const fs::path& path, const std::vector<PoseSE3>& poses) { write_file_atomic(path, format_poses(poses)); }

std::vector<PoseSE3> read_poses(const fs::path& path) { return parse_poses(read_file(path), path.string()); }

CameraFile parse_camera(const std::string& text, const std::string& origin) {
  std::istringstream ss(text);
  CameraFile cam;
  Intrinsics& k = cam.intrinsics;
  if (!(ss >> k.fx >> k.fy >> k.cx >> k.cy >> k.width >> k.height))
    throw FormatError(origin + ": expected 'fx fy cx cy width height [baseline]'");
  double baseline;
  if (ss >> baseline) {
    if (!(baseline > 0.0)) throw FormatError(origin + ": baseline must be positive");
    cam.baseline = baseline;
  }
  std::string extra;
  if (ss.clear(), ss >> extra) throw FormatError(origin + ": trailing content '" + extra + "'");
  try {
    k.validate();
  } catch (const InvalidArgument& e) {
    throw FormatError(origin + ": " + e.what());
  }
  return cam;
}

std::string format_camera(const Intrinsics& k, std::optional<double> baseline) {
  std::ostringstream ss;
  ss << std::setprecision(17) << k.fx << ' ' << k.fy << ' ' << k.cx << ' ' << k.cy << ' ' << k.width << ' '
     << k.height;
  if (baseline) ss << ' ' << *baseline;
  ss << '\n';
  return ss.str();
}

CameraFile read_camera(const fs::path& path) { return parse_camera(read_file(path), path.string()); }

void write_camera(const fs::path& path, const Intrinsics& k, std::optional<double> baseline) {
  write_file_atomic(path, format_camera(k, baseline));
}

}  // namespace rigidflow::io
