#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "rigidflow/geometry.hpp"
#include "rigidflow/warp.hpp"

namespace rigidflow::io {

namespace fs = std::filesystem;

// Writes through a temporary sibling file and renames it over `path`.
void write_file_atomic(const fs::path& path, const std::string& bytes);
std::string read_file(const fs::path& path);

// 8-bit RGB PNG <-> image in [0, 1]; stored value round(255 v).
void write_image_png(const fs::path& path, const Image& image);
Image read_image_png(const fs::path& path);

// 8-bit grayscale PNG with 0/255 <-> binary mask (values > 127 read as 1).
void write_mask_png(const fs::path& path, const Mask& mask);
Mask read_mask_png(const fs::path& path);

// 16-bit 3-channel PNG, KITTI layout: R = u, G = v, B = validity, with
// stored = round(64 f + 2^15) clamped to [0, 65535].
std::uint16_t encode_flow_component(double f);
double decode_flow_component(std::uint16_t stored);
struct FlowWithValidity {
  FlowField flow;
  Mask valid;
};
void write_flow_png(const fs::path& path, const FlowField& flow, const Mask& valid);
FlowWithValidity read_flow_png(const fs::path& path);

// Single-channel little-endian PFM ("Pf", scale -1, rows bottom to top).
Raster<float> decode_pfm(const std::string& bytes);
std::string encode_pfm(const Raster<float>& raster);
void write_pfm(const fs::path& path, const Raster<float>& raster);
Raster<float> read_pfm(const fs::path& path);

// Depth and disparity rasters travel as PFM with 0 marking invalid pixels.
void write_depth_pfm(const fs::path& path, const DepthMap& depth);
DepthMap read_depth_pfm(const fs::path& path);
void write_disparity_pfm(const fs::path& path, const DisparityMap& disp);
DisparityMap read_disparity_pfm(const fs::path& path);

// One pose per line: 12 numbers, row-major 3x4 [R|t].
std::string format_poses(const std::vector<PoseSE3>& poses);
std::vector<PoseSE3> parse_poses(const std::string& text, const std::string& origin = "pose text");
void write_poses(const fs::path& path, const std::vector<PoseSE3>& poses);
std::vector<PoseSE3> read_poses(const fs::path& path);
inline constexpr double kPoseFileOrthonormalityTolerance = 1e-6;

// "fx fy cx cy width height [baseline]".
struct CameraFile {
  Intrinsics intrinsics;
  std::optional<double> baseline;
};
CameraFile parse_camera(const std::string& text, const std::string& origin = "intrinsics text");
std::string format_camera(const Intrinsics& k, std::optional<double> baseline = std::nullopt);
CameraFile read_camera(const fs::path& path);
void write_camera(const fs::path& path, const Intrinsics& k, std::optional<double> baseline = std::nullopt);

}  // namespace rigidflow::io
