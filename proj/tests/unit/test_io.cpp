#include <doctest.h>

#include <filesystem>

#include "common.hpp"
#include "rigidflow/error.hpp"
#include "rigidflow/io.hpp"

using namespace rigidflow;
using namespace testutil;
namespace fs = std::filesystem;

namespace {

fs::path scratch(const std::string& name) {
  const fs::path dir = fs::temp_directory_path() / "rigidflow_test_io";
  fs::create_directories(dir);
  return dir / name;
}

}  // namespace

TEST_CASE("flow component encoding") {
  CHECK(io::encode_flow_component(0.0) == 32768);
  CHECK(io::encode_flow_component(1.0) == 32768 + 64);
  CHECK(io::encode_flow_component(-1e9) == 0);
  CHECK(io::encode_flow_component(1e9) == 65535);
  CHECK(io::decode_flow_component(32768) == 0.0);
  CHECK(io::decode_flow_component(32768 - 64) == -1.0);
}

TEST_CASE("flow png round trip") {
  std::mt19937_64 rng(1);
  const fs::path p = scratch("flow.png");
  for (int trial = 0; trial < 100; ++trial) {
    const int w = 1 + static_cast<int>(rng() % 40), h = 1 + static_cast<int>(rng() % 20);
    const FlowField f = random_flow(rng, w, h, 300.0);
    const Mask valid = random_mask(rng, w, h, 0.8);
    io::write_flow_png(p, f, valid);
    const io::FlowWithValidity r = io::read_flow_png(p);
    CHECK(r.valid == valid);
    CHECK(max_abs_diff(r.flow.uv, f.uv) <= 1.0 / 128.0 + 1e-12);
  }
}

TEST_CASE("pfm round trip is bit exact") {
  std::mt19937_64 rng(2);
  for (int trial = 0; trial < 100; ++trial) {
    const int w = 1 + static_cast<int>(rng() % 40), h = 1 + static_cast<int>(rng() % 20);
    Raster<float> r(w, h);
    std::uniform_real_distribution<float> u(-1e4f, 1e4f);
    for (auto& v : r.values()) v = u(rng);
    CHECK(io::decode_pfm(io::encode_pfm(r)) == r);
  }
  Raster<float> one(3, 2);
  one.at(0, 0) = 1.5f;
  const fs::path p = scratch("one.pfm");
  io::write_pfm(p, one);
  CHECK(io::read_pfm(p) == one);
}

TEST_CASE("pfm rejects malformed input") {
  CHECK_THROWS_AS(io::decode_pfm(""), FormatError);
  CHECK_THROWS_AS(io::decode_pfm("P5\n2 2\n-1\n"), FormatError);
  CHECK_THROWS_AS(io::decode_pfm("Pf\n2 2\n-1\n\x01\x02"), FormatError);
  CHECK_THROWS_AS(io::decode_pfm("Pf\n0 2\n-1\n"), FormatError);
}

TEST_CASE("depth pfm keeps validity") {
  std::mt19937_64 rng(3);
  DepthMap d(7, 5);
  d.values = random_raster(rng, 7, 5, 1, 1.0, 50.0);
  d.valid = random_mask(rng, 7, 5, 0.7);
  const fs::path p = scratch("depth.pfm");
  io::write_depth_pfm(p, d);
  const DepthMap r = io::read_depth_pfm(p);
  CHECK(r.valid == d.valid);
  for (int y = 0; y < 5; ++y)
    for (int x = 0; x < 7; ++x)
      if (d.valid.at(x, y))
        CHECK(r.values.at(x, y) == static_cast<double>(static_cast<float>(d.values.at(x, y))));
}

TEST_CASE("pose text round trip") {
  std::mt19937_64 rng(4);
  for (int trial = 0; trial < 100; ++trial) {
    std::vector<PoseSE3> poses;
    for (int i = 0; i < 5; ++i) poses.push_back(random_pose(rng, M_PI, 100.0));
    const auto back = io::parse_poses(io::format_poses(poses));
    REQUIRE(back.size() == poses.size());
    for (std::size_t i = 0; i < poses.size(); ++i) CHECK((back[i].matrix() - poses[i].matrix()).norm() < 1e-12);
  }
  CHECK_THROWS_AS(io::parse_poses("1 0 0 0 0 1 0 0 0 0 1"), FormatError);
  CHECK_THROWS_AS(io::parse_poses("2 0 0 0 0 1 0 0 0 0 1 0"), FormatError);
  CHECK_THROWS_AS(io::parse_poses("1 0 0 0 0 1 0 0 0 0 1 x"), FormatError);
  CHECK(io::parse_poses("").empty());
}

TEST_CASE("image and mask png round trip") {
  std::mt19937_64 rng(5);
  Image img = random_raster(rng, 9, 4, 3);
  for (auto& v : img.values()) v = std::round(v * 255.0) / 255.0;
  const fs::path p = scratch("img.png");
  io::write_image_png(p, img);
  CHECK(max_abs_diff(io::read_image_png(p), img) < 1e-12);
  const Mask m = random_mask(rng, 9, 4, 0.5);
  io::write_mask_png(scratch("mask.png"), m);
  CHECK(io::read_mask_png(scratch("mask.png")) == m);
  CHECK_THROWS_AS(io::read_image_png(scratch("missing.png")), IoError);
  io::write_file_atomic(scratch("junk.png"), "not a png");
  CHECK_THROWS_AS(io::read_image_png(scratch("junk.png")), FormatError);
}

TEST_CASE("camera files") {
  const io::CameraFile c = io::parse_camera("720 720 415.5 127.5 832 256 0.54");
  CHECK(c.intrinsics.fx == 720.0);
  CHECK(c.intrinsics.width == 832);
  CHECK(c.baseline.value() == 0.54);
  const io::CameraFile back = io::parse_camera(io::format_camera(c.intrinsics, c.baseline));
  CHECK(back.intrinsics.cx == 415.5);
  CHECK(back.baseline.value() == 0.54);
  CHECK_FALSE(io::parse_camera("720 720 415.5 127.5 832 256").baseline.has_value());
  CHECK_THROWS_AS(io::parse_camera("720 720 415.5"), FormatError);
}
