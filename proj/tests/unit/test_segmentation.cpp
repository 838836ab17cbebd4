#include <doctest.h>

#include "common.hpp"
#include "rigidflow/reference/reference.hpp"
#include "rigidflow/rigid.hpp"
#include "rigidflow/segmentation.hpp"
#include "rigidflow/synth.hpp"

using namespace rigidflow;
using namespace testutil;

TEST_CASE("motion mask examples") {
  std::mt19937_64 rng(1);
  const FlowField f = random_flow(rng, 6, 4, 5.0);
  CHECK(count_set(motion_mask(f, f, full_mask(6, 4))) == 0u);

  FlowField a(2, 1), b(2, 1);
  a.u(0, 0) = a.u(1, 0) = 3.0;
  a.v(0, 0) = a.v(1, 0) = 4.0;
  Mask occ(2, 1);
  occ.at(0, 0) = 1;
  const Mask m = motion_mask(a, b, occ);
  CHECK(m.at(0, 0) == 1);
  CHECK(m.at(1, 0) == 0);

  FlowField at_threshold(1, 1);
  at_threshold.u(0, 0) = 3.0;
  CHECK(motion_mask(at_threshold, FlowField(1, 1), full_mask(1, 1)).at(0, 0) == 0);
  CHECK_THROWS_AS(motion_mask(a, b, occ, {0.0}), InvalidArgument);
}

TEST_CASE("motion mask properties") {
  std::mt19937_64 rng(2);
  for (int trial = 0; trial < 20; ++trial) {
    const FlowField a = random_flow(rng, 16, 9, 6.0);
    const FlowField b = random_flow(rng, 16, 9, 6.0);
    const Mask occ = random_mask(rng, 16, 9, 0.7);
    const Mask m = motion_mask(a, b, occ);
    CHECK(mask_and(m, mask_not(occ)) == Mask(16, 9));
    CHECK(m == reference::motion_mask(a, b, occ, 3.0));
    const Mask loose = motion_mask(a, b, occ, {1.5});
    CHECK(mask_and(m, mask_not(loose)) == Mask(16, 9));
    FlowField sa = a, sb = b;
    for (int y = 0; y < 9; ++y)
      for (int x = 0; x < 16; ++x) {
        sa.u(x, y) += 0.25;
        sb.u(x, y) += 0.25;
        sa.v(x, y) -= 2.0;
        sb.v(x, y) -= 2.0;
      }
    CHECK(motion_mask(sa, sb, occ) == m);
  }
}

TEST_CASE("motion mask recovers the moving object on synthetic scenes") {
  synth::RandomSceneOptions opt;
  opt.width = 128;
  opt.height = 64;
  opt.moving_object = true;
  for (std::uint64_t seed = 0; seed < 5; ++seed) {
    const synth::SceneSample s = synth::render(synth::random_scene(opt, seed));
    const RigidFlow rig = rigid_flow(s.depth1, s.camera_motion, s.intrinsics);
    const Mask m = motion_mask(s.flow12, rig.flow, s.non_occluded1);
    CHECK(mask_iou(m, mask_and(s.moving1, s.non_occluded1)) > 0.95);
  }
}
