#pragma once

#include "rigidflow/warp.hpp"

namespace rigidflow {

struct SegmentationParams {
  double delta = 3.0;  // pixels
};

// 1 exactly where |f_opt - f_rig| > delta (strict) and the pixel is
// non-occluded, so the result is always contained in non_occluded.
Mask motion_mask(const FlowField& f_opt, const FlowField& f_rig, const Mask& non_occluded,
                 const SegmentationParams& params = {});

}  // namespace rigidflow
