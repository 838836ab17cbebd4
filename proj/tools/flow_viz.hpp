#pragma once

#include "rigidflow/warp.hpp"

namespace rigidflow::viz {

// Middlebury colour wheel. Magnitudes are divided by `max_magnitude`, or by
// the largest valid magnitude when it is <= 0; invalid pixels are black.
Image flow_to_color(const FlowField& flow, const Mask& valid, double max_magnitude = 0.0);

}  // namespace rigidflow::viz
