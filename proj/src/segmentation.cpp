#include "rigidflow/segmentation.hpp"

#include <cmath>

namespace rigidflow {

Mask motion_mask(const FlowField& f_opt, const FlowField& f_rig, const Mask& non_occluded,
                 const SegmentationParams& params) {
  require_same_extent(f_opt.uv, f_rig.uv, "motion_mask");
  require_same_extent(f_opt.uv, non_occluded, "motion_mask");
  if (!(params.delta > 0.0)) throw InvalidArgument("motion_mask: delta must be positive");
  const ScalarField diff = flow_magnitude_diff(f_opt, f_rig);
  Mask out(diff.width(), diff.height());
  auto d = diff.values();
  auto o = non_occluded.values();
  auto m = out.values();
#pragma omp parallel for schedule(static)
  for (std::size_t i = 0; i < m.size(); ++i) m[i] = (o[i] && d[i] > params.delta) ? 1 : 0;
  return out;
}

}  // namespace rigidflow
