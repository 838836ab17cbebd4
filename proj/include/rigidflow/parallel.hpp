#pragma once

namespace rigidflow {

// Thread count used by the OpenMP kernels. Results never depend on it:
// per-pixel maps write disjoint outputs and every reduction runs in a fixed
// row order.
void set_num_threads(int n);
int num_threads();

}  // namespace rigidflow
