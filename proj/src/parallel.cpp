#include "rigidflow/parallel.hpp"

#include <omp.h>

#include "rigidflow/error.hpp"

namespace rigidflow {

void set_num_threads(int n) {
  if (n < 1) throw InvalidArgument("thread count must be at least 1");
  omp_set_num_threads(n);
}

int num_threads() { return omp_get_max_threads(); }

}  // namespace rigidflow
