#include "dynamb/parallel.hpp"

#include <omp.h>

namespace dynamb {

void set_jobs(int jobs) {
  if (jobs > 0) omp_set_num_threads(jobs);
}

int available_threads() { return omp_get_max_threads(); }

}  // namespace dynamb
