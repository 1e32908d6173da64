#pragma once

namespace dynamb {

// Serial is the reference path; Parallel runs the same kernel under OpenMP
// and must produce identical results.
enum class Exec { Serial, Parallel };

// Thread count used by Parallel kernels; jobs <= 0 keeps the OpenMP default.
void set_jobs(int jobs);
int available_threads();

}  // namespace dynamb
