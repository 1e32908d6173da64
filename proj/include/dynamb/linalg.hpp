#pragma once

#include <Eigen/Dense>

namespace dynamb {

using Mat = Eigen::MatrixXd;
using Vec = Eigen::VectorXd;

// Induced 2-norm (largest singular value). Zero for empty matrices.
double spectral_norm(const Mat& m);

// Largest eigenvalue modulus of a square matrix.
double spectral_radius(const Mat& m);

}  // namespace dynamb
