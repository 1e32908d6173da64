#include "dynamb/linalg.hpp"

#include "dynamb/error.hpp"

namespace dynamb {

double spectral_norm(const Mat& m) {
  if (m.size() == 0) return 0.0;
  if (m.rows() == 1 || m.cols() == 1) return m.norm();
  Eigen::JacobiSVD<Mat> svd(m);
  return svd.singularValues()(0);
}

double spectral_radius(const Mat& m) {
  if (m.rows() != m.cols()) {
    throw Error(ErrorKind::Dimension, "spectral radius needs a square matrix");
  }
  if (m.size() == 0) return 0.0;
  Eigen::EigenSolver<Mat> es(m, false);
  return es.eigenvalues().cwiseAbs().maxCoeff();
}

}  // namespace dynamb
