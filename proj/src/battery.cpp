#include "dynamb/battery.hpp"

#include <cmath>

#include "dynamb/error.hpp"

namespace dynamb {

double BatteryCell::a() const { return std::exp(-dt / (R2 * C)); }

double BatteryCell::capacitance_for(double a, double dt, double R2) {
  if (!(a > 0.0 && a < 1.0)) throw Error(ErrorKind::Domain, "a must lie in (0,1)");
  return -dt / (R2 * std::log(a));
}

void BatteryCell::validate() const {
  if (!(R1 >= 0.0) || !(R2 > 0.0) || !(C > 0.0) || !(Q > 0.0) || !(dt > 0.0)) {
    throw Error(ErrorKind::Domain, "battery needs R1 >= 0 and positive R2, C, Q, dt");
  }
  if (chi_star0.size() != 2) throw Error(ErrorKind::Dimension, "nominal state must be (I2, z)");
}

Mat BatteryCell::A() const {
  Mat m = Mat::Zero(2, 2);
  m(0, 0) = a();
  m(1, 1) = 1.0;
  return m;
}

Vec BatteryCell::input_column() const {
  Vec b(2);
  b << 1.0 - a(), -dt / Q;
  return b;
}

Mat BatteryCell::H() const {
  Mat h(1, 2);
  h << -R2, alpha;
  return h;
}

Vec BatteryCell::step(const Vec& chi) const { return A() * chi + input_column() * current; }

double BatteryCell::voltage(const Vec& chi) const {
  return alpha * chi(1) + beta - current * R1 - chi(0) * R2;
}

std::vector<Vec> BatteryCell::trajectory(const Vec& chi0, int ell) const {
  if (ell < 0) throw Error(ErrorKind::Domain, "ell must be >= 0");
  std::vector<Vec> out{chi0};
  for (int k = 0; k < ell; ++k) out.push_back(step(out.back()));
  return out;
}

InjectedPower battery_injected_power(const BatteryCell& cell, int ell) {
  cell.validate();
  const Vec star = cell.trajectory(cell.chi_star0, ell).back();
  InjectedPower s;
  s.alpha_hat = Vec(2);
  s.alpha_hat << -cell.current * cell.R2, cell.alpha * cell.current;
  s.beta_hat = s.alpha_hat.dot(star) + cell.current * cell.beta -
               cell.current * cell.current * cell.R1;
  return s;
}

double injected_power_direct(const BatteryCell& cell, const Vec& chi) {
  return cell.current * cell.voltage(chi);
}

LTVSystem battery_error_system(const std::vector<BatteryCell>& cells, int horizon) {
  if (cells.empty()) throw Error(ErrorKind::Dimension, "need at least one battery");
  const int n = static_cast<int>(cells.size());
  Mat A = Mat::Zero(2 * n, 2 * n), H = Mat::Zero(n, 2 * n);
  for (int i = 0; i < n; ++i) {
    cells[i].validate();
    A.block(2 * i, 2 * i, 2, 2) = cells[i].A();
    H.block(i, 2 * i, 1, 2) = cells[i].H();
  }
  return LTVSystem::time_invariant(A, Mat::Zero(2 * n, 0), H, horizon);
}

}  // namespace dynamb
