#pragma once

#include <vector>

#include "dynamb/linalg.hpp"
#include "dynamb/system.hpp"

namespace dynamb {

// Single-cell equivalent circuit. State chi = (I2, z): current through R2
// and state of charge. Open-circuit voltage is approximated by alpha z + beta.
//   chi_{k+1} = diag(a, 1) chi_k + (1 - a, -dt / Q) I_k
//   V_k = alpha z_k + beta - I_k R1 - I2_k R2
struct BatteryCell {
  double R1 = 0.34;
  double R2 = 0.17;
  double C = 0.0;  // capacitance; a = exp(-dt / (R2 C))
  double Q = 1.0;  // capacity
  double alpha = 0.0;
  double beta = 0.0;
  double dt = 1.0;
  double current = 8.0;  // constant discharge current I_k
  Vec chi_star0;         // nominal initial state (I2, z)

  double a() const;
  // C such that a() returns the given value.
  static double capacitance_for(double a, double dt, double R2);
  void validate() const;

  Mat A() const;
  Vec input_column() const;  // (1 - a, -dt / Q)
  Mat H() const;             // (-R2, alpha), in state order (I2, z)

  Vec step(const Vec& chi) const;
  double voltage(const Vec& chi) const;
  std::vector<Vec> trajectory(const Vec& chi0, int ell) const;
};

// S = <alpha_hat, xi> + beta_hat for the deviation xi = chi_ell - chi*_ell.
struct InjectedPower {
  Vec alpha_hat;  // (-I R2, alpha I)
  double beta_hat = 0.0;

  double at(const Vec& xi) const { return alpha_hat.dot(xi) + beta_hat; }
};

InjectedPower battery_injected_power(const BatteryCell& cell, int ell);

// I_ell * V_ell evaluated directly on an absolute state.
double injected_power_direct(const BatteryCell& cell, const Vec& chi);

// Deviation dynamics of stacked cells: xi = (xi^1, ..., xi^n), one scalar
// output per cell, no process noise (q = 0).
LTVSystem battery_error_system(const std::vector<BatteryCell>& cells, int horizon);

}  // namespace dynamb
