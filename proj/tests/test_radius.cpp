#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <random>

#include "dynamb/error.hpp"
#include "dynamb/radius.hpp"
#include "test_util.hpp"

using namespace dynamb;
using testutil::random_matrix;

namespace {

NoiseModel make_noise(double m_v, double M_v, double C_v, double rho0, double rhow, double p = 2.0) {
  return {NoiseNormBounds{m_v, M_v, C_v, p}, rho0, rhow};
}

Mat rotation(double t) {
  Mat r(2, 2);
  r << std::cos(t), -std::sin(t), std::sin(t), std::cos(t);
  return r;
}

// A stable time-invariant pair with a Riccati gain.
struct Fixture {
  LTVSystem sys;
  ObserverDesign obs;
  TransitionProducts tp;
};

Fixture detectable_system(int horizon) {
  Mat A(3, 3), G = Mat::Identity(3, 3), H(2, 3);
  A << 0.95, 0.3, 0.0, 0.0, 0.9, 0.2, 0.1, 0.0, 1.02;
  H << 1.0, 0.0, 0.0, 0.0, 0.0, 1.0;
  LTVSystem sys = LTVSystem::time_invariant(A, G, H, horizon);
  ObserverDesign obs =
      design_gain_time_invariant(sys, {1e-2 * Mat::Identity(3, 3), 1e-2 * Mat::Identity(2, 2)});
  TransitionProducts tp(sys, obs, horizon);
  return {sys, obs, tp};
}

}  // namespace

TEST(AlphaP, Breakpoints) {
  for (double p : {1.0, 2.0, 3.5}) EXPECT_DOUBLE_EQ(alpha_p(1.0, p), 1.0);
  EXPECT_DOUBLE_EQ(alpha_p(0.5, 2.0), 0.25);
  EXPECT_DOUBLE_EQ(alpha_p_inverse(0.25, 2.0), 0.5);
  EXPECT_DOUBLE_EQ(alpha_p(2.0, 3.0), 8.0);
  EXPECT_DOUBLE_EQ(alpha_p(0.0, 3.0), 0.0);
  // Continuity from both sides of s = 1.
  EXPECT_NEAR(alpha_p(1.0 - 1e-12, 4.0), alpha_p(1.0 + 1e-12, 4.0), 1e-11);
}

TEST(AlphaP, InverseRoundTrip) {
  std::mt19937_64 rng(1);
  std::uniform_real_distribution<double> s(0.0, 5.0), pp(1.0, 4.0);
  for (int i = 0; i < 1000; ++i) {
    const double x = s(rng), p = pp(rng);
    EXPECT_NEAR(alpha_p_inverse(alpha_p(x, p), p), x, 1e-14 * std::max(1.0, x));
  }
}

TEST(AlphaP, RejectsNegative) {
  EXPECT_THROW(alpha_p(-0.1, 2.0), Error);
  EXPECT_THROW(alpha_p_inverse(-0.1, 2.0), Error);
  EXPECT_THROW(alpha_p(0.5, 0.5), Error);
}

TEST(ConfidenceSplit, ProductIdentity) {
  for (double beta : {0.01, 0.1, 0.5}) {
    for (double frac : {0.01, 0.3, 0.9}) {
      const auto s = ConfidenceSplit::from_nominal(beta, frac * beta);
      EXPECT_NEAR(1.0 - beta, (1.0 - s.beta_nom) * (1.0 - s.beta_ns), 1e-12);
    }
    const auto e = ConfidenceSplit::equal(beta);
    EXPECT_NEAR(e.beta_nom, e.beta_ns, 1e-12);
    EXPECT_NEAR(1.0 - e.beta_nom, std::sqrt(1.0 - beta), 1e-12);
  }
  EXPECT_THROW(ConfidenceSplit::from_nominal(0.1, 0.1), Error);
  EXPECT_THROW(ConfidenceSplit::from_nominal(0.1, 0.2), Error);
}

TEST(Nominal, MeanConstantClosedForm) {
  // d = 6, p = 2: sqrt(6) 2^{1} (1/(1 - 1/2) + 1/(1 - 1/4))^{1/2} = 2 sqrt(6) sqrt(10/3).
  const double hand = 2.0 * std::sqrt(6.0) * std::sqrt(10.0 / 3.0);
  EXPECT_NEAR(explicit_mean_constant(6, 2.0), hand, 1e-12);
  EXPECT_NEAR(hand, 8.944, 1e-3);
}

TEST(Nominal, BatteryCoefficients) {
  // eps = a N^{-1/6} + b L^{1/4} N^{-1/4} with L = ln(1/beta). Recover a, b
  // from N = 1 and N = 4096 at L = 1.
  const double rho = 0.225, beta = std::exp(-1.0);
  const double r1 = nominal_radius_explicit(1, beta, rho, 6, 2.0);
  const double r2 = nominal_radius_explicit(4096, beta, rho, 6, 2.0);
  // r1 = a + b, r2 = a/4 + b/8.
  const double b = (r1 / 4.0 - r2) / (1.0 / 4.0 - 1.0 / 8.0);
  const double a = r1 - b;
  EXPECT_NEAR(a, 2.0 * rho * 2.0 * std::sqrt(6.0) * std::sqrt(10.0 / 3.0), 1e-9);
  EXPECT_NEAR(b, 2.0 * rho * std::sqrt(6.0) * std::pow(2.0, 0.25), 1e-9);
  EXPECT_NEAR(a / 4.02, 1.0, 0.01);
  EXPECT_NEAR(b / 1.31, 1.0, 0.01);
}

TEST(Nominal, ConfidenceTermVanishesAsBetaGoesToOne) {
  const double rho = 0.3, cs = explicit_mean_constant(5, 2.0);
  const double limit = 2.0 * rho * cs * std::pow(100.0, -0.2);
  double prev = std::numeric_limits<double>::infinity();
  for (double gap : {1e-2, 1e-4, 1e-8, 1e-12}) {
    const double excess = nominal_radius_explicit(100, 1.0 - gap, rho, 5, 2.0) - limit;
    EXPECT_GT(excess, 0.0);
    EXPECT_LT(excess, prev);
    prev = excess;
  }
  EXPECT_LT(prev, 1e-3 * limit);
}

TEST(Nominal, ExplicitRegimeOnly) {
  EXPECT_THROW(nominal_radius_explicit(10, 0.1, 1.0, 4, 2.0), Error);
  EXPECT_THROW(nominal_radius_single_exponential(10, 0.1, 1.0, 2, 2.0), Error);
  try {
    nominal_radius_explicit(10, 0.1, 1.0, 2, 2.0);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::Domain);
  }
}

TEST(Nominal, SingleExponentialConstants) {
  const double cs = explicit_mean_constant(6, 2.0);
  const auto k = single_exponential_constants(6, 2.0);
  EXPECT_NEAR(k.log_C, std::pow(cs, 6) / (2.0 * 216.0), 1e-9);
  EXPECT_NEAR(k.c, 1.0 / (64.0 * 216.0), 1e-15);
}

TEST(Nominal, SingleExponentialDominatesExplicit) {
  std::mt19937_64 rng(2);
  std::uniform_int_distribution<int> dd(3, 12);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  for (int t = 0; t < 100; ++t) {
    const int d = dd(rng);
    const double p = 1.0 + u(rng) * (0.5 * d - 1.0) * 0.99;
    if (!(p < 0.5 * d)) continue;
    const long N = 1 + static_cast<long>(std::pow(10.0, 5.0 * u(rng)));
    const double beta = 1e-4 + 0.9 * u(rng), rho = 0.01 + u(rng);
    EXPECT_GE(nominal_radius_single_exponential(N, beta, rho, d, p),
              nominal_radius_explicit(N, beta, rho, d, p))
        << d << " " << p << " " << N << " " << beta;
  }
}

TEST(Nominal, SingleExponentialVanishesInN) {
  EXPECT_LT(nominal_radius_single_exponential(1000000000000000L, 0.1, 0.2, 6, 2.0), 1e-1);
  EXPECT_GT(nominal_radius_single_exponential(10, 0.1, 0.2, 6, 2.0),
            nominal_radius_single_exponential(1000, 0.1, 0.2, 6, 2.0));
}

TEST(Nominal, GenericHighExponentBranchUnits) {
  const NominalConstants k{0.0, 1.0};  // C = c = 1
  EXPECT_NEAR(nominal_radius_generic(1, std::exp(-1.0), 0.7, 2, 3.0, k), 0.7, 1e-14);
}

TEST(Nominal, GenericLowExponentBranchMatchesSingleExponential) {
  // The generic form carries rho where the single-exponential one carries 2 rho.
  const auto k = single_exponential_constants(6, 2.0);
  for (long N : {1L, 40L, 5000L}) {
    for (double beta : {0.01, 0.2}) {
      const double se = nominal_radius_single_exponential(N, beta, 0.3, 6, 2.0);
      EXPECT_NEAR(nominal_radius_generic(N, beta, 0.6, 6, 2.0, k), se, 1e-12 * se);
    }
  }
}

TEST(Nominal, GenericCriticalBranchInvertsH) {
  const NominalConstants k{std::log(3.0), 0.5};
  const long N = 50;
  const double beta = 0.05, rho = 1.3;
  const double r = nominal_radius_generic(N, beta, rho, 4, 2.0, k);
  const double x = std::pow(r / rho, 2.0);
  EXPECT_NEAR(h_function(x), std::log(3.0 / beta) / (0.5 * N), 1e-10 * h_function(x));
}

TEST(Nominal, HRoundTrip) {
  for (int i = 0; i <= 90; ++i) {
    const double u = std::pow(10.0, -6.0 + 9.0 * i / 90.0);
    EXPECT_NEAR(h_function(h_inverse(u)), u, 1e-10 * u);
  }
  EXPECT_THROW(h_inverse(0.0), Error);
}

TEST(Nominal, EmbeddingDimension) {
  EXPECT_EQ(embedding_dimension(6, 2.0), 6);
  EXPECT_EQ(embedding_dimension(4, 2.0), 5);
  EXPECT_EQ(embedding_dimension(2, 2.0), 5);
  EXPECT_EQ(embedding_dimension(1, 1.0), 3);
  EXPECT_EQ(embedding_dimension(3, 1.5), 4);
  for (int d = 1; d < 10; ++d) {
    for (double p : {1.0, 1.5, 2.0, 3.0}) EXPECT_LT(p, 0.5 * embedding_dimension(d, p));
  }
}

TEST(Frak, ConstantTermSums) {
  // F = A + K H is a rotation, so ||Psi K|| = ||K|| and ||Psi G|| = ||G|| at every lag.
  const int ell = 7;
  Mat A(2, 2), G(2, 1);
  A << 0.5, 0.1, -0.2, 0.3;
  G << 1.0, 2.0;
  const Mat H = Mat::Identity(2, 2);
  const LTVSystem sys = LTVSystem::time_invariant(A, G, H, ell);
  const Mat K = rotation(0.4) - A;
  const ObserverDesign obs = ObserverDesign::from_gains(sys, {K});
  const TransitionProducts tp(sys, obs, ell);
  const double kappa = spectral_norm(K), g = G.norm(), p = 3.0;
  const NoiseNormBounds nb{0.2, 0.5, 0.9, p};
  const FrakConstants fc = frak_constants(sys, obs, tp, nb, 0.4, 0.1, ell);
  EXPECT_NEAR(fc.Mv, 0.5 * 2 * ell * kappa, 1e-12);
  EXPECT_NEAR(fc.Cv, 0.9 * 2 * ell * kappa, 1e-12);
  EXPECT_NEAR(fc.mv, 0.2 * std::pow(2.0, 1.0 / p) * std::pow(ell, 1.0 / p) * kappa, 1e-12);
  EXPECT_NEAR(fc.Mw, std::sqrt(2.0) * 0.4 + 1.0 * ell * g * 0.1, 1e-12);
  EXPECT_NEAR(fc.R, fc.Cv / fc.mv + 1.0 / std::numbers::ln2, 1e-12);
  EXPECT_LE(fc.mv, fc.Mv);
}

TEST(Frak, RandomSystemMatchesTermwiseAccumulation) {
  std::mt19937_64 rng(3);
  const int d = 3, q = 2, r = 2, ell = 6;
  std::vector<Mat> As, Gs, Hs, Ks;
  for (int k = 0; k <= ell; ++k) {
    As.push_back(random_matrix(d, d, rng, 0.5));
    Gs.push_back(random_matrix(d, q, rng));
    Hs.push_back(random_matrix(r, d, rng));
    Ks.push_back(random_matrix(d, r, rng, 0.3));
  }
  const LTVSystem sys = LTVSystem::time_varying(As, Gs, Hs);
  const ObserverDesign obs = ObserverDesign::from_gains(sys, Ks);
  const TransitionProducts tp(sys, obs, ell);
  const double p = 2.0;
  const NoiseNormBounds nb{0.3, 0.4, 0.6, p};
  const FrakConstants fc = frak_constants(sys, obs, tp, nb, 0.5, 0.2, ell);

  // Independent accumulation: Psi(ell, j) = F_{ell-1} ... F_j.
  auto F = [&](int k) { Mat f = As[k] + Ks[k] * Hs[k]; return f; };
  auto psi = [&](int j) {
    Mat m = Mat::Identity(d, d);
    for (int k = j; k < ell; ++k) m = F(k) * m;
    return m;
  };
  double sg = 0.0, sk = 0.0, skp = 0.0;
  for (int k = 1; k <= ell; ++k) {
    const Mat P = psi(ell - k + 1);
    sg += spectral_norm(P * Gs[ell - k]);
    const double nk = spectral_norm(P * Ks[ell - k]);
    sk += nk;
    skp += nk * nk;
  }
  EXPECT_NEAR(fc.Mw, std::sqrt(3.0) * spectral_norm(psi(0)) * 0.5 + std::sqrt(2.0) * sg * 0.2,
              1e-12 * std::max(1.0, fc.Mw));
  EXPECT_NEAR(fc.Mv, 0.4 * r * sk, 1e-12 * std::max(1.0, fc.Mv));
  EXPECT_NEAR(fc.Cv, 0.6 * r * sk, 1e-12 * std::max(1.0, fc.Cv));
  EXPECT_NEAR(fc.mv, 0.3 * std::sqrt(2.0) * std::sqrt(skp), 1e-12 * std::max(1.0, fc.mv));
}

TEST(Frak, ZeroNoiseConvention) {
  const Fixture f = detectable_system(5);
  const FrakConstants fc = frak_constants(f.sys, f.obs, f.tp, {0.0, 0.0, 0.0, 2.0}, 0.1, 0.0, 5);
  EXPECT_EQ(fc.ratio(), 0.0);
  EXPECT_NEAR(fc.R, 1.0 / std::numbers::ln2, 1e-15);
  const FrakConstants empty = frak_constants(f.sys, f.obs, f.tp, {0.1, 0.2, 0.3, 2.0}, 0.1, 0.1, 0);
  EXPECT_EQ(empty.Mv, 0.0);
  EXPECT_NEAR(empty.Mw, std::sqrt(3.0) * 0.1, 1e-15);
}

TEST(NoiseRadius, LimitAndLowerBound) {
  FrakConstants fc;
  fc.Mw = 0.3;
  fc.Mv = 0.05;
  fc.R = 2.0;
  fc.p = 2.0;
  const double floor = std::sqrt(2.0) * (fc.Mw + fc.Mv);
  double prev = std::numeric_limits<double>::infinity();
  for (long N = 1; N <= 100000000L; N *= 10) {
    const double v = noise_radius(fc, N, 0.05);
    EXPECT_GT(v, floor);
    EXPECT_LT(v, prev);
    prev = v;
  }
  EXPECT_NEAR(noise_radius(fc, 1000000000000000000L, 0.05), floor, 1e-7);
  EXPECT_GT(noise_radius(fc, 10, 0.01), noise_radius(fc, 10, 0.1));
}

TEST(NoiseRadius, DoublingNScalesThirdTerm) {
  FrakConstants fc;
  fc.Mw = 0.2;
  fc.Mv = 0.1;
  fc.R = 1.7;
  fc.p = 3.0;
  const double c = std::pow(2.0, 2.0 / 3.0);
  const double base = c * (fc.Mw + fc.Mv);
  // N large enough that R^2 ln(2/b) / (c' N) <= 1.
  const long N = 1000;
  const double t1 = noise_radius(fc, N, 0.1) - base;
  const double t2 = noise_radius(fc, 2 * N, 0.1) - base;
  EXPECT_NEAR(t2 / t1, 1.0 / std::sqrt(2.0), 1e-12);
}

TEST(SupportRadius, EdgeCases) {
  const Fixture f = detectable_system(4);
  EXPECT_NEAR(rho_xi_ell(f.sys, f.tp, 0.3, 0.1, 0), std::sqrt(3.0) * 0.3, 1e-15);
  const LTVSystem z = LTVSystem::time_invariant(Mat::Zero(2, 2), Mat::Identity(2, 2),
                                                Mat::Identity(2, 2), 3);
  const ObserverDesign zo = ObserverDesign::from_gains(z, {1e-3 * Mat::Identity(2, 2)});
  const TransitionProducts ztp(z, zo, 3);
  EXPECT_NEAR(rho_xi_ell(z, ztp, 0.3, 0.1, 1), std::sqrt(2.0) * 0.1, 1e-15);
  EXPECT_NEAR(rho_xi_ell_box(z, ztp, 0.3, 0.1, 1), 0.1, 1e-15);
}

TEST(SupportRadius, BoxRuleNeverExceedsSpectral) {
  std::mt19937_64 rng(4);
  for (int t = 0; t < 20; ++t) {
    const LTVSystem sys = LTVSystem::time_invariant(random_matrix(3, 3, rng, 0.4),
                                                    random_matrix(3, 2, rng),
                                                    random_matrix(1, 3, rng), 6);
    const ObserverDesign obs = ObserverDesign::from_gains(sys, {Mat::Constant(3, 1, 1e-3)});
    const TransitionProducts tp(sys, obs, 6);
    for (int ell = 0; ell <= 6; ++ell) {
      EXPECT_LE(rho_xi_ell_box(sys, tp, 0.2, 0.05, ell), rho_xi_ell(sys, tp, 0.2, 0.05, ell) + 1e-14);
    }
  }
}

TEST(SupportRadius, BoxRuleExactForDiagonalDynamics) {
  // The image of [-rho, rho]^2 under diag(0.9, -0.5)^3 has half-width 0.729 rho in the sup norm.
  Mat A = Mat::Zero(2, 2);
  A(0, 0) = 0.9;
  A(1, 1) = -0.5;
  const LTVSystem sys = LTVSystem::time_invariant(A, Mat::Zero(2, 0), Mat::Identity(2, 2), 3);
  const ObserverDesign obs = ObserverDesign::from_gains(sys, {1e-3 * Mat::Identity(2, 2)});
  const TransitionProducts tp(sys, obs, 3);
  EXPECT_NEAR(rho_xi_ell_box(sys, tp, 0.4, 0.0, 3), 0.729 * 0.4, 1e-15);
}

TEST(TotalRadius, SumAndMonotoneInN) {
  const Fixture f = detectable_system(8);
  const NoiseModel nm = make_noise(0.01, 0.012, 0.02, 0.5, 0.05);
  double prev = std::numeric_limits<double>::infinity();
  for (long N : {5L, 10L, 20L, 40L, 80L, 160L, 320L, 1000L}) {
    const auto br = total_radius(f.sys, f.obs, f.tp, nm, 8, N, ConfidenceSplit::equal(0.1), 2.0);
    EXPECT_DOUBLE_EQ(br.psi_total, br.eps_nominal + br.eps_noise);
    EXPECT_LT(br.psi_total, prev);
    EXPECT_EQ(br.nominal_dim, 5);  // d = 3, p = 2 zero-pads to 5
    prev = br.psi_total;
  }
}

TEST(TotalRadius, IncreasesAsBetaShrinks) {
  const Fixture f = detectable_system(8);
  const NoiseModel nm = make_noise(0.01, 0.012, 0.02, 0.5, 0.05);
  double prev = 0.0;
  for (double beta : {0.5, 0.2, 0.1, 0.01, 0.001}) {
    const double v = total_radius(f.sys, f.obs, f.tp, nm, 8, 50, ConfidenceSplit::equal(beta), 2.0).psi_total;
    EXPECT_GT(v, prev);
    prev = v;
  }
}

TEST(TotalRadius, ZeroMeasurementNoiseLeavesStateTerm) {
  const Fixture f = detectable_system(6);
  const NoiseModel nm = make_noise(0.0, 0.0, 0.0, 0.5, 0.05);
  const auto br = total_radius(f.sys, f.obs, f.tp, nm, 6, 30, ConfidenceSplit::equal(0.1), 2.0);
  EXPECT_NEAR(br.eps_noise, std::sqrt(2.0) * br.frak.Mw, 1e-14);
}

TEST(TotalRadius, MismatchedExponentRejected) {
  const Fixture f = detectable_system(4);
  const NoiseModel nm = make_noise(0.01, 0.012, 0.02, 0.5, 0.05, 3.0);
  EXPECT_THROW(total_radius(f.sys, f.obs, f.tp, nm, 4, 30, ConfidenceSplit::equal(0.1), 2.0), Error);
}

TEST(OptimalSplit, DegenerateNoisePushesBetaNomUp) {
  // Without noise-side dependence on beta_ns, spend the whole budget on the nominal term.
  auto psi = [](const ConfidenceSplit& s) { return 1.0 + std::pow(std::log(1.0 / s.beta_nom), 0.25); };
  const auto s = optimal_split(0.1, psi);
  EXPECT_GE(s.beta_nom, 0.99 * 0.1);
}

TEST(OptimalSplit, MatchesGridScan) {
  for (double a : {0.2, 1.0, 5.0}) {
    auto psi = [a](const ConfidenceSplit& s) {
      return a * std::pow(std::log(1.0 / s.beta_nom), 0.25) + std::sqrt(std::log(2.0 / s.beta_ns));
    };
    const double beta = 0.1;
    double grid_best = std::numeric_limits<double>::infinity();
    for (int i = 1; i < 1000; ++i) {
      grid_best = std::min(grid_best, psi(ConfidenceSplit::from_nominal(beta, beta * i / 1000.0)));
    }
    const double got = psi(optimal_split(beta, psi));
    EXPECT_LE(got, grid_best + 1e-9) << a;
    EXPECT_GE(got, grid_best - 1e-3) << a;
  }
}

TEST(OptimalSplit, NoWorseThanEqualSplit) {
  const Fixture f = detectable_system(8);
  const NoiseModel nm = make_noise(0.01, 0.012, 0.02, 0.5, 0.05);
  auto psi = [&](const ConfidenceSplit& s) {
    return total_radius(f.sys, f.obs, f.tp, nm, 8, 40, s, 2.0).psi_total;
  };
  EXPECT_LE(psi(optimal_split(0.1, psi)), psi(ConfidenceSplit::equal(0.1)));
}

TEST(HorizonRadius, SingleStepEqualsTotal) {
  const Fixture f = detectable_system(8);
  const NoiseModel nm = make_noise(0.01, 0.012, 0.02, 0.5, 0.05);
  for (auto rule : {SupportRule::Spectral, SupportRule::InfinityNorm}) {
    RadiusOptions opt;
    opt.support = rule;
    const auto split = ConfidenceSplit::equal(0.1);
    const auto a = horizon_radius(f.sys, f.obs, f.tp, nm, 5, 5, 40, split, 2.0, opt);
    const auto b = total_radius(f.sys, f.obs, f.tp, nm, 5, 40, split, 2.0, opt);
    EXPECT_EQ(a.psi_total, b.psi_total);
    EXPECT_EQ(a.eps_nominal, b.eps_nominal);
    EXPECT_EQ(a.eps_noise, b.eps_noise);
  }
}

TEST(HorizonRadius, TwoStepConstantsAreSums) {
  const Fixture f = detectable_system(8);
  const NoiseModel nm = make_noise(0.01, 0.012, 0.02, 0.5, 0.05);
  const auto split = ConfidenceSplit::equal(0.1);
  const auto h = horizon_radius(f.sys, f.obs, f.tp, nm, 6, 7, 40, split, 2.0);
  const auto a = frak_constants(f.sys, f.obs, f.tp, nm.bounds, nm.rho_xi0, nm.rho_w, 6);
  const auto b = frak_constants(f.sys, f.obs, f.tp, nm.bounds, nm.rho_xi0, nm.rho_w, 7);
  EXPECT_NEAR(h.frak.Mw, a.Mw + b.Mw, 1e-14);
  EXPECT_NEAR(h.frak.Mv, a.Mv + b.Mv, 1e-14);
  EXPECT_NEAR(h.frak.Cv, a.Cv + b.Cv, 1e-14);
  EXPECT_NEAR(h.frak.mv, a.mv + b.mv, 1e-14);
  EXPECT_EQ(h.nominal_dim, 6);  // stacked 2 x 3, p = 2 < 3
  EXPECT_THROW(horizon_radius(f.sys, f.obs, f.tp, nm, 7, 6, 40, split, 2.0), Error);
}

TEST(HorizonRadius, StackedDimensionSelectsLowExponentBranch) {
  std::mt19937_64 rng(5);
  const LTVSystem sys = LTVSystem::time_invariant(0.5 * Mat::Identity(6, 6), Mat::Zero(6, 0),
                                                  random_matrix(2, 6, rng), 4);
  const ObserverDesign obs = ObserverDesign::from_gains(sys, {Mat::Constant(6, 2, 1e-3)});
  const TransitionProducts tp(sys, obs, 4);
  const NoiseModel nm = make_noise(0.01, 0.012, 0.02, 0.2, 0.0);
  const auto split = ConfidenceSplit::equal(0.1);
  const auto h = horizon_radius(sys, obs, tp, nm, 2, 3, 40, split, 2.0);
  EXPECT_EQ(h.nominal_dim, 12);
  EXPECT_NEAR(h.eps_nominal, nominal_radius_explicit(40, split.beta_nom, h.rho_xi_ell, 12, 2.0), 1e-15);
}

TEST(Pointwise, IdentityWithoutNoiseIsStationary) {
  std::mt19937_64 rng(6);
  const LTVSystem sys = LTVSystem::time_invariant(Mat::Identity(2, 2), Mat::Identity(2, 2),
                                                  Mat::Identity(2, 2), 10);
  const auto c = DiscreteMeasure::uniform(random_matrix(2, 4, rng));
  const auto steps = pointwise_propagation(sys, c, 0.3, 2, 6, UnknownNoise{0.0});
  ASSERT_EQ(steps.size(), 5u);
  for (const auto& s : steps) {
    EXPECT_EQ(s.radius, 0.3);
    EXPECT_EQ(s.center.atoms(), c.atoms());
  }
}

TEST(Pointwise, UnknownNoiseHandRecursion) {
  const LTVSystem sys = LTVSystem::time_invariant(2.0 * Mat::Identity(2, 2), Mat::Identity(2, 2),
                                                  Mat::Identity(2, 2), 10);
  Mat atoms(2, 2);
  atoms << 1.0, -1.0, 0.5, 0.0;
  const auto steps = pointwise_propagation(sys, DiscreteMeasure::uniform(atoms), 1.0, 0, 3,
                                           UnknownNoise{0.1});
  ASSERT_EQ(steps.size(), 4u);
  EXPECT_DOUBLE_EQ(steps[1].radius, 2.1);
  EXPECT_DOUBLE_EQ(steps[2].radius, 4.3);
  EXPECT_DOUBLE_EQ(steps[3].radius, 8.7);
  EXPECT_EQ(steps[3].center.atoms(), Mat(8.0 * atoms));
}

TEST(Pointwise, KnownNoiseHandRecursion) {
  const LTVSystem sys = LTVSystem::time_invariant(0.9 * Mat::Identity(1, 1), Mat::Identity(1, 1),
                                                  Mat::Identity(1, 1), 10);
  Mat atoms(1, 2), noise(1, 2);
  atoms << 0.0, 1.0;
  noise << -0.5, 0.5;
  const auto law = DiscreteMeasure::uniform(noise);
  const auto steps = pointwise_propagation(sys, DiscreteMeasure::uniform(atoms), 2.0, 1, 4,
                                           KnownNoise{{law, law, law}});
  ASSERT_EQ(steps.size(), 4u);
  EXPECT_NEAR(steps[3].radius, 0.729 * 2.0, 1e-15);
  // One step by hand: atoms {0, 0.9} shifted by +-0.5 with weight 1/4 each.
  const auto& c1 = steps[1].center;
  ASSERT_EQ(c1.size(), 4);
  std::vector<double> got(c1.atoms().data(), c1.atoms().data() + 4);
  std::sort(got.begin(), got.end());
  const std::vector<double> want{-0.5, 0.4, 0.5, 1.4};
  for (int i = 0; i < 4; ++i) EXPECT_NEAR(got[i], want[i], 1e-15);
  for (int i = 0; i < 4; ++i) EXPECT_DOUBLE_EQ(c1.weights()(i), 0.25);
  EXPECT_EQ(steps[3].center.size(), 16);
  EXPECT_THROW(pointwise_propagation(sys, DiscreteMeasure::uniform(atoms), 2.0, 1, 4,
                                     KnownNoise{{law, law, law}, 8}),
               Error);
}

TEST(UniformBounds, DominateFrakConstantsOverWindow) {
  const int horizon = 80;
  const Fixture f = detectable_system(horizon);
  const NoiseModel nm = make_noise(0.01, 0.012, 0.02, 0.5, 0.05);
  const MatrixBoundCertificate cert = matrix_bound_certificate(f.sys, f.obs, f.tp, 0, 0, 40);
  ASSERT_TRUE(cert.s0.has_value());
  const int ell0 = *cert.s0;
  const auto ub = uniform_noise_bounds(cert, nm, 3, 3, 2, 2.0);
  const auto ti = uniform_noise_bounds_time_invariant(f.sys, f.obs, ell0, nm, 2.0);
  ASSERT_LE(ell0 + 20, horizon);
  for (int ell = ell0; ell <= ell0 + 20; ++ell) {
    const auto fc = frak_constants(f.sys, f.obs, f.tp, nm.bounds, nm.rho_xi0, nm.rho_w, ell);
    EXPECT_LE(fc.Mw, ub.Mw) << ell;
    EXPECT_LE(fc.Mv, ub.Mv) << ell;
    EXPECT_LE(fc.R, ub.R) << ell;
    EXPECT_LE(fc.Mw, ti.Mw) << ell;
    EXPECT_LE(fc.Mv, ti.Mv) << ell;
    EXPECT_LE(fc.R, ti.R) << ell;
  }
  EXPECT_LE(ti.Mw, ub.Mw);
  EXPECT_LE(ti.Mv, ub.Mv);
  EXPECT_LE(ti.R, ub.R);
}

TEST(UniformBounds, NoProcessNoiseLeavesInitialTerm) {
  const Fixture f = detectable_system(40);
  const NoiseModel nm = make_noise(0.01, 0.012, 0.02, 0.5, 0.0);
  const MatrixBoundCertificate cert = matrix_bound_certificate(f.sys, f.obs, f.tp, 0, 0, 30);
  const auto ub = uniform_noise_bounds(cert, nm, 3, 3, 2, 2.0);
  EXPECT_NEAR(ub.Mw, 0.5 * std::sqrt(3.0) * 0.5, 1e-15);
  MatrixBoundCertificate none = cert;
  none.s0.reset();
  EXPECT_THROW(uniform_noise_bounds(none, nm, 3, 3, 2, 2.0), Error);
}
