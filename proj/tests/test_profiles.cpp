#include <gtest/gtest.h>

#include <cmath>

#include "zk/errors.hpp"
#include "zk/fft.hpp"
#include "zk/groundstate.hpp"
#include "zk/profiles.hpp"

using namespace zk;

namespace {

// theta from real space: int |F^|^2/(1+xi^2) = int int F(y) F(z) exp(-|y-z|)/2.
double theta_real_space(const RadialProfile& Q) {
  const RadialInterpolant s = Q.interpolant();
  const double R = Q.grid.rmax, h = 0.02;
  const int n = static_cast<int>(std::round(2.0 * R / h)) + 1;
  std::vector<double> y(n), F(n, 0.0);
  for (int j = 0; j < n; ++j) {
    y[j] = -R + j * h;
    for (int i = 0; i < n; ++i) {
      const double y1 = -R + i * h, r = std::hypot(y1, y[j]);
      if (r >= R) continue;
      F[j] += (s(r) + r * s.derivative(r)) * h;
    }
  }
  double num = 0.0, den = 0.0;
  for (int j = 0; j < n; ++j) {
    den += F[j] * F[j] * h;
    for (int k = 0; k < n; ++k) num += F[j] * F[k] * 0.5 * std::exp(-std::abs(y[j] - y[k])) * h * h;
  }
  return 2.0 * num / den;
}

struct TwoD {
  ReferenceProfiles ref;
  PProfile P;
  std::vector<LocalizedProfile> loc;
};

const TwoD& two_d() {
  static const TwoD t = [] {
    SolverConfig c;
    const GroundStateReport gs = solve_ground_state(c, RadialGrid::make(0.01, 60.0));
    TwoD d;
    d.ref = build_reference(gs.Q, ProfileBox{});
    Fft2D fft(d.ref.grid);
    d.P = solve_P(fft, d.ref);
    for (double b : {0.1, 0.05, 0.025}) d.loc.push_back(build_localized(fft, d.ref, d.P, b));
    return d;
  }();
  return t;
}

}  // namespace

TEST(Fourier1d, GaussianTransform) {
  Profile1D f;
  f.x0 = -20.0;
  f.dx = 0.05;
  for (int k = 0; k < 800; ++k) f.values.push_back(std::exp(-0.5 * f.x(k) * f.x(k)));
  const SpectralProfile1D fh = fourier_1d(f);
  // (2 pi)^{-1/2} int exp(-y^2/2 - i y xi) dy = exp(-xi^2/2).
  for (int k = 0; k < static_cast<int>(fh.values.size()); k += 37) {
    const double xi = fh.xi(k);
    EXPECT_NEAR(std::abs(fh.values[k]), std::exp(-0.5 * xi * xi), 1e-10);
  }
  const Profile1D back = inverse_fourier_1d(fh, f.x0, f.dx);
  for (int k = 0; k < f.size(); ++k) EXPECT_NEAR(back.values[k], f.values[k], 1e-12);
}

TEST(ComputeTheta, ClosedFormSpectrum) {
  // |F^|^2 = exp(-xi^2): int exp(-x^2)/(1+x^2) = pi e erfc(1), so theta = 2 sqrt(pi) e erfc(1).
  SpectralProfile1D fh;
  fh.dxi = 0.001;
  const int n = 40001;
  fh.values.resize(n);
  fh.center = n / 2;
  for (int k = 0; k < n; ++k) {
    const double xi = (k - n / 2) * fh.dxi;
    fh.values[k] = std::exp(-0.5 * xi * xi);
  }
  const ThetaResult t = compute_theta(fh);
  EXPECT_NEAR(t.theta, 2.0 * std::sqrt(M_PI) * std::exp(1.0) * std::erfc(1.0), 1e-9);
  EXPECT_NEAR(t.beta, 1.0 / (3.0 - t.theta), 1e-14);
}

TEST(H2, SolvesTheOde) {
  Profile1D F;
  F.x0 = -20.0;
  F.dx = 0.05;
  for (int k = 0; k < 800; ++k) F.values.push_back(std::exp(-F.x(k) * F.x(k)));
  const H2Result h = compute_h2(F);
  EXPECT_LT(h.ode_residual, 1e-4);
}

TEST(CutoffPhi, Shape) {
  EXPECT_EQ(cutoff_phi(-2.5), 0.0);
  EXPECT_EQ(cutoff_phi(-0.5), 1.0);
  double prev = 0.0;
  for (double y = -2.0; y <= -1.0; y += 0.01) {
    EXPECT_GE(cutoff_phi(y), prev);
    prev = cutoff_phi(y);
  }
}

TEST(Extrapolate, ExactOnPolynomials) {
  const std::vector<double> b{0.1, 0.05, 0.025};
  std::vector<double> v;
  for (double x : b) v.push_back(3.0 - 2.0 * x + 7.0 * x * x);
  EXPECT_NEAR(extrapolate_to_zero(b, v), 3.0, 1e-12);
}

TEST(ThetaPipeline, AgreesWithRealSpaceKernel) {
  const ThetaPipelineResult tp = theta_pipeline(0.05, 20.0, OriginStencil::Reflecting);
  EXPECT_NEAR(tp.theta.theta, theta_real_space(tp.ground_state.Q), 2e-3);
  EXPECT_LT(tp.parseval_gap, 1e-8);
}

TEST(ThetaPipeline, FlagshipValueAndBetaBracket) {
  const ThetaPipelineResult tp = theta_pipeline(0.01, 20.0);
  EXPECT_GT(tp.theta.theta, 1.655);
  EXPECT_LT(tp.theta.theta, 1.665);
  EXPECT_GT(tp.theta.beta, 5.0 / 7.0);
  EXPECT_LT(tp.theta.beta, 5.0 / 6.0);
  EXPECT_LT(tp.parseval_gap, 1e-8);
  EXPECT_LT(tp.symmetrization_change, 1e-10);
}

TEST(ThetaTable, FailedCellIsReportedNotThrown) {
  const auto cells = theta_table({0.05}, {5.0, 10.0});
  ASSERT_EQ(cells.size(), 2u);
  for (const ThetaCell& c : cells) EXPECT_TRUE(c.ok) << c.error;
}

TEST(ReferenceProfiles, GroundStateRefined) {
  const TwoD& d = two_d();
  EXPECT_LT(d.ref.ground_residual, 1e-9);
  EXPECT_NEAR(d.ref.theta.theta, 1.66, 0.01);
}

TEST(PProfile, PairingWithQIsQuarterF2) {
  const TwoD& d = two_d();
  EXPECT_LT(d.P.diagnostics.at("PQ_rel_gap"), 1e-3);
  EXPECT_LT(std::abs(d.P.diagnostics.at("d1P_Q")), 1e-8);
  EXPECT_LT(std::abs(d.P.diagnostics.at("d2P_Q")), 1e-8);
  EXPECT_LT(d.P.diagnostics.at("equation_residual"), 1e-5);
}

TEST(Localized, ThetaFromPairings) {
  const TwoD& d = two_d();
  const ThetaCrossCheck cc = theta_cross_check(d.P, d.loc, d.ref);
  EXPECT_NEAR(cc.theta_alt / d.ref.theta.theta, 1.0, 0.03);
  // (Psi_b, Q) / b^2 moves towards -I1/2 as b decreases.
  for (std::size_t k = 1; k < cc.theta_at_b.size(); ++k)
    EXPECT_LT(std::abs(cc.theta_at_b[k] - d.ref.theta.theta), std::abs(cc.theta_at_b[k - 1] - d.ref.theta.theta));
}

TEST(Localized, EnergyDefectScaling) {
  // E(Q_b) + b (P, Q) decays like a power of b between 1 and 3/2 on this box.
  const TwoD& d = two_d();
  const double PQ = d.P.diagnostics.at("PQ");
  const double e1 = d.loc[1].energy + d.loc[1].b * PQ, e2 = d.loc[2].energy + d.loc[2].b * PQ;
  const double slope = std::log(e1 / e2) / std::log(d.loc[1].b / d.loc[2].b);
  EXPECT_GT(slope, 1.0);
  EXPECT_LT(slope, 1.5);
}

TEST(Localized, RejectsLargeB) {
  const TwoD& d = two_d();
  Fft2D fft(d.ref.grid);
  EXPECT_THROW(build_localized(fft, d.ref, d.P, 0.5), DomainError);
}
