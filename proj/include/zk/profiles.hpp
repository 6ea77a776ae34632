#pragma once

#include <map>
#include <string>
#include <vector>

#include "zk/fft.hpp"
#include "zk/field.hpp"
#include "zk/groundstate.hpp"

namespace zk {

struct Profile1D {
  double x0 = 0.0;
  double dx = 1.0;
  std::vector<double> values;

  double x(int k) const { return x0 + k * dx; }
  int size() const { return static_cast<int>(values.size()); }
};

// Samples f^(xi_k) with xi_k = (k - floor(N/2)) * dxi, dxi = 2 pi / (N dx).
struct SpectralProfile1D {
  double dxi = 1.0;
  int center = 0;  // index of xi = 0
  std::vector<cplx> values;

  double xi(int k) const { return (k - center) * dxi; }
  int size() const { return static_cast<int>(values.size()); }
};

struct ThetaResult {
  double I0 = 0.0;
  double I1 = 0.0;
  double theta = 0.0;
  double beta = 0.0;
};

// Lambda f = f + r f' with a difference quotient that is
// one-sided at both ends, central inside.
RadialProfile lambda_q(const RadialProfile& Q);
// Lambda f = f + y . grad f with spectral derivatives on a periodic grid.
Field2D lambda_q(Fft2D& fft, const Field2D& Q);

struct FResult {
  Profile1D F;
  double symmetrization_change = 0.0;  // max |F - (F + reverse F)/2|
};

// F(y2) = sum over x1 of the interpolated radial lambdaQ times dr on the square grid
// x = (-(n-1)..(n-1)) dr, zero beyond rmax; optionally symmetrized under y2 -> -y2.
FResult compute_F(const RadialProfile& lambdaQ, bool symmetrize = true);
// Row sums along y1 of a field on a uniform grid.
Profile1D compute_F(const Field2D& lambdaQ);

// f^(xi) = (2 pi)^{-1/2} sum_j f(x_j) exp(-i x_j xi) dx.
SpectralProfile1D fourier_1d(const Profile1D& f);
// Inverse of fourier_1d onto the spatial grid starting at x0 with spacing dx.
Profile1D inverse_fourier_1d(const SpectralProfile1D& fh, double x0, double dx);

struct H2Result {
  Profile1D h2;
  SpectralProfile1D h2hat;
  Profile1D F2;               // F''
  double ode_residual = 0.0;  // ||-h2'' + h2 - F''|| / ||F''|| with 4th-order differences
};

H2Result compute_h2(const Profile1D& F);

ThetaResult compute_theta(const SpectralProfile1D& Fhat);

struct ThetaPipelineResult {
  GroundStateReport ground_state;
  Profile1D F;
  SpectralProfile1D Fhat;
  ThetaResult theta;
  double symmetrization_change = 0.0;
  double parseval_gap = 0.0;  // |sum F^2 dx - sum |F^|^2 dxi| / sum F^2 dx
};

ThetaPipelineResult theta_pipeline(double dr, double rmax,
                                   OriginStencil stencil = OriginStencil::Taylor,
                                   const SolverConfig& base = SolverConfig{});

struct ThetaCell {
  double dr = 0.0;
  double L = 0.0;
  bool ok = false;
  double theta = 0.0;
  int iterations = 0;
  std::string error;
};

std::vector<ThetaCell> theta_table(const std::vector<double>& dr_list, const std::vector<double>& L_list,
                                   OriginStencil stencil = OriginStencil::Taylor);

// Periodic box for the two-dimensional profiles (P, Q_b, Psi_b).
struct ProfileBox {
  double a1 = -48.0;
  double L1 = 72.0;
  double a2 = -24.0;
  double L2 = 48.0;
  double h = 0.125;

  Grid2D grid() const;
};

// Ground state and the derived profiles on a periodic profile box.
struct ReferenceProfiles {
  Grid2D grid;
  Field2D Q, Q1, Q2, LQ;   // Q, d1 Q, d2 Q, Lambda Q
  Profile1D F, F2, h2;     // functions of y2
  double ground_residual = 0.0;  // ||-dQ + Q - Q^3|| after refinement
  int refinement_iterations = 0;
  ThetaResult theta;       // from F on this grid
};

// Interpolates the radial ground state onto the box and refines it to a discrete
// ground state of the spectral operator by Petviashvili iteration.
ReferenceProfiles build_reference(const RadialProfile& Q, const ProfileBox& box);

struct PSolveOptions {
  double tolerance = 1e-11;
  int max_iterations = 2000;
  double gaussian_center = 0.0;
};

struct PProfile {
  Field2D field;   // P
  Field2D tilde;   // P~, solution of L P~ = R orthogonal to grad Q
  Field2D source;  // R
  Profile1D h1;
  Profile1D H1;    // int_{y1}^inf h1
  std::map<std::string, double> diagnostics;
};

PProfile solve_P(Fft2D& fft, const ReferenceProfiles& ref, const PSolveOptions& opts = PSolveOptions{});

// phi: 0 for y1 < -2, 1 for y1 > -1, smoothstep in between.
double cutoff_phi(double y1);

struct LocalizedProfile {
  double b = 0.0;
  Field2D Qb;
  Field2D Psib;
  double psib_Q = 0.0;  // (Psi_b, Q)
  double energy = 0.0;  // E(Q_b)
  double mass = 0.0;    // int Q_b^2
};

LocalizedProfile build_localized(Fft2D& fft, const ReferenceProfiles& ref, const PProfile& P, double b,
                                 double b_max = 0.2);

struct ThetaCrossCheck {
  double theta_alt = 0.0;          // with (P, Q) from the solved profile
  double theta_alt_quarter_F = 0.0;  // with (1/4) int F^2
  double psiQ_limit = 0.0;         // extrapolated (Psi_b, Q)/b^2
  std::vector<double> b;
  std::vector<double> theta_at_b;  // -(Psi_b,Q)/(b^2 (P,Q)) per b
};

ThetaCrossCheck theta_cross_check(const PProfile& P, const std::vector<LocalizedProfile>& loc,
                                  const ReferenceProfiles& ref);

// Polynomial extrapolation to b = 0 of samples v(b_k) (degree = samples - 1).
double extrapolate_to_zero(const std::vector<double>& b, const std::vector<double>& v);

}  // namespace zk
