#pragma once

#include <array>
#include <functional>
#include <map>
#include <memory>
#include <optional>
#include <set>
#include <stdexcept>
#include <string>
#include <vector>

#include "zk/dynamics.hpp"
#include "zk/fft.hpp"
#include "zk/field.hpp"
#include "zk/groundstate.hpp"
#include "zk/interp.hpp"
#include "zk/io.hpp"
#include "zk/profiles.hpp"

namespace zk {

struct PeriodicGrid2D {
  int n1 = 256;
  int n2 = 256;
  double L1 = 40.0;
  double L2 = 40.0;

  // Box [-L1/2, L1/2) x [-L2/2, L2/2); sizes must be even and at least 16.
  Grid2D grid() const;
};

enum class Scheme { ETDRK4, IFRK4 };

struct SimState {
  double t = 0.0;
  Field2D u;
  double mass0 = 0.0;
  double energy0 = 0.0;
};

struct Conserved {
  double mass = 0.0;
  double energy = 0.0;
};

// Pseudo-spectral solver for u_t + d1(Delta u + u^3) = 0 on a periodic box. In Fourier
// space u^_t = i xi1 |xi|^2 u^ - i xi1 (u^3)^, with the cubic term dealiased by the 2/3 rule.
class ZkSolver {
public:
  ZkSolver(const Grid2D& grid, Scheme scheme = Scheme::IFRK4, bool nonlinear = true);

  const Grid2D& grid() const { return grid_; }
  Scheme scheme() const { return scheme_; }

  SimState make_state(const Field2D& u0);
  // Advances by dt; throws BlowupDetected if the state becomes non-finite.
  void step(SimState& s, double dt);
  Conserved conserved(const Field2D& u);
  // Zeroes the modes outside the 2/3 mask.
  Field2D dealias(const Field2D& u);
  // Largest admissible dt for the rule dt * max|xi1| * max|u|^2 <= safety.
  double cfl_limit(const Field2D& u, double safety = 1.0) const;

private:
  void prepare(double dt);
  void nonlinear_term(const std::vector<cplx>& v, std::vector<cplx>& out);

  Grid2D grid_;
  Scheme scheme_;
  bool nonlinear_;
  Fft2D fft_;
  std::vector<double> mask_;
  std::vector<cplx> symbol_;  // i xi1 |xi|^2
  std::vector<cplx> dxi1_;    // -i xi1, times the mask
  double dt_ = 0.0;
  std::vector<cplx> E_, E2_, Qc_, f1_, f2_, f3_;
  std::vector<cplx> v_, a_, b_, c_, Nv_, Na_, Nb_, Nc_;
  Field2D work_;
};

class BlowupDetected : public std::runtime_error {
public:
  BlowupDetected(const std::string& what, double t) : std::runtime_error(what), t_(t) {}
  double time() const { return t_; }

private:
  double t_;
};

// Frozen reference data for the decomposition: radial Q, the profile box, P and the
// pairings (Q, f), f in {Q^3, Q, d1Q, d2Q}.
class ModulationReference {
public:
  ModulationReference(const RadialProfile& Q, const ProfileBox& box = ProfileBox{});

  const RadialProfile& radial() const { return Q_; }
  const ReferenceProfiles& profiles() const { return ref_; }
  const PProfile& P() const { return P_; }
  double theta() const { return ref_.theta.theta; }
  double mass() const { return mass_; }

  // (Q_b, f_k) = (Q, f_k) + b (P phi_b, f_k) on the profile grid.
  std::array<double, 4> profile_pairings(double b) const;
  // Q_b = Q + b P phi_b on the profile grid.
  Field2D profile_Qb(double b) const;
  // Q_b sampled at  y = (z - x) / lambda on a periodic grid, scaled by 1/lambda.
  Field2D sample_Qb(const Grid2D& g, double lambda, double x1, double x2, double b) const;
  // (1/lambda) sum u(z) f_k((z - x)/lambda) h^2 with minimal-image displacements.
  std::array<double, 4> field_pairings(const Field2D& u, double lambda, double x1, double x2) const;
  // (u, (1/lambda) Q((. - x)/lambda)) and ||(1/lambda) Q((. - x)/lambda)||^2 on the grid of u.
  std::array<double, 2> soliton_overlap(const Field2D& u, double lambda, double x1, double x2) const;

private:
  RadialProfile Q_;
  RadialInterpolant spline_;
  ReferenceProfiles ref_;
  PProfile P_;
  std::array<double, 4> q_pair_{};
  std::array<std::vector<double>, 4> prof_f_;  // test functions sampled on the profile grid
  double mass_ = 0.0;
};

struct ModulationState {
  double lambda = 1.0;
  double x1 = 0.0;
  double x2 = 0.0;
  double b = 0.0;
  double s = 0.0;
  std::array<double, 4> orthogonality_residuals{};  // (eps,Q^3), (eps,Q), (eps,d1Q), (eps,d2Q)
  int iterations = 0;
  bool converged = false;
  Field2D epsilon;  // on the profile grid, filled when requested
};

class DecompositionFailed : public std::runtime_error {
public:
  using std::runtime_error::runtime_error;
};

// Rows: conditions (eps,Q^3), (eps,Q), (eps,d1Q), (eps,d2Q); columns: (lambda, b, x1, x2).
using Jacobian4 = std::array<std::array<double, 4>, 4>;

Jacobian4 modulation_jacobian(const ModulationReference& ref, const Field2D& u, const ModulationState& at);

// Newton iteration on the four orthogonality conditions with a finite-difference Jacobian.
ModulationState modulation_decompose(const ModulationReference& ref, const Field2D& u,
                                     const ModulationState& guess, bool with_epsilon = false);

struct TubeDistance {
  double distance = 0.0;
  double lambda = 1.0, x1 = 0.0, x2 = 0.0;
  bool converged = false;
};

// inf over (lambda, x) of ||u - (1/lambda) Q((. - x)/lambda)||.
TubeDistance tube_distance(const ModulationReference& ref, const Field2D& u, double lambda0 = 1.0,
                           double x10 = 0.0, double x20 = 0.0);

// log of int_{y1 > 0} y1^100 eps^2, -inf when the integral vanishes.
double weighted_moment_log(const Field2D& eps);
// exp(weighted_moment_log), +inf on overflow.
double weighted_moment(const Field2D& eps);

struct RunConfig {
  PeriodicGrid2D grid;
  double dt = 0.005;
  double t_end = 5.0;
  std::string init_kind = "soliton";  // soliton | qb | scaled
  double b0 = 0.0;
  double amp = 1.0;
  double lambda0 = 1.0;
  double x1 = 0.0;
  double x2 = 0.0;
  int cadence = 20;
  Scheme scheme = Scheme::IFRK4;
  double lambda_stop = 0.3;
  std::optional<double> theta;

  static std::set<std::string> keys();
  static RunConfig from(const KeyValueConfig& kv);
};

struct RunSample {
  double t = 0.0, lambda = 1.0, b = 0.0, x1 = 0.0, x2 = 0.0, mass = 0.0, energy = 0.0, tube = 0.0,
         b_over_lambda_theta = 0.0, s = 0.0;
};

struct RunResult {
  std::vector<RunSample> series;
  std::string stop_reason;
  double theta = 0.0;
  std::optional<PowerLawFit> fit;
  double max_mass_drift = 0.0;
  double max_energy_drift = 0.0;  // relative to (1/2)||grad u0||^2
};

// Called at every decomposition; the state carries epsilon on the profile grid.
using SampleObserver = std::function<void(const RunSample&, const ModulationState&)>;

RunResult run(const RunConfig& cfg, const ModulationReference& ref, const SampleObserver& observer = {});

std::string run_series_csv(const RunResult& r);
std::string run_report_json(const RunResult& r, const RunConfig& cfg);

}  // namespace zk
