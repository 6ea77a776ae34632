#pragma once

#include <map>
#include <optional>
#include <string>
#include <vector>

#include "zk/field.hpp"
#include "zk/interp.hpp"

namespace zk {

struct RadialGrid {
  double dr = 0.0;
  double rmax = 0.0;
  int n = 0;

  // Grid with r_k = k*dr covering [0, rmax]; rmax is rounded to a multiple of dr.
  static RadialGrid make(double dr, double rmax);
  double r(int k) const { return k * dr; }
  void validate() const;
};

struct RadialProfile {
  RadialGrid grid;
  std::vector<double> values;

  RadialInterpolant interpolant() const { return RadialInterpolant(grid.dr, values); }
};

// Treatment of the rows next to r = 0.
//   Reflecting: 2D Laplacian with even reflection, (4/dr^2)(f1 - f0) at the origin
//               and the central first-derivative term on all other rows.
//   Taylor:     origin row -2/dr^2, 2/dr^2, no first-derivative term on the first
//               i0 rows and a diagonal Taylor term built from the iterate value R(0).
enum class OriginStencil { Reflecting, Taylor };

struct Tridiagonal {
  std::vector<double> sub;   // sub[k] multiplies f[k-1] in row k (sub[0] unused)
  std::vector<double> diag;
  std::vector<double> sup;   // sup[k] multiplies f[k+1] in row k (sup[n-1] unused)

  std::vector<double> apply(const std::vector<double>& f) const;
};

// LU factorization of a tridiagonal matrix without pivoting.
class TridiagonalSolver {
public:
  explicit TridiagonalSolver(const Tridiagonal& t);
  std::vector<double> solve(const std::vector<double>& rhs) const;

private:
  std::vector<double> sub_, diag_, sup_;
};

// Number of rows next to the origin handled by the Taylor correction.
int origin_rows(const RadialGrid& grid);

// Discretization of d^2/dr^2 + (1/r) d/dr - 1 with a Dirichlet row at rmax.
// origin_value is R(0), used only by the Taylor stencil.
Tridiagonal build_radial_operator(const RadialGrid& grid,
                                  OriginStencil stencil = OriginStencil::Reflecting,
                                  double origin_value = 0.0);

struct StepResult {
  RadialProfile next;
  double factor = 0.0;  // (S_L/|S_R|)^{3/2}
};

StepResult renormalization_step(const RadialProfile& R, const TridiagonalSolver& op);

struct SolverConfig {
  int max_iterations = 1000;
  double tolerance = 1e-10;
  std::optional<RadialProfile> initial_guess;
  OriginStencil stencil = OriginStencil::Reflecting;

  void validate() const;
};

struct GroundStateReport {
  RadialProfile Q;
  int iterations = 0;
  double last_step_change = 0.0;
  bool converged = false;
  double residual = 0.0;  // L2(R^2) norm of the discrete residual of -dQ + Q - Q^3
  double mass = 0.0;
  double energy = 0.0;
  std::map<std::string, double> identity_gaps;
};

// Default seed r*exp(-r^2).
RadialProfile default_seed(const RadialGrid& grid);

GroundStateReport solve_ground_state(const SolverConfig& config, const RadialGrid& grid);

// Integral over R^2 of a radial function: 2 pi int_0^rmax g(r) r dr with the
// trapezoid rule plus Gregory end corrections (fourth order in dr).
double radial_integral(const std::vector<double>& g, const RadialGrid& grid);

// Fourth-order central difference derivative, reflected evenly at r = 0.
std::vector<double> radial_derivative(const RadialProfile& f);

struct RadialInvariants {
  double mass = 0.0;        // int Q^2
  double grad2 = 0.0;       // int |grad Q|^2
  double l4 = 0.0;          // int Q^4
  double q_lambda_q = 0.0;  // (Q, Lambda Q)
  double energy = 0.0;      // (1/2) grad2 - (1/4) l4
};

RadialInvariants radial_invariants(const RadialProfile& Q);

// Relative gaps of the identities satisfied by the ground state. Keys:
//   energy           |E(Q)| / int |grad Q|^2
//   l4_vs_2grad      |int Q^4 - 2 int |grad Q|^2| / int Q^4
//   grad_mass_vs_l4  |int |grad Q|^2 + int Q^2 - int Q^4| / int Q^4
//   grad_vs_mass     |int |grad Q|^2 - int Q^2| / int Q^2
//   q_lambda_q       |(Q, Lambda Q)| / int Q^2
std::map<std::string, double> pohozaev_report(const RadialProfile& Q);

// Cubic interpolation of Q(|y|) onto a grid; zero beyond rmax.
// Throws DomainError if the grid reaches beyond rmax (unless allow_outside).
Field2D to_cartesian(const RadialProfile& Q, const Grid2D& grid, bool allow_outside = false);

}  // namespace zk
