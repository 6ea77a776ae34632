#pragma once

#include <map>
#include <optional>
#include <string>
#include <vector>

#include "zk/field.hpp"
#include "zk/groundstate.hpp"

namespace zk {

// Square box [-L, L]^2 with homogeneous Dirichlet data; unknowns are the interior nodes.
struct DirichletBox {
  double L = 20.0;
  double h = 0.2;

  int m() const;  // interior nodes per axis
  Grid2D grid() const;
};

// Ground state of the 5-point discrete problem -Delta_h Q + Q = Q^3 and its
// central-difference gradient.
struct DiscreteGroundState {
  Field2D Q, Q1, Q2;
  int iterations = 0;
  double residual = 0.0;  // max |-Delta_h Q + Q - Q^3|
};

// Petviashvili iteration, diagonalized by the sine transform. The seed is the radial
// ground state interpolated onto the box (computed if not given).
DiscreteGroundState discrete_ground_state(const DirichletBox& box,
                                          const std::optional<RadialProfile>& seed = std::nullopt);

// f -> coeff * (f, left) * right, with the grid inner product.
struct Rank2Term {
  Field2D left;
  Field2D right;
  double coeff = 0.0;
};

// -c11 D11 f - c22 D22 f + V f + sum of rank-one terms, 5-point differences, zero boundary.
class SymmetricOperator2D {
public:
  SymmetricOperator2D() = default;
  SymmetricOperator2D(Grid2D grid, double c11, double c22, Field2D potential,
                      std::vector<Rank2Term> rank2 = {});

  const Grid2D& grid() const { return grid_; }
  const Field2D& potential() const { return potential_; }
  const std::vector<Rank2Term>& rank2_terms() const { return rank2_; }
  double c11() const { return c11_; }
  double c22() const { return c22_; }

  void apply(const double* f, double* out) const;
  Field2D apply(const Field2D& f) const;
  // The same operator without its rank-one terms.
  SymmetricOperator2D local_part() const;

private:
  Grid2D grid_;
  double c11_ = 1.0, c22_ = 1.0;
  Field2D potential_;
  std::vector<Rank2Term> rank2_;
};

// -Delta f + f - 3 Q^2 f
SymmetricOperator2D assemble_L(const Field2D& Q);
// -(3/2) d11 - (1/2) d22 + 1/2 - (3/2) Q^2 - 3 y1 Q d1Q, plus
// 3 (f, y1 Q)/(Q,Q) Q^2 d1Q + 3 (f, Q^2 d1Q)/(Q,Q) y1 Q.
SymmetricOperator2D assemble_A(const Field2D& Q, const Field2D& Q1);
// -(3/2) d11 - (1/2) d22 + 1/2 - (3/2) Q^2 + 3 y1 Q d1Q
SymmetricOperator2D assemble_B(const Field2D& Q, const Field2D& Q1);

// H = -Delta_h + 1, the discrete H^1 Gram operator.
SymmetricOperator2D h1_gram(const Grid2D& grid);

struct EigenPairs {
  std::vector<double> values;
  std::vector<Field2D> vectors;  // unit grid L2 norm
  std::vector<double> residuals;  // ||A v - lambda v|| / ||v||
  int iterations = 0;
};

// k smallest eigenpairs by preconditioned LOBPCG.
EigenPairs lowest_eigenpairs(const SymmetricOperator2D& op, int k, double tol = 1e-9);

struct EigenReport {
  std::vector<double> lowest_eigenvalues;
  std::vector<double> residuals;
  double mu0 = 0.0;
  Field2D Y;
  double kernel_gap = 0.0;  // max |lambda| over the near-zero pair
  double threshold = 0.0;   // near-zero classification threshold, proportional to h^2
  int negative_count = 0;
  int near_zero_count = 0;
  double first_positive = 0.0;
  std::map<std::string, double> constrained_minima;
};

// Spectrum of an operator of the form -Delta_h + V: the negative direction Y, refined by
// the fixed-point map Y -> (-Delta_h + 1 + mu0)^{-1} (1 - V) Y, the near-kernel and the
// next eigenvalue.
EigenReport lowest_spectrum(const SymmetricOperator2D& op, int k);

struct ConstrainedMin {
  double value = 0.0;
  double residual = 0.0;
  int iterations = 0;
  Field2D minimizer;
};

// min (A f, f) / ||f||_{H^1}^2 over f orthogonal to the constraint fields.
ConstrainedMin constrained_rayleigh_min(const SymmetricOperator2D& op, const std::vector<Field2D>& constraints,
                                        double tol = 1e-8);

struct SpectralSuite {
  DirichletBox box;
  DiscreteGroundState ground;
  EigenReport report;
};

// Ground state, spectrum of L and the constrained minima A_QdQ, L_Y, L_Qcubed, B_QdQ.
SpectralSuite run_spectral_suite(const DirichletBox& box, const std::optional<RadialProfile>& seed = std::nullopt);

std::string spectral_report_json(const SpectralSuite& s);

}  // namespace zk
