#include <gtest/gtest.h>

#include <Eigen/Dense>
#include <cmath>
#include <random>

#include "zk/errors.hpp"
#include "zk/lobpcg.hpp"
#include "zk/spectral.hpp"

using namespace zk;

namespace {

Eigen::MatrixXd dense(const SymmetricOperator2D& op) {
  const Eigen::Index n = static_cast<Eigen::Index>(op.grid().size());
  Eigen::MatrixXd M(n, n);
  Eigen::VectorXd e = Eigen::VectorXd::Zero(n), col(n);
  for (Eigen::Index k = 0; k < n; ++k) {
    e[k] = 1.0;
    op.apply(e.data(), col.data());
    M.col(k) = col;
    e[k] = 0.0;
  }
  return M;
}

// Smallest generalized eigenvalue of (A, H) restricted to the complement of the constraints.
double dense_constrained_min(const SymmetricOperator2D& op, const std::vector<Field2D>& cons) {
  const Eigen::MatrixXd A = dense(op), H = dense(h1_gram(op.grid()));
  const Eigen::Index n = A.rows();
  Eigen::MatrixXd Z = Eigen::MatrixXd::Identity(n, n);
  if (!cons.empty()) {
    Eigen::MatrixXd C(n, static_cast<Eigen::Index>(cons.size()));
    for (std::size_t c = 0; c < cons.size(); ++c)
      C.col(static_cast<Eigen::Index>(c)) = Eigen::Map<const Eigen::VectorXd>(cons[c].values.data(), n);
    Eigen::HouseholderQR<Eigen::MatrixXd> qr(C);
    const Eigen::MatrixXd Qf = qr.householderQ();
    Z = Qf.rightCols(n - C.cols());
  }
  const Eigen::MatrixXd As = Z.transpose() * (0.5 * (A + A.transpose())) * Z, Hs = Z.transpose() * H * Z;
  Eigen::GeneralizedSelfAdjointEigenSolver<Eigen::MatrixXd> es(As, Hs);
  return es.eigenvalues()[0];
}

const DiscreteGroundState& small_ground() {
  static const DiscreteGroundState g = discrete_ground_state(DirichletBox{5.0, 0.5});
  return g;
}

}  // namespace

TEST(DirichletBox, Nodes) {
  EXPECT_EQ((DirichletBox{20.0, 0.2}).m(), 199);
  EXPECT_THROW((DirichletBox{1.0, 0.3}).m(), ConfigError);
}

TEST(DiscreteGroundState, SolvesTheDiscreteEquation) {
  const DiscreteGroundState& g = small_ground();
  EXPECT_LT(g.residual, 1e-9);
  const SymmetricOperator2D L = assemble_L(g.Q);
  // L Q = -2 Q^3 for the exact discrete ground state.
  const Field2D LQ = L.apply(g.Q);
  for (std::size_t k = 0; k < LQ.values.size(); ++k) EXPECT_NEAR(LQ.values[k], -2.0 * std::pow(g.Q.values[k], 3), 1e-8);
}

TEST(SymmetricOperator2D, ApplyIsSymmetric) {
  const DiscreteGroundState& g = small_ground();
  for (const SymmetricOperator2D& op : {assemble_L(g.Q), assemble_A(g.Q, g.Q1), assemble_B(g.Q, g.Q1)}) {
    const Eigen::MatrixXd M = dense(op);
    EXPECT_LT((M - M.transpose()).cwiseAbs().maxCoeff(), 1e-10 * M.cwiseAbs().maxCoeff());
  }
}

TEST(Lobpcg, DiagonalPencil) {
  const Eigen::Index n = 200;
  Eigen::VectorXd d(n);
  for (Eigen::Index k = 0; k < n; ++k) d[k] = 1.0 + 0.5 * k;
  VecOp A = [&](const Eigen::VectorXd& x, Eigen::VectorXd& y) { y = d.cwiseProduct(x); };
  VecOp I = [](const Eigen::VectorXd& x, Eigen::VectorXd& y) { y = x; };
  VecOp T = [&](const Eigen::VectorXd& x, Eigen::VectorXd& y) { y = x.cwiseQuotient(d); };
  const LobpcgResult r = lobpcg(A, I, T, VecOp{}, n, 3);
  ASSERT_TRUE(r.converged);
  EXPECT_NEAR(r.values[0], 1.0, 1e-9);
  EXPECT_NEAR(r.values[1], 1.5, 1e-9);
  EXPECT_NEAR(r.values[2], 2.0, 1e-9);
}

TEST(LowestEigenpairs, MatchDenseSolver) {
  const DiscreteGroundState& g = small_ground();
  const SymmetricOperator2D L = assemble_L(g.Q);
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(dense(L));
  const EigenPairs p = lowest_eigenpairs(L, 4);
  for (int k = 0; k < 4; ++k) EXPECT_NEAR(p.values[k], es.eigenvalues()[k], 1e-7) << k;
}

TEST(ConstrainedMin, MatchesDenseProjection) {
  const DiscreteGroundState& g = small_ground();
  const SymmetricOperator2D L = assemble_L(g.Q);
  Field2D cube(g.Q.grid);
  for (std::size_t k = 0; k < cube.values.size(); ++k) cube.values[k] = std::pow(g.Q.values[k], 3);
  const std::vector<Field2D> cons{cube, g.Q1, g.Q2};
  EXPECT_NEAR(constrained_rayleigh_min(L, cons).value, dense_constrained_min(L, cons), 1e-6);
  const SymmetricOperator2D A = assemble_A(g.Q, g.Q1);
  const std::vector<Field2D> ca{g.Q, g.Q1, g.Q2};
  EXPECT_NEAR(constrained_rayleigh_min(A, ca).value, dense_constrained_min(A, ca), 1e-6);
}

TEST(ConstrainedMin, RejectsDependentConstraints) {
  const DiscreteGroundState& g = small_ground();
  EXPECT_THROW(constrained_rayleigh_min(assemble_L(g.Q), {g.Q1, g.Q1}), DomainError);
}

TEST(SpectralSuite, CountsOnCoarseBox) {
  const SpectralSuite s = run_spectral_suite(DirichletBox{10.0, 0.4});
  EXPECT_EQ(s.report.negative_count, 1);
  EXPECT_EQ(s.report.near_zero_count, 2);
  EXPECT_GT(s.report.first_positive, s.report.threshold);
  EXPECT_GT(s.report.constrained_minima.at("L_Qcubed"), 0.0);
  EXPECT_GT(s.report.constrained_minima.at("L_Y"), 0.0);
  EXPECT_GT(s.report.constrained_minima.at("A_QdQ"), 0.0);
  EXPECT_LT(s.report.constrained_minima.at("L_none"), 0.0);
}
