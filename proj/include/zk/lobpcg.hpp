#pragma once

#include <Eigen/Dense>
#include <functional>

namespace zk {

using VecOp = std::function<void(const Eigen::VectorXd&, Eigen::VectorXd&)>;

struct LobpcgOptions {
  int block = 0;          // block size; 0 means nev + 2
  double tolerance = 1e-8;  // on ||A x - lambda B x|| / ||B x|| with ||x||_B = 1
  int max_iterations = 1000;
  unsigned seed = 1;
};

struct LobpcgResult {
  Eigen::VectorXd values;
  Eigen::MatrixXd vectors;  // B-orthonormal columns
  Eigen::VectorXd residuals;
  int iterations = 0;
  bool converged = false;
};

// Smallest nev eigenpairs of the pencil (A, B): A symmetric, B symmetric positive definite
// on the subspace kept invariant by `project` (identity if empty). T is a symmetric positive
// definite preconditioner.
LobpcgResult lobpcg(const VecOp& A, const VecOp& B, const VecOp& T, const VecOp& project, Eigen::Index n,
                    int nev, const LobpcgOptions& opts = LobpcgOptions{});

}  // namespace zk
