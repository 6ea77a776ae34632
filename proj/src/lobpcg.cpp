#include "zk/lobpcg.hpp"

#include <random>
#include <sstream>

#include "zk/errors.hpp"

namespace zk {

namespace {

using Eigen::Index;
using Eigen::MatrixXd;
using Eigen::VectorXd;

MatrixXd apply_cols(const VecOp& op, const MatrixXd& X) {
  MatrixXd out(X.rows(), X.cols());
  VectorXd in(X.rows()), res(X.rows());
  for (Index c = 0; c < X.cols(); ++c) {
    in = X.col(c);
    op(in, res);
    out.col(c) = res;
  }
  return out;
}

// Coefficients Z with (S Z)^T B (S Z) = I, dropping numerically dependent directions.
MatrixXd svqb(const MatrixXd& gram) {
  const Index n = gram.rows();
  VectorXd d(n);
  for (Index i = 0; i < n; ++i) d[i] = gram(i, i) > 0.0 ? 1.0 / std::sqrt(gram(i, i)) : 0.0;
  const MatrixXd g = d.asDiagonal() * gram * d.asDiagonal();
  Eigen::SelfAdjointEigenSolver<MatrixXd> es(g);
  const VectorXd& lam = es.eigenvalues();
  const double cut = 1e-12 * std::max(lam.maxCoeff(), 1e-300);
  std::vector<Index> keep;
  for (Index i = 0; i < n; ++i)
    if (lam[i] > cut) keep.push_back(i);
  MatrixXd Z(n, static_cast<Index>(keep.size()));
  for (std::size_t k = 0; k < keep.size(); ++k)
    Z.col(static_cast<Index>(k)) = d.asDiagonal() * es.eigenvectors().col(keep[k]) / std::sqrt(lam[keep[k]]);
  return Z;
}

}  // namespace

LobpcgResult lobpcg(const VecOp& A, const VecOp& B, const VecOp& T, const VecOp& project, Index n, int nev,
                    const LobpcgOptions& opts) {
  if (nev < 1 || nev > n) throw ConfigError("lobpcg: invalid number of eigenpairs");
  const Index bs = std::min<Index>(n, opts.block > 0 ? std::max(opts.block, nev) : nev + 2);
  auto proj_cols = [&](MatrixXd& X) {
    if (!project) return;
    VectorXd in(n), out(n);
    for (Index c = 0; c < X.cols(); ++c) {
      in = X.col(c);
      project(in, out);
      X.col(c) = out;
    }
  };

  std::mt19937_64 rng(opts.seed);
  std::normal_distribution<double> nd;
  MatrixXd X(n, bs);
  for (Index c = 0; c < bs; ++c)
    for (Index r = 0; r < n; ++r) X(r, c) = nd(rng);
  proj_cols(X);

  MatrixXd BX = apply_cols(B, X);
  {
    const MatrixXd Z = svqb(X.transpose() * BX);
    if (Z.cols() < bs) throw NumericalFailure("lobpcg: degenerate initial block");
    X = X * Z;
    BX = BX * Z;
  }
  MatrixXd AX = apply_cols(A, X);
  {
    Eigen::SelfAdjointEigenSolver<MatrixXd> es(X.transpose() * AX);
    X = X * es.eigenvectors();
    AX = AX * es.eigenvectors();
    BX = BX * es.eigenvectors();
  }
  VectorXd lam = (X.transpose() * AX).diagonal();
  MatrixXd P(n, 0);

  LobpcgResult res;
  for (int it = 1; it <= opts.max_iterations; ++it) {
    const MatrixXd R = AX - BX * lam.asDiagonal();
    VectorXd rn(bs);
    for (Index c = 0; c < bs; ++c) rn[c] = R.col(c).norm() / std::max(BX.col(c).norm(), 1e-300);
    res.iterations = it;
    if (rn.head(nev).maxCoeff() < opts.tolerance) {
      res.converged = true;
      res.residuals = rn.head(nev);
      break;
    }
    MatrixXd W = apply_cols(T, R);
    proj_cols(W);

    // Products are recomputed on the whole search space; implicit updates drift.
    const Index np = P.cols();
    MatrixXd S(n, 2 * bs + np);
    S << X, W, P;
    const MatrixXd AS = apply_cols(A, S), BS = apply_cols(B, S);
    const MatrixXd Z = svqb(S.transpose() * BS);
    if (Z.cols() < bs) throw NumericalFailure("lobpcg: search space collapsed");
    const MatrixXd Hs = Z.transpose() * (S.transpose() * AS) * Z;
    Eigen::SelfAdjointEigenSolver<MatrixXd> es(0.5 * (Hs + Hs.transpose()));
    const MatrixXd coeff = Z * es.eigenvectors().leftCols(bs);
    const MatrixXd Xn = S * coeff;
    // The new direction block: the part of the update outside the old X.
    P = S.rightCols(bs + np) * coeff.bottomRows(bs + np);
    X = Xn;
    AX = AS * coeff;
    BX = BS * coeff;
    lam = es.eigenvalues().head(bs);
    res.residuals = rn.head(nev);
  }
  res.values = lam.head(nev);
  res.vectors = X.leftCols(nev);
  if (!res.converged) {
    std::ostringstream os;
    os << "lobpcg did not converge in " << res.iterations << " iterations (residual "
       << res.residuals.maxCoeff() << ")";
    throw NumericalFailure(os.str());
  }
  return res;
}

}  // namespace zk
