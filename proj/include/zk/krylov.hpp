#pragma once

#include <Eigen/Core>
#include <cmath>
#include <limits>

namespace zk {

struct MinresResult {
  int iterations = 0;
  double relative_residual = 0.0;  // preconditioned residual estimate / initial
  bool converged = false;
};

// Preconditioned MINRES for symmetric (possibly indefinite) A with SPD preconditioner M.
// apply_a(v, out) computes out = A v; apply_minv(v, out) computes out = M^{-1} v.
template <class ApplyA, class ApplyMinv>
MinresResult minres(ApplyA&& apply_a, ApplyMinv&& apply_minv, const Eigen::VectorXd& b,
                    Eigen::VectorXd& x, double tol, int max_iterations) {
  using Eigen::VectorXd;
  const Eigen::Index n = b.size();
  MinresResult res;
  VectorXd tmp(n);
  apply_a(x, tmp);
  VectorXd r1 = b - tmp;
  VectorXd y(n);
  apply_minv(r1, y);
  double beta1 = r1.dot(y);
  if (beta1 < 0.0) beta1 = 0.0;
  beta1 = std::sqrt(beta1);
  if (beta1 == 0.0) {
    res.converged = true;
    return res;
  }
  VectorXd r2 = r1, v(n), w = VectorXd::Zero(n), w1(n), w2 = VectorXd::Zero(n);
  double oldb = 0.0, beta = beta1, dbar = 0.0, epsln = 0.0, phibar = beta1;
  double cs = -1.0, sn = 0.0;
  const double eps = std::numeric_limits<double>::epsilon();
  for (int itn = 1; itn <= max_iterations; ++itn) {
    v = y / beta;
    apply_a(v, y);
    if (itn >= 2) y -= (beta / oldb) * r1;
    const double alfa = v.dot(y);
    y -= (alfa / beta) * r2;
    r1.swap(r2);
    r2 = y;
    apply_minv(r2, y);
    oldb = beta;
    beta = r2.dot(y);
    if (beta < 0.0) beta = 0.0;
    beta = std::sqrt(beta);
    const double oldeps = epsln;
    const double delta = cs * dbar + sn * alfa;
    const double gbar = sn * dbar - cs * alfa;
    epsln = sn * beta;
    dbar = -cs * beta;
    double gamma = std::max(std::hypot(gbar, beta), eps);
    cs = gbar / gamma;
    sn = beta / gamma;
    const double phi = cs * phibar;
    phibar = sn * phibar;
    w1.swap(w2);
    w2.swap(w);
    w = (v - oldeps * w1 - delta * w2) / gamma;
    x += phi * w;
    res.iterations = itn;
    res.relative_residual = phibar / beta1;
    if (res.relative_residual < tol || beta == 0.0) {
      res.converged = true;
      break;
    }
  }
  return res;
}

}  // namespace zk
