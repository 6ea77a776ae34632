#include "zk/profiles.hpp"

#include <Eigen/Core>
#include <algorithm>
#include <cmath>
#include <numbers>
#include <sstream>

#include "zk/errors.hpp"
#include "zk/interp.hpp"
#include "zk/krylov.hpp"
#include "zk/smooth.hpp"

namespace zk {

namespace {

constexpr double kPi = std::numbers::pi;

// Fourth-order second difference on a uniform 1D grid (interior only, zero at the edges).
std::vector<double> second_difference(const std::vector<double>& f, double dx) {
  const int n = static_cast<int>(f.size());
  std::vector<double> d(n, 0.0);
  for (int k = 2; k + 2 < n; ++k)
    d[k] = (-f[k + 2] + 16.0 * f[k + 1] - 30.0 * f[k] + 16.0 * f[k - 1] - f[k - 2]) / (12.0 * dx * dx);
  return d;
}

// Spectral multiplier m(xi) applied to a periodic 1D sample.
template <class M>
std::vector<double> multiplier_1d(const std::vector<double>& f, double dx, M&& m) {
  const int n = static_cast<int>(f.size());
  std::vector<cplx> c(f.begin(), f.end());
  c = dft(c);
  for (int k = 0; k < n; ++k) {
    const int q = k <= n / 2 ? k : k - n;
    c[k] *= m(2.0 * kPi * q / (n * dx), n % 2 == 0 && k == n / 2);
  }
  c = idft(c);
  std::vector<double> out(n);
  for (int k = 0; k < n; ++k) out[k] = c[k].real();
  return out;
}

std::vector<double> derivative_1d(const std::vector<double>& f, double dx) {
  return multiplier_1d(f, dx, [](double xi, bool nyq) { return nyq ? cplx(0.0) : cplx(0.0, xi); });
}

// int_x^inf f for a localized sample on a periodic grid starting at x0. The mass is
// carried by a unit Gaussian centered at 0, the zero-mean remainder is integrated spectrally.
std::vector<double> tail_integral(const std::vector<double>& f, double x0, double dx) {
  const int n = static_cast<int>(f.size());
  double m = 0.0;
  for (double v : f) m += v;
  m *= dx;
  std::vector<double> g(n);
  for (int k = 0; k < n; ++k) {
    const double x = x0 + k * dx;
    g[k] = f[k] - m * std::exp(-x * x) / std::sqrt(kPi);
  }
  const std::vector<double> G = multiplier_1d(g, dx, [](double xi, bool nyq) {
    if (xi == 0.0 || nyq) return cplx(0.0);
    return cplx(1.0) / cplx(0.0, xi);
  });
  std::vector<double> out(n);
  for (int k = 0; k < n; ++k) {
    const double x = x0 + k * dx;
    out[k] = (G[0] - G[k]) + 0.5 * m * std::erfc(x);
  }
  return out;
}

// Applies tail_integral along y1 to every column of a field.
Field2D tail_integral_y1(const Field2D& f) {
  const Grid2D& g = f.grid;
  Field2D out(g);
  std::vector<double> col(g.n1);
  for (int j = 0; j < g.n2; ++j) {
    for (int i = 0; i < g.n1; ++i) col[i] = f(i, j);
    const std::vector<double> t = tail_integral(col, g.x0, g.h1);
    for (int i = 0; i < g.n1; ++i) out(i, j) = t[i];
  }
  return out;
}

Field2D grad_energy(Fft2D& fft, const Field2D& u) {
  // -Delta u + u - u^3
  Field2D out = spectral_laplacian(fft, u);
  for (std::size_t k = 0; k < u.values.size(); ++k) {
    const double v = u.values[k];
    out.values[k] = -out.values[k] + v - v * v * v;
  }
  return out;
}

}  // namespace

RadialProfile lambda_q(const RadialProfile& Q) {
  const int n = Q.grid.n;
  if (n < 3) throw DomainError("lambda_q needs at least 3 points");
  const std::vector<double>& q = Q.values;
  RadialProfile out;
  out.grid = Q.grid;
  out.values.resize(n);
  for (int k = 0; k < n; ++k) {
    double nd;
    if (k == 0) nd = q[1] - q[0];
    else if (k == n - 1) nd = q[n - 1] - q[n - 2];
    else nd = 0.5 * (q[k + 1] - q[k - 1]);
    out.values[k] = q[k] + Q.grid.r(k) * nd / Q.grid.dr;
  }
  return out;
}

Field2D lambda_q(Fft2D& fft, const Field2D& Q) {
  const Field2D d1 = spectral_derivative(fft, Q, 1, 0);
  const Field2D d2 = spectral_derivative(fft, Q, 0, 1);
  const Grid2D& g = Q.grid;
  Field2D out(g);
  for (int i = 0; i < g.n1; ++i)
    for (int j = 0; j < g.n2; ++j) out(i, j) = Q(i, j) + g.x(i) * d1(i, j) + g.y(j) * d2(i, j);
  return out;
}

FResult compute_F(const RadialProfile& lambdaQ, bool symmetrize) {
  const int M = lambdaQ.grid.n;
  const double dr = lambdaQ.grid.dr;
  const double rmax = lambdaQ.grid.rmax;
  const RadialInterpolant f = lambdaQ.interpolant();
  const int N = 2 * M - 1;
  std::vector<double> x(N);
  for (int i = 0; i < N; ++i) x[i] = (i - (M - 1)) * dr;
  FResult res;
  res.F.x0 = x[0];
  res.F.dx = dr;
  res.F.values.assign(N, 0.0);
  for (int j = 0; j < N; ++j) {
    const double y2 = x[j] * x[j];
    double s = 0.0;
    for (int i = 0; i < N; ++i) {
      const double r = std::sqrt(x[i] * x[i] + y2);
      if (r <= rmax) s += f(r);
    }
    res.F.values[j] = s * dr;
  }
  if (symmetrize) {
    std::vector<double> sym(N);
    for (int j = 0; j < N; ++j) sym[j] = 0.5 * (res.F.values[j] + res.F.values[N - 1 - j]);
    for (int j = 0; j < N; ++j)
      res.symmetrization_change = std::max(res.symmetrization_change, std::abs(sym[j] - res.F.values[j]));
    res.F.values = std::move(sym);
  }
  return res;
}

Profile1D compute_F(const Field2D& lambdaQ) {
  const Grid2D& g = lambdaQ.grid;
  Profile1D F;
  F.x0 = g.y0;
  F.dx = g.h2;
  F.values.assign(g.n2, 0.0);
  for (int i = 0; i < g.n1; ++i)
    for (int j = 0; j < g.n2; ++j) F.values[j] += lambdaQ(i, j);
  for (double& v : F.values) v *= g.h1;
  return F;
}

SpectralProfile1D fourier_1d(const Profile1D& f) {
  const int N = f.size();
  if (N < 2) throw DomainError("fourier_1d needs at least 2 samples");
  std::vector<cplx> c(f.values.begin(), f.values.end());
  const std::vector<cplx> D = dft(c);
  SpectralProfile1D out;
  out.center = N / 2;
  out.dxi = 2.0 * kPi / (N * f.dx);
  out.values.resize(N);
  const double s = f.dx / std::sqrt(2.0 * kPi);
  for (int k = 0; k < N; ++k) {
    const int m = ((k - out.center) % N + N) % N;
    const double xi = out.xi(k);
    out.values[k] = s * std::polar(1.0, -f.x0 * xi) * D[m];
  }
  return out;
}

Profile1D inverse_fourier_1d(const SpectralProfile1D& fh, double x0, double dx) {
  const int N = fh.size();
  std::vector<cplx> D(N);
  const double s = std::sqrt(2.0 * kPi) / dx;
  for (int k = 0; k < N; ++k) {
    const int m = ((k - fh.center) % N + N) % N;
    D[m] = s * std::polar(1.0, x0 * fh.xi(k)) * fh.values[k];
  }
  const std::vector<cplx> c = idft(D);
  Profile1D out;
  out.x0 = x0;
  out.dx = dx;
  out.values.resize(N);
  for (int k = 0; k < N; ++k) out.values[k] = c[k].real();
  return out;
}

H2Result compute_h2(const Profile1D& F) {
  const SpectralProfile1D Fh = fourier_1d(F);
  H2Result res;
  res.h2hat = Fh;
  SpectralProfile1D F2h = Fh;
  for (int k = 0; k < Fh.size(); ++k) {
    const double xi2 = Fh.xi(k) * Fh.xi(k);
    res.h2hat.values[k] *= -xi2 / (1.0 + xi2);
    F2h.values[k] *= -xi2;
  }
  res.h2 = inverse_fourier_1d(res.h2hat, F.x0, F.dx);
  res.F2 = inverse_fourier_1d(F2h, F.x0, F.dx);
  const std::vector<double> dh = second_difference(res.h2.values, F.dx);
  const std::vector<double> dF = second_difference(F.values, F.dx);
  double num = 0.0, den = 0.0;
  for (int k = 2; k + 2 < F.size(); ++k) {
    const double r = -dh[k] + res.h2.values[k] - dF[k];
    num += r * r;
    den += dF[k] * dF[k];
  }
  res.ode_residual = den > 0.0 ? std::sqrt(num / den) : std::sqrt(num);
  return res;
}

ThetaResult compute_theta(const SpectralProfile1D& Fhat) {
  const int N = Fhat.size();
  ThetaResult t;
  for (int k = 0; k < N; ++k) {
    const double w = (k == 0 || k == N - 1) ? 0.5 : 1.0;
    const double a = std::norm(Fhat.values[k]);
    const double xi = Fhat.xi(k);
    t.I0 += w * a;
    t.I1 += w * a / (1.0 + xi * xi);
  }
  t.I0 *= Fhat.dxi;
  t.I1 *= Fhat.dxi;
  if (!(t.I0 > 0.0)) throw DomainError("degenerate profile: int |F^|^2 = 0");
  t.theta = 2.0 * t.I1 / t.I0;
  t.beta = 1.0 / (3.0 - t.theta);
  return t;
}

ThetaPipelineResult theta_pipeline(double dr, double rmax, OriginStencil stencil, const SolverConfig& base) {
  const RadialGrid grid = RadialGrid::make(dr, rmax);
  SolverConfig cfg = base;
  cfg.stencil = stencil;
  ThetaPipelineResult res;
  res.ground_state = solve_ground_state(cfg, grid);
  if (!res.ground_state.converged) {
    std::ostringstream os;
    os << "ground state did not converge in " << res.ground_state.iterations << " iterations (dr=" << dr
       << ", rmax=" << rmax << ")";
    throw NumericalFailure(os.str());
  }
  const RadialProfile LQ = lambda_q(res.ground_state.Q);
  FResult F = compute_F(LQ, true);
  res.F = std::move(F.F);
  res.symmetrization_change = F.symmetrization_change;
  res.Fhat = fourier_1d(res.F);
  res.theta = compute_theta(res.Fhat);
  double sx = 0.0, sk = 0.0;
  for (double v : res.F.values) sx += v * v;
  for (const cplx& v : res.Fhat.values) sk += std::norm(v);
  sx *= res.F.dx;
  sk *= res.Fhat.dxi;
  res.parseval_gap = std::abs(sx - sk) / sx;
  return res;
}

std::vector<ThetaCell> theta_table(const std::vector<double>& dr_list, const std::vector<double>& L_list,
                                   OriginStencil stencil) {
  std::vector<ThetaCell> cells;
  for (double dr : dr_list)
    for (double L : L_list) {
      ThetaCell c;
      c.dr = dr;
      c.L = L;
      try {
        const ThetaPipelineResult r = theta_pipeline(dr, L, stencil);
        c.ok = true;
        c.theta = r.theta.theta;
        c.iterations = r.ground_state.iterations;
      } catch (const std::exception& e) {
        c.error = e.what();
      }
      cells.push_back(c);
    }
  return cells;
}

Grid2D ProfileBox::grid() const {
  if (!(h > 0.0) || !(L1 > 0.0) || !(L2 > 0.0)) throw ConfigError("profile box: h, L1, L2 must be positive");
  const int n1 = static_cast<int>(std::llround(L1 / h));
  const int n2 = static_cast<int>(std::llround(L2 / h));
  if (std::abs(n1 * h - L1) > 1e-9 || std::abs(n2 * h - L2) > 1e-9)
    throw ConfigError("profile box: lengths must be multiples of h");
  return Grid2D::periodic_box(n1, n2, a1, L1, a2, L2);
}

ReferenceProfiles build_reference(const RadialProfile& Qr, const ProfileBox& box) {
  ReferenceProfiles ref;
  ref.grid = box.grid();
  const Grid2D& g = ref.grid;
  Fft2D fft(g);
  Field2D Q = to_cartesian(Qr, g, true);

  std::vector<cplx> qh(fft.spec_size()), nh(fft.spec_size());
  Field2D cube(g);
  const double target = 1e-12 * std::sqrt(norm2(Q));
  int it = 0;
  for (; it < 500; ++it) {
    const Field2D res = grad_energy(fft, Q);
    ref.ground_residual = std::sqrt(inner(res, res));
    if (ref.ground_residual < target) break;
    for (std::size_t k = 0; k < Q.values.size(); ++k) cube.values[k] = Q.values[k] * Q.values[k] * Q.values[k];
    fft.forward(Q.values.data(), qh.data());
    fft.forward(cube.values.data(), nh.data());
    // M = <(1 - Delta) Q, Q> / <Q^3, Q>, computed in physical space.
    const Field2D lapQ = spectral_laplacian(fft, Q);
    double num = 0.0, den = 0.0;
    for (std::size_t k = 0; k < Q.values.size(); ++k) {
      num += (Q.values[k] - lapQ.values[k]) * Q.values[k];
      den += cube.values[k] * Q.values[k];
    }
    if (!(den > 0.0)) throw NumericalFailure("Petviashvili refinement: degenerate iterate");
    const double factor = std::pow(num / den, 1.5);
    for (int i = 0; i < fft.n1(); ++i)
      for (int j = 0; j < fft.nh(); ++j) {
        const double s = 1.0 + fft.k1(i) * fft.k1(i) + fft.k2(j) * fft.k2(j);
        nh[static_cast<std::size_t>(i) * fft.nh() + j] *= factor / s;
      }
    fft.backward(nh.data(), Q.values.data());
  }
  if (ref.ground_residual >= target && ref.ground_residual > 1e-9)
    throw NumericalFailure("Petviashvili refinement did not converge");
  ref.refinement_iterations = it;
  ref.Q = Q;
  ref.Q1 = spectral_derivative(fft, Q, 1, 0);
  ref.Q2 = spectral_derivative(fft, Q, 0, 1);
  ref.LQ = lambda_q(fft, Q);
  ref.F = compute_F(ref.LQ);
  const H2Result h = compute_h2(ref.F);
  ref.h2 = h.h2;
  ref.F2 = h.F2;
  ref.theta = compute_theta(fourier_1d(ref.F));
  return ref;
}

PProfile solve_P(Fft2D& fft, const ReferenceProfiles& ref, const PSolveOptions& opts) {
  const Grid2D& g = ref.grid;
  const int n1 = g.n1, n2 = g.n2;
  PProfile out;

  // G(y1) = int h2(y2) Q(y1, y2) dy2; h1 is a Gaussian made orthogonal to G.
  std::vector<double> G(n1, 0.0);
  for (int i = 0; i < n1; ++i) {
    for (int j = 0; j < n2; ++j) G[i] += ref.h2.values[j] * ref.Q(i, j);
    G[i] *= g.h2;
  }
  double gg = 0.0;
  for (double v : G) gg += v * v;
  std::vector<double> h1(n1);
  double mass = 0.0;
  for (int attempt = 0; attempt < 6; ++attempt) {
    const double c = opts.gaussian_center + 0.5 * attempt;
    double gG = 0.0;
    for (int i = 0; i < n1; ++i) {
      const double x = g.x(i) - c;
      h1[i] = std::exp(-x * x) / std::sqrt(kPi);
      gG += h1[i] * G[i];
    }
    mass = 0.0;
    for (int i = 0; i < n1; ++i) {
      h1[i] -= gG / gg * G[i];
      mass += h1[i];
    }
    mass *= g.h1;
    if (std::abs(mass) > 1e-6) break;
  }
  if (std::abs(mass) <= 1e-6) throw NumericalFailure("solve_P: cannot normalize h1");
  for (double& v : h1) v /= mass;
  const std::vector<double> H1 = tail_integral(h1, g.x0, g.h1);
  const std::vector<double> dh1 = derivative_1d(h1, g.h1);
  out.h1 = Profile1D{g.x0, g.h1, h1};
  out.H1 = Profile1D{g.x0, g.h1, H1};

  const Field2D A = tail_integral_y1(ref.LQ);
  const Field2D C = tail_integral_y1(spectral_derivative(fft, ref.LQ, 0, 2));
  const Field2D dLQ = spectral_derivative(fft, ref.LQ, 1, 0);

  Field2D R(g);
  for (int i = 0; i < n1; ++i)
    for (int j = 0; j < n2; ++j) {
      const double q = ref.Q(i, j);
      const double h2 = ref.h2.values[j];
      R(i, j) = dLQ(i, j) - C(i, j) - 3.0 * q * q * A(i, j) + dh1[i] * h2 + ref.F2.values[j] * H1[i] -
                3.0 * q * q * h2 * H1[i];
    }

  // Orthonormal (Euclidean) basis of span{d1 Q, d2 Q}.
  const std::size_t N = g.size();
  Eigen::VectorXd e1 = Eigen::Map<const Eigen::VectorXd>(ref.Q1.values.data(), N);
  Eigen::VectorXd e2 = Eigen::Map<const Eigen::VectorXd>(ref.Q2.values.data(), N);
  e1.normalize();
  e2 -= e1.dot(e2) * e1;
  e2.normalize();
  auto project = [&](Eigen::VectorXd& v) {
    v -= e1.dot(v) * e1;
    v -= e2.dot(v) * e2;
  };

  Eigen::VectorXd rhs = Eigen::Map<const Eigen::VectorXd>(R.values.data(), N);
  out.diagnostics["source_kernel_overlap"] =
      std::hypot(e1.dot(rhs), e2.dot(rhs)) / std::max(rhs.norm(), 1e-300);
  project(rhs);

  std::vector<double> q2(N);
  for (std::size_t k = 0; k < N; ++k) q2[k] = 3.0 * ref.Q.values[k] * ref.Q.values[k];
  std::vector<cplx> spec(fft.spec_size());
  Field2D work(g), lap(g);
  auto apply_a = [&](const Eigen::VectorXd& v, Eigen::VectorXd& res) {
    Eigen::VectorXd p = v;
    project(p);
    std::copy(p.data(), p.data() + N, work.values.begin());
    lap = spectral_laplacian(fft, work);
    for (std::size_t k = 0; k < N; ++k) res[k] = -lap.values[k] + p[k] - q2[k] * p[k];
    project(res);
  };
  auto apply_minv = [&](const Eigen::VectorXd& v, Eigen::VectorXd& res) {
    Eigen::VectorXd p = v;
    project(p);
    fft.forward(p.data(), spec.data());
    for (int i = 0; i < fft.n1(); ++i)
      for (int j = 0; j < fft.nh(); ++j)
        spec[static_cast<std::size_t>(i) * fft.nh() + j] /= 1.0 + fft.k1(i) * fft.k1(i) + fft.k2(j) * fft.k2(j);
    fft.backward(spec.data(), res.data());
    project(res);
  };
  Eigen::VectorXd x = Eigen::VectorXd::Zero(N);
  const MinresResult mr = minres(apply_a, apply_minv, rhs, x, opts.tolerance, opts.max_iterations);
  project(x);
  out.diagnostics["minres_iterations"] = mr.iterations;
  out.diagnostics["minres_residual"] = mr.relative_residual;
  {
    Eigen::VectorXd ax(N);
    apply_a(x, ax);
    out.diagnostics["solve_residual"] = (ax - rhs).norm() / rhs.norm();
  }

  out.source = R;
  out.tilde = Field2D(g);
  std::copy(x.data(), x.data() + N, out.tilde.values.begin());
  out.field = Field2D(g);
  for (int i = 0; i < n1; ++i)
    for (int j = 0; j < n2; ++j)
      out.field(i, j) = out.tilde(i, j) - A(i, j) - ref.h2.values[j] * H1[i];

  const Field2D& P = out.field;
  double f4 = 0.0;
  for (double v : ref.F.values) f4 += v * v;
  f4 *= 0.25 * ref.F.dx;
  const double PQ = inner(P, ref.Q);
  const double qq = norm2(ref.Q);
  out.diagnostics["PQ"] = PQ;
  out.diagnostics["quarter_F2"] = f4;
  out.diagnostics["PQ_rel_gap"] = std::abs(PQ - f4) / f4;
  out.diagnostics["d1P_Q"] = -inner(P, ref.Q1) / qq;
  out.diagnostics["d2P_Q"] = -inner(P, ref.Q2) / qq;
  double hG = 0.0;
  for (int i = 0; i < n1; ++i) hG += h1[i] * G[i];
  out.diagnostics["h1_G"] = hG * g.h1;

  // d1 L P = L d1P - 6 Q d1Q P with d1P = d1P~ + Lambda Q + h1 h2, which is localized,
  // so the check runs spectrally on the inner half box.
  {
    Field2D dP = spectral_derivative(fft, out.tilde, 1, 0);
    for (int i = 0; i < n1; ++i)
      for (int j = 0; j < n2; ++j) dP(i, j) += ref.LQ(i, j) + h1[i] * ref.h2.values[j];
    const Field2D lap = spectral_laplacian(fft, dP);
    double num = 0.0, den = 0.0;
    for (int i = n1 / 4; i < 3 * n1 / 4; ++i)
      for (int j = n2 / 4; j < 3 * n2 / 4; ++j) {
        const std::size_t k = g.index(i, j);
        const double q = ref.Q.values[k];
        const double lhs = -lap.values[k] + dP.values[k] - 3.0 * q * q * dP.values[k] -
                           6.0 * q * ref.Q1.values[k] * P.values[k];
        const double r = lhs - ref.LQ.values[k];
        num += r * r;
        den += ref.LQ.values[k] * ref.LQ.values[k];
      }
    out.diagnostics["equation_residual"] = std::sqrt(num / den);
  }
  return out;
}

double cutoff_phi(double y1) { return smoothstep(y1 + 2.0); }

LocalizedProfile build_localized(Fft2D& fft, const ReferenceProfiles& ref, const PProfile& P, double b,
                                 double b_max) {
  if (!std::isfinite(b) || std::abs(b) > b_max) {
    std::ostringstream os;
    os << "localized profile: |b| = " << std::abs(b) << " outside the small-b regime (max " << b_max << ")";
    throw DomainError(os.str());
  }
  const Grid2D& g = ref.grid;
  if (b != 0.0) {
    const double edge = -2.0 / std::pow(std::abs(b), 0.75);
    if (edge < g.x0 + 4.0) throw DomainError("localized profile: cutoff region leaves the profile box");
  }
  LocalizedProfile out;
  out.b = b;
  out.Qb = ref.Q;
  if (b != 0.0) {
    for (int i = 0; i < g.n1; ++i) {
      const double phi = cutoff_phi(std::pow(std::abs(b), 0.75) * g.x(i));
      for (int j = 0; j < g.n2; ++j) out.Qb(i, j) += b * P.field(i, j) * phi;
    }
  }
  const Field2D e = grad_energy(fft, out.Qb);
  const Field2D de = spectral_derivative(fft, e, 1, 0);
  const Field2D lq = lambda_q(fft, out.Qb);
  out.Psib = Field2D(g);
  for (std::size_t k = 0; k < g.size(); ++k) out.Psib.values[k] = -b * lq.values[k] + de.values[k];
  out.psib_Q = inner(out.Psib, ref.Q);
  const Field2D q1 = spectral_derivative(fft, out.Qb, 1, 0), q2 = spectral_derivative(fft, out.Qb, 0, 1);
  double grad = 0.0, l4 = 0.0;
  for (std::size_t k = 0; k < g.size(); ++k) {
    grad += q1.values[k] * q1.values[k] + q2.values[k] * q2.values[k];
    const double v = out.Qb.values[k] * out.Qb.values[k];
    l4 += v * v;
  }
  out.energy = (0.5 * grad - 0.25 * l4) * g.cell();
  out.mass = norm2(out.Qb);
  return out;
}

double extrapolate_to_zero(const std::vector<double>& b, const std::vector<double>& v) {
  const std::size_t n = b.size();
  if (n == 0 || v.size() != n) throw DomainError("extrapolate_to_zero: size mismatch");
  std::vector<double> p(v);
  for (std::size_t m = 1; m < n; ++m)
    for (std::size_t i = 0; i + m < n; ++i) {
      const double d = b[i + m] - b[i];
      if (d == 0.0) throw DomainError("extrapolate_to_zero: repeated abscissa");
      p[i] = (b[i + m] * p[i] - b[i] * p[i + 1]) / d;
    }
  return p[0];
}

ThetaCrossCheck theta_cross_check(const PProfile& P, const std::vector<LocalizedProfile>& loc,
                                  const ReferenceProfiles& ref) {
  ThetaCrossCheck out;
  const double PQ = inner(P.field, ref.Q);
  double f4 = 0.0;
  for (double v : ref.F.values) f4 += v * v;
  f4 *= 0.25 * ref.F.dx;
  std::vector<double> vals;
  for (const LocalizedProfile& l : loc) {
    if (l.b == 0.0) continue;
    const double v = l.psib_Q / (l.b * l.b);
    out.b.push_back(l.b);
    vals.push_back(v);
    out.theta_at_b.push_back(-v / PQ);
  }
  if (out.b.empty()) throw DomainError("theta_cross_check: no nonzero b samples");
  out.psiQ_limit = extrapolate_to_zero(out.b, vals);
  out.theta_alt = -out.psiQ_limit / PQ;
  out.theta_alt_quarter_F = -out.psiQ_limit / f4;
  return out;
}

}  // namespace zk
