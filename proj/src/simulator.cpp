#include "zk/simulator.hpp"

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <json.hpp>
#include <sstream>

#include "zk/dynamics.hpp"
#include "zk/errors.hpp"

namespace zk {

Grid2D PeriodicGrid2D::grid() const {
  if (n1 < 16 || n2 < 16 || n1 % 2 || n2 % 2) throw ConfigError("simulation grid sizes must be even and >= 16");
  if (!(L1 > 0.0) || !(L2 > 0.0)) throw ConfigError("simulation box lengths must be positive");
  return Grid2D::periodic_box(n1, n2, L1, L2);
}

// ---------------------------------------------------------------------------------------
// Solver

ZkSolver::ZkSolver(const Grid2D& grid, Scheme scheme, bool nonlinear)
    : grid_(grid), scheme_(scheme), nonlinear_(nonlinear), fft_(grid), work_(grid) {
  if (!grid.periodic) throw ConfigError("ZkSolver needs a periodic grid");
  const std::size_t ns = fft_.spec_size();
  mask_.assign(ns, 0.0);
  symbol_.assign(ns, cplx(0.0));
  dxi1_.assign(ns, cplx(0.0));
  const int nh = fft_.nh();
  for (int i = 0; i < grid.n1; ++i) {
    const int m1 = i <= grid.n1 / 2 ? i : i - grid.n1;
    const double k1 = fft_.nyquist1(i) ? 0.0 : fft_.k1(i);
    for (int j = 0; j < nh; ++j) {
      const std::size_t s = static_cast<std::size_t>(i) * nh + j;
      const double k2 = fft_.k2(j);
      const bool keep = 3 * std::abs(m1) < grid.n1 && 3 * j < grid.n2;
      mask_[s] = keep ? 1.0 : 0.0;
      symbol_[s] = cplx(0.0, k1 * (k1 * k1 + k2 * k2));
      dxi1_[s] = cplx(0.0, -k1) * mask_[s];
    }
  }
  for (auto* v : {&v_, &a_, &b_, &c_, &Nv_, &Na_, &Nb_, &Nc_}) v->assign(ns, cplx(0.0));
}

void ZkSolver::prepare(double dt) {
  if (dt == dt_) return;
  dt_ = dt;
  const std::size_t ns = fft_.spec_size();
  for (auto* v : {&E_, &E2_, &Qc_, &f1_, &f2_, &f3_}) v->assign(ns, cplx(0.0));
  constexpr int M = 32;
  std::array<cplx, M> roots;
  for (int k = 0; k < M; ++k) roots[k] = std::polar(1.0, 2.0 * M_PI * (k + 0.5) / M);
  for (std::size_t s = 0; s < ns; ++s) {
    const cplx z = symbol_[s] * dt;
    E_[s] = std::exp(z);
    E2_[s] = std::exp(0.5 * z);
    if (scheme_ != Scheme::ETDRK4) continue;
    // phi-function combinations by the contour mean around z.
    cplx q(0.0), a(0.0), b(0.0), c(0.0);
    for (const cplx& r : roots) {
      const cplx w = z + r;
      const cplx ew = std::exp(w), w3 = w * w * w;
      q += (std::exp(0.5 * w) - 1.0) / w;
      a += (-4.0 - w + ew * (4.0 - 3.0 * w + w * w)) / w3;
      b += (2.0 + w + ew * (-2.0 + w)) / w3;
      c += (-4.0 - 3.0 * w - w * w + ew * (4.0 - w)) / w3;
    }
    Qc_[s] = dt * q / double(M);
    f1_[s] = dt * a / double(M);
    f2_[s] = dt * b / double(M);
    f3_[s] = dt * c / double(M);
  }
}

void ZkSolver::nonlinear_term(const std::vector<cplx>& v, std::vector<cplx>& out) {
  if (!nonlinear_) {
    std::fill(out.begin(), out.end(), cplx(0.0));
    return;
  }
  std::vector<cplx>& tmp = out;
  std::copy(v.begin(), v.end(), tmp.begin());
  fft_.backward(tmp.data(), work_.values.data());
  for (double& x : work_.values) x = x * x * x;
  fft_.forward(work_.values.data(), out.data());
  for (std::size_t s = 0; s < out.size(); ++s) out[s] *= dxi1_[s];
}

SimState ZkSolver::make_state(const Field2D& u0) {
  SimState s;
  s.u = dealias(u0);
  const Conserved c = conserved(s.u);
  s.mass0 = c.mass;
  s.energy0 = c.energy;
  return s;
}

void ZkSolver::step(SimState& st, double dt) {
  if (!(dt > 0.0) || !std::isfinite(dt)) throw ConfigError("time step must be positive");
  prepare(dt);
  const std::size_t ns = fft_.spec_size();
  fft_.forward(st.u.values.data(), v_.data());
  if (scheme_ == Scheme::ETDRK4) {
    nonlinear_term(v_, Nv_);
    for (std::size_t s = 0; s < ns; ++s) a_[s] = E2_[s] * v_[s] + Qc_[s] * Nv_[s];
    nonlinear_term(a_, Na_);
    for (std::size_t s = 0; s < ns; ++s) b_[s] = E2_[s] * v_[s] + Qc_[s] * Na_[s];
    nonlinear_term(b_, Nb_);
    for (std::size_t s = 0; s < ns; ++s) c_[s] = E2_[s] * a_[s] + Qc_[s] * (2.0 * Nb_[s] - Nv_[s]);
    nonlinear_term(c_, Nc_);
    for (std::size_t s = 0; s < ns; ++s)
      v_[s] = E_[s] * v_[s] + f1_[s] * Nv_[s] + 2.0 * f2_[s] * (Na_[s] + Nb_[s]) + f3_[s] * Nc_[s];
  } else {
    nonlinear_term(v_, Nv_);
    for (std::size_t s = 0; s < ns; ++s) a_[s] = E2_[s] * (v_[s] + 0.5 * dt * Nv_[s]);
    nonlinear_term(a_, Na_);
    for (std::size_t s = 0; s < ns; ++s) b_[s] = E2_[s] * v_[s] + 0.5 * dt * Na_[s];
    nonlinear_term(b_, Nb_);
    for (std::size_t s = 0; s < ns; ++s) c_[s] = E_[s] * v_[s] + dt * E2_[s] * Nb_[s];
    nonlinear_term(c_, Nc_);
    for (std::size_t s = 0; s < ns; ++s)
      v_[s] = E_[s] * v_[s] + dt / 6.0 * (E_[s] * Nv_[s] + 2.0 * E2_[s] * (Na_[s] + Nb_[s]) + Nc_[s]);
  }
  fft_.backward(v_.data(), st.u.values.data());
  st.t += dt;
  for (double x : st.u.values)
    if (!std::isfinite(x)) {
      std::ostringstream os;
      os << "non-finite solution at t = " << st.t;
      throw BlowupDetected(os.str(), st.t);
    }
}

Conserved ZkSolver::conserved(const Field2D& u) {
  Conserved c;
  const Field2D u1 = spectral_derivative(fft_, u, 1, 0);
  const Field2D u2 = spectral_derivative(fft_, u, 0, 1);
  double g = 0.0, q = 0.0, m = 0.0;
  for (std::size_t k = 0; k < u.values.size(); ++k) {
    const double v = u.values[k];
    m += v * v;
    q += v * v * v * v;
    g += u1.values[k] * u1.values[k] + u2.values[k] * u2.values[k];
  }
  const double cell = grid_.cell();
  c.mass = m * cell;
  c.energy = (0.5 * g - 0.25 * q) * cell;
  return c;
}

Field2D ZkSolver::dealias(const Field2D& u) {
  return apply_multiplier(fft_, u, [&](int i, int j) { return mask_[static_cast<std::size_t>(i) * fft_.nh() + j]; });
}

double ZkSolver::cfl_limit(const Field2D& u, double safety) const {
  double umax = 0.0;
  for (double x : u.values) umax = std::max(umax, std::abs(x));
  const double kmax = (2.0 / 3.0) * M_PI / grid_.h1;
  if (umax == 0.0) return INFINITY;
  return safety / (kmax * umax * umax);
}

// ---------------------------------------------------------------------------------------
// Modulation reference

namespace {

double wrap(double d, double L) {
  d -= L * std::floor(d / L + 0.5);
  return d;
}

// Samples of Q, its derivative and the test functions at y.
struct RadialSample {
  bool inside = false;
  double q = 0.0, qp = 0.0, r = 0.0;
};

RadialSample radial_at(const RadialInterpolant& f, double y1, double y2) {
  RadialSample s;
  s.r = std::hypot(y1, y2);
  if (s.r >= f.rmax()) return s;
  s.inside = true;
  s.q = f(s.r);
  s.qp = f.derivative(s.r);
  return s;
}

std::array<double, 4> test_values(const RadialSample& s, double y1, double y2) {
  const double g = s.r > 0.0 ? s.qp / s.r : 0.0;
  return {s.q * s.q * s.q, s.q, g * y1, g * y2};
}

}  // namespace

ModulationReference::ModulationReference(const RadialProfile& Q, const ProfileBox& box)
    : Q_(Q), spline_(Q.interpolant()), ref_(build_reference(Q, box)) {
  Fft2D fft(ref_.grid);
  P_ = solve_P(fft, ref_);
  const Grid2D& g = ref_.grid;
  double m = 0.0;
  q_pair_ = {};
  for (auto& v : prof_f_) v.assign(g.size(), 0.0);
  for (int i = 0; i < g.n1; ++i)
    for (int j = 0; j < g.n2; ++j) {
      const RadialSample s = radial_at(spline_, g.x(i), g.y(j));
      if (!s.inside) continue;
      const auto f = test_values(s, g.x(i), g.y(j));
      for (int k = 0; k < 4; ++k) {
        q_pair_[k] += s.q * f[k];
        prof_f_[k][g.index(i, j)] = f[k];
      }
      m += s.q * s.q;
    }
  for (double& v : q_pair_) v *= g.cell();
  mass_ = m * g.cell();
}

std::array<double, 4> ModulationReference::profile_pairings(double b) const {
  std::array<double, 4> out = q_pair_;
  if (b == 0.0) return out;
  const Grid2D& g = ref_.grid;
  const double scale = std::pow(std::abs(b), 0.75);
  std::array<double, 4> acc{};
  for (int i = 0; i < g.n1; ++i) {
    const double phi = cutoff_phi(scale * g.x(i));
    if (phi == 0.0) continue;
    for (int j = 0; j < g.n2; ++j) {
      const std::size_t n = g.index(i, j);
      const double p = phi * P_.field.values[n];
      for (int k = 0; k < 4; ++k) acc[k] += p * prof_f_[k][n];
    }
  }
  for (int k = 0; k < 4; ++k) out[k] += b * acc[k] * g.cell();
  return out;
}

Field2D ModulationReference::profile_Qb(double b) const {
  const Grid2D& g = ref_.grid;
  Field2D out(g);
  const double scale = std::pow(std::abs(b), 0.75);
  for (int i = 0; i < g.n1; ++i) {
    const double phi = b == 0.0 ? 0.0 : cutoff_phi(scale * g.x(i));
    for (int j = 0; j < g.n2; ++j) out(i, j) = spline_(std::hypot(g.x(i), g.y(j))) + b * phi * P_.field(i, j);
  }
  return out;
}

Field2D ModulationReference::sample_Qb(const Grid2D& g, double lambda, double x1, double x2, double b) const {
  if (!(lambda > 0.0)) throw DomainError("sample_Qb: lambda must be positive");
  Field2D out(g);
  BicubicHermite Pb;
  const bool with_p = b != 0.0;
  if (with_p) {
    const double scale = std::pow(std::abs(b), 0.75);
    const Grid2D& pg = ref_.grid;
    if (scale * (pg.x(0) + 4.0) > -2.0)
      throw DomainError("sample_Qb: the cutoff does not fit in the profile box");
    Field2D Pphi = P_.field;
    for (int i = 0; i < pg.n1; ++i) {
      const double phi = cutoff_phi(scale * pg.x(i));
      for (int j = 0; j < pg.n2; ++j) Pphi(i, j) *= phi;
    }
    Pphi.grid.periodic = false;
    Pb = BicubicHermite::from_samples(Pphi);
  }
  const double L1 = g.length1(), L2 = g.length2();
  for (int i = 0; i < g.n1; ++i) {
    const double y1 = wrap(g.x(i) - x1, L1) / lambda;
    for (int j = 0; j < g.n2; ++j) {
      const double y2 = wrap(g.y(j) - x2, L2) / lambda;
      double v = spline_(std::hypot(y1, y2));
      if (with_p) v += b * Pb(y1, y2);
      out(i, j) = v / lambda;
    }
  }
  return out;
}

std::array<double, 4> ModulationReference::field_pairings(const Field2D& u, double lambda, double x1,
                                                          double x2) const {
  const Grid2D& g = u.grid;
  const double L1 = g.length1(), L2 = g.length2();
  std::array<double, 4> acc{};
  for (int i = 0; i < g.n1; ++i) {
    const double y1 = wrap(g.x(i) - x1, L1) / lambda;
    if (std::abs(y1) >= spline_.rmax()) continue;
    for (int j = 0; j < g.n2; ++j) {
      const double y2 = wrap(g.y(j) - x2, L2) / lambda;
      const RadialSample s = radial_at(spline_, y1, y2);
      if (!s.inside) continue;
      const auto f = test_values(s, y1, y2);
      const double w = u(i, j);
      for (int k = 0; k < 4; ++k) acc[k] += w * f[k];
    }
  }
  for (double& v : acc) v *= g.cell() / lambda;
  return acc;
}

std::array<double, 2> ModulationReference::soliton_overlap(const Field2D& u, double lambda, double x1,
                                                           double x2) const {
  const Grid2D& g = u.grid;
  const double L1 = g.length1(), L2 = g.length2();
  double ov = 0.0, nn = 0.0;
  for (int i = 0; i < g.n1; ++i) {
    const double y1 = wrap(g.x(i) - x1, L1) / lambda;
    for (int j = 0; j < g.n2; ++j) {
      const double y2 = wrap(g.y(j) - x2, L2) / lambda;
      const double q = spline_(std::hypot(y1, y2)) / lambda;
      ov += u(i, j) * q;
      nn += q * q;
    }
  }
  return {ov * g.cell(), nn * g.cell()};
}

// ---------------------------------------------------------------------------------------
// Decomposition

namespace {

std::array<double, 4> residuals(const ModulationReference& ref, const Field2D& u, double lambda, double b,
                                double x1, double x2) {
  const auto fp = ref.field_pairings(u, lambda, x1, x2);
  const auto pp = ref.profile_pairings(b);
  return {fp[0] - pp[0], fp[1] - pp[1], fp[2] - pp[2], fp[3] - pp[3]};
}

}  // namespace

Jacobian4 modulation_jacobian(const ModulationReference& ref, const Field2D& u, const ModulationState& at) {
  Jacobian4 J{};
  const double p0[4] = {at.lambda, at.b, at.x1, at.x2};
  const double hstep[4] = {1e-5 * at.lambda, 1e-5, 1e-5 * at.lambda, 1e-5 * at.lambda};
  for (int c = 0; c < 4; ++c) {
    double pp[4], pm[4];
    std::copy(p0, p0 + 4, pp);
    std::copy(p0, p0 + 4, pm);
    pp[c] += hstep[c];
    pm[c] -= hstep[c];
    const auto rp = residuals(ref, u, pp[0], pp[1], pp[2], pp[3]);
    const auto rm = residuals(ref, u, pm[0], pm[1], pm[2], pm[3]);
    for (int r = 0; r < 4; ++r) J[r][c] = (rp[r] - rm[r]) / (2.0 * hstep[c]);
  }
  return J;
}

ModulationState modulation_decompose(const ModulationReference& ref, const Field2D& u, const ModulationState& guess,
                                     bool with_epsilon) {
  ModulationState st = guess;
  if (!(st.lambda > 0.0)) throw DecompositionFailed("decomposition: initial lambda must be positive");
  const double tol = 1e-9 * ref.mass();
  std::array<double, 4> r = residuals(ref, u, st.lambda, st.b, st.x1, st.x2);
  auto size = [](const std::array<double, 4>& v) {
    double m = 0.0;
    for (double x : v) m = std::max(m, std::abs(x));
    return m;
  };
  int it = 0;
  Eigen::Matrix4d A;
  bool fresh = false;
  // Chord iteration: the Jacobian is refreshed only when a full step fails.
  for (; it < 30 && size(r) >= tol; ++it) {
    if (it == 0 || !fresh) {
      const Jacobian4 J = modulation_jacobian(ref, u, st);
      for (int i = 0; i < 4; ++i)
        for (int j = 0; j < 4; ++j) A(i, j) = J[i][j];
      fresh = true;
    }
    Eigen::Vector4d rhs;
    for (int i = 0; i < 4; ++i) rhs[i] = -r[i];
    const Eigen::Vector4d d = A.fullPivLu().solve(rhs);
    if (!d.allFinite()) throw DecompositionFailed("decomposition: singular Jacobian");
    // Damped update: keep lambda positive and do not increase the residual.
    double t = 1.0;
    bool accepted = false;
    for (int k = 0; k < 20; ++k, t *= 0.5) {
      const double lam = st.lambda + t * d[0];
      if (!(lam > 0.05 * st.lambda)) continue;
      const auto rn = residuals(ref, u, lam, st.b + t * d[1], st.x1 + t * d[2], st.x2 + t * d[3]);
      if (size(rn) < size(r) || size(rn) < tol) {
        st.lambda = lam;
        st.b += t * d[1];
        st.x1 += t * d[2];
        st.x2 += t * d[3];
        r = rn;
        accepted = true;
        if (k > 0) fresh = false;
        break;
      }
    }
    if (!accepted) {
      if (fresh && it > 0) {
        fresh = false;
        continue;
      }
      break;
    }
  }
  st.iterations = it;
  st.orthogonality_residuals = r;
  st.converged = size(r) < tol;
  if (!st.converged) {
    std::ostringstream os;
    os << "decomposition did not converge: max residual " << size(r) << " after " << it << " iterations";
    throw DecompositionFailed(os.str());
  }
  if (with_epsilon) {
    const Grid2D& pg = ref.profiles().grid;
    const Field2D Qb = ref.profile_Qb(st.b);
    const BicubicHermite U = BicubicHermite::from_samples(u);
    Field2D eps(pg);
    // Only the periodic cell centred at x is used; points beyond it see u = 0.
    const double h1 = 0.5 * u.grid.length1(), h2 = 0.5 * u.grid.length2();
    for (int i = 0; i < pg.n1; ++i)
      for (int j = 0; j < pg.n2; ++j) {
        const double z1 = st.lambda * pg.x(i), z2 = st.lambda * pg.y(j);
        const bool inside = z1 >= -h1 && z1 < h1 && z2 >= -h2 && z2 < h2;
        eps(i, j) = (inside ? st.lambda * U(z1 + st.x1, z2 + st.x2) : 0.0) - Qb(i, j);
      }
    st.epsilon = std::move(eps);
  }
  return st;
}

// ---------------------------------------------------------------------------------------
// Tube distance

namespace {

struct Probe {
  double G = 0.0;
  Eigen::Vector3d grad = Eigen::Vector3d::Zero();  // d/dlambda, d/dx1, d/dx2 of G
};

// G = (u, Q_{lambda,x}) and its gradient in (lambda, x).
Probe probe(const RadialInterpolant& f, const Field2D& u, double lambda, double x1, double x2) {
  const Grid2D& g = u.grid;
  const double L1 = g.length1(), L2 = g.length2();
  Probe p;
  double gl = 0.0, g1 = 0.0, g2 = 0.0, ov = 0.0;
  for (int i = 0; i < g.n1; ++i) {
    const double y1 = wrap(g.x(i) - x1, L1) / lambda;
    if (std::abs(y1) >= f.rmax()) continue;
    for (int j = 0; j < g.n2; ++j) {
      const double y2 = wrap(g.y(j) - x2, L2) / lambda;
      const RadialSample s = radial_at(f, y1, y2);
      if (!s.inside) continue;
      const double w = u(i, j);
      const double dq = s.r > 0.0 ? s.qp / s.r : 0.0;
      ov += w * s.q;
      gl += w * (s.q + s.r * s.qp);
      g1 += w * dq * y1;
      g2 += w * dq * y2;
    }
  }
  const double c = g.cell();
  p.G = ov * c / lambda;
  p.grad << -gl * c / (lambda * lambda), -g1 * c / (lambda * lambda), -g2 * c / (lambda * lambda);
  return p;
}

}  // namespace

TubeDistance tube_distance(const ModulationReference& ref, const Field2D& u, double lambda0, double x10,
                           double x20) {
  if (!(lambda0 > 0.0)) throw DomainError("tube_distance: lambda must be positive");
  const RadialInterpolant f = ref.radial().interpolant();
  Eigen::Vector3d p(lambda0, x10, x20);
  Probe cur = probe(f, u, p[0], p[1], p[2]);
  TubeDistance td;
  Eigen::Matrix3d H;
  int age = 5;
  for (int it = 0; it < 60; ++it) {
    // The finite-difference Hessian is refreshed every fifth iteration or after a failed step.
    if (age >= 5) {
      age = 0;
      const double hs = 1e-4 * p[0];
      for (int c = 0; c < 3; ++c) {
        Eigen::Vector3d a = p, b = p;
        a[c] += hs;
        b[c] -= hs;
        H.col(c) = (probe(f, u, a[0], a[1], a[2]).grad - probe(f, u, b[0], b[1], b[2]).grad) / (2.0 * hs);
      }
      H = 0.5 * (H + H.transpose());
    }
    ++age;
    Eigen::Vector3d d;
    Eigen::LLT<Eigen::Matrix3d> llt(-H);
    if (llt.info() == Eigen::Success)
      d = llt.solve(cur.grad);
    else
      d = 0.1 * p[0] * cur.grad / std::max(cur.grad.norm(), 1e-300);
    double t = 1.0;
    bool moved = false;
    for (int k = 0; k < 30; ++k, t *= 0.5) {
      const Eigen::Vector3d q = p + t * d;
      if (!(q[0] > 0.05 * p[0])) continue;
      const Probe nxt = probe(f, u, q[0], q[1], q[2]);
      if (nxt.G >= cur.G - 1e-14 * std::abs(cur.G)) {
        p = q;
        cur = nxt;
        moved = true;
        break;
      }
    }
    if (!moved) {
      if (age == 1) break;
      age = 5;
      continue;
    }
    if ((t * d).norm() < 1e-9 * std::max(1.0, p[0])) {
      td.converged = true;
      break;
    }
  }
  td.lambda = p[0];
  td.x1 = p[1];
  td.x2 = p[2];
  const Field2D Qs = ref.sample_Qb(u.grid, p[0], p[1], p[2], 0.0);
  double s = 0.0;
  for (std::size_t k = 0; k < u.values.size(); ++k) {
    const double e = u.values[k] - Qs.values[k];
    s += e * e;
  }
  td.distance = std::sqrt(s * u.grid.cell());
  return td;
}

double weighted_moment_log(const Field2D& eps) {
  const Grid2D& g = eps.grid;
  double ymax = 0.0;
  for (int i = 0; i < g.n1; ++i) ymax = std::max(ymax, g.x(i));
  if (!(ymax > 0.0)) return -INFINITY;
  // Scaled by ymax^100 to stay in range.
  double s = 0.0;
  for (int i = 0; i < g.n1; ++i) {
    const double y = g.x(i);
    if (!(y > 0.0)) continue;
    const double w = std::pow(y / ymax, 100.0);
    for (int j = 0; j < g.n2; ++j) s += w * eps(i, j) * eps(i, j);
  }
  if (!(s > 0.0)) return -INFINITY;
  return std::log(s * g.cell()) + 100.0 * std::log(ymax);
}

double weighted_moment(const Field2D& eps) {
  const double l = weighted_moment_log(eps);
  return l > 709.0 ? INFINITY : std::exp(l);
}

// ---------------------------------------------------------------------------------------
// Runs

std::set<std::string> RunConfig::keys() {
  return {"grid.n", "grid.n1", "grid.n2", "grid.box", "grid.box1", "grid.box2", "dt", "t_end", "init.kind",
          "init.b0", "init.amp", "init.lambda0", "init.x1", "init.x2", "cadence", "scheme", "lambda_stop",
          "theta"};
}

RunConfig RunConfig::from(const KeyValueConfig& kv) {
  RunConfig c;
  const auto& v = kv.values();
  auto has = [&](const char* k) { return v.count(k) > 0; };
  if (has("grid.n")) c.grid.n1 = c.grid.n2 = kv.get_int("grid.n");
  if (has("grid.n1")) c.grid.n1 = kv.get_int("grid.n1");
  if (has("grid.n2")) c.grid.n2 = kv.get_int("grid.n2");
  if (has("grid.box")) c.grid.L1 = c.grid.L2 = kv.get_double("grid.box");
  if (has("grid.box1")) c.grid.L1 = kv.get_double("grid.box1");
  if (has("grid.box2")) c.grid.L2 = kv.get_double("grid.box2");
  if (has("dt")) c.dt = kv.get_double("dt");
  if (has("t_end")) c.t_end = kv.get_double("t_end");
  if (has("init.kind")) c.init_kind = kv.get_string("init.kind");
  if (has("init.b0")) c.b0 = kv.get_double("init.b0");
  if (has("init.amp")) c.amp = kv.get_double("init.amp");
  if (has("init.lambda0")) c.lambda0 = kv.get_double("init.lambda0");
  if (has("init.x1")) c.x1 = kv.get_double("init.x1");
  if (has("init.x2")) c.x2 = kv.get_double("init.x2");
  if (has("cadence")) c.cadence = kv.get_int("cadence");
  if (has("lambda_stop")) c.lambda_stop = kv.get_double("lambda_stop");
  if (has("scheme")) {
    const std::string s = kv.get_string("scheme");
    if (s == "etdrk4")
      c.scheme = Scheme::ETDRK4;
    else if (s == "ifrk4")
      c.scheme = Scheme::IFRK4;
    else
      throw ConfigError("scheme must be etdrk4 or ifrk4, got '" + s + "'");
  }
  if (has("theta") && kv.get_string("theta") != "auto") c.theta = kv.get_double("theta");
  if (c.init_kind != "soliton" && c.init_kind != "qb" && c.init_kind != "scaled")
    throw ConfigError("init must be soliton, qb or scaled, got '" + c.init_kind + "'");
  if (!(c.dt > 0.0) || !(c.t_end > 0.0)) throw ConfigError("dt and t_end must be positive");
  if (c.cadence < 1) throw ConfigError("cadence must be at least 1");
  if (!(c.lambda0 > 0.0)) throw ConfigError("lambda0 must be positive");
  return c;
}

RunResult run(const RunConfig& cfg, const ModulationReference& ref, const SampleObserver& observer) {
  const Grid2D g = cfg.grid.grid();
  ZkSolver solver(g, cfg.scheme);
  const double b_init = cfg.init_kind == "qb" ? cfg.b0 : 0.0;
  Field2D u0 = ref.sample_Qb(g, cfg.lambda0, cfg.x1, cfg.x2, b_init);
  if (cfg.init_kind == "scaled")
    for (double& v : u0.values) v *= cfg.amp;
  SimState st = solver.make_state(u0);
  double grad0 = 0.0;
  {
    Fft2D fft(g);
    const Field2D a = spectral_derivative(fft, st.u, 1, 0), b = spectral_derivative(fft, st.u, 0, 1);
    grad0 = 0.5 * (inner(a, a) + inner(b, b));
  }

  RunResult res;
  res.theta = cfg.theta.value_or(ref.theta());
  ModulationState mod;
  mod.lambda = cfg.lambda0;
  mod.x1 = cfg.x1;
  mod.x2 = cfg.x2;
  mod.b = b_init;
  double s_acc = 0.0;

  auto sample = [&]() -> bool {
    try {
      mod = modulation_decompose(ref, st.u, mod, static_cast<bool>(observer));
    } catch (const DecompositionFailed&) {
      res.stop_reason = "decomposition_failed";
      return false;
    }
    const TubeDistance td = tube_distance(ref, st.u, mod.lambda, mod.x1, mod.x2);
    const Conserved c = solver.conserved(st.u);
    RunSample rs;
    rs.t = st.t;
    rs.lambda = mod.lambda;
    rs.b = mod.b;
    rs.x1 = mod.x1;
    rs.x2 = mod.x2;
    rs.mass = c.mass;
    rs.energy = c.energy;
    rs.tube = td.distance;
    rs.b_over_lambda_theta = mod.b / std::pow(mod.lambda, res.theta);
    if (!res.series.empty()) {
      const RunSample& p = res.series.back();
      s_acc += 0.5 * (rs.t - p.t) * (1.0 / std::pow(p.lambda, 3) + 1.0 / std::pow(rs.lambda, 3));
    }
    rs.s = s_acc;
    res.max_mass_drift = std::max(res.max_mass_drift, std::abs(c.mass - st.mass0) / st.mass0);
    res.max_energy_drift = std::max(res.max_energy_drift, std::abs(c.energy - st.energy0) / grad0);
    res.series.push_back(rs);
    if (observer) observer(rs, mod);
    return true;
  };

  if (sample()) {
    for (;;) {
      if (res.series.back().lambda < cfg.lambda_stop) {
        res.stop_reason = "lambda_stop";
        break;
      }
      if (st.t >= cfg.t_end - 1e-12) {
        res.stop_reason = "t_end";
        break;
      }
      try {
        for (int k = 0; k < cfg.cadence && st.t < cfg.t_end - 1e-12; ++k)
          solver.step(st, std::min(cfg.dt, cfg.t_end - st.t));
      } catch (const BlowupDetected&) {
        res.stop_reason = "blowup_detected";
        break;
      }
      if (!sample()) break;
    }
  }

  // Power-law fit of lambda once it has dropped below 0.7 and keeps decreasing.
  std::vector<double> ft, fl;
  for (const RunSample& r : res.series)
    if (r.lambda < 0.7) {
      ft.push_back(r.t);
      fl.push_back(r.lambda);
    }
  bool monotone = ft.size() >= 5;
  for (std::size_t k = 1; monotone && k < fl.size(); ++k) monotone = fl[k] < fl[k - 1];
  if (monotone) {
    try {
      res.fit = fit_power_law(ft, fl);
    } catch (const DomainError&) {
    }
  }
  return res;
}

std::string run_series_csv(const RunResult& r) {
  CsvWriter w({"t", "lambda", "b", "x1", "x2", "mass", "energy", "tube", "b_over_lambda_theta", "s"});
  for (const RunSample& s : r.series)
    w.row({s.t, s.lambda, s.b, s.x1, s.x2, s.mass, s.energy, s.tube, s.b_over_lambda_theta, s.s});
  return w.str();
}

std::string run_report_json(const RunResult& r, const RunConfig& cfg) {
  nlohmann::ordered_json j;
  j["stop_reason"] = r.stop_reason;
  j["theta"] = r.theta;
  j["samples"] = r.series.size();
  j["t_final"] = r.series.empty() ? 0.0 : r.series.back().t;
  j["max_mass_drift"] = r.max_mass_drift;
  j["max_energy_drift"] = r.max_energy_drift;
  if (r.fit) {
    j["fit"] = {{"T", r.fit->T}, {"c", r.fit->c}, {"p", r.fit->p}, {"rms", r.fit->rms}};
    j["predicted_exponent"] = 1.0 / (3.0 - r.theta);
  } else {
    j["fit"] = nullptr;
  }
  j["config"] = {{"n1", cfg.grid.n1}, {"n2", cfg.grid.n2}, {"L1", cfg.grid.L1}, {"L2", cfg.grid.L2},
                 {"dt", cfg.dt}, {"t_end", cfg.t_end}, {"init", cfg.init_kind}, {"b0", cfg.b0},
                 {"amp", cfg.amp}, {"lambda0", cfg.lambda0}, {"x1", cfg.x1}, {"x2", cfg.x2},
                 {"scheme", cfg.scheme == Scheme::ETDRK4 ? "etdrk4" : "ifrk4"}};
  return j.dump(2);
}

}  // namespace zk
