#include "zk/groundstate.hpp"

#include <cmath>
#include <numbers>
#include <sstream>

#include "zk/errors.hpp"

namespace zk {

RadialGrid RadialGrid::make(double dr, double rmax) {
  if (!(dr > 0.0) || !(rmax > 0.0)) throw ConfigError("radial grid needs dr > 0 and rmax > 0");
  RadialGrid g;
  g.dr = dr;
  g.n = static_cast<int>(std::llround(rmax / dr)) + 1;
  g.rmax = (g.n - 1) * dr;
  return g;
}

void RadialGrid::validate() const {
  if (!(dr > 0.0)) throw ConfigError("radial grid: dr must be positive");
  if (n < 3) throw ConfigError("radial grid: at least 3 points required");
  if (std::abs(rmax - (n - 1) * dr) > 1e-9 * rmax) throw ConfigError("radial grid: rmax != (n-1) dr");
}

std::vector<double> Tridiagonal::apply(const std::vector<double>& f) const {
  const std::size_t n = diag.size();
  std::vector<double> out(n);
  for (std::size_t k = 0; k < n; ++k) {
    double v = diag[k] * f[k];
    if (k > 0) v += sub[k] * f[k - 1];
    if (k + 1 < n) v += sup[k] * f[k + 1];
    out[k] = v;
  }
  return out;
}

TridiagonalSolver::TridiagonalSolver(const Tridiagonal& t) : sub_(t.sub), diag_(t.diag), sup_(t.sup) {
  const std::size_t n = diag_.size();
  for (std::size_t k = 1; k < n; ++k) {
    if (diag_[k - 1] == 0.0) throw NumericalFailure("tridiagonal factorization: zero pivot");
    sub_[k] /= diag_[k - 1];
    diag_[k] -= sub_[k] * sup_[k - 1];
  }
  if (diag_[n - 1] == 0.0) throw NumericalFailure("tridiagonal factorization: zero pivot");
}

std::vector<double> TridiagonalSolver::solve(const std::vector<double>& rhs) const {
  const std::size_t n = diag_.size();
  std::vector<double> x(rhs);
  for (std::size_t k = 1; k < n; ++k) x[k] -= sub_[k] * x[k - 1];
  x[n - 1] /= diag_[n - 1];
  for (std::size_t k = n - 1; k-- > 0;) x[k] = (x[k] - sup_[k] * x[k + 1]) / diag_[k];
  return x;
}

int origin_rows(const RadialGrid& grid) {
  const double r = std::min(1.0 / grid.rmax, 0.1);
  return std::max(static_cast<int>(std::llround(r / grid.dr)), 1);
}

Tridiagonal build_radial_operator(const RadialGrid& grid, OriginStencil stencil, double origin_value) {
  if (grid.n < 3) throw ConfigError("radial operator needs at least 3 grid points");
  const int n = grid.n;
  const double dr = grid.dr;
  const double inv2 = 1.0 / (dr * dr);
  Tridiagonal t;
  t.sub.assign(n, inv2);
  t.sup.assign(n, inv2);
  t.diag.assign(n, -2.0 * inv2 - 1.0);
  t.sub[0] = 0.0;
  t.sup[n - 1] = 0.0;
  if (stencil == OriginStencil::Reflecting) {
    t.diag[0] = -4.0 * inv2 - 1.0;
    t.sup[0] = 4.0 * inv2;
    for (int k = 1; k < n; ++k) {
      const double c = 1.0 / (2.0 * dr * grid.r(k));
      t.sub[k] -= c;
      if (k + 1 < n) t.sup[k] += c;
    }
    return t;
  }
  const int i0 = origin_rows(grid);
  t.sup[0] = 2.0 * inv2;
  for (int k = i0; k < n; ++k) {
    const double c = 1.0 / (2.0 * dr * grid.r(k));
    t.sub[k] -= c;
    if (k + 1 < n) t.sup[k] += c;
  }
  const double R0 = origin_value;
  const double p2 = R0 * (1.0 - R0 * R0) / 2.0;
  const double p4 = 3.0 * p2 * (1.0 - 3.0 * R0 * R0) / 4.0;
  for (int k = 0; k < std::min(i0, n); ++k) {
    const double r = grid.r(k);
    t.diag[k] += p2 + r * r * p4 / 6.0;
  }
  return t;
}

StepResult renormalization_step(const RadialProfile& R, const TridiagonalSolver& op) {
  const RadialGrid& g = R.grid;
  std::vector<double> cube(g.n);
  for (int k = 0; k < g.n; ++k) cube[k] = R.values[k] * R.values[k] * R.values[k];
  const std::vector<double> w = op.solve(cube);
  double sl = 0.0, sr = 0.0;
  for (int k = 0; k < g.n; ++k) {
    const double rdr = g.r(k) * g.dr;
    sl += rdr * R.values[k] * R.values[k];
    sr -= rdr * R.values[k] * w[k];
  }
  if (sr == 0.0) throw NumericalFailure("renormalization step: degenerate iterate (S_R = 0)");
  if (!std::isfinite(sr)) throw NumericalFailure("renormalization step: non-finite pairing");
  StepResult s;
  s.factor = std::pow(std::abs(sl / sr), 1.5);
  s.next.grid = g;
  s.next.values.resize(g.n);
  for (int k = 0; k < g.n; ++k) s.next.values[k] = -s.factor * w[k];
  return s;
}

void SolverConfig::validate() const {
  if (max_iterations < 1) throw ConfigError("max_iterations must be >= 1");
  if (!(tolerance > 0.0)) throw ConfigError("tolerance must be positive");
}

RadialProfile default_seed(const RadialGrid& grid) {
  RadialProfile p;
  p.grid = grid;
  p.values.resize(grid.n);
  for (int k = 0; k < grid.n; ++k) {
    const double r = grid.r(k);
    p.values[k] = r * std::exp(-r * r);
  }
  return p;
}

GroundStateReport solve_ground_state(const SolverConfig& config, const RadialGrid& grid) {
  config.validate();
  grid.validate();
  RadialProfile R = config.initial_guess ? *config.initial_guess : default_seed(grid);
  if (R.values.size() != static_cast<std::size_t>(grid.n))
    throw ConfigError("initial guess does not match the grid");
  R.grid = grid;

  std::optional<TridiagonalSolver> fixed;
  if (config.stencil == OriginStencil::Reflecting)
    fixed.emplace(build_radial_operator(grid, OriginStencil::Reflecting));

  GroundStateReport rep;
  for (int it = 1; it <= config.max_iterations; ++it) {
    StepResult s = [&] {
      if (fixed) return renormalization_step(R, *fixed);
      TridiagonalSolver op(build_radial_operator(grid, OriginStencil::Taylor, R.values[0]));
      return renormalization_step(R, op);
    }();
    double change = 0.0;
    for (int k = 0; k < grid.n; ++k) {
      const double v = s.next.values[k];
      if (!std::isfinite(v)) {
        std::ostringstream os;
        os << "ground state iteration produced a non-finite value at iteration " << it;
        throw NumericalFailure(os.str());
      }
      change = std::max(change, std::abs(v - R.values[k]));
    }
    R = std::move(s.next);
    rep.iterations = it;
    rep.last_step_change = change;
    if (change <= config.tolerance) {
      rep.converged = true;
      break;
    }
  }
  rep.Q = R;

  const Tridiagonal L = build_radial_operator(grid, config.stencil, R.values[0]);
  std::vector<double> res = L.apply(R.values);
  for (int k = 0; k < grid.n; ++k) {
    res[k] += R.values[k] * R.values[k] * R.values[k];
    res[k] *= res[k];
  }
  rep.residual = std::sqrt(std::max(radial_integral(res, grid), 0.0));
  const RadialInvariants inv = radial_invariants(R);
  rep.mass = inv.mass;
  rep.energy = inv.energy;
  rep.identity_gaps = pohozaev_report(R);
  return rep;
}

double radial_integral(const std::vector<double>& g, const RadialGrid& grid) {
  const int n = grid.n;
  if (static_cast<int>(g.size()) != n || n < 3) throw DomainError("radial_integral: size mismatch");
  std::vector<double> f(n);
  for (int k = 0; k < n; ++k) f[k] = grid.r(k) * g[k];
  double t = 0.0;
  for (int k = 0; k < n; ++k) t += f[k];
  t -= 0.5 * (f[0] + f[n - 1]);
  t *= grid.dr;
  const double d0 = f[1] - f[0], dn = f[n - 1] - f[n - 2];
  const double dd0 = f[2] - 2.0 * f[1] + f[0], ddn = f[n - 1] - 2.0 * f[n - 2] + f[n - 3];
  const double gsum = t - grid.dr / 12.0 * (dn - d0) - grid.dr / 24.0 * (ddn + dd0);
  return 2.0 * std::numbers::pi * gsum;
}

std::vector<double> radial_derivative(const RadialProfile& f) {
  const int n = f.grid.n;
  const double dr = f.grid.dr;
  const std::vector<double>& q = f.values;
  if (n < 5) throw DomainError("radial_derivative needs at least 5 points");
  std::vector<double> d(n);
  d[0] = 0.0;
  d[1] = (-q[3] + 8.0 * q[2] - 8.0 * q[0] + q[1]) / (12.0 * dr);
  for (int k = 2; k <= n - 3; ++k)
    d[k] = (-q[k + 2] + 8.0 * q[k + 1] - 8.0 * q[k - 1] + q[k - 2]) / (12.0 * dr);
  d[n - 2] = (q[n - 1] - q[n - 3]) / (2.0 * dr);
  d[n - 1] = (q[n - 1] - q[n - 2]) / dr;
  return d;
}

RadialInvariants radial_invariants(const RadialProfile& Q) {
  const RadialGrid& g = Q.grid;
  const std::vector<double> dq = radial_derivative(Q);
  std::vector<double> q2(g.n), g2(g.n), q4(g.n), ql(g.n);
  for (int k = 0; k < g.n; ++k) {
    const double q = Q.values[k];
    q2[k] = q * q;
    g2[k] = dq[k] * dq[k];
    q4[k] = q2[k] * q2[k];
    ql[k] = q * (q + g.r(k) * dq[k]);
  }
  RadialInvariants inv;
  inv.mass = radial_integral(q2, g);
  inv.grad2 = radial_integral(g2, g);
  inv.l4 = radial_integral(q4, g);
  inv.q_lambda_q = radial_integral(ql, g);
  inv.energy = 0.5 * inv.grad2 - 0.25 * inv.l4;
  return inv;
}

std::map<std::string, double> pohozaev_report(const RadialProfile& Q) {
  for (double v : Q.values)
    if (!std::isfinite(v)) throw NumericalFailure("pohozaev_report: non-finite profile");
  const RadialInvariants inv = radial_invariants(Q);
  std::map<std::string, double> gaps;
  gaps["energy"] = std::abs(inv.energy) / inv.grad2;
  gaps["l4_vs_2grad"] = std::abs(inv.l4 - 2.0 * inv.grad2) / inv.l4;
  gaps["grad_mass_vs_l4"] = std::abs(inv.grad2 + inv.mass - inv.l4) / inv.l4;
  gaps["grad_vs_mass"] = std::abs(inv.grad2 - inv.mass) / inv.mass;
  gaps["q_lambda_q"] = std::abs(inv.q_lambda_q) / inv.mass;
  return gaps;
}

Field2D to_cartesian(const RadialProfile& Q, const Grid2D& grid, bool allow_outside) {
  const double xa = std::max(std::abs(grid.x(0)), std::abs(grid.x(grid.n1 - 1)));
  const double ya = std::max(std::abs(grid.y(0)), std::abs(grid.y(grid.n2 - 1)));
  if (!allow_outside && std::hypot(xa, ya) > Q.grid.rmax + 1e-12)
    throw DomainError("to_cartesian: box corners exceed rmax");
  const RadialInterpolant f = Q.interpolant();
  Field2D out(grid);
  for (int i = 0; i < grid.n1; ++i)
    for (int j = 0; j < grid.n2; ++j) out(i, j) = f(std::hypot(grid.x(i), grid.y(j)));
  return out;
}

}  // namespace zk
