#include "zk/spectral.hpp"

#include <Eigen/Dense>
#include <cmath>
#include <json.hpp>
#include <numbers>

#include "zk/errors.hpp"
#include "zk/fft.hpp"
#include "zk/interp.hpp"
#include "zk/lobpcg.hpp"

namespace zk {

namespace {

using Eigen::VectorXd;

// Eigenvalues of -D2 (second difference, Dirichlet) on m interior nodes.
std::vector<double> dirichlet_symbols(int m, double h) {
  std::vector<double> lam(m);
  for (int k = 0; k < m; ++k) lam[k] = (2.0 - 2.0 * std::cos(std::numbers::pi * (k + 1) / (m + 1))) / (h * h);
  return lam;
}

// out = (-Delta_h + shift)^{-1} in by two sine transforms.
class DirichletSolver {
public:
  DirichletSolver(const Grid2D& g, double shift)
      : dst_(g.n1, g.n2), l1_(dirichlet_symbols(g.n1, g.h1)), l2_(dirichlet_symbols(g.n2, g.h2)),
        shift_(shift), buf_(g.size()) {}

  void solve(const double* in, double* out) {
    dst_.transform(in, buf_.data());
    const int n2 = dst_.m2();
    const double s = dst_.inverse_scale();
    for (int i = 0; i < dst_.m1(); ++i)
      for (int j = 0; j < n2; ++j) buf_[static_cast<std::size_t>(i) * n2 + j] *= s / (shift_ + l1_[i] + l2_[j]);
    dst_.transform(buf_.data(), out);
  }

private:
  Dst2D dst_;
  std::vector<double> l1_, l2_;
  double shift_;
  std::vector<double> buf_;
};

double grid_dot(const Field2D& a, const Field2D& b) { return inner(a, b); }

Field2D central_difference(const Field2D& f, int axis) {
  const Grid2D& g = f.grid;
  Field2D out(g);
  const double s = 1.0 / (2.0 * (axis == 0 ? g.h1 : g.h2));
  for (int i = 0; i < g.n1; ++i)
    for (int j = 0; j < g.n2; ++j) {
      double p, m;
      if (axis == 0) {
        p = i + 1 < g.n1 ? f(i + 1, j) : 0.0;
        m = i > 0 ? f(i - 1, j) : 0.0;
      } else {
        p = j + 1 < g.n2 ? f(i, j + 1) : 0.0;
        m = j > 0 ? f(i, j - 1) : 0.0;
      }
      out(i, j) = (p - m) * s;
    }
  return out;
}

Field2D to_field(const Grid2D& g, const VectorXd& v) {
  Field2D f(g);
  std::copy(v.data(), v.data() + v.size(), f.values.begin());
  return f;
}

double eigen_residual(const SymmetricOperator2D& op, const Field2D& v, double lambda) {
  const Field2D av = op.apply(v);
  double num = 0.0, den = 0.0;
  for (std::size_t k = 0; k < v.values.size(); ++k) {
    const double r = av.values[k] - lambda * v.values[k];
    num += r * r;
    den += v.values[k] * v.values[k];
  }
  return std::sqrt(num / den);
}

}  // namespace

int DirichletBox::m() const {
  if (!(L > 0.0) || !(h > 0.0)) throw ConfigError("Dirichlet box needs L > 0 and h > 0");
  const long n = std::lround(2.0 * L / h);
  if (std::abs(n * h - 2.0 * L) > 1e-9 * L) throw ConfigError("Dirichlet box: 2L must be a multiple of h");
  if (n < 4) throw ConfigError("Dirichlet box: too few nodes");
  return static_cast<int>(n - 1);
}

Grid2D DirichletBox::grid() const {
  Grid2D g;
  g.n1 = g.n2 = m();
  g.x0 = g.y0 = -L + h;
  g.h1 = g.h2 = h;
  g.periodic = false;
  return g;
}

DiscreteGroundState discrete_ground_state(const DirichletBox& box, const std::optional<RadialProfile>& seed) {
  const Grid2D g = box.grid();
  RadialProfile radial;
  if (seed) {
    radial = *seed;
  } else {
    SolverConfig cfg;
    radial = solve_ground_state(cfg, RadialGrid::make(0.01, std::ceil(box.L * std::sqrt(2.0)) + 2.0)).Q;
  }
  DiscreteGroundState out;
  out.Q = to_cartesian(radial, g, true);
  Field2D& Q = out.Q;

  Dst2D dst(g.n1, g.n2);
  const std::vector<double> l1 = dirichlet_symbols(g.n1, g.h1), l2 = dirichlet_symbols(g.n2, g.h2);
  const std::size_t n = g.size();
  std::vector<double> qh(n), ch(n), cube(n), next(n);
  double change = 0.0;
  int it = 0;
  for (; it < 500; ++it) {
    for (std::size_t k = 0; k < n; ++k) cube[k] = Q.values[k] * Q.values[k] * Q.values[k];
    dst.transform(Q.values.data(), qh.data());
    dst.transform(cube.data(), ch.data());
    double num = 0.0, den = 0.0;
    for (int i = 0; i < g.n1; ++i)
      for (int j = 0; j < g.n2; ++j) {
        const std::size_t k = g.index(i, j);
        num += (1.0 + l1[i] + l2[j]) * qh[k] * qh[k];
        den += qh[k] * ch[k];
      }
    if (!(den > 0.0)) throw NumericalFailure("discrete ground state: degenerate iterate");
    const double f = std::pow(num / den, 1.5) * dst.inverse_scale();
    for (int i = 0; i < g.n1; ++i)
      for (int j = 0; j < g.n2; ++j) ch[g.index(i, j)] *= f / (1.0 + l1[i] + l2[j]);
    dst.transform(ch.data(), next.data());
    change = 0.0;
    for (std::size_t k = 0; k < n; ++k) change = std::max(change, std::abs(next[k] - Q.values[k]));
    Q.values.swap(next);
    if (change < 1e-13) break;
  }
  if (change >= 1e-11) throw NumericalFailure("discrete ground state: Petviashvili iteration stalled");
  out.iterations = it + 1;
  const SymmetricOperator2D H = h1_gram(g);
  const Field2D hq = H.apply(Q);
  for (std::size_t k = 0; k < n; ++k)
    out.residual = std::max(out.residual, std::abs(hq.values[k] - Q.values[k] * Q.values[k] * Q.values[k]));
  out.Q1 = central_difference(Q, 0);
  out.Q2 = central_difference(Q, 1);
  return out;
}

SymmetricOperator2D::SymmetricOperator2D(Grid2D grid, double c11, double c22, Field2D potential,
                                         std::vector<Rank2Term> rank2)
    : grid_(grid), c11_(c11), c22_(c22), potential_(std::move(potential)), rank2_(std::move(rank2)) {
  if (potential_.values.size() != grid_.size()) throw ConfigError("operator: potential does not match the grid");
}

void SymmetricOperator2D::apply(const double* f, double* out) const {
  const int n1 = grid_.n1, n2 = grid_.n2;
  const double a = c11_ / (grid_.h1 * grid_.h1), b = c22_ / (grid_.h2 * grid_.h2);
  for (int i = 0; i < n1; ++i)
    for (int j = 0; j < n2; ++j) {
      const std::size_t k = grid_.index(i, j);
      const double c = f[k];
      const double e = i + 1 < n1 ? f[k + n2] : 0.0, w = i > 0 ? f[k - n2] : 0.0;
      const double nn = j + 1 < n2 ? f[k + 1] : 0.0, s = j > 0 ? f[k - 1] : 0.0;
      out[k] = -a * (e - 2.0 * c + w) - b * (nn - 2.0 * c + s) + potential_.values[k] * c;
    }
  const double cell = grid_.cell();
  for (const Rank2Term& t : rank2_) {
    double p = 0.0;
    for (std::size_t k = 0; k < grid_.size(); ++k) p += t.left.values[k] * f[k];
    p *= cell * t.coeff;
    for (std::size_t k = 0; k < grid_.size(); ++k) out[k] += p * t.right.values[k];
  }
}

Field2D SymmetricOperator2D::apply(const Field2D& f) const {
  Field2D out(grid_);
  apply(f.values.data(), out.values.data());
  return out;
}

SymmetricOperator2D SymmetricOperator2D::local_part() const {
  return SymmetricOperator2D(grid_, c11_, c22_, potential_);
}

SymmetricOperator2D assemble_L(const Field2D& Q) {
  Field2D V(Q.grid);
  for (std::size_t k = 0; k < V.values.size(); ++k) V.values[k] = 1.0 - 3.0 * Q.values[k] * Q.values[k];
  return SymmetricOperator2D(Q.grid, 1.0, 1.0, V);
}

SymmetricOperator2D assemble_A(const Field2D& Q, const Field2D& Q1) {
  const Grid2D& g = Q.grid;
  Field2D V(g), yQ(g), q2q1(g);
  for (int i = 0; i < g.n1; ++i)
    for (int j = 0; j < g.n2; ++j) {
      const double q = Q(i, j), y1 = g.x(i);
      V(i, j) = 0.5 - 1.5 * q * q - 3.0 * y1 * q * Q1(i, j);
      yQ(i, j) = y1 * q;
      q2q1(i, j) = q * q * Q1(i, j);
    }
  const double c = 3.0 / grid_dot(Q, Q);
  std::vector<Rank2Term> r2;
  r2.push_back({yQ, q2q1, c});
  r2.push_back({q2q1, yQ, c});
  return SymmetricOperator2D(g, 1.5, 0.5, V, std::move(r2));
}

SymmetricOperator2D assemble_B(const Field2D& Q, const Field2D& Q1) {
  const Grid2D& g = Q.grid;
  Field2D V(g);
  for (int i = 0; i < g.n1; ++i)
    for (int j = 0; j < g.n2; ++j) {
      const double q = Q(i, j);
      V(i, j) = 0.5 - 1.5 * q * q + 3.0 * g.x(i) * q * Q1(i, j);
    }
  return SymmetricOperator2D(g, 1.5, 0.5, V);
}

SymmetricOperator2D h1_gram(const Grid2D& grid) {
  return SymmetricOperator2D(grid, 1.0, 1.0, Field2D(grid, 1.0));
}

EigenPairs lowest_eigenpairs(const SymmetricOperator2D& op, int k, double tol) {
  const Grid2D& g = op.grid();
  const Eigen::Index n = static_cast<Eigen::Index>(g.size());
  auto solver = std::make_shared<DirichletSolver>(g, 1.0);
  VecOp A = [&](const VectorXd& v, VectorXd& out) { op.apply(v.data(), out.data()); };
  VecOp B = [](const VectorXd& v, VectorXd& out) { out = v; };
  VecOp T = [solver](const VectorXd& v, VectorXd& out) { solver->solve(v.data(), out.data()); };
  LobpcgOptions opts;
  opts.tolerance = tol;
  opts.block = k + 3;
  const LobpcgResult r = lobpcg(A, B, T, VecOp{}, n, k, opts);
  EigenPairs out;
  out.iterations = r.iterations;
  const double scale = 1.0 / std::sqrt(g.cell());
  for (int c = 0; c < k; ++c) {
    out.values.push_back(r.values[c]);
    Field2D v = to_field(g, r.vectors.col(c) * scale);
    out.residuals.push_back(eigen_residual(op, v, r.values[c]));
    out.vectors.push_back(std::move(v));
  }
  return out;
}

EigenReport lowest_spectrum(const SymmetricOperator2D& op, int k) {
  if (k < 3) throw ConfigError("lowest_spectrum needs k >= 3");
  const Grid2D& g = op.grid();
  EigenPairs ep = lowest_eigenpairs(op, k);
  EigenReport rep;
  rep.lowest_eigenvalues = ep.values;
  rep.residuals = ep.residuals;
  rep.threshold = 1.25 * g.h1 * g.h1;
  for (double v : ep.values) {
    if (v < -rep.threshold) ++rep.negative_count;
    else if (v <= rep.threshold) {
      ++rep.near_zero_count;
      rep.kernel_gap = std::max(rep.kernel_gap, std::abs(v));
    } else if (rep.first_positive == 0.0) {
      rep.first_positive = v;
    }
  }
  rep.mu0 = -ep.values[0];
  rep.Y = ep.vectors[0];
  const bool schrodinger = op.c11() == 1.0 && op.c22() == 1.0 && op.rank2_terms().empty();
  if (rep.mu0 > 0.0 && schrodinger) {
    DirichletSolver solver(g, 1.0 + rep.mu0);
    Field2D w(g);
    for (int sweep = 0; sweep < 4; ++sweep) {
      for (std::size_t q = 0; q < g.size(); ++q) w.values[q] = (1.0 - op.potential().values[q]) * rep.Y.values[q];
      solver.solve(w.values.data(), rep.Y.values.data());
      const double nrm = std::sqrt(norm2(rep.Y));
      for (double& v : rep.Y.values) v /= nrm;
    }
    rep.residuals[0] = eigen_residual(op, rep.Y, ep.values[0]);
  }
  const Field2D& Y = rep.Y;
  if (Y(g.n1 / 2, g.n2 / 2) < 0.0)
    for (double& v : rep.Y.values) v = -v;
  return rep;
}

ConstrainedMin constrained_rayleigh_min(const SymmetricOperator2D& op, const std::vector<Field2D>& constraints,
                                        double tol) {
  const Grid2D& g = op.grid();
  const Eigen::Index n = static_cast<Eigen::Index>(g.size());
  Eigen::MatrixXd C(n, static_cast<Eigen::Index>(constraints.size()));
  for (std::size_t c = 0; c < constraints.size(); ++c) {
    if (constraints[c].values.size() != g.size()) throw DomainError("constraint does not match the grid");
    C.col(static_cast<Eigen::Index>(c)) = Eigen::Map<const VectorXd>(constraints[c].values.data(), n);
  }
  Eigen::MatrixXd basis(n, C.cols());
  if (C.cols() > 0) {
    Eigen::HouseholderQR<Eigen::MatrixXd> qr(C);
    const Eigen::MatrixXd R = qr.matrixQR().topRows(C.cols()).triangularView<Eigen::Upper>();
    for (Eigen::Index c = 0; c < C.cols(); ++c)
      if (std::abs(R(c, c)) <= 1e-10 * std::max(C.col(c).norm(), 1e-300))
        throw DomainError("invalid constraints: fields are linearly dependent on the grid");
    basis = qr.householderQ() * Eigen::MatrixXd::Identity(n, C.cols());
  }
  const SymmetricOperator2D H = h1_gram(g);
  auto solver = std::make_shared<DirichletSolver>(g, 1.0);
  auto project = [basis](const VectorXd& v, VectorXd& out) {
    out = v;
    if (basis.cols() > 0) out -= basis * (basis.transpose() * v);
  };
  VecOp P = project;
  VecOp A = [&, project](const VectorXd& v, VectorXd& out) {
    VectorXd p(v.size()), a(v.size());
    project(v, p);
    op.apply(p.data(), a.data());
    project(a, out);
  };
  VecOp B = [&, project](const VectorXd& v, VectorXd& out) {
    VectorXd p(v.size()), a(v.size());
    project(v, p);
    H.apply(p.data(), a.data());
    project(a, out);
  };
  VecOp T = [solver, project](const VectorXd& v, VectorXd& out) {
    VectorXd p(v.size()), a(v.size());
    project(v, p);
    solver->solve(p.data(), a.data());
    project(a, out);
  };
  LobpcgOptions opts;
  opts.tolerance = tol;
  opts.block = 4;
  const LobpcgResult r = lobpcg(A, B, T, P, n, 1, opts);
  ConstrainedMin out;
  out.value = r.values[0];
  out.residual = r.residuals[0];
  out.iterations = r.iterations;
  out.minimizer = to_field(g, r.vectors.col(0));
  return out;
}

SpectralSuite run_spectral_suite(const DirichletBox& box, const std::optional<RadialProfile>& seed) {
  SpectralSuite s;
  s.box = box;
  s.ground = discrete_ground_state(box, seed);
  const Field2D& Q = s.ground.Q;
  const SymmetricOperator2D L = assemble_L(Q);
  s.report = lowest_spectrum(L, 6);
  Field2D cube(Q.grid);
  for (std::size_t k = 0; k < cube.values.size(); ++k) cube.values[k] = Q.values[k] * Q.values[k] * Q.values[k];
  const std::vector<Field2D> grad{s.ground.Q1, s.ground.Q2};
  auto with = [&](const Field2D& f) {
    std::vector<Field2D> c{f};
    c.insert(c.end(), grad.begin(), grad.end());
    return c;
  };
  auto& m = s.report.constrained_minima;
  m["L_none"] = constrained_rayleigh_min(L, {}).value;
  m["L_Y"] = constrained_rayleigh_min(L, with(s.report.Y)).value;
  m["L_Qcubed"] = constrained_rayleigh_min(L, with(cube)).value;
  m["A_QdQ"] = constrained_rayleigh_min(assemble_A(Q, s.ground.Q1), with(Q)).value;
  m["B_QdQ"] = constrained_rayleigh_min(assemble_B(Q, s.ground.Q1), with(Q)).value;
  return s;
}

std::string spectral_report_json(const SpectralSuite& s) {
  nlohmann::ordered_json j;
  j["mu0"] = s.report.mu0;
  j["kernel_gap"] = s.report.kernel_gap;
  j["threshold"] = s.report.threshold;
  j["negative_count"] = s.report.negative_count;
  j["near_zero_count"] = s.report.near_zero_count;
  j["first_positive"] = s.report.first_positive;
  j["lowest_eigenvalues"] = s.report.lowest_eigenvalues;
  j["eigen_residuals"] = s.report.residuals;
  j["constrained_minima"] = s.report.constrained_minima;
  j["grid"] = {{"h", s.box.h}, {"box", {-s.box.L, s.box.L}}, {"interior_nodes", s.box.m()}};
  j["ground_state"] = {{"iterations", s.ground.iterations}, {"residual", s.ground.residual}};
  return j.dump(2);
}

}  // namespace zk
