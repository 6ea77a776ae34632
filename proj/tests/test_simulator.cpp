#include <gtest/gtest.h>

#include <cmath>
#include <limits>

#include "zk/errors.hpp"
#include "zk/simulator.hpp"

using namespace zk;

namespace {

const ModulationReference& reference() {
  static const ModulationReference ref = [] {
    SolverConfig c;
    return ModulationReference(solve_ground_state(c, RadialGrid::make(0.01, 60.0)).Q);
  }();
  return ref;
}

double grid_max_error(const Field2D& a, const Field2D& b) {
  double e = 0.0;
  for (std::size_t k = 0; k < a.values.size(); ++k) e = std::max(e, std::abs(a.values[k] - b.values[k]));
  return e;
}

}  // namespace

TEST(PeriodicGrid2D, Validation) {
  EXPECT_THROW((PeriodicGrid2D{15, 16, 1.0, 1.0}).grid(), ConfigError);
  EXPECT_THROW((PeriodicGrid2D{8, 8, 1.0, 1.0}).grid(), ConfigError);
  EXPECT_THROW((PeriodicGrid2D{16, 16, 0.0, 1.0}).grid(), ConfigError);
  const Grid2D g = PeriodicGrid2D{32, 16, 8.0, 4.0}.grid();
  EXPECT_DOUBLE_EQ(g.x(0), -4.0);
  EXPECT_DOUBLE_EQ(g.h2, 0.25);
}

TEST(ZkSolver, LinearPlaneWavePhase) {
  // u = cos(k.y + w t) with w = k1 |k|^2 for u_t + d1 Delta u = 0.
  const Grid2D g = PeriodicGrid2D{64, 64, 2 * M_PI, 2 * M_PI}.grid();
  for (Scheme sc : {Scheme::IFRK4, Scheme::ETDRK4}) {
    ZkSolver s(g, sc, false);
    Field2D u(g);
    for (int i = 0; i < 64; ++i)
      for (int j = 0; j < 64; ++j) u(i, j) = std::cos(3 * g.x(i) + 2 * g.y(j));
    SimState st = s.make_state(u);
    const int steps = 100;
    for (int k = 0; k < steps; ++k) s.step(st, 0.01);
    Field2D ex(g);
    for (int i = 0; i < 64; ++i)
      for (int j = 0; j < 64; ++j) ex(i, j) = std::cos(3 * g.x(i) + 2 * g.y(j) + 3.0 * 13.0 * st.t);
    EXPECT_LT(grid_max_error(st.u, ex) / steps, 1e-10);
  }
}

TEST(ZkSolver, DealiasKeepsLowModes) {
  const Grid2D g = PeriodicGrid2D{32, 32, 2 * M_PI, 2 * M_PI}.grid();
  ZkSolver s(g);
  Field2D lo(g), hi(g);
  for (int i = 0; i < 32; ++i)
    for (int j = 0; j < 32; ++j) {
      lo(i, j) = std::sin(2 * g.x(i)) * std::cos(3 * g.y(j));
      hi(i, j) = std::cos(14 * g.x(i));
    }
  EXPECT_LT(grid_max_error(s.dealias(lo), lo), 1e-13);
  EXPECT_LT(norm2(s.dealias(hi)), 1e-12);
}

TEST(ZkSolver, ConservedOfPlaneWave) {
  const Grid2D g = PeriodicGrid2D{32, 32, 2 * M_PI, 2 * M_PI}.grid();
  ZkSolver s(g);
  Field2D u(g);
  for (int i = 0; i < 32; ++i)
    for (int j = 0; j < 32; ++j) u(i, j) = std::cos(g.x(i));
  const Conserved c = s.conserved(u);
  const double area = 4 * M_PI * M_PI;
  EXPECT_NEAR(c.mass, 0.5 * area, 1e-12);
  // (1/2) int sin^2 - (1/4) int cos^4 = area/4 - 3 area/32
  EXPECT_NEAR(c.energy, area / 4.0 - 3.0 * area / 32.0, 1e-12);
}

TEST(ZkSolver, NonFiniteStateThrows) {
  const Grid2D g = PeriodicGrid2D{16, 16, 1.0, 1.0}.grid();
  ZkSolver s(g);
  Field2D u(g, 0.0);
  u(3, 3) = std::numeric_limits<double>::quiet_NaN();
  SimState st = s.make_state(u);
  EXPECT_THROW(s.step(st, 0.01), BlowupDetected);
}

TEST(ZkSolver, CflLimit) {
  const Grid2D g = PeriodicGrid2D{64, 64, 20.0, 20.0}.grid();
  ZkSolver s(g);
  Field2D u(g, 0.0);
  u(10, 10) = 2.0;
  const double kmax = (2.0 / 3.0) * M_PI / g.h1;
  EXPECT_NEAR(s.cfl_limit(u, 0.5), 0.5 / (kmax * 4.0), 1e-12);
}

TEST(Modulation, JacobianAtGroundState) {
  const ModulationReference& ref = reference();
  const Grid2D g = PeriodicGrid2D{256, 256, 40.0, 40.0}.grid();
  const Jacobian4 J = modulation_jacobian(ref, ref.sample_Qb(g, 1.0, 0.0, 0.0, 0.0), ModulationState{});
  const double M = ref.mass();
  // (Lambda Q, Q^3) = (1/2) int Q^4 = int Q^2; b column pairs with (P, Q); translations with |d_k Q|^2 = M/2.
  EXPECT_NEAR(std::abs(J[0][0]) / M, 1.0, 1e-3);
  EXPECT_NEAR(std::abs(J[1][1]), 7.1678, 1e-2);
  EXPECT_NEAR(std::abs(J[2][2]) / (0.5 * M), 1.0, 1e-3);
  EXPECT_NEAR(std::abs(J[3][3]) / (0.5 * M), 1.0, 1e-3);
  EXPECT_LT(std::abs(J[2][3]), 1e-6);
}

TEST(Modulation, RecoversPlantedParameters) {
  const ModulationReference& ref = reference();
  const Grid2D g = PeriodicGrid2D{256, 256, 40.0, 40.0}.grid();
  const Field2D u = ref.sample_Qb(g, 0.9, 1.3, -0.4, 0.05);
  ModulationState guess;
  guess.x1 = 1.0;
  const ModulationState m = modulation_decompose(ref, u, guess, true);
  ASSERT_TRUE(m.converged);
  EXPECT_NEAR(m.lambda, 0.9, 1e-3);
  EXPECT_NEAR(m.x1, 1.3, 1e-3);
  EXPECT_NEAR(m.x2, -0.4, 1e-3);
  EXPECT_NEAR(m.b, 0.05, 1e-3);
  EXPECT_LT(norm2(m.epsilon), 1e-3);
}

TEST(Modulation, FarFromTubeFails) {
  const ModulationReference& ref = reference();
  const Grid2D g = PeriodicGrid2D{64, 64, 40.0, 40.0}.grid();
  Field2D u(g, 0.0);
  EXPECT_THROW(modulation_decompose(ref, u, ModulationState{}), DecompositionFailed);
}

TEST(TubeDistance, ScaledSoliton) {
  const ModulationReference& ref = reference();
  const Grid2D g = PeriodicGrid2D{128, 128, 40.0, 40.0}.grid();
  const Field2D Q = ref.sample_Qb(g, 1.0, 0.0, 0.0, 0.0);
  EXPECT_LT(tube_distance(ref, Q).distance, 1e-6);
  Field2D u = Q;
  for (double& v : u.values) v *= 1.05;
  // Scaling preserves the L2 norm, so the closest soliton is Q itself.
  const TubeDistance t = tube_distance(ref, u, 0.95, 0.2, -0.1);
  EXPECT_NEAR(t.distance, 0.05 * norm2(Q), 1e-4);
  EXPECT_NEAR(t.lambda, 1.0, 1e-3);
}

TEST(WeightedMoment, MatchesDirectSum) {
  const Grid2D g = Grid2D::periodic_box(128, 16, 40.0, 4.0);
  Field2D e(g);
  double direct = 0.0;
  for (int i = 0; i < g.n1; ++i)
    for (int j = 0; j < g.n2; ++j) {
      e(i, j) = std::exp(-0.1 * (g.x(i) - 5.0) * (g.x(i) - 5.0));
      if (g.x(i) > 0.0) direct += std::pow(g.x(i), 100.0) * e(i, j) * e(i, j) * g.cell();
    }
  EXPECT_NEAR(weighted_moment_log(e), std::log(direct), 1e-10);
  EXPECT_EQ(weighted_moment_log(Field2D(g, 0.0)), -INFINITY);
  Field2D big = e;
  for (double& v : big.values) v *= 1e200;
  EXPECT_EQ(weighted_moment(big), INFINITY);
}

TEST(RunConfig, ParsesKeys) {
  KeyValueConfig kv(RunConfig::keys(), {});
  kv.parse("grid.n = 64\ngrid.box1 = 30\ndt = 0.01\ninit.kind = qb\ninit.b0 = 0.02\nscheme = etdrk4\ntheta = auto\n");
  const RunConfig c = RunConfig::from(kv);
  EXPECT_EQ(c.grid.n1, 64);
  EXPECT_EQ(c.grid.n2, 64);
  EXPECT_DOUBLE_EQ(c.grid.L1, 30.0);
  EXPECT_EQ(c.scheme, Scheme::ETDRK4);
  EXPECT_FALSE(c.theta.has_value());
  kv.set("scheme=rk2");
  EXPECT_THROW(RunConfig::from(kv), ConfigError);
  kv.set("scheme=ifrk4");
  kv.set("init.kind=gauss");
  EXPECT_THROW(RunConfig::from(kv), ConfigError);
}

TEST(Run, SolitonTranslatesAndConserves) {
  const ModulationReference& ref = reference();
  RunConfig cfg;
  cfg.grid = {128, 128, 30.0, 30.0};
  cfg.dt = 0.005;
  cfg.t_end = 0.5;
  cfg.cadence = 20;
  const RunResult r = run(cfg, ref);
  EXPECT_EQ(r.stop_reason, "t_end");
  ASSERT_GE(r.series.size(), 5u);
  const RunSample& last = r.series.back();
  EXPECT_NEAR(last.t, 0.5, 1e-12);
  EXPECT_NEAR(last.lambda, 1.0, 1e-3);
  EXPECT_NEAR(last.x1, 0.5, 1e-2);
  EXPECT_LT(r.max_mass_drift, 1e-5);
  const std::string csv = run_series_csv(r);
  EXPECT_EQ(csv.substr(0, csv.find('\n')), "t,lambda,b,x1,x2,mass,energy,tube,b_over_lambda_theta,s");
}

TEST(Run, ObserverSeesEpsilon) {
  const ModulationReference& ref = reference();
  RunConfig cfg;
  cfg.grid = {128, 128, 30.0, 30.0};
  cfg.dt = 0.005;
  cfg.t_end = 0.1;
  cfg.cadence = 10;
  int calls = 0;
  run(cfg, ref, [&](const RunSample&, const ModulationState& ms) {
    ++calls;
    EXPECT_EQ(ms.epsilon.values.size(), ref.profiles().grid.size());
  });
  EXPECT_EQ(calls, 3);
}
