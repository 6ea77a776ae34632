// Acceptance runner: one PASS/FAIL line per criterion. Arguments select criteria (default all).
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <functional>
#include <iostream>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "zk/dynamics.hpp"
#include "zk/functionals.hpp"
#include "zk/groundstate.hpp"
#include "zk/profiles.hpp"
#include "zk/simulator.hpp"
#include "zk/spectral.hpp"

using namespace zk;

namespace {

struct Outcome {
  bool pass = true;
  std::ostringstream detail;
  std::string failures;

  void check(bool ok, const std::string& what) {
    if (!ok) {
      pass = false;
      failures += " [fail: " + what + "]";
    }
  }
};

const ModulationReference& reference() {
  static const ModulationReference ref = [] {
    SolverConfig c;
    return ModulationReference(solve_ground_state(c, RadialGrid::make(0.01, 60.0)).Q);
  }();
  return ref;
}

// Independent mass of the ground state: shooting on Q(0) with RK4 in r.
double shooting_mass() {
  auto f = [](double r, double q, double p) { return -p / r + q - q * q * q; };
  auto march = [&](double a, double rend, double* mass) {
    const double h = 1e-3;
    double r = 1e-3, q = a + (a - a * a * a) * r * r / 4.0, p = (a - a * a * a) * r / 2.0;
    double m = 0.5 * a * a * r * r;
    while (r < rend) {
      const double k1q = p, k1p = f(r, q, p);
      const double k2q = p + 0.5 * h * k1p, k2p = f(r + 0.5 * h, q + 0.5 * h * k1q, p + 0.5 * h * k1p);
      const double k3q = p + 0.5 * h * k2p, k3p = f(r + 0.5 * h, q + 0.5 * h * k2q, p + 0.5 * h * k2p);
      const double k4q = p + h * k3p, k4p = f(r + h, q + h * k3q, p + h * k3p);
      const double qn = q + h / 6.0 * (k1q + 2 * k2q + 2 * k3q + k4q);
      const double pn = p + h / 6.0 * (k1p + 2 * k2p + 2 * k3p + k4p);
      m += 0.5 * h * (q * q * r + qn * qn * (r + h));
      q = qn;
      p = pn;
      r += h;
      if (!mass && q < 0.0) return 1;
      if (!mass && p > 0.0) return -1;
    }
    if (mass) *mass = 2.0 * M_PI * m;
    return 0;
  };
  double lo = 2.0, hi = 2.4;
  for (int it = 0; it < 60; ++it) {
    const double mid = 0.5 * (lo + hi);
    (march(mid, 30.0, nullptr) > 0 ? hi : lo) = mid;
  }
  double m = 0.0;
  march(0.5 * (lo + hi), 14.0, &m);
  return m;
}

const ThetaPipelineResult& flagship() {
  static const ThetaPipelineResult tp = theta_pipeline(0.01, 20.0);
  return tp;
}

Outcome c1() {
  Outcome o;
  const auto t0 = std::chrono::steady_clock::now();
  const double th = flagship().theta.theta;
  const double sec = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  o.detail << "theta=" << th << " (" << sec << " s)";
  o.check(th >= 1.655 && th <= 1.665, "theta outside [1.655, 1.665]");
  return o;
}

Outcome c2() {
  Outcome o;
  const std::vector<double> drs{0.05, 0.02, 0.01}, Ls{5, 10, 15, 20};
  const double table[3][4] = {{1.65849, 1.65849, 1.66112, 1.66112},
                              {1.67766, 1.65741, 1.66006, 1.66095},
                              {1.67862, 1.65703, 1.66112, 1.66032}};
  const auto cells = theta_table(drs, Ls);
  double worst = 0.0;
  int bad = 0;
  for (const ThetaCell& c : cells) {
    int i = 0, j = 0;
    while (drs[i] != c.dr) ++i;
    while (Ls[j] != c.L) ++j;
    const double err = c.ok ? std::abs(c.theta - table[i][j]) : INFINITY;
    worst = std::max(worst, err);
    if (!(err <= 0.01)) {
      ++bad;
      o.check(false, "dr=" + std::to_string(c.dr).substr(0, 4) + " L=" + std::to_string(int(c.L)) + " theta=" +
                         std::to_string(c.theta) + " table=" + std::to_string(table[i][j]));
    }
  }
  o.detail << cells.size() << " cells, max |err|=" << worst << ", outside tolerance: " << bad;
  return o;
}

Outcome c3() {
  Outcome o;
  const double beta = flagship().theta.beta;
  o.detail << "beta=" << beta;
  o.check(beta > 5.0 / 7.0 && beta < 5.0 / 6.0, "beta outside (5/7, 5/6)");
  return o;
}

Outcome c4() {
  Outcome o;
  SolverConfig c;
  const GroundStateReport gs = solve_ground_state(c, RadialGrid::make(0.01, 20.0));
  o.check(gs.converged, "ground state did not converge");
  double worst = 0.0;
  for (const auto& [k, v] : gs.identity_gaps) {
    worst = std::max(worst, v);
    o.check(v < 1e-4, k + " gap " + std::to_string(v));
  }
  const double ms = shooting_mass();
  const double rel = std::abs(gs.mass - ms) / ms;
  o.detail << "max identity gap=" << worst << ", mass=" << gs.mass << " shooting=" << ms << " rel=" << rel;
  o.check(rel < 1e-3, "mass differs from shooting oracle");
  return o;
}

Outcome c5() {
  Outcome o;
  const ModulationReference& ref = reference();
  const PProfile& P = ref.P();
  Fft2D fft(ref.profiles().grid);
  std::vector<LocalizedProfile> loc;
  for (double b : {0.1, 0.05, 0.025}) loc.push_back(build_localized(fft, ref.profiles(), P, b));
  const ThetaCrossCheck cc = theta_cross_check(P, loc, ref.profiles());
  const double gap = P.diagnostics.at("PQ_rel_gap");
  const double th = ref.theta();
  const double alt = std::abs(cc.theta_alt - th) / th;
  const double pg = flagship().parseval_gap;
  o.detail << "(P,Q) gap=" << gap << ", theta_alt=" << cc.theta_alt << " vs " << th << " (" << 100 * alt
           << "%), parseval=" << pg;
  o.check(gap < 1e-3, "(P,Q) vs quarter F^2");
  o.check(alt < 0.03, "theta_alt");
  o.check(pg < 1e-8, "parseval");
  return o;
}

Outcome c6() {
  Outcome o;
  const SpectralSuite a = run_spectral_suite(DirichletBox{20.0, 0.2});
  const SpectralSuite b = run_spectral_suite(DirichletBox{20.0, 0.1});
  for (const SpectralSuite* s : {&a, &b}) {
    const std::string h = "h=" + std::to_string(s->box.h).substr(0, 3);
    o.check(s->report.negative_count == 1, h + " negative count " + std::to_string(s->report.negative_count));
    o.check(s->report.near_zero_count == 2, h + " near-zero count " + std::to_string(s->report.near_zero_count));
  }
  o.detail << "near-kernel " << a.report.kernel_gap << " (thr " << a.report.threshold << ")";
  for (const char* k : {"L_Y", "L_Qcubed", "A_QdQ"}) {
    const double v0 = a.report.constrained_minima.at(k), v1 = b.report.constrained_minima.at(k);
    const double ch = std::abs(v1 - v0) / std::abs(v0);
    o.detail << ", " << k << "=" << v0 << "->" << v1;
    o.check(v0 > 0.0 && v1 > 0.0, std::string(k) + " not positive");
    o.check(ch < 0.1, std::string(k) + " refinement change " + std::to_string(ch));
  }
  o.detail << ", B_QdQ=" << a.report.constrained_minima.at("B_QdQ") << "->"
           << b.report.constrained_minima.at("B_QdQ") << " (reported)";
  return o;
}

Outcome c7() {
  Outcome o;
  const double theta = flagship().theta.theta;
  double worst_cf = 0.0, worst_inv = 0.0;
  for (double b0 : {0.1, -0.1, 0.02}) {
    const double tend = b0 > 0 ? 0.9 * blowup_time(b0, theta) : 10.0;
    const Trajectory tr = integrate(b0, theta, tend, 1e-3);
    o.check(!tr.singular, "unexpected singularity");
    for (const OdeState& s : tr.states) {
      const ClosedForm c = closed_form(b0, theta, s.t);
      worst_cf = std::max({worst_cf, std::abs(s.lambda / c.lambda - 1.0), std::abs(s.b / c.b - 1.0)});
      worst_inv = std::max(worst_inv, std::abs(s.b / std::pow(s.lambda, theta) / b0 - 1.0));
    }
  }
  const double b0 = 0.1, T = blowup_time(b0, theta);
  const Trajectory tr = integrate(b0, theta, 0.9999 * T, 1e-3);
  std::vector<double> t, y;
  for (const OdeState& s : tr.states)
    if (s.t > 0.5 * T) {
      t.push_back(s.t);
      y.push_back(s.lambda);
    }
  const PowerLawFit f = fit_power_law(t, y);
  const double tre = std::abs(f.T / T - 1.0);
  o.detail << "closed form rel=" << worst_cf << ", invariant rel=" << worst_inv << ", T fit=" << f.T << " vs " << T
           << " (rel " << tre << ")";
  o.check(worst_cf < 1e-6, "closed form");
  o.check(worst_inv < 1e-8, "invariant");
  o.check(tre < 1e-2, "blow-up time fit");
  return o;
}

Outcome c8() {
  Outcome o;
  // Linear plane wave.
  double phase = 0.0;
  {
    const Grid2D g = PeriodicGrid2D{64, 64, 2 * M_PI, 2 * M_PI}.grid();
    for (Scheme sc : {Scheme::IFRK4, Scheme::ETDRK4}) {
      ZkSolver s(g, sc, false);
      Field2D u(g);
      for (int i = 0; i < 64; ++i)
        for (int j = 0; j < 64; ++j) u(i, j) = std::cos(3 * g.x(i) + 2 * g.y(j));
      SimState st = s.make_state(u);
      const int steps = 100;
      for (int k = 0; k < steps; ++k) s.step(st, 0.01);
      double e = 0.0;
      for (int i = 0; i < 64; ++i)
        for (int j = 0; j < 64; ++j)
          e = std::max(e, std::abs(st.u(i, j) - std::cos(3 * g.x(i) + 2 * g.y(j) + 39.0 * st.t)));
      phase = std::max(phase, e / steps);
    }
  }
  o.check(phase < 1e-10, "plane wave phase");

  // Exact soliton over 10^4 steps.
  const ModulationReference& ref = reference();
  RunConfig cfg;
  cfg.grid = {256, 256, 40.0, 40.0};
  cfg.dt = 5e-4;
  cfg.t_end = 5.0;
  cfg.cadence = 250;
  cfg.x1 = -2.5;
  const RunResult r = run(cfg, ref);
  double ldrift = 0.0;
  double st = 0, sx = 0, stt = 0, stx = 0;
  for (const RunSample& s : r.series) {
    ldrift = std::max(ldrift, std::abs(s.lambda - 1.0));
    st += s.t;
    sx += s.x1;
    stt += s.t * s.t;
    stx += s.t * s.x1;
  }
  const double n = static_cast<double>(r.series.size());
  const double speed = (n * stx - st * sx) / (n * stt - st * st);
  o.check(r.stop_reason == "t_end", "soliton run stopped: " + r.stop_reason);
  o.check(ldrift < 1e-2, "lambda drift");
  o.check(std::abs(speed - 1.0) < 1e-2, "speed");
  o.check(r.max_mass_drift < 1e-8, "mass drift");
  o.check(r.max_energy_drift < 1e-8, "energy drift");

  // Planted decomposition.
  const Grid2D g = PeriodicGrid2D{256, 256, 40.0, 40.0}.grid();
  const Field2D u = ref.sample_Qb(g, 0.9, 1.3, -0.4, 0.05);
  ModulationState guess;
  guess.x1 = 1.0;
  const ModulationState m = modulation_decompose(ref, u, guess);
  const double perr = std::max({std::abs(m.lambda - 0.9), std::abs(m.x1 - 1.3), std::abs(m.x2 + 0.4),
                                std::abs(m.b - 0.05)});
  o.check(m.converged && perr < 1e-3, "planted parameters");

  o.detail << "phase/step=" << phase << ", lambda drift=" << ldrift << ", speed=" << speed
           << ", mass drift=" << r.max_mass_drift << ", energy drift=" << r.max_energy_drift
           << ", planted err=" << perr;
  return o;
}

RunResult blowup_run(double b0, double t_end) {
  RunConfig cfg;
  cfg.grid = {512, 256, 80.0, 40.0};
  cfg.dt = 0.002;
  cfg.t_end = t_end;
  cfg.init_kind = "qb";
  cfg.b0 = b0;
  cfg.x1 = -15.0;
  cfg.cadence = 50;
  cfg.scheme = Scheme::ETDRK4;
  cfg.lambda_stop = 0.5;
  return run(cfg, reference());
}

Outcome c9() {
  Outcome o;
  const RunResult pos = blowup_run(0.05, 40.0);
  double drift = 0.0;
  for (const RunSample& s : pos.series) drift = std::max(drift, std::abs(s.b_over_lambda_theta / 0.05 - 1.0));
  const double lend = pos.series.back().lambda;
  o.check(pos.stop_reason == "lambda_stop", "b0>0 run stopped: " + pos.stop_reason);
  o.check(drift < 0.1, "b/lambda^theta drift");

  auto decreases = [](const RunResult& r) {
    int d = 0;
    for (std::size_t k = 1; k < r.series.size(); ++k) d += r.series[k].lambda < r.series[k - 1].lambda;
    return d;
  };
  o.check(decreases(pos) == static_cast<int>(pos.series.size()) - 1, "lambda not decreasing for b0>0");

  const RunResult neg = blowup_run(-0.05, 5.0);
  o.check(decreases(neg) == 0 && neg.series.back().lambda > 1.0, "lambda not increasing for b0<0");

  const RunResult zero = blowup_run(0.0, 5.0);
  double zdev = 0.0;
  for (const RunSample& s : zero.series) zdev = std::max(zdev, std::abs(s.lambda - 1.0));
  o.check(zdev < 2e-2, "lambda left 1 for b0=0");

  o.detail << "b0=0.05: lambda 1->" << lend << " at t=" << pos.series.back().t << ", max b/lambda^theta drift "
           << 100 * drift << "%; b0=-0.05: lambda->" << neg.series.back().lambda << "; b0=0: max |lambda-1|="
           << zdev;
  return o;
}

Outcome c10() {
  Outcome o;
  const auto audit = weight_inequality_audit();
  int constants = 0, lesssim = 0;
  for (const AuditEntry& a : audit) {
    (a.kind == "constant" ? constants : lesssim)++;
    if (!a.pass) {
      std::ostringstream r;
      r << a.name << " ratio";
      for (double v : a.ratio) r << " " << v;
      o.check(false, r.str());
    }
  }

  const ModulationReference& ref = reference();
  const WeightFamily W(8.0);
  const double theta = ref.theta();
  LyapunovEvaluator ev(ref.profiles(), W, theta);
  const Grid2D& g = ref.profiles().grid;
  Field2D eps(g);
  for (int i = 0; i < g.n1; ++i)
    for (int j = 0; j < g.n2; ++j) {
      const double x = g.x(i) + 3.0, y = g.y(j) - 1.0;
      eps(i, j) = 0.03 * std::exp(-(x * x + y * y) / 5.0) * std::cos(0.7 * x);
    }
  const LyapunovSample s = ev.compute(eps, 1.0, 0.0, ref.profiles().Q);
  double idgap = 0.0;
  for (int i = 0; i < 2; ++i)
    for (int j = 0; j < 2; ++j) {
      const double J = std::pow(1.0 - s.J1, -2.0 * theta * j - 2.0 * (i + 1) - 12.0) - 1.0;
      idgap = std::max(idgap, std::abs(s.J[i][j] - J) / (1.0 + std::abs(J)));
      idgap = std::max(idgap, std::abs(s.M[i][j] - s.F[i][j] - std::pow(8.0, -20.0) * s.P) /
                                  (1e-300 + std::abs(s.M[i][j])));
    }
  o.check(idgap < 1e-13, "J/M identities");
  o.check(s.eta_residual < 1e-10, "eta residual");

  const CoercivityDraws cd = coercivity_draws(ev, ref.profiles(), 20, 0.1, 7);
  o.check(cd.all_positive, "M_ij not positive on every draw");

  o.detail << audit.size() << " audit checks (" << constants << " constant, " << lesssim
           << " lesssim), identity gap=" << idgap << ", eta residual=" << s.eta_residual
           << ", coercivity M/N in [" << cd.min_ratio << ", " << cd.max_ratio << "]";
  return o;
}

}  // namespace

int main(int argc, char** argv) {
  const std::vector<std::function<Outcome()>> criteria{c1, c2, c3, c4, c5, c6, c7, c8, c9, c10};
  std::set<int> pick;
  for (int k = 1; k < argc; ++k) pick.insert(std::atoi(argv[k]));
  int failed = 0;
  for (int k = 1; k <= static_cast<int>(criteria.size()); ++k) {
    if (!pick.empty() && !pick.count(k)) continue;
    const auto t0 = std::chrono::steady_clock::now();
    Outcome o;
    try {
      o = criteria[k - 1]();
    } catch (const std::exception& e) {
      o.pass = false;
      o.detail << "exception: " << e.what();
    }
    const double sec = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    failed += !o.pass;
    std::printf("criterion %2d: %s  %s  (%.1f s)\n", k, o.pass ? "PASS" : "FAIL",
                (o.detail.str() + o.failures).c_str(), sec);
    std::fflush(stdout);
  }
  return failed == 0 ? 0 : 1;
}
