// zklab: command-line front end. Every command writes its outputs and a manifest.json
// into --out (default out/<command>).

#include <CLI11.hpp>
#include <chrono>
#include <cstdio>
#include <filesystem>
#include <functional>
#include <iostream>
#include <json.hpp>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "zk/dynamics.hpp"
#include "zk/errors.hpp"
#include "zk/functionals.hpp"
#include "zk/groundstate.hpp"
#include "zk/io.hpp"
#include "zk/profiles.hpp"
#include "zk/simulator.hpp"
#include "zk/spectral.hpp"

namespace fs = std::filesystem;
using json = nlohmann::ordered_json;
using namespace zk;

namespace {

struct Output {
  std::string dir;
  std::vector<std::string> files;

  void write(const std::string& name, const std::string& content) {
    const std::string p = (fs::path(dir) / name).string();
    write_text(p, content);
    files.push_back(p);
  }
};

using Handler = std::function<void(const KeyValueConfig&, Output&)>;

struct Command {
  std::string name;
  std::string help;
  std::map<std::string, std::string> defaults;
  std::set<std::string> extra_keys;  // allowed without a default
  Handler run;
};

OriginStencil stencil_of(const std::string& s) {
  if (s == "taylor") return OriginStencil::Taylor;
  if (s == "reflecting") return OriginStencil::Reflecting;
  throw ConfigError("stencil must be taylor or reflecting, got '" + s + "'");
}

// Radial Q on the wide grid used by the two-dimensional profiles and the simulator.
RadialProfile wide_ground_state() {
  SolverConfig c;
  GroundStateReport gs = solve_ground_state(c, RadialGrid::make(0.01, 60.0));
  if (!gs.converged) throw NumericalFailure("radial ground state did not converge");
  return gs.Q;
}

void cmd_ground_state(const KeyValueConfig& kv, Output& out) {
  SolverConfig c;
  c.tolerance = kv.get_double("tolerance");
  c.max_iterations = kv.get_int("max_iterations");
  c.stencil = stencil_of(kv.get_string("stencil"));
  c.validate();
  const GroundStateReport gs = solve_ground_state(c, RadialGrid::make(kv.get_double("dr"), kv.get_double("rmax")));
  CsvWriter w({"r", "Q"});
  for (int k = 0; k < gs.Q.grid.n; ++k) w.row({gs.Q.grid.r(k), gs.Q.values[k]});
  out.write("ground_state.csv", w.str());
  const RadialInvariants inv = radial_invariants(gs.Q);
  json j;
  j["converged"] = gs.converged;
  j["iterations"] = gs.iterations;
  j["last_step_change"] = gs.last_step_change;
  j["residual"] = gs.residual;
  j["Q0"] = gs.Q.values[0];
  j["mass"] = gs.mass;
  j["energy"] = gs.energy;
  j["grad2"] = inv.grad2;
  j["l4"] = inv.l4;
  j["q_lambda_q"] = inv.q_lambda_q;
  j["identity_gaps"] = gs.identity_gaps;
  out.write("ground_state.json", j.dump(2));
  if (!gs.converged) throw NumericalFailure("ground state iteration did not reach the tolerance");
}

void cmd_theta_table(const KeyValueConfig& kv, Output& out) {
  const auto cells = theta_table(parse_double_list(kv.get_string("dr")), parse_double_list(kv.get_string("L")),
                                 stencil_of(kv.get_string("stencil")));
  CsvWriter w({"dr", "L", "theta", "beta", "iterations", "ok", "error"});
  bool all = true;
  for (const ThetaCell& c : cells) {
    all = all && c.ok;
    const std::string th = c.ok ? format_double(c.theta) : "nan";
    const std::string be = c.ok ? format_double(1.0 / (3.0 - c.theta)) : "nan";
    w.row_text({format_double(c.dr), format_double(c.L), th, be, std::to_string(c.iterations), c.ok ? "1" : "0",
                c.error});
  }
  out.write("theta_table.csv", w.str());
  if (!all) throw NumericalFailure("at least one theta cell failed");
}

void cmd_profiles(const KeyValueConfig& kv, Output& out) {
  const ThetaPipelineResult tp =
      theta_pipeline(kv.get_double("dr"), kv.get_double("rmax"), stencil_of(kv.get_string("stencil")));
  CsvWriter fw({"y2", "F"});
  for (int k = 0; k < tp.F.size(); ++k) fw.row({tp.F.x(k), tp.F.values[k]});
  out.write("F.csv", fw.str());
  json j;
  j["theta"] = tp.theta.theta;
  j["beta"] = tp.theta.beta;
  j["I0"] = tp.theta.I0;
  j["I1"] = tp.theta.I1;
  j["parseval_gap"] = tp.parseval_gap;
  j["symmetrization_change"] = tp.symmetrization_change;
  j["ground_state"] = {{"iterations", tp.ground_state.iterations}, {"mass", tp.ground_state.mass},
                       {"identity_gaps", tp.ground_state.identity_gaps}};

  if (kv.get_int("two_d") != 0) {
    ProfileBox box;
    box.h = kv.get_double("box.h");
    const ReferenceProfiles ref = build_reference(wide_ground_state(), box);
    Fft2D fft(ref.grid);
    const PProfile P = solve_P(fft, ref);
    std::vector<LocalizedProfile> loc;
    json lj = json::array();
    for (double b : parse_double_list(kv.get_string("b"))) {
      loc.push_back(build_localized(fft, ref, P, b));
      const LocalizedProfile& l = loc.back();
      lj.push_back({{"b", b}, {"psib_Q", l.psib_Q}, {"energy", l.energy}, {"mass", l.mass}});
    }
    const ThetaCrossCheck cc = theta_cross_check(P, loc, ref);
    j["two_d"] = {{"theta_grid", ref.theta.theta},
                  {"ground_residual", ref.ground_residual},
                  {"P", P.diagnostics},
                  {"localized", lj},
                  {"theta_alt", cc.theta_alt},
                  {"theta_alt_quarter_F", cc.theta_alt_quarter_F},
                  {"psiQ_limit", cc.psiQ_limit}};
    CsvWriter hw({"y2", "F", "F2", "h2"});
    for (int k = 0; k < ref.F.size(); ++k)
      hw.row({ref.F.x(k), ref.F.values[k], ref.F2.values[k], ref.h2.values[k]});
    out.write("profiles_y2.csv", hw.str());
  }
  out.write("profiles.json", j.dump(2));
}

void cmd_spectral(const KeyValueConfig& kv, Output& out) {
  DirichletBox box;
  box.L = kv.get_double("L");
  box.h = kv.get_double("h");
  const SpectralSuite s = run_spectral_suite(box);
  out.write("spectral.json", spectral_report_json(s));
}

void cmd_ode(const KeyValueConfig& kv, Output& out) {
  const double b0 = kv.get_double("b0"), theta = kv.get_double("theta");
  const Trajectory tr = integrate(b0, theta, kv.get_double("t_end"), kv.get_double("dt"), kv.get_double("lambda0"));
  out.write("trajectory.csv", trajectory_csv(tr, theta));
  json p = json::parse(prediction_json(predict(b0, theta), b0, theta));
  p["singular"] = tr.singular;
  p["message"] = tr.message;
  out.write("prediction.json", p.dump(2));
}

void cmd_simulate(const KeyValueConfig& kv, Output& out) {
  const RunConfig cfg = RunConfig::from(kv);
  const ModulationReference ref(wide_ground_state());
  const RunResult r = run(cfg, ref);
  out.write("series.csv", run_series_csv(r));
  out.write("report.json", run_report_json(r, cfg));
}

void cmd_lyapunov(const KeyValueConfig& kv, Output& out) {
  const double B = kv.get_double("B");
  AuditSpec spec;
  spec.points = kv.get_int("audit_points");
  const auto audit = weight_inequality_audit(spec);
  out.write("audit.csv", audit_csv(audit));

  const RunConfig cfg = RunConfig::from(kv);
  const ModulationReference ref(wide_ground_state());
  const double theta = cfg.theta ? *cfg.theta : ref.theta();
  const WeightFamily W(B);
  const LyapunovEvaluator ev(ref.profiles(), W, theta);
  const CoercivityDraws cd =
      coercivity_draws(ev, ref.profiles(), kv.get_int("draws"), kv.get_double("amplitude"), kv.get_int("seed"));
  const LyapunovSeries ls = lyapunov_series(cfg, ref, W, theta);
  out.write("lyapunov.csv", lyapunov_csv(ls));
  out.write("series.csv", run_series_csv(ls.run));

  json j;
  j["B"] = B;
  j["theta"] = theta;
  j["stop_reason"] = ls.run.stop_reason;
  j["nonincreasing_fraction"] = ls.nonincreasing_fraction;
  double worst_eta = 0.0;
  for (const LyapunovSample& s : ls.samples) worst_eta = std::max(worst_eta, s.eta_residual);
  j["max_eta_residual"] = worst_eta;
  j["coercivity"] = {{"draws", cd.M.size()},
                     {"all_positive", cd.all_positive},
                     {"min_M_over_N", cd.min_ratio},
                     {"max_M_over_N", cd.max_ratio}};
  json a = json::object();
  for (const AuditEntry& e : audit) a[e.name] = {{"kind", e.kind}, {"ratio", e.ratio}, {"pass", e.pass}};
  j["audit"] = a;
  out.write("lyapunov.json", j.dump(2));
}

std::vector<Command> commands() {
  std::vector<Command> c;
  c.push_back({"ground-state",
               "radial ground state and its identities",
               {{"dr", "0.01"}, {"rmax", "20"}, {"tolerance", "1e-10"}, {"max_iterations", "1000"},
                {"stencil", "reflecting"}},
               {},
               cmd_ground_state});
  c.push_back({"theta-table",
               "theta over a grid of (dr, L)",
               {{"dr", "0.05,0.02,0.01"}, {"L", "5,10,15,20"}, {"stencil", "taylor"}},
               {},
               cmd_theta_table});
  c.push_back({"profiles",
               "theta pipeline, P, Q_b and the cross-checks",
               {{"dr", "0.01"}, {"rmax", "20"}, {"stencil", "taylor"}, {"two_d", "1"}, {"box.h", "0.125"},
                {"b", "0.1,0.05,0.025"}},
               {},
               cmd_profiles});
  c.push_back({"spectral-check", "spectrum and constrained minima of L, A, B", {{"L", "20"}, {"h", "0.2"}}, {},
               cmd_spectral});
  c.push_back({"ode",
               "modulation ODE trajectory",
               {{"b0", "0.1"}, {"theta", "1.66032"}, {"t_end", "6"}, {"dt", "0.001"}, {"lambda0", "1"}},
               {},
               cmd_ode});
  c.push_back({"simulate", "pseudo-spectral run with modulation tracking", {}, RunConfig::keys(), cmd_simulate});
  std::set<std::string> lk = RunConfig::keys();
  c.push_back({"lyapunov",
               "weight audit, coercivity draws and Lyapunov series along a run",
               {{"B", "8"}, {"draws", "20"}, {"amplitude", "0.1"}, {"seed", "7"}, {"audit_points", "4000"}},
               lk,
               cmd_lyapunov});
  return c;
}

std::string flag_of(const std::string& key) {
  std::string f = key;
  for (char& ch : f)
    if (ch == '_') ch = '-';
  return "--" + f;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Numerical laboratory for the 2D critical Zakharov-Kuznetsov equation"};
  app.require_subcommand(1);
  // Long form only: the spectral grid key "h" becomes the flag --h.
  app.set_help_flag("--help", "print this help and exit");

  struct Bound {
    Command cmd;
    CLI::App* sub = nullptr;
    std::string config, out;
    std::vector<std::string> sets;
    std::map<std::string, std::string> flags;
  };
  std::vector<Bound> bound;
  for (Command& c : commands()) {
    Bound b;
    b.cmd = std::move(c);
    bound.push_back(std::move(b));
  }
  for (Bound& b : bound) {
    b.sub = app.add_subcommand(b.cmd.name, b.cmd.help);
    b.sub->add_option("--config", b.config, "key = value file");
    b.sub->add_option("--set", b.sets, "override, key=value (repeatable)");
    b.out = "out/" + b.cmd.name;
    b.sub->add_option("--out", b.out, "output directory")->capture_default_str();
    for (const auto& [k, v] : b.cmd.defaults) {
      if (k.find('.') != std::string::npos) continue;
      b.sub->add_option_function<std::string>(
          flag_of(k), [&b, key = k](const std::string& s) { b.flags[key] = s; }, "default " + v);
    }
  }

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? kExitOk : kExitUsage;
  }

  for (Bound& b : bound) {
    if (!b.sub->parsed()) continue;
    const auto t0 = std::chrono::steady_clock::now();
    RunManifest man;
    man.command = b.cmd.name;
    Output out{b.out, {}};
    try {
      std::set<std::string> allowed = b.cmd.extra_keys;
      for (const auto& kv : b.cmd.defaults) allowed.insert(kv.first);
      KeyValueConfig kv(allowed, b.cmd.defaults);
      if (!b.config.empty()) {
        kv.load(b.config);
        man.input_hashes[b.config] = "fnv1a64:" + hex64(fnv1a64(read_text(b.config)));
      }
      for (const auto& [k, v] : b.flags) kv.set(k + "=" + v);
      for (const std::string& s : b.sets) kv.set(s);
      man.config = kv.values();
      fs::create_directories(b.out);
      int rc = kExitOk;
      try {
        b.cmd.run(kv, out);
      } catch (const std::exception& e) {
        rc = exit_code_for(e);
        std::cerr << b.cmd.name << ": " << e.what() << "\n";
      }
      man.outputs = out.files;
      man.wall_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
      write_text((fs::path(b.out) / "manifest.json").string(), man.to_json());
      return rc;
    } catch (const std::exception& e) {
      std::cerr << b.cmd.name << ": " << e.what() << "\n";
      return exit_code_for(e);
    }
  }
  return kExitUsage;
}
