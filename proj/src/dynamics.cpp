#include "zk/dynamics.hpp"

#include <cmath>
#include <json.hpp>
#include <sstream>

#include "zk/errors.hpp"
#include "zk/io.hpp"

namespace zk {

const char* regime_name(Regime r) {
  switch (r) {
    case Regime::Soliton: return "Soliton";
    case Regime::Blowup: return "Blowup";
    case Regime::GrowthToInfinity: return "GrowthToInfinity";
  }
  return "?";
}

double blowup_time(double b0, double theta) {
  if (!(b0 > 0.0)) throw DomainError("blow-up time requires b0 > 0");
  return 1.0 / (b0 * (3.0 - theta));
}

ClosedForm closed_form(double b0, double theta, double t) {
  ClosedForm c;
  if (b0 == 0.0) return c;
  const double a = 3.0 - theta;
  const double base = 1.0 - a * b0 * t;
  if (b0 > 0.0 && !(base > 0.0)) {
    std::ostringstream os;
    os << "closed form: t = " << t << " is past the blow-up time " << blowup_time(b0, theta);
    throw DomainError(os.str());
  }
  c.lambda = std::pow(base, 1.0 / a);
  c.b = b0 * std::pow(c.lambda, theta);
  return c;
}

Exponents exponents(double theta) {
  Exponents e;
  const double a = 3.0 - theta;
  e.lambda_exp = 1.0 / a;
  e.b_exp = theta / a;
  e.x1_exp = -(theta - 1.0) / a;
  e.gradient_exp = 1.0 / a;
  return e;
}

RegimePrediction predict(double b0, double theta) {
  if (!(theta > 1.0 && theta < 2.0)) throw DomainError("predict: theta must lie in (1, 2)");
  RegimePrediction p;
  p.exponents = exponents(theta);
  if (b0 > 0.0) {
    p.regime = Regime::Blowup;
    p.T = blowup_time(b0, theta);
    p.ell1 = std::pow((3.0 - theta) * b0, 1.0 / (3.0 - theta));
  } else if (b0 < 0.0) {
    p.regime = Regime::GrowthToInfinity;
  }
  return p;
}

namespace {

struct Rhs {
  double lambda, b, s;
};

Rhs field(double theta, double lambda, double b) {
  const double l3 = lambda * lambda * lambda;
  return {-b / (lambda * lambda), -theta * b * b / l3, 1.0 / l3};
}

}  // namespace

Trajectory integrate(double b0, double theta, double t_end, double dt, double lambda0) {
  if (dt == 0.0 || !std::isfinite(dt)) throw ConfigError("integrate: dt must be nonzero and finite");
  if ((t_end > 0.0) != (dt > 0.0) && t_end != 0.0) throw ConfigError("integrate: dt and t_end have opposite signs");
  if (!(lambda0 > 0.0)) throw ConfigError("integrate: lambda0 must be positive");
  Trajectory tr;
  OdeState st;
  st.lambda = lambda0;
  st.b = b0;
  tr.states.push_back(st);
  const double dir = dt > 0.0 ? 1.0 : -1.0;
  const double h0 = std::abs(dt);
  while (dir * (t_end - st.t) > 1e-14 * std::max(1.0, std::abs(t_end))) {
    double h = std::min(h0, dir * (t_end - st.t));
    OdeState next;
    for (;;) {
      const double sh = dir * h;
      const Rhs k1 = field(theta, st.lambda, st.b);
      const Rhs k2 = field(theta, st.lambda + 0.5 * sh * k1.lambda, st.b + 0.5 * sh * k1.b);
      const Rhs k3 = field(theta, st.lambda + 0.5 * sh * k2.lambda, st.b + 0.5 * sh * k2.b);
      const Rhs k4 = field(theta, st.lambda + sh * k3.lambda, st.b + sh * k3.b);
      next.t = st.t + sh;
      next.lambda = st.lambda + sh / 6.0 * (k1.lambda + 2.0 * k2.lambda + 2.0 * k3.lambda + k4.lambda);
      next.b = st.b + sh / 6.0 * (k1.b + 2.0 * k2.b + 2.0 * k3.b + k4.b);
      next.s = st.s + sh / 6.0 * (k1.s + 2.0 * k2.s + 2.0 * k3.s + k4.s);
      const bool bad = !(next.lambda > 0.0) || !std::isfinite(next.lambda) || !std::isfinite(next.b);
      if (!bad && std::abs(next.lambda - st.lambda) <= 0.05 * st.lambda) break;
      h *= 0.5;
      if (h < 1e-14 * std::max(1.0, std::abs(st.t))) {
        tr.singular = true;
        std::ostringstream os;
        os << "singularity reached near t = " << st.t << " (lambda = " << st.lambda << ")";
        tr.message = os.str();
        return tr;
      }
    }
    st = next;
    tr.states.push_back(st);
  }
  return tr;
}

PowerLawFit fit_power_law(const std::vector<double>& t, const std::vector<double>& y) {
  const std::size_t n = t.size();
  if (n < 3 || y.size() != n) throw DomainError("fit_power_law needs at least 3 samples");
  for (double v : y)
    if (!(v > 0.0)) throw DomainError("fit_power_law needs positive samples");
  const double tl = t.back();
  const double span = tl - t.front();
  if (!(span > 0.0)) throw DomainError("fit_power_law needs increasing times");
  auto solve = [&](double T, PowerLawFit& f) {
    double sx = 0, sy = 0, sxx = 0, sxy = 0;
    for (std::size_t k = 0; k < n; ++k) {
      const double x = std::log(T - t[k]), v = std::log(y[k]);
      sx += x;
      sy += v;
      sxx += x * x;
      sxy += x * v;
    }
    const double det = n * sxx - sx * sx;
    f.T = T;
    f.p = (n * sxy - sx * sy) / det;
    const double lc = (sy - f.p * sx) / n;
    f.c = std::exp(lc);
    double rss = 0.0;
    for (std::size_t k = 0; k < n; ++k) {
      const double r = std::log(y[k]) - lc - f.p * std::log(T - t[k]);
      rss += r * r;
    }
    f.rms = std::sqrt(rss / n);
    return rss;
  };
  // Scan log(T - t_last) on a grid, then golden-section refine around the best node.
  const double lo = std::log(1e-9 * span), hi = std::log(10.0 * span);
  const int m = 400;
  int best = 0;
  double best_r = INFINITY;
  PowerLawFit f;
  for (int k = 0; k <= m; ++k) {
    const double u = lo + (hi - lo) * k / m;
    const double r = solve(tl + std::exp(u), f);
    if (r < best_r) {
      best_r = r;
      best = k;
    }
  }
  double a = lo + (hi - lo) * std::max(best - 1, 0) / m, b = lo + (hi - lo) * std::min(best + 1, m) / m;
  const double g = 0.5 * (std::sqrt(5.0) - 1.0);
  double c = b - g * (b - a), d = a + g * (b - a);
  double fc = solve(tl + std::exp(c), f), fd = solve(tl + std::exp(d), f);
  for (int it = 0; it < 200 && b - a > 1e-14; ++it) {
    if (fc < fd) {
      b = d;
      d = c;
      fd = fc;
      c = b - g * (b - a);
      fc = solve(tl + std::exp(c), f);
    } else {
      a = c;
      c = d;
      fc = fd;
      d = a + g * (b - a);
      fd = solve(tl + std::exp(d), f);
    }
  }
  solve(tl + std::exp(0.5 * (a + b)), f);
  return f;
}

std::string trajectory_csv(const Trajectory& tr, double theta) {
  CsvWriter w({"t", "s", "lambda", "b", "b_over_lambda_theta"});
  for (const OdeState& s : tr.states) w.row({s.t, s.s, s.lambda, s.b, s.b / std::pow(s.lambda, theta)});
  return w.str();
}

std::string prediction_json(const RegimePrediction& p, double b0, double theta) {
  nlohmann::ordered_json j;
  j["b0"] = b0;
  j["theta"] = theta;
  j["regime"] = regime_name(p.regime);
  j["T"] = p.T ? nlohmann::ordered_json(*p.T) : nlohmann::ordered_json(nullptr);
  j["exponents"] = {{"lambda_exp", p.exponents.lambda_exp},
                    {"b_exp", p.exponents.b_exp},
                    {"x1_exp", p.exponents.x1_exp},
                    {"gradient_exp", p.exponents.gradient_exp}};
  j["ell1"] = p.ell1 ? nlohmann::ordered_json(*p.ell1) : nlohmann::ordered_json(nullptr);
  return j.dump(2);
}

}  // namespace zk
