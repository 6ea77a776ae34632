#include "zk/functionals.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <random>
#include <sstream>

#include <Eigen/Dense>

#include "zk/errors.hpp"
#include "zk/io.hpp"
#include "zk/smooth.hpp"

namespace zk {

Jet operator+(const Jet& a, const Jet& b) { return {a.v + b.v, a.d1 + b.d1, a.d2 + b.d2, a.d3 + b.d3}; }
Jet operator-(const Jet& a, const Jet& b) { return {a.v - b.v, a.d1 - b.d1, a.d2 - b.d2, a.d3 - b.d3}; }
Jet operator*(double s, const Jet& a) { return {s * a.v, s * a.d1, s * a.d2, s * a.d3}; }

Jet operator*(const Jet& a, const Jet& b) {
  return {a.v * b.v, a.d1 * b.v + a.v * b.d1, a.d2 * b.v + 2.0 * a.d1 * b.d1 + a.v * b.d2,
          a.d3 * b.v + 3.0 * a.d2 * b.d1 + 3.0 * a.d1 * b.d2 + a.v * b.d3};
}

Jet compose(const Jet& f, const Jet& g) {
  const double g1 = g.d1;
  return {f.v, f.d1 * g1, f.d2 * g1 * g1 + f.d1 * g.d2,
          f.d3 * g1 * g1 * g1 + 3.0 * f.d2 * g1 * g.d2 + f.d1 * g.d3};
}

Jet jet_exp(const Jet& g) {
  const double e = std::exp(g.v);
  return compose({e, e, e, e}, g);
}

Jet jet_sqrt(const Jet& g) {
  const double s = std::sqrt(g.v);
  if (s == 0.0) return {0.0, 0.0, 0.0, 0.0};
  return compose({s, 0.5 / s, -0.25 / (s * s * s), 0.375 / (s * s * s * s * s)}, g);
}

Jet jet_pow(const Jet& g, double p) {
  const double x = g.v;
  if (x == 0.0) {
    // Exact zero: only integer powers below 4 leave nonzero derivatives.
    Jet f{0.0, p == 1.0 ? 1.0 : 0.0, p == 2.0 ? 2.0 : 0.0, p == 3.0 ? 6.0 : 0.0};
    if (p == 0.0) f.v = 1.0;
    return compose(f, g);
  }
  const double xp = std::pow(x, p);
  return compose({xp, p * xp / x, p * (p - 1.0) * xp / (x * x), p * (p - 1.0) * (p - 2.0) * xp / (x * x * x)}, g);
}

Jet jet_smoothstep(const Jet& g) {
  const double t = g.v;
  return compose({smoothstep(t), smoothstep_d(t, 1), smoothstep_d(t, 2), smoothstep_d(t, 3)}, g);
}

namespace {

// Gauss-Legendre nodes and weights on [-1, 1].
struct GaussLegendre {
  std::vector<double> x, w;
  explicit GaussLegendre(int n) : x(n), w(n) {
    for (int k = 0; k < n; ++k) {
      double z = std::cos(M_PI * (k + 0.75) / (n + 0.5));
      double dp = 1.0;
      for (int it = 0; it < 100; ++it) {
        double p0 = 1.0, p1 = z;
        for (int m = 2; m <= n; ++m) {
          const double p2 = ((2.0 * m - 1.0) * z * p1 - (m - 1.0) * p0) / m;
          p0 = p1;
          p1 = p2;
        }
        dp = n * (z * p1 - p0) / (z * z - 1.0);
        const double dz = p1 / dp;
        z -= dz;
        if (std::abs(dz) < 1e-16) break;
      }
      x[k] = z;
      w[k] = 2.0 / ((1.0 - z * z) * dp * dp);
    }
  }
};

const GaussLegendre& gl() {
  static const GaussLegendre g(24);
  return g;
}

// Composite Gauss-Legendre on [a, b] with `pieces` panels.
double quad(const std::function<double(double)>& f, double a, double b, int pieces = 4) {
  const GaussLegendre& g = gl();
  double s = 0.0;
  const double h = (b - a) / pieces;
  for (int p = 0; p < pieces; ++p) {
    const double m = a + (p + 0.5) * h;
    for (std::size_t k = 0; k < g.x.size(); ++k) s += g.w[k] * f(m + 0.5 * h * g.x[k]);
  }
  return 0.5 * h * s;
}

constexpr double kZ0 = 0.1;
constexpr double kZ1 = 1.0 / 6.0;
constexpr double kZw = kZ1 - kZ0;

Jet flip_odd(Jet j) {
  j.d1 = -j.d1;
  j.d3 = -j.d3;
  return j;
}

}  // namespace

WeightFamily::WeightFamily(double B) : B_(B) {
  if (!(B >= 4.0) || !std::isfinite(B)) throw DomainError("weights: B must be at least 4");
  // zeta: fix the bump so that the total integral is one.
  zeta_a_ = 0.0;
  const double G = zeta_zone_integral(kZ0, kZ1);
  const double need = 0.5 - kZ0 - 0.5 * std::exp(-2.0 * kZ1);
  zeta_a_ = (G - need) / (kZw / 630.0);

  for (int i = 0; i < 3; ++i) {
    const int n = i + 6;
    auto excess = [&](double p) {
      return quad([&](double s) { return std::pow(smoothstep(2.0 * s - 1.0), p) * n * std::pow(s, n - 1); }, 0.5,
                  1.0, 16) -
             0.5;
    };
    double lo = 0.0, hi = 1.0;
    while (excess(hi) > 0.0) hi *= 2.0;
    for (int it = 0; it < 200 && hi - lo > 1e-15 * hi; ++it) {
      const double mid = 0.5 * (lo + hi);
      (excess(mid) > 0.0 ? lo : hi) = mid;
    }
    p_[i] = 0.5 * (lo + hi);
  }

  const double c3 = std::cbrt(B);
  kappa_ = 1.0 / 3.0 - 0.5 / c3;
  wblend_ = c3 * c3 / 10.0;
  ystar_ = -B / 3.0 - wblend_;
  psi_at_ystar_ = zeta_cdf(ystar_ / B + kappa_);
  psi_mid_ = psi_at_ystar_ + quad([&](double y) { return psi_prime_raw(y).v; }, ystar_, -B / 3.0, 8);
  c_ = 0.5 / (psi_mid_ + 0.5 / c3);

  Psi0_m1_ = -0.25 - quad([&](double t) { return psi0(t).v; }, -1.0, -0.5, 8);
}

WeightFamily build_weights(double B) { return WeightFamily(B); }

Jet WeightFamily::zeta(double t) const {
  const double s = std::abs(t);
  Jet z;
  if (s <= kZ0) {
    z = Jet::constant(1.0);
  } else if (s >= kZ1) {
    const double e = std::exp(-2.0 * s);
    z = {e, -2.0 * e, 4.0 * e, -8.0 * e};
  } else {
    const Jet S = jet_smoothstep(Jet::linear(1.0 / kZw, -kZ0 / kZw, s));
    const Jet tau = Jet::linear(1.0 / kZw, -kZ0 / kZw, s);
    const Jet q = tau - tau * tau;
    const Jet E = jet_exp(Jet::linear(-2.0, 0.0, s));
    z = Jet::constant(1.0) - S + S * E - zeta_a_ * jet_pow(q, 4.0);
  }
  return t < 0.0 ? flip_odd(z) : z;
}

double WeightFamily::zeta_zone_integral(double s0, double s1) const {
  if (s1 <= s0) return 0.0;
  return quad([&](double s) { return zeta(s).v; }, s0, s1, 2);
}

double WeightFamily::zeta_cdf(double t) const {
  if (t > kZ0) return 1.0 - zeta_cdf(-t);
  if (t <= -kZ1) return 0.5 * std::exp(2.0 * t);
  if (t < -kZ0) return 0.5 * std::exp(-2.0 * kZ1) + zeta_zone_integral(-t, kZ1);
  return 0.5 + t;
}

Jet WeightFamily::vartheta(int i, double t) const {
  if (i < 0 || i > 2) throw DomainError("vartheta: index must be 0, 1 or 2");
  const int n = i + 6;
  if (t <= 0.5) return Jet::constant(0.5);
  if (t >= 1.0) return jet_pow(Jet::linear(1.0, 0.0, t), n);
  const double p = p_[i];
  auto g = [&](double s) { return jet_pow(jet_smoothstep(Jet::linear(2.0, -1.0, s)), p) * (n * jet_pow(Jet::linear(1.0, 0.0, s), n - 1)); };
  const Jet gj = g(t);
  const double v = 0.5 + quad([&](double s) { return g(s).v; }, 0.5, t, 4);
  return {v, gj.v, gj.d1, gj.d2};
}

Jet WeightFamily::psi_prime_raw(double y) const {
  const double B = B_, c3 = std::cbrt(B);
  auto br1 = [&] { return (1.0 / B) * compose(zeta(y / B + kappa_), Jet::linear(1.0 / B, kappa_, y)); };
  auto br2 = [&] {
    const double a = 1.0 / (c3 * c3);
    return (1.0 / B) * compose(zeta(a * y + c3 / 3.0), Jet::linear(a, c3 / 3.0, y));
  };
  if (y <= ystar_) return br1();
  if (y >= -B / 3.0) return br2();
  const Jet S = jet_smoothstep(Jet::linear(1.0 / wblend_, -ystar_ / wblend_, y));
  return (Jet::constant(1.0) - S) * br1() + S * br2();
}

double WeightFamily::psi_raw(double y) const {
  const double B = B_, c3 = std::cbrt(B);
  if (y <= ystar_) return zeta_cdf(y / B + kappa_);
  if (y < -B / 3.0) return psi_at_ystar_ + quad([&](double s) { return psi_prime_raw(s).v; }, ystar_, y, 4);
  return psi_mid_ + (zeta_cdf(y / (c3 * c3) + c3 / 3.0) - 0.5) / c3;
}

Jet WeightFamily::psiB(double y) const {
  const Jet d = psi_prime_raw(y);
  return {c_ * psi_raw(y), c_ * d.v, c_ * d.d1, c_ * d.d2};
}

Jet WeightFamily::varthetaB(int i, double y) const {
  const double s = std::pow(B_, -10.0);
  return compose(vartheta(i, s * y), Jet::linear(s, 0.0, y));
}

Jet WeightFamily::phiB(int i, double y) const { return jet_sqrt(2.0 * psiB(y)) * varthetaB(i, y); }

Jet WeightFamily::psi0(double t) const {
  if (t < -1.0) return jet_exp(Jet::linear(6.0, 0.0, t));
  if (t > -0.5) return Jet::constant(0.5);
  const Jet S = jet_smoothstep(Jet::linear(2.0, 2.0, t));
  return (Jet::constant(1.0) - S) * jet_exp(Jet::linear(6.0, 0.0, t)) + 0.5 * S;
}

Jet WeightFamily::psi1(double t) const {
  if (t < -1.0) return jet_exp(Jet::linear(10.0, 0.0, t));
  if (t > -0.5) return Jet::linear(1.0, 1.0, t);
  const Jet S = jet_smoothstep(Jet::linear(2.0, 2.0, t));
  return (Jet::constant(1.0) - S) * jet_exp(Jet::linear(10.0, 0.0, t)) + S * Jet::linear(1.0, 1.0, t);
}

Jet WeightFamily::psi0B(double y) const { return compose(psi0(y / B_), Jet::linear(1.0 / B_, 0.0, y)); }
Jet WeightFamily::psi1B(double y) const { return compose(psi1(y / B_), Jet::linear(1.0 / B_, 0.0, y)); }

Jet WeightFamily::sigma(double t) const {
  const Jet s = Jet::constant(1.0) - jet_smoothstep(Jet::linear(1.0, -1.0, std::abs(t)));
  return t < 0.0 ? flip_odd(s) : s;
}

double WeightFamily::Psi0(double t) const {
  if (t >= -0.5) return 0.5 * t;
  if (t >= -1.0) return -0.25 - quad([&](double s) { return psi0(s).v; }, t, -0.5, 4);
  return Psi0_m1_ - (std::exp(-6.0) - std::exp(6.0 * t)) / 6.0;
}

Jet WeightFamily::chiB(double y) const {
  const double B = B_;
  const Jet p = psi0(y / B);
  const Jet I{2.0 * Psi0(y / B), (2.0 / B) * p.v, 2.0 / (B * B) * p.d1, 2.0 / (B * B * B) * p.d2};
  const double a = y <= 0.0 ? 1.0 / (2.0 * B) : 1.0 / (10.0 * std::pow(B, 10.0));
  return compose(sigma(a * y), Jet::linear(a, 0.0, y)) * I;
}

Jet WeightFamily::Phi(double t) const {
  if (t <= 0.0) return Jet::constant(0.0);
  const Jet p = jet_pow(Jet::linear(1.0, 0.0, t), 100.0);
  if (t >= 1.0) return p;
  return jet_smoothstep(Jet::linear(1.0, 0.0, t)) * p;
}

// ---------------------------------------------------------------------------------------------

namespace {

constexpr double kTiny = 1e-280;

struct Ratio {
  double lhs, rhs;
};

using Check = std::function<std::optional<Ratio>(const WeightFamily&, double y)>;

struct CheckDef {
  std::string name;
  std::string kind;
  Check f;
  // Sampling: 0 = full, 1 = |y| < B/4, 2 = [-10B, 10B].
  int range = 0;
};

std::vector<double> samples(double B, int points, int range) {
  std::vector<double> ys;
  if (range == 1) {
    for (int k = 0; k < points; ++k) ys.push_back(-B / 4.0 + (B / 2.0) * (k + 0.5) / points);
    return ys;
  }
  if (range == 2) {
    for (int k = 0; k <= points; ++k) ys.push_back(-10.0 * B + 20.0 * B * k / points);
    return ys;
  }
  for (int k = 0; k <= points; ++k) ys.push_back(-10.0 * B + 10.0 * B * k / points);
  for (int k = 1; k <= points; ++k) ys.push_back(2.0 * B * k / points);
  const double l0 = std::log(2.0 * B), l1 = std::log(20.0 * std::pow(B, 10.0));
  for (int k = 1; k <= points; ++k) ys.push_back(std::exp(l0 + (l1 - l0) * k / points));
  return ys;
}

double ind(bool c) { return c ? 1.0 : 0.0; }

std::vector<CheckDef> checks() {
  std::vector<CheckDef> c;
  using R = std::optional<Ratio>;
  for (int i = 0; i < 3; ++i) {
    c.push_back({"psi_le_phi" + std::to_string(i), "constant",
                 [i](const WeightFamily& W, double y) -> R { return Ratio{W.psiB(y).v, W.phiB(i, y).v}; }});
  }
  c.push_back({"psi_increasing", "constant",
               [](const WeightFamily& W, double y) -> R {
                 const double d = W.psiB(y).d1;
                 return Ratio{d > 0.0 ? 0.0 : 1.0, d > 0.0 ? 1.0 : 0.0};
               },
               2});
  c.push_back({"psi_lower_ii", "constant", [](const WeightFamily& W, double y) -> R {
                 if (!(y < -W.B())) return std::nullopt;
                 return Ratio{std::exp(2.0 * y / W.B()), W.psiB(y).v};
               }});
  c.push_back({"psi_upper_ii", "constant", [](const WeightFamily& W, double y) -> R {
                 if (!(y < -W.B())) return std::nullopt;
                 return Ratio{W.psiB(y).v, 2.0 * std::exp(2.0 * y / W.B())};
               }});
  for (int i = 0; i < 3; ++i) {
    c.push_back({"phi_lower_ii" + std::to_string(i), "constant", [i](const WeightFamily& W, double y) -> R {
                   if (!(y < -W.B())) return std::nullopt;
                   return Ratio{std::sqrt(0.5) * std::exp(y / W.B()), W.phiB(i, y).v};
                 }});
    c.push_back({"phi_upper_ii" + std::to_string(i), "constant", [i](const WeightFamily& W, double y) -> R {
                   if (!(y < -W.B())) return std::nullopt;
                   return Ratio{W.phiB(i, y).v, std::exp(y / W.B())};
                 }});
  }
  c.push_back({"psiphi_iii", "lesssim",
               [](const WeightFamily& W, double y) -> R {
                 const Jet p = W.psiB(y);
                 double l = p.d1 + std::abs(p.v - 0.5);
                 for (int i = 1; i <= 2; ++i) {
                   const Jet f = W.phiB(i, y);
                   l += f.d1 + std::abs(f.v - 0.5);
                 }
                 return Ratio{l, std::exp(-std::cbrt(W.B()) / 6.0)};
               },
               1});
  c.push_back({"psiphi2_i", "lesssim", [](const WeightFamily& W, double y) -> R {
                 const Jet p = W.psiB(y);
                 const double c3 = std::cbrt(W.B());
                 return Ratio{c3 * c3 * std::abs(p.d2) + c3 * c3 * c3 * c3 * std::abs(p.d3), p.d1};
               }});
  for (int i = 1; i <= 2; ++i) {
    const std::string s = std::to_string(i);
    c.push_back({"psiphi2_ii_" + s, "lesssim", [i](const WeightFamily& W, double y) -> R {
                   const Jet p = W.psiB(y), f = W.phiB(i, y);
                   return Ratio{std::sqrt(W.B() * p.d1), W.B() * f.d1 + p.v};
                 }});
    c.push_back({"psiphi2_iii_b_" + s, "lesssim", [i](const WeightFamily& W, double y) -> R {
                   const Jet p = W.psiB(y), f = W.phiB(i, y);
                   return Ratio{std::sqrt(p.v), W.B() * f.d1 + p.v};
                 }});
    c.push_back({"psiphi2_iv_a_" + s, "lesssim", [i](const WeightFamily& W, double y) -> R {
                   const Jet p = W.psiB(y), f = W.phiB(i, y);
                   const double c3 = std::cbrt(W.B());
                   return Ratio{std::abs(f.d2), f.d1 / (c3 * c3) + std::pow(W.B(), -20.0) * p.v};
                 }});
    c.push_back({"psiphi2_iv_b_" + s, "lesssim", [i](const WeightFamily& W, double y) -> R {
                   const Jet p = W.psiB(y), f = W.phiB(i, y);
                   const double c3 = std::cbrt(W.B());
                   return Ratio{std::abs(f.d3), f.d1 / (c3 * c3 * c3 * c3) + std::pow(W.B(), -30.0) * p.v};
                 }});
    c.push_back({"psiphi2_v_a_" + s, "lesssim", [i](const WeightFamily& W, double y) -> R {
                   const Jet p = W.psiB(y), f = W.phiB(i, y);
                   return Ratio{W.B() * f.d1 + p.v, W.phiB(i - 1, y).v};
                 }});
    c.push_back({"psiphi2_v_b_" + s, "lesssim", [i](const WeightFamily& W, double y) -> R {
                   const Jet p = W.psiB(y), f = W.phiB(i, y);
                   return Ratio{W.phiB(i - 1, y).v, std::pow(W.B(), 10.0) * f.d1 + p.v};
                 }});
    c.push_back({"psiphi2_vi_" + s, "lesssim", [i](const WeightFamily& W, double y) -> R {
                   const Jet p = W.psiB(y), f = W.phiB(i, y);
                   const double far = ind(y >= std::pow(W.B(), 10.0)) * std::abs(y) * f.d1;
                   return Ratio{f.v, W.B() * f.d1 + p.v + far};
                 }});
    c.push_back({"pointchi_i_a_" + s, "lesssim", [i](const WeightFamily& W, double y) -> R {
                   const Jet f = W.phiB(i, y);
                   const double c3 = std::cbrt(W.B());
                   return Ratio{std::abs(f.d2), f.d1 / (c3 * c3) + std::pow(W.B(), -20.0) * W.psi0B(y).v};
                 }});
    c.push_back({"pointchi_i_b_" + s, "lesssim", [i](const WeightFamily& W, double y) -> R {
                   const Jet f = W.phiB(i, y);
                   const double c3 = std::cbrt(W.B());
                   return Ratio{std::abs(f.d3), f.d1 / (c3 * c3 * c3 * c3) + std::pow(W.B(), -30.0) * W.psi0B(y).v};
                 }});
    c.push_back({"pointchi_iv_" + s, "lesssim", [i](const WeightFamily& W, double y) -> R {
                   const double B = W.B();
                   return Ratio{std::abs(W.chiB(y).d1 - (2.0 / B) * W.psi0B(y).v), std::pow(B, 9.0) * W.phiB(i, y).d1};
                 }});
  }
  c.push_back({"psiphi2_iii_a", "lesssim", [](const WeightFamily& W, double y) -> R {
                 const Jet p = W.psiB(y);
                 return Ratio{std::abs(y) * p.d1, std::sqrt(p.v)};
               }});
  c.push_back({"pointchi_ii_a", "lesssim", [](const WeightFamily& W, double y) -> R {
                 const double B = W.B();
                 const Jet x = W.chiB(y);
                 return Ratio{B * std::abs(x.d1) + B * B * std::abs(x.d2) + B * B * B * std::abs(x.d3), W.psi0B(y).v};
               }});
  c.push_back({"pointchi_ii_b", "lesssim", [](const WeightFamily& W, double y) -> R {
                 const double B = W.B();
                 const Jet p = W.psi0B(y);
                 return Ratio{B * std::abs(p.d1) + B * B * std::abs(p.d2) + B * B * B * std::abs(p.d3), p.v};
               }});
  c.push_back({"pointchi_iii", "lesssim", [](const WeightFamily& W, double y) -> R {
                 const double B = W.B();
                 const double p0 = W.psi0B(y).v;
                 return Ratio{std::abs(W.chiB(y).v), std::min(std::pow(B, 9.0) * p0, W.psi1B(y).v * std::sqrt(p0))};
               }});
  c.push_back({"pointchi_v_a", "lesssim", [](const WeightFamily& W, double y) -> R {
                 const double B = W.B();
                 return Ratio{std::abs(W.chiB(y).d1 - (2.0 / B) * W.psi0B(y).v),
                              ind(y <= -B / 2.0) + ind(y >= std::pow(B, 10.0))};
               }});
  c.push_back({"pointchi_v_b", "lesssim", [](const WeightFamily& W, double y) -> R {
                 const double B = W.B();
                 return Ratio{std::abs(W.chiB(y).v - (2.0 * y / B) * W.psi0B(y).v),
                              (ind(y <= -B / 2.0) + ind(y >= std::pow(B, 10.0))) * std::abs(y)};
               }});
  c.push_back({"Phi_nondecreasing", "constant", [](const WeightFamily& W, double y) -> R {
                 const double d = W.Phi(y / W.B()).d1;
                 return Ratio{d >= 0.0 ? 0.0 : 1.0, d >= 0.0 ? 1.0 : 0.0};
               }});
  for (int i = 0; i < 3; ++i) {
    c.push_back({"vartheta_nondecreasing" + std::to_string(i), "constant", [i](const WeightFamily& W, double y) -> R {
                   const double d = W.varthetaB(i, y).d1;
                   return Ratio{d >= 0.0 ? 0.0 : 1.0, d >= 0.0 ? 1.0 : 0.0};
                 }});
  }
  return c;
}

}  // namespace

std::vector<AuditEntry> weight_inequality_audit(const AuditSpec& spec) {
  if (spec.B.empty() || spec.points < 10) throw ConfigError("audit: need at least one B and 10 points");
  std::vector<WeightFamily> fams;
  for (double B : spec.B) fams.emplace_back(B);
  std::vector<AuditEntry> out;

  for (const CheckDef& def : checks()) {
    AuditEntry e;
    e.name = def.name;
    e.kind = def.kind;
    for (const WeightFamily& W : fams) {
      double worst = 0.0;
      long n = 0, skipped = 0;
      for (double y : samples(W.B(), spec.points, def.range)) {
        const std::optional<Ratio> r = def.f(W, y);
        if (!r) continue;
        const double l = std::abs(r->lhs), q = r->rhs;
        if (!std::isfinite(l) || !std::isfinite(q)) {
          ++skipped;
          continue;
        }
        if (l == 0.0) {
          ++n;
          continue;
        }
        if (l < kTiny && q < kTiny) {
          ++skipped;
          continue;
        }
        ++n;
        worst = std::max(worst, q > 0.0 ? l / q : INFINITY);
      }
      e.B.push_back(W.B());
      e.ratio.push_back(worst);
      e.samples.push_back(n);
      e.skipped.push_back(skipped);
    }
    bool ok = true;
    for (double r : e.ratio) ok = ok && std::isfinite(r);
    if (ok && e.kind == "constant") {
      for (double r : e.ratio) ok = ok && r <= 1.0 + 1e-12;
    } else if (ok) {
      for (double r : e.ratio) ok = ok && r <= spec.stability * e.ratio.front() + 1e-300;
    }
    e.pass = ok;
    out.push_back(std::move(e));
  }

  // psi_B(10 B) lies in [0.4999, 0.5].
  AuditEntry lim;
  lim.name = "psi_limit";
  lim.kind = "constant";
  lim.pass = true;
  for (const WeightFamily& W : fams) {
    const double v = W.psiB(10.0 * W.B()).v;
    lim.B.push_back(W.B());
    lim.ratio.push_back(std::max(0.4999 / v, v / 0.5));
    lim.samples.push_back(1);
    lim.skipped.push_back(0);
    lim.pass = lim.pass && v >= 0.4999 && v <= 0.5 + 1e-15;
  }
  out.push_back(std::move(lim));
  return out;
}

std::string audit_csv(const std::vector<AuditEntry>& a) {
  CsvWriter w({"name", "kind", "B", "ratio", "samples", "skipped", "pass"});
  for (const AuditEntry& e : a)
    for (std::size_t k = 0; k < e.B.size(); ++k) {
      std::ostringstream r;
      r.precision(10);
      r << e.ratio[k];
      w.row_text({e.name, e.kind, std::to_string(e.B[k]), r.str(), std::to_string(e.samples[k]),
                  std::to_string(e.skipped[k]), e.pass ? "1" : "0"});
    }
  return w.str();
}

// ---------------------------------------------------------------------------------------------

SigmaProfiles sigma_profiles(const ReferenceProfiles& ref) {
  const Grid2D& g = ref.grid;
  SigmaProfiles s;
  s.sigma1 = Field2D(g);
  s.sigma3 = Field2D(g);
  double F2 = 0.0;
  for (double v : ref.F.values) F2 += v * v;
  s.F_norm2 = F2 * g.h2;
  // c2 = (1/2) int (int d2Q dy1)^2 dy2.
  double c2 = 0.0;
  for (int j = 0; j < g.n2; ++j) {
    double col = 0.0;
    for (int i = 0; i < g.n1; ++i) col += ref.Q2(i, j);
    col *= g.h1;
    c2 += col * col;
  }
  s.c2 = 0.5 * c2 * g.h2;
  if (!(s.F_norm2 > 0.0) || !(s.c2 > 0.0)) throw NumericalFailure("sigma profiles: degenerate normalization");
  for (int j = 0; j < g.n2; ++j) {
    double a = 0.0, b = 0.0;
    for (int i = 0; i < g.n1; ++i) {
      if (i > 0) {
        a += 0.5 * g.h1 * (ref.LQ(i - 1, j) + ref.LQ(i, j));
        b += 0.5 * g.h1 * (ref.Q2(i - 1, j) + ref.Q2(i, j));
      }
      s.sigma1(i, j) = a / s.F_norm2;
      s.sigma3(i, j) = b / s.c2;
    }
  }
  return s;
}

LyapunovEvaluator::LyapunovEvaluator(const ReferenceProfiles& ref, const WeightFamily& W, double theta)
    : ref_(ref), W_(W), theta_(theta), sigma_(sigma_profiles(ref)), fft_(std::make_unique<Fft2D>(ref.grid)) {
  const Grid2D& g = ref.grid;
  psi_.resize(g.n1);
  chi_.resize(g.n1);
  for (auto& p : phi_) p.resize(g.n1);
  for (int i = 0; i < g.n1; ++i) {
    const double y = g.x(i);
    psi_[i] = W_.psiB(y).v;
    chi_[i] = W_.chiB(y).v;
    for (int k = 0; k < 3; ++k) phi_[k][i] = W_.phiB(k, y).v;
  }
}

LyapunovSample LyapunovEvaluator::compute(const Field2D& eps, double lambda, double b, const Field2D& Qb) const {
  const Grid2D& g = ref_.grid;
  if (eps.values.size() != g.size() || Qb.values.size() != g.size())
    throw DomainError("lyapunov: fields must live on the profile grid");
  LyapunovSample s;
  s.lambda = lambda;
  s.b = b;
  const double cell = g.cell();
  Fft2D& fft = *fft_;

  s.J1 = inner(eps, sigma_.sigma1);
  const Field2D e1 = spectral_derivative(fft, eps, 1, 0);
  const Field2D e2 = spectral_derivative(fft, eps, 0, 1);

  double grad = 0.0, pot = 0.0;
  std::array<double, 3> mass{};
  for (int i = 0; i < g.n1; ++i)
    for (int j = 0; j < g.n2; ++j) {
      const std::size_t k = g.index(i, j);
      const double e = eps.values[k], q = Qb.values[k];
      const double gr = e1.values[k] * e1.values[k] + e2.values[k] * e2.values[k];
      grad += gr * psi_[i];
      for (int m = 0; m < 3; ++m) mass[m] += e * e * phi_[m][i];
      // (q + e)^4 - q^4 - 4 q^3 e, expanded.
      pot += psi_[i] * e * e * (6.0 * q * q + 4.0 * q * e + e * e);
    }
  grad *= cell;
  pot *= 0.5 * cell;
  for (int m = 0; m < 3; ++m) {
    mass[m] *= cell;
    s.N[m] = grad + mass[m];
  }

  // eta = (1 - gamma Delta)^{-1} L eps with L = -Delta + 1 - 3 Q^2.
  const double B = W_.B();
  s.gamma = std::pow(B, -3.0);
  const Field2D lap = spectral_laplacian(fft, eps);
  Field2D Le(g);
  for (std::size_t k = 0; k < g.size(); ++k) {
    const double q = ref_.Q.values[k];
    Le.values[k] = -lap.values[k] + eps.values[k] - 3.0 * q * q * eps.values[k];
  }
  const double gm = s.gamma;
  s.eta = apply_multiplier(fft, Le, [&](int i, int j) {
    const double k1 = fft.k1(i), k2 = fft.k2(j);
    return cplx(1.0 / (1.0 + gm * (k1 * k1 + k2 * k2)), 0.0);
  });
  const Field2D lap_eta = spectral_laplacian(fft, s.eta);
  double rn = 0.0, ln = 0.0, P = 0.0;
  for (int i = 0; i < g.n1; ++i)
    for (int j = 0; j < g.n2; ++j) {
      const std::size_t k = g.index(i, j);
      const double r = s.eta.values[k] - gm * lap_eta.values[k] - Le.values[k];
      rn += r * r;
      ln += Le.values[k] * Le.values[k];
      P += s.eta.values[k] * s.eta.values[k] * chi_[i];
    }
  s.eta_residual = ln > 0.0 ? std::sqrt(rn / ln) : 0.0;
  s.P = P * cell;

  const double w = std::pow(B, -20.0);
  for (int i = 1; i <= 2; ++i)
    for (int j = 1; j <= 2; ++j) {
      const double J = std::pow(1.0 - s.J1, -2.0 * theta_ * (j - 1) - 2.0 * i - 12.0) - 1.0;
      s.J[i - 1][j - 1] = J;
      s.F[i - 1][j - 1] = grad + (1.0 + J) * mass[i] - pot;
      s.M[i - 1][j - 1] = s.F[i - 1][j - 1] + w * s.P;
    }
  return s;
}

LyapunovSeries lyapunov_series(const RunConfig& cfg, const ModulationReference& ref, const WeightFamily& W,
                               double theta) {
  LyapunovEvaluator ev(ref.profiles(), W, theta);
  LyapunovSeries out;
  out.run = run(cfg, ref, [&](const RunSample& rs, const ModulationState& ms) {
    if (ms.epsilon.values.empty()) return;
    LyapunovSample s = ev.compute(ms.epsilon, ms.lambda, ms.b, ref.profile_Qb(ms.b));
    s.t = rs.t;
    s.eta = Field2D();
    out.samples.push_back(std::move(s));
  });
  for (int i = 0; i < 2; ++i)
    for (int j = 0; j < 2; ++j) {
      const std::size_t n = out.samples.size();
      if (n < 2) {
        out.nonincreasing_fraction[i][j] = 0.0;
        continue;
      }
      int good = 0;
      for (std::size_t k = 1; k < n; ++k) {
        const LyapunovSample &a = out.samples[k - 1], &c = out.samples[k];
        const double ma = a.M[i][j] / std::pow(a.lambda, theta * j);
        const double mc = c.M[i][j] / std::pow(c.lambda, theta * j);
        if (mc <= ma) ++good;
      }
      out.nonincreasing_fraction[i][j] = static_cast<double>(good) / (n - 1);
    }
  return out;
}

std::string lyapunov_csv(const LyapunovSeries& s) {
  CsvWriter w({"t", "N0", "N1", "N2", "J1", "F11", "F12", "F21", "F22", "P", "M11", "M12", "M21", "M22", "lambda",
               "b"});
  for (const LyapunovSample& x : s.samples)
    w.row({x.t, x.N[0], x.N[1], x.N[2], x.J1, x.F[0][0], x.F[0][1], x.F[1][0], x.F[1][1], x.P, x.M[0][0], x.M[0][1],
           x.M[1][0], x.M[1][1], x.lambda, x.b});
  return w.str();
}

CoercivityDraws coercivity_draws(const LyapunovEvaluator& ev, const ReferenceProfiles& ref, int draws,
                                 double amplitude, unsigned seed) {
  if (draws < 1 || !(amplitude > 0.0)) throw ConfigError("coercivity: need draws >= 1 and amplitude > 0");
  const Grid2D& g = ref.grid;
  Field2D Q3(g);
  for (std::size_t k = 0; k < g.size(); ++k) Q3.values[k] = std::pow(ref.Q.values[k], 3);
  const std::array<const Field2D*, 4> dirs{&ref.Q, &Q3, &ref.Q1, &ref.Q2};
  Eigen::Matrix4d G;
  for (int a = 0; a < 4; ++a)
    for (int b = 0; b < 4; ++b) G(a, b) = inner(*dirs[a], *dirs[b]);
  const auto lu = G.fullPivLu();

  std::mt19937 rng(seed);
  std::uniform_real_distribution<double> centre(-4.0, 4.0), width(0.5, 2.0);
  std::normal_distribution<double> amp(0.0, 1.0);
  CoercivityDraws out;
  out.all_positive = true;
  for (int d = 0; d < draws; ++d) {
    Field2D e(g);
    for (int bump = 0; bump < 4; ++bump) {
      const double c1 = centre(rng), c2 = centre(rng), w = width(rng), a = amp(rng);
      for (int i = 0; i < g.n1; ++i)
        for (int j = 0; j < g.n2; ++j) {
          const double r2 = (g.x(i) - c1) * (g.x(i) - c1) + (g.y(j) - c2) * (g.y(j) - c2);
          e(i, j) += a * std::exp(-0.5 * r2 / (w * w));
        }
    }
    Eigen::Vector4d rhs;
    for (int a = 0; a < 4; ++a) rhs(a) = inner(e, *dirs[a]);
    const Eigen::Vector4d c = lu.solve(rhs);
    for (int a = 0; a < 4; ++a)
      for (std::size_t k = 0; k < g.size(); ++k) e.values[k] -= c(a) * dirs[a]->values[k];
    const double n = norm2(e);
    for (double& v : e.values) v *= amplitude / n;

    double orth = 0.0;
    for (int a = 0; a < 4; ++a)
      orth = std::max(orth, std::abs(inner(e, *dirs[a])) / (amplitude * norm2(*dirs[a])));
    out.orthogonality.push_back(orth);

    const LyapunovSample s = ev.compute(e, 1.0, 0.0, ref.Q);
    out.M.push_back(s.M);
    out.N.push_back(s.N);
    for (int i = 0; i < 2; ++i)
      for (int j = 0; j < 2; ++j) {
        out.all_positive = out.all_positive && s.M[i][j] > 0.0;
        const double r = s.M[i][j] / s.N[i + 1];
        out.min_ratio = std::min(out.min_ratio, r);
        out.max_ratio = std::max(out.max_ratio, r);
      }
  }
  return out;
}

}  // namespace zk
