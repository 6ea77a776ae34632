#pragma once

#include <array>
#include <limits>
#include <memory>
#include <string>
#include <vector>

#include "zk/fft.hpp"
#include "zk/field.hpp"
#include "zk/profiles.hpp"
#include "zk/simulator.hpp"

namespace zk {

// Value and first three derivatives of a scalar function at a point.
struct Jet {
  double v = 0.0, d1 = 0.0, d2 = 0.0, d3 = 0.0;

  static Jet constant(double c) { return {c, 0.0, 0.0, 0.0}; }
  // t -> a t + c evaluated at t.
  static Jet linear(double a, double c, double t) { return {a * t + c, a, 0.0, 0.0}; }
};

Jet operator+(const Jet& a, const Jet& b);
Jet operator-(const Jet& a, const Jet& b);
Jet operator*(const Jet& a, const Jet& b);
Jet operator*(double s, const Jet& a);
// f o g, given the jet of f at g.v.
Jet compose(const Jet& f_at_g, const Jet& g);
Jet jet_exp(const Jet& g);
Jet jet_sqrt(const Jet& g);
Jet jet_pow(const Jet& g, double p);
Jet jet_smoothstep(const Jet& g);

// Weight functions at scale B. The displayed branches are used verbatim; the gaps between
// branches are filled by C^3 smoothstep blends (see README).
class WeightFamily {
public:
  explicit WeightFamily(double B = 8.0);

  double B() const { return B_; }

  Jet zeta(double t) const;
  Jet vartheta(int i, double t) const;
  Jet psiB(double y) const;
  Jet varthetaB(int i, double y) const;
  Jet phiB(int i, double y) const;
  Jet psi0(double t) const;
  Jet psi1(double t) const;
  Jet psi0B(double y) const;
  Jet psi1B(double y) const;
  Jet sigma(double t) const;
  Jet chiB(double y) const;
  Jet Phi(double t) const;

  // Int_{-inf}^{t} zeta.
  double zeta_cdf(double t) const;
  double zeta_bump() const { return zeta_a_; }
  double vartheta_exponent(int i) const { return p_[i]; }
  double psi_normalization() const { return c_; }

private:
  double zeta_zone_integral(double s0, double s1) const;  // int_{s0}^{s1} zeta, 0.1 <= s0 <= s1 <= 1/6
  Jet psi_prime_raw(double y) const;
  double psi_raw(double y) const;
  double Psi0(double t) const;  // int_0^t psi0

  double B_;
  double zeta_a_ = 0.0;
  std::array<double, 3> p_{};
  double kappa_ = 0.0;  // 1/3 - B^{-1/3}/2
  double ystar_ = 0.0, wblend_ = 0.0;
  double psi_at_ystar_ = 0.0, psi_mid_ = 0.0;
  double c_ = 1.0;
  double Psi0_m1_ = 0.0;
};

WeightFamily build_weights(double B);

struct AuditEntry {
  std::string name;
  std::string kind;           // "constant" (ratio must be <= 1) or "lesssim" (B-stable ratio)
  std::vector<double> B;
  std::vector<double> ratio;  // maximal sampled left/right per B
  std::vector<long> samples, skipped;
  bool pass = false;
};

struct AuditSpec {
  std::vector<double> B{8.0, 16.0, 32.0};
  int points = 4000;         // per sampling range
  double stability = 4.0;    // allowed growth of the lesssim ratio over its B = B[0] value
};

std::vector<AuditEntry> weight_inequality_audit(const AuditSpec& spec = AuditSpec{});
std::string audit_csv(const std::vector<AuditEntry>& a);

struct SigmaProfiles {
  Field2D sigma1;  // ||F||^{-2} int_{-inf}^{y1} Lambda Q
  Field2D sigma3;  // c2^{-1} int_{-inf}^{y1} d2 Q
  double c2 = 0.0;
  double F_norm2 = 0.0;
};

// Cumulative trapezoid integration along y1 from the left edge of the periodic grid.
SigmaProfiles sigma_profiles(const ReferenceProfiles& ref);

struct LyapunovSample {
  double t = 0.0, lambda = 1.0, b = 0.0;
  std::array<double, 3> N{};
  double J1 = 0.0;
  std::array<std::array<double, 2>, 2> J{}, F{}, M{};  // index [i-1][j-1]
  double P = 0.0;
  double gamma = 0.0;
  double eta_residual = 0.0;  // ||(1 - gamma Delta) eta - L eps|| / ||L eps||
  Field2D eta;
};

// Weighted quantities of a remainder eps on the profile grid.
class LyapunovEvaluator {
public:
  LyapunovEvaluator(const ReferenceProfiles& ref, const WeightFamily& W, double theta);

  LyapunovSample compute(const Field2D& eps, double lambda, double b, const Field2D& Qb) const;
  const SigmaProfiles& sigma() const { return sigma_; }
  const WeightFamily& weights() const { return W_; }

private:
  const ReferenceProfiles& ref_;
  WeightFamily W_;
  double theta_;
  SigmaProfiles sigma_;
  std::vector<double> psi_, chi_;
  std::array<std::vector<double>, 3> phi_;
  std::unique_ptr<Fft2D> fft_;
};

struct LyapunovSeries {
  std::vector<LyapunovSample> samples;
  RunResult run;
  // Fraction of cadence intervals on which M_ij / lambda^{theta (j-1)} did not increase.
  std::array<std::array<double, 2>, 2> nonincreasing_fraction{};
};

LyapunovSeries lyapunov_series(const RunConfig& cfg, const ModulationReference& ref, const WeightFamily& W,
                               double theta);
std::string lyapunov_csv(const LyapunovSeries& s);

struct CoercivityDraws {
  std::vector<std::array<std::array<double, 2>, 2>> M;
  std::vector<std::array<double, 3>> N;
  std::vector<double> orthogonality;  // max |(eps, f)| / ||eps|| ||f|| per draw
  double min_ratio = std::numeric_limits<double>::infinity();  // min M_ij / N_i
  double max_ratio = 0.0;
  bool all_positive = false;
};

// Random smooth eps of L2 size `amplitude`, projected orthogonal to Q, Q^3, d1Q, d2Q.
CoercivityDraws coercivity_draws(const LyapunovEvaluator& ev, const ReferenceProfiles& ref, int draws,
                                 double amplitude, unsigned seed = 7);

}  // namespace zk
