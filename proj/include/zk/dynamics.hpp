#pragma once

#include <optional>
#include <string>
#include <vector>

namespace zk {

// Modulation system in lab time: lambda_t = -b / lambda^2, b_t = -theta b^2 / lambda^3,
// s_t = 1 / lambda^3, with lambda(0) = 1.
struct OdeState {
  double t = 0.0;
  double s = 0.0;
  double lambda = 1.0;
  double b = 0.0;
};

enum class Regime { Soliton, Blowup, GrowthToInfinity };

const char* regime_name(Regime r);

struct Exponents {
  double lambda_exp = 0.0;    // 1/(3-theta)
  double b_exp = 0.0;         // theta/(3-theta)
  double x1_exp = 0.0;        // -(theta-1)/(3-theta)
  double gradient_exp = 0.0;  // beta = 1/(3-theta)
};

struct RegimePrediction {
  Regime regime = Regime::Soliton;
  std::optional<double> T;
  Exponents exponents;
  std::optional<double> ell1;  // lambda(t) / (T-t)^{1/(3-theta)} as t -> T
};

struct ClosedForm {
  double lambda = 1.0;
  double b = 0.0;
};

double blowup_time(double b0, double theta);
ClosedForm closed_form(double b0, double theta, double t);
Exponents exponents(double theta);
RegimePrediction predict(double b0, double theta);

struct Trajectory {
  std::vector<OdeState> states;
  bool singular = false;  // lambda <= 0 or step underflow before t_end
  std::string message;
};

// Classical RK4 with step halving whenever lambda changes by more than 5% in a step.
// A negative dt integrates backward in time.
Trajectory integrate(double b0, double theta, double t_end, double dt, double lambda0 = 1.0);

struct PowerLawFit {
  double T = 0.0;   // fitted singular time
  double c = 0.0;   // prefactor
  double p = 0.0;   // exponent
  double rms = 0.0; // rms of log residuals
};

// Fits y(t) = c (T - t)^p to positive samples; T is found by a bracketed
// one-dimensional search, (log c, p) by linear least squares for each T.
PowerLawFit fit_power_law(const std::vector<double>& t, const std::vector<double>& y);

std::string trajectory_csv(const Trajectory& tr, double theta);
std::string prediction_json(const RegimePrediction& p, double b0, double theta);

}  // namespace zk
