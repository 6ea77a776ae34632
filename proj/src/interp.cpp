#include "zk/interp.hpp"

#include <cmath>
#include <stdexcept>

#include "zk/errors.hpp"

namespace zk {

CubicSpline::CubicSpline(double x0, double dx, std::vector<double> y)
    : x0_(x0), dx_(dx), y_(std::move(y)) {
  const int n = static_cast<int>(y_.size());
  if (n < 4) throw DomainError("CubicSpline needs at least 4 knots");
  if (!(dx_ > 0.0)) throw DomainError("CubicSpline needs dx > 0");
  // Uniform spacing: m[k-1] + 4 m[k] + m[k+1] = 6 (y[k-1] - 2y[k] + y[k+1]) / dx^2.
  // Not-a-knot: third derivative continuous at knots 1 and n-2, i.e.
  // m0 - 2 m1 + m2 = 0 and m[n-3] - 2 m[n-2] + m[n-1] = 0.
  // Eliminate m0 = 2 m1 - m2 and m[n-1] = 2 m[n-2] - m[n-3]; unknowns m1..m[n-2].
  const int k = n - 2;
  std::vector<double> a(k, 1.0), b(k, 4.0), c(k, 1.0), d(k);
  const double s = 6.0 / (dx_ * dx_);
  for (int i = 0; i < k; ++i) d[i] = s * (y_[i] - 2.0 * y_[i + 1] + y_[i + 2]);
  // First row: m0 + 4 m1 + m2 with m0 = 2 m1 - m2 gives 6 m1 + 0 m2.
  b[0] = 6.0;
  c[0] = 0.0;
  b[k - 1] = 6.0;
  a[k - 1] = 0.0;
  for (int i = 1; i < k; ++i) {
    const double w = a[i] / b[i - 1];
    b[i] -= w * c[i - 1];
    d[i] -= w * d[i - 1];
  }
  std::vector<double> m(k);
  m[k - 1] = d[k - 1] / b[k - 1];
  for (int i = k - 2; i >= 0; --i) m[i] = (d[i] - c[i] * m[i + 1]) / b[i];
  m_.assign(n, 0.0);
  for (int i = 0; i < k; ++i) m_[i + 1] = m[i];
  m_[0] = 2.0 * m_[1] - m_[2];
  m_[n - 1] = 2.0 * m_[n - 2] - m_[n - 3];
}

int CubicSpline::segment(double x, double& t) const {
  const int n = static_cast<int>(y_.size());
  double u = (x - x0_) / dx_;
  int i = static_cast<int>(std::floor(u));
  if (i < 0) i = 0;
  if (i > n - 2) i = n - 2;
  t = u - i;
  return i;
}

double CubicSpline::operator()(double x) const {
  double t;
  const int i = segment(x, t);
  const double s = 1.0 - t;
  const double h2 = dx_ * dx_ / 6.0;
  return s * y_[i] + t * y_[i + 1] + h2 * ((s * s * s - s) * m_[i] + (t * t * t - t) * m_[i + 1]);
}

double CubicSpline::derivative(double x) const {
  double t;
  const int i = segment(x, t);
  const double s = 1.0 - t;
  return (y_[i + 1] - y_[i]) / dx_ +
         dx_ / 6.0 * ((1.0 - 3.0 * s * s) * m_[i] + (3.0 * t * t - 1.0) * m_[i + 1]);
}

double CubicSpline::second_derivative(double x) const {
  double t;
  const int i = segment(x, t);
  return (1.0 - t) * m_[i] + t * m_[i + 1];
}

RadialInterpolant::RadialInterpolant(double dr, const std::vector<double>& values) {
  const int n = static_cast<int>(values.size());
  if (n < 3) throw DomainError("RadialInterpolant needs at least 3 samples");
  std::vector<double> ext(2 * n - 1);
  for (int k = 0; k < n; ++k) {
    ext[n - 1 + k] = values[k];
    ext[n - 1 - k] = values[k];
  }
  rmax_ = dr * (n - 1);
  spline_ = CubicSpline(-rmax_, dr, std::move(ext));
}

double RadialInterpolant::operator()(double r) const {
  if (r > rmax_) return 0.0;
  return spline_(r);
}

double RadialInterpolant::derivative(double r) const {
  if (r > rmax_) return 0.0;
  return spline_.derivative(r);
}

double RadialInterpolant::second_derivative(double r) const {
  if (r > rmax_) return 0.0;
  return spline_.second_derivative(r);
}

BicubicHermite::BicubicHermite(const Field2D& f, const Field2D& fx, const Field2D& fy,
                               const Field2D& fxy)
    : g_(f.grid), f_(f.values), fx_(fx.values), fy_(fy.values), fxy_(fxy.values) {
  if (g_.n1 < 2 || g_.n2 < 2) throw DomainError("BicubicHermite needs a 2x2 grid at least");
}

BicubicHermite BicubicHermite::from_samples(const Field2D& f) {
  Field2D fx = fd_derivative(f, 0);
  Field2D fy = fd_derivative(f, 1);
  Field2D fxy = fd_derivative(fx, 1);
  return BicubicHermite(f, fx, fy, fxy);
}

namespace {

inline void hermite_basis(double t, double h, double w[4]) {
  const double t2 = t * t, t3 = t2 * t;
  w[0] = 2 * t3 - 3 * t2 + 1;
  w[1] = (t3 - 2 * t2 + t) * h;
  w[2] = -2 * t3 + 3 * t2;
  w[3] = (t3 - t2) * h;
}

}  // namespace

double BicubicHermite::operator()(double x, double y) const {
  double u = (x - g_.x0) / g_.h1;
  double v = (y - g_.y0) / g_.h2;
  if (!g_.periodic) {
    if (u < 0.0 || v < 0.0 || u > g_.n1 - 1 || v > g_.n2 - 1) return 0.0;
  }
  int i = static_cast<int>(std::floor(u));
  int j = static_cast<int>(std::floor(v));
  if (!g_.periodic) {
    if (i > g_.n1 - 2) i = g_.n1 - 2;
    if (j > g_.n2 - 2) j = g_.n2 - 2;
  }
  const double tu = u - i, tv = v - j;
  int i1 = i + 1, j1 = j + 1;
  if (g_.periodic) {
    auto wrap = [](int a, int n) { a %= n; return a < 0 ? a + n : a; };
    i = wrap(i, g_.n1);
    i1 = wrap(i1, g_.n1);
    j = wrap(j, g_.n2);
    j1 = wrap(j1, g_.n2);
  }
  double wu[4], wv[4];
  hermite_basis(tu, g_.h1, wu);
  hermite_basis(tv, g_.h2, wv);
  const std::size_t a = g_.index(i, j), b = g_.index(i1, j), c = g_.index(i, j1), d = g_.index(i1, j1);
  // Tensor product of value/slope bases: (wu0 f_i + wu1 fx_i + wu2 f_i1 + wu3 fx_i1) along u.
  auto col = [&](std::size_t p, std::size_t q, const std::vector<double>& val,
                 const std::vector<double>& dx) {
    return wu[0] * val[p] + wu[1] * dx[p] + wu[2] * val[q] + wu[3] * dx[q];
  };
  const double v0 = col(a, b, f_, fx_);
  const double s0 = col(a, b, fy_, fxy_);
  const double v1 = col(c, d, f_, fx_);
  const double s1 = col(c, d, fy_, fxy_);
  return wv[0] * v0 + wv[1] * s0 + wv[2] * v1 + wv[3] * s1;
}

Field2D fd_derivative(const Field2D& f, int axis) {
  const Grid2D& g = f.grid;
  Field2D out(g);
  const int n = axis == 0 ? g.n1 : g.n2;
  const double h = axis == 0 ? g.h1 : g.h2;
  if (n < 5) throw DomainError("fd_derivative needs at least 5 points per axis");
  auto at = [&](int i, int j, int di) -> double {
    int a = axis == 0 ? i + di : i;
    int b = axis == 0 ? j : j + di;
    if (g.periodic) {
      a = ((a % g.n1) + g.n1) % g.n1;
      b = ((b % g.n2) + g.n2) % g.n2;
    }
    return f(a, b);
  };
  for (int i = 0; i < g.n1; ++i) {
    for (int j = 0; j < g.n2; ++j) {
      const int p = axis == 0 ? i : j;
      double d;
      if (g.periodic || (p >= 2 && p <= n - 3)) {
        d = (-at(i, j, 2) + 8.0 * at(i, j, 1) - 8.0 * at(i, j, -1) + at(i, j, -2)) / (12.0 * h);
      } else if (p < 2) {
        const int s = -p;
        // Fourth-order one-sided stencil anchored at offset s from the point.
        const double c[5] = {-25.0, 48.0, -36.0, 16.0, -3.0};
        const double c1[5] = {-3.0, -10.0, 18.0, -6.0, 1.0};
        d = 0.0;
        for (int q = 0; q < 5; ++q) d += (p == 0 ? c[q] : c1[q]) * at(i, j, s + q);
        d /= 12.0 * h;
      } else {
        const int s = n - 1 - p;
        const double c[5] = {25.0, -48.0, 36.0, -16.0, 3.0};
        const double c1[5] = {3.0, 10.0, -18.0, 6.0, -1.0};
        d = 0.0;
        for (int q = 0; q < 5; ++q) d += (s == 0 ? c[q] : c1[q]) * at(i, j, s - q);
        d /= 12.0 * h;
      }
      out(i, j) = d;
    }
  }
  return out;
}

}  // namespace zk
