#pragma once

#include <vector>

#include "zk/field.hpp"

namespace zk {

// Not-a-knot cubic spline on a uniform grid x_k = x0 + k*dx.
class CubicSpline {
public:
  CubicSpline() = default;
  CubicSpline(double x0, double dx, std::vector<double> y);

  double operator()(double x) const;
  double derivative(double x) const;
  double second_derivative(double x) const;
  double x_min() const { return x0_; }
  double x_max() const { return x0_ + dx_ * (y_.size() - 1); }
  bool empty() const { return y_.empty(); }

private:
  int segment(double x, double& t) const;

  double x0_ = 0.0;
  double dx_ = 1.0;
  std::vector<double> y_;
  std::vector<double> m_;  // second derivatives at the knots
};

// Radially symmetric function sampled on [0, rmax]; zero outside.
// The spline is built on the even extension so the origin is an interior knot.
class RadialInterpolant {
public:
  RadialInterpolant() = default;
  RadialInterpolant(double dr, const std::vector<double>& values);

  double operator()(double r) const;
  double derivative(double r) const;
  double second_derivative(double r) const;
  double rmax() const { return rmax_; }

private:
  CubicSpline spline_;
  double rmax_ = 0.0;
};

// Piecewise bicubic Hermite interpolation from nodal values and derivatives.
// Periodic grids wrap; truncated grids return zero outside the node range.
class BicubicHermite {
public:
  BicubicHermite() = default;
  BicubicHermite(const Field2D& f, const Field2D& fx, const Field2D& fy, const Field2D& fxy);

  // Derivatives supplied by fourth-order central differences.
  static BicubicHermite from_samples(const Field2D& f);

  double operator()(double x, double y) const;

private:
  Grid2D g_;
  std::vector<double> f_, fx_, fy_, fxy_;
};

// Fourth-order central differences along each axis; one-sided at truncated edges.
Field2D fd_derivative(const Field2D& f, int axis);

}  // namespace zk
