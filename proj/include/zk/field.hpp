#pragma once

#include <cstddef>
#include <vector>

namespace zk {

// Uniform tensor grid with node (i, j) at (x0 + i*h1, y0 + j*h2).
// Storage is row-major in i: index = i*n2 + j.
struct Grid2D {
  int n1 = 0;
  int n2 = 0;
  double x0 = 0.0;
  double y0 = 0.0;
  double h1 = 0.0;
  double h2 = 0.0;
  bool periodic = false;

  double x(int i) const { return x0 + i * h1; }
  double y(int j) const { return y0 + j * h2; }
  std::size_t size() const { return static_cast<std::size_t>(n1) * n2; }
  std::size_t index(int i, int j) const { return static_cast<std::size_t>(i) * n2 + j; }
  double cell() const { return h1 * h2; }
  double length1() const { return n1 * h1; }
  double length2() const { return n2 * h2; }

  // Periodic box [-L1/2, L1/2) x [-L2/2, L2/2).
  static Grid2D periodic_box(int n1, int n2, double L1, double L2);
  // Periodic box with explicit lower corner.
  static Grid2D periodic_box(int n1, int n2, double a1, double L1, double a2, double L2);
};

struct Field2D {
  Grid2D grid;
  std::vector<double> values;

  Field2D() = default;
  explicit Field2D(const Grid2D& g, double fill = 0.0) : grid(g), values(g.size(), fill) {}

  double& operator()(int i, int j) { return values[grid.index(i, j)]; }
  double operator()(int i, int j) const { return values[grid.index(i, j)]; }
};

// Equal-weight quadrature: periodic trapezoid, or plain Riemann sum on truncated boxes.
double integrate(const Field2D& f);
double inner(const Field2D& f, const Field2D& g);
double norm2(const Field2D& f);

}  // namespace zk
