#include "zk/field.hpp"

#include <cmath>

#include "zk/errors.hpp"

namespace zk {

Grid2D Grid2D::periodic_box(int n1, int n2, double L1, double L2) {
  return periodic_box(n1, n2, -0.5 * L1, L1, -0.5 * L2, L2);
}

Grid2D Grid2D::periodic_box(int n1, int n2, double a1, double L1, double a2, double L2) {
  if (n1 < 2 || n2 < 2 || !(L1 > 0.0) || !(L2 > 0.0))
    throw ConfigError("periodic box needs n >= 2 and positive lengths");
  Grid2D g;
  g.n1 = n1;
  g.n2 = n2;
  g.x0 = a1;
  g.y0 = a2;
  g.h1 = L1 / n1;
  g.h2 = L2 / n2;
  g.periodic = true;
  return g;
}

double integrate(const Field2D& f) {
  double s = 0.0;
  for (double v : f.values) s += v;
  return s * f.grid.cell();
}

double inner(const Field2D& f, const Field2D& g) {
  if (f.values.size() != g.values.size()) throw DomainError("inner: field sizes differ");
  double s = 0.0;
  for (std::size_t k = 0; k < f.values.size(); ++k) s += f.values[k] * g.values[k];
  return s * f.grid.cell();
}

double norm2(const Field2D& f) { return std::sqrt(inner(f, f)); }

}  // namespace zk
