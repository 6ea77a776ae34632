#pragma once

namespace zk {

// C^3 transition S(t) = t^4 (35 - 84 t + 70 t^2 - 20 t^3) on [0, 1], clamped outside.
// S and its first three derivatives vanish at t = 0; S - 1 and they vanish at t = 1.
inline double smoothstep(double t) {
  if (t <= 0.0) return 0.0;
  if (t >= 1.0) return 1.0;
  const double t2 = t * t;
  return t2 * t2 * (35.0 + t * (-84.0 + t * (70.0 - 20.0 * t)));
}

// k-th derivative of smoothstep for k = 0..3.
inline double smoothstep_d(double t, int k) {
  if (k == 0) return smoothstep(t);
  if (t <= 0.0 || t >= 1.0) return 0.0;
  const double t2 = t * t, t3 = t2 * t;
  switch (k) {
    case 1: return 140.0 * t3 * (1.0 - t) * (1.0 - t) * (1.0 - t);
    case 2: return 420.0 * t2 * (1.0 - t) * (1.0 - t) * (1.0 - 2.0 * t);
    case 3: return 840.0 * t * (1.0 - t) * (1.0 - 5.0 * t + 5.0 * t2);
    default: return 0.0;
  }
}

}  // namespace zk
