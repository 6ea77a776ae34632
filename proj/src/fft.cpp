#include "zk/fft.hpp"

#include <fftw3.h>

#include <cmath>
#include <cstring>
#include <numbers>

#include "zk/errors.hpp"

namespace zk {

Fft2D::Fft2D(const Grid2D& g) : grid_(g), nh_(g.n2 / 2 + 1) {
  if (g.n1 < 2 || g.n2 < 2) throw ConfigError("Fft2D needs at least 2 points per axis");
  const double two_pi = 2.0 * std::numbers::pi;
  k1_.resize(g.n1);
  for (int i = 0; i < g.n1; ++i) {
    const int m = i <= g.n1 / 2 ? i : i - g.n1;
    k1_[i] = two_pi * m / g.length1();
  }
  k2_.resize(nh_);
  for (int j = 0; j < nh_; ++j) k2_[j] = two_pi * j / g.length2();
  rbuf_ = fftw_alloc_real(g.size());
  cbuf_ = reinterpret_cast<cplx*>(fftw_alloc_complex(spec_size()));
  plan_f_ = fftw_plan_dft_r2c_2d(g.n1, g.n2, rbuf_, reinterpret_cast<fftw_complex*>(cbuf_),
                                 FFTW_ESTIMATE);
  plan_b_ = fftw_plan_dft_c2r_2d(g.n1, g.n2, reinterpret_cast<fftw_complex*>(cbuf_), rbuf_,
                                 FFTW_ESTIMATE);
  if (!plan_f_ || !plan_b_) throw NumericalFailure("FFTW planning failed");
}

Fft2D::~Fft2D() {
  fftw_destroy_plan(static_cast<fftw_plan>(plan_f_));
  fftw_destroy_plan(static_cast<fftw_plan>(plan_b_));
  fftw_free(rbuf_);
  fftw_free(cbuf_);
}

void Fft2D::forward(const double* in, cplx* out) {
  std::memcpy(rbuf_, in, sizeof(double) * grid_.size());
  fftw_execute(static_cast<fftw_plan>(plan_f_));
  std::memcpy(out, cbuf_, sizeof(cplx) * spec_size());
}

void Fft2D::backward(const cplx* in, double* out) {
  std::memcpy(cbuf_, in, sizeof(cplx) * spec_size());
  fftw_execute(static_cast<fftw_plan>(plan_b_));
  const double s = 1.0 / static_cast<double>(grid_.size());
  for (std::size_t k = 0; k < grid_.size(); ++k) out[k] = rbuf_[k] * s;
}

namespace {

// (i k)^n by repeated multiplication; std::pow(complex, int) maps 0^0 to 0.
cplx ik_power(double k, int n) {
  cplx r(1.0);
  for (int m = 0; m < n; ++m) r *= cplx(0.0, k);
  return r;
}

}  // namespace

Field2D spectral_derivative(Fft2D& fft, const Field2D& f, int a, int b) {
  return apply_multiplier(fft, f, [&](int i, int j) {
    if ((a % 2 == 1 && fft.nyquist1(i)) || (b % 2 == 1 && fft.nyquist2(j))) return cplx(0.0);
    return ik_power(fft.k1(i), a) * ik_power(fft.k2(j), b);
  });
}

Field2D spectral_laplacian(Fft2D& fft, const Field2D& f) {
  return apply_multiplier(fft, f, [&](int i, int j) {
    return cplx(-(fft.k1(i) * fft.k1(i) + fft.k2(j) * fft.k2(j)));
  });
}

namespace {

std::vector<cplx> run_dft(const std::vector<cplx>& x, int sign) {
  const int n = static_cast<int>(x.size());
  if (n < 1) return {};
  fftw_complex* buf = fftw_alloc_complex(n);
  fftw_plan p = fftw_plan_dft_1d(n, buf, buf, sign, FFTW_ESTIMATE);
  std::memcpy(buf, x.data(), sizeof(cplx) * n);
  fftw_execute(p);
  std::vector<cplx> out(n);
  for (int k = 0; k < n; ++k) out[k] = cplx(buf[k][0], buf[k][1]);
  fftw_destroy_plan(p);
  fftw_free(buf);
  return out;
}

}  // namespace

std::vector<cplx> dft(const std::vector<cplx>& x) { return run_dft(x, FFTW_FORWARD); }

std::vector<cplx> idft(const std::vector<cplx>& x) {
  auto y = run_dft(x, FFTW_BACKWARD);
  const double s = 1.0 / static_cast<double>(x.size());
  for (auto& v : y) v *= s;
  return y;
}

Dst2D::Dst2D(int m1, int m2) : m1_(m1), m2_(m2) {
  if (m1 < 1 || m2 < 1) throw ConfigError("Dst2D needs positive sizes");
  in_ = fftw_alloc_real(static_cast<std::size_t>(m1) * m2);
  out_ = fftw_alloc_real(static_cast<std::size_t>(m1) * m2);
  plan_ = fftw_plan_r2r_2d(m1, m2, in_, out_, FFTW_RODFT00, FFTW_RODFT00, FFTW_ESTIMATE);
  if (!plan_) throw NumericalFailure("FFTW DST planning failed");
}

Dst2D::~Dst2D() {
  fftw_destroy_plan(static_cast<fftw_plan>(plan_));
  fftw_free(in_);
  fftw_free(out_);
}

void Dst2D::transform(const double* in, double* out) {
  const std::size_t n = static_cast<std::size_t>(m1_) * m2_;
  std::memcpy(in_, in, sizeof(double) * n);
  fftw_execute(static_cast<fftw_plan>(plan_));
  std::memcpy(out, out_, sizeof(double) * n);
}

}  // namespace zk
