#pragma once

#include <complex>
#include <vector>

#include "zk/field.hpp"

namespace zk {

using cplx = std::complex<double>;

// Real-to-half-complex 2D transform on a periodic Grid2D (FFTW, estimate plans).
// Spectrum layout is n1 x (n2/2 + 1); index (i, j) -> i*(n2/2+1) + j.
class Fft2D {
public:
  explicit Fft2D(const Grid2D& g);
  ~Fft2D();
  Fft2D(const Fft2D&) = delete;
  Fft2D& operator=(const Fft2D&) = delete;

  const Grid2D& grid() const { return grid_; }
  int n1() const { return grid_.n1; }
  int n2() const { return grid_.n2; }
  int nh() const { return nh_; }
  std::size_t spec_size() const { return static_cast<std::size_t>(grid_.n1) * nh_; }

  // Unnormalized forward transform.
  void forward(const double* in, cplx* out);
  // Inverse including the 1/(n1 n2) factor.
  void backward(const cplx* in, double* out);

  // Angular wavenumbers of spectral row i and column j.
  double k1(int i) const { return k1_[i]; }
  double k2(int j) const { return k2_[j]; }
  // Nyquist rows/columns carry no odd derivative.
  bool nyquist1(int i) const { return grid_.n1 % 2 == 0 && i == grid_.n1 / 2; }
  bool nyquist2(int j) const { return grid_.n2 % 2 == 0 && j == grid_.n2 / 2; }

private:
  Grid2D grid_;
  int nh_;
  std::vector<double> k1_, k2_;
  double* rbuf_;
  cplx* cbuf_;
  void* plan_f_;
  void* plan_b_;
};

// f -> d1^a d2^b f by spectral differentiation on a periodic grid.
Field2D spectral_derivative(Fft2D& fft, const Field2D& f, int a, int b);
// Laplacian by spectral differentiation.
Field2D spectral_laplacian(Fft2D& fft, const Field2D& f);

// Applies the Fourier multiplier m(k1, k2) to a real field.
template <class M>
Field2D apply_multiplier(Fft2D& fft, const Field2D& f, M&& m) {
  std::vector<cplx> s(fft.spec_size());
  fft.forward(f.values.data(), s.data());
  for (int i = 0; i < fft.n1(); ++i)
    for (int j = 0; j < fft.nh(); ++j) s[static_cast<std::size_t>(i) * fft.nh() + j] *= m(i, j);
  Field2D out(f.grid);
  fft.backward(s.data(), out.values.data());
  return out;
}

// Forward complex DFT, sum_j x_j exp(-2 pi i jk/n), unnormalized.
std::vector<cplx> dft(const std::vector<cplx>& x);
// Inverse complex DFT including 1/n.
std::vector<cplx> idft(const std::vector<cplx>& x);

// Two-dimensional type-I sine transform on m1 x m2 interior nodes (FFTW RODFT00).
// Applying it twice multiplies by 4 (m1+1)(m2+1).
class Dst2D {
public:
  Dst2D(int m1, int m2);
  ~Dst2D();
  Dst2D(const Dst2D&) = delete;
  Dst2D& operator=(const Dst2D&) = delete;

  void transform(const double* in, double* out);
  double inverse_scale() const { return 1.0 / (4.0 * (m1_ + 1) * (m2_ + 1)); }
  int m1() const { return m1_; }
  int m2() const { return m2_; }

private:
  int m1_, m2_;
  double* in_;
  double* out_;
  void* plan_;
};

}  // namespace zk
