#pragma once

#include <complex>
#include <functional>
#include <numbers>
#include <span>
#include <vector>

#include "error.hpp"

namespace isophase {

using cplx = std::complex<double>;

// Uniform periodic grid x_j = j L / M, j = 0..M-1.
struct Grid {
  int M = 256;
  double L = 2.0 * std::numbers::pi;

  Grid() = default;
  Grid(int M_, double L_ = 2.0 * std::numbers::pi);

  double dx() const { return L / M; }
  double point(int j) const { return j * L / M; }
  int half() const { return M / 2 + 1; }
  // angular wavenumber of DFT index k (k may be negative)
  double wavenumber(int k) const { return 2.0 * std::numbers::pi * k / L; }
  // physical distance corresponding to a phase increment (phase runs over [0, 2 pi))
  double phase_to_distance(double alpha) const { return alpha * L / (2.0 * std::numbers::pi); }

  friend bool operator==(const Grid&, const Grid&) = default;
};

// n-component real field, component-major storage.
class Field {
 public:
  Field() = default;
  explicit Field(const Grid& g, int n = 1);
  Field(const Grid& g, int n, std::vector<double> values);

  static Field from_function(const Grid& g, const std::function<double(double)>& fn);

  const Grid& grid() const { return grid_; }
  int components() const { return n_; }
  std::size_t size() const { return v_.size(); }
  bool empty() const { return v_.empty(); }

  std::span<const double> values() const { return v_; }
  std::span<double> values() { return v_; }
  std::span<const double> component(int c) const { return {v_.data() + std::size_t(c) * grid_.M, std::size_t(grid_.M)}; }
  std::span<double> component(int c) { return {v_.data() + std::size_t(c) * grid_.M, std::size_t(grid_.M)}; }
  double* data() { return v_.data(); }
  const double* data() const { return v_.data(); }
  double operator()(int c, int j) const { return v_[std::size_t(c) * grid_.M + j]; }
  double& operator()(int c, int j) { return v_[std::size_t(c) * grid_.M + j]; }

  bool all_finite() const;
  bool compatible(const Field& o) const { return grid_ == o.grid_ && n_ == o.n_; }

  Field& operator+=(const Field& o);
  Field& operator-=(const Field& o);
  Field& operator*=(double s);
  Field& axpy(double a, const Field& x);  // this += a x

 private:
  Grid grid_;
  int n_ = 0;
  std::vector<double> v_;
};

Field operator+(Field a, const Field& b);
Field operator-(Field a, const Field& b);
Field operator*(double s, Field a);

void check_compatible(const Field& a, const Field& b, const char* where);

// Full DFT coefficients c_k, k in standard ordering 0, 1, ..., M/2, -(M/2-1), ..., -1, per
// component. Convention: c_k = sum_j f(x_j) exp(-i kappa_k x_j) (unnormalized), so that
// f(x_j) = (1/M) sum_k c_k exp(i kappa_k x_j) and ||f||^2 = (L / M^2) sum_k |c_k|^2.
struct SpectralField {
  Grid grid;
  int n = 1;
  std::vector<cplx> coeffs;  // n * M

  cplx& at(int c, int k) { return coeffs[std::size_t(c) * grid.M + ((k % grid.M) + grid.M) % grid.M]; }
  cplx at(int c, int k) const { return coeffs[std::size_t(c) * grid.M + ((k % grid.M) + grid.M) % grid.M]; }
};

SpectralField to_spectral(const Field& f);
Field from_spectral(const SpectralField& F);

// f(x - h): translation by a physical distance h. Exact for fields without Nyquist content.
Field shift(const Field& f, double h);
// spectral d/dx (Nyquist mode dropped)
Field derivative(const Field& f);

double inner(const Field& f, const Field& g);
double norm(const Field& f);
// discrete Sobolev H1 norm: sqrt(||f||^2 + ||f'||^2)
double norm_E(const Field& f);

enum class TubeNorm { kL2, kH1 };
double tube_norm(const Field& f, TubeNorm which);

// Diagonal Fourier multiplier: mode k of component c is multiplied by
// symbol[c][k] + i kappa_k speed. Symbols are stored for k = 0 .. M/2 and extended evenly.
struct LinearOp {
  Grid grid;
  std::vector<std::vector<double>> symbol;
  double speed = 0.0;

  static LinearOp scalar(const Grid& g, int n, double a);
  // a_k = -D_c kappa_k^2 - r_c per component
  static LinearOp diffusion(const Grid& g, const std::vector<double>& D, const std::vector<double>& r, double speed);

  int components() const { return int(symbol.size()); }
  cplx multiplier(int c, int k) const { return {symbol[c][k], grid.wavenumber(k) * speed}; }
  double omega() const;
  // true when the multiplier is the same real number for every mode and component
  bool is_scalar() const;
};

Field apply_semigroup(const LinearOp& op, double t, const Field& f);
Field apply_linear(const LinearOp& op, const Field& f);

namespace detail {

// Half-spectrum storage (k = 0..M/2) used by the integrators.
struct Spectrum {
  int n = 0;
  int half = 0;
  std::vector<cplx> c;

  Spectrum() = default;
  Spectrum(int n_, int half_) : n(n_), half(half_), c(std::size_t(n_) * half_) {}
  cplx* comp(int i) { return c.data() + std::size_t(i) * half; }
  const cplx* comp(int i) const { return c.data() + std::size_t(i) * half; }
  void zero() { std::fill(c.begin(), c.end(), cplx(0.0)); }
  void axpy(double a, const Spectrum& x) {
    for (std::size_t i = 0; i < c.size(); ++i) c[i] += a * x.c[i];
  }
};

void forward(const Field& f, Spectrum& out);
// writes into out, which must already have the right grid and component count
void inverse(const Spectrum& s, Field& out);
Spectrum forward(const Field& f);
Field inverse(const Spectrum& s, const Grid& g);

// Parseval: physical inner product from half spectra
double inner(const Spectrum& a, const Spectrum& b, const Grid& g);
double inner_h1(const Spectrum& a, const Spectrum& b, const Grid& g);
// inner(shift(a, h), b) and its h-derivatives of order 0, 1, 2 in one pass
void inner_shifted(const Spectrum& a, const Spectrum& b, const Grid& g, double h, double out[3]);
void shift_in_place(Spectrum& s, const Grid& g, double h);
void derivative_in_place(Spectrum& s, const Grid& g);

}  // namespace detail

}  // namespace isophase
