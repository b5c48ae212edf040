#pragma once

#include <complex>

namespace isophase::detail {

using cplx = std::complex<double>;

// Real-to-half-complex transform pair of length n, unnormalized (FFTW conventions):
//   forward: X_k = sum_j x_j exp(-2 pi i j k / n),  k = 0..n/2
//   inverse: x_j = sum_k X_k exp(+2 pi i j k / n)  (Hermitian completion implied)
// inverse(forward(x)) = n * x. Both calls leave their input untouched and are safe to
// run concurrently; plans are created once per length and cached.
class RealFft {
 public:
  static const RealFft& get(int n);

  int size() const { return n_; }
  int half() const { return n_ / 2 + 1; }
  void forward(const double* in, cplx* out) const;
  void inverse(const cplx* in, double* out) const;

  RealFft(const RealFft&) = delete;
  RealFft& operator=(const RealFft&) = delete;
  ~RealFft();

 private:
  explicit RealFft(int n);
  int n_;
  void* r2c_ = nullptr;
  void* c2r_ = nullptr;
};

}  // namespace isophase::detail
