#include "fft.hpp"

#include <fftw3.h>

#include <map>
#include <memory>
#include <mutex>
#include <vector>

#include "error.hpp"

namespace isophase::detail {

namespace {
std::mutex g_plan_mutex;
}

RealFft::RealFft(int n) : n_(n) {
  std::vector<double> x(n);
  std::vector<fftw_complex> X(n / 2 + 1);
  const unsigned flags = FFTW_ESTIMATE | FFTW_UNALIGNED | FFTW_PRESERVE_INPUT;
  r2c_ = fftw_plan_dft_r2c_1d(n, x.data(), X.data(), flags);
  c2r_ = fftw_plan_dft_c2r_1d(n, X.data(), x.data(), flags);
  require(r2c_ && c2r_, ErrorCode::kInvalidArgument, "fftw: cannot plan length " + std::to_string(n));
}

RealFft::~RealFft() {
  std::lock_guard<std::mutex> lock(g_plan_mutex);
  if (r2c_) fftw_destroy_plan(static_cast<fftw_plan>(r2c_));
  if (c2r_) fftw_destroy_plan(static_cast<fftw_plan>(c2r_));
}

const RealFft& RealFft::get(int n) {
  static std::map<int, std::unique_ptr<RealFft>> cache;
  std::lock_guard<std::mutex> lock(g_plan_mutex);
  auto it = cache.find(n);
  if (it == cache.end()) it = cache.emplace(n, std::unique_ptr<RealFft>(new RealFft(n))).first;
  return *it->second;
}

void RealFft::forward(const double* in, cplx* out) const {
  fftw_execute_dft_r2c(static_cast<fftw_plan>(r2c_), const_cast<double*>(in),
                       reinterpret_cast<fftw_complex*>(out));
}

void RealFft::inverse(const cplx* in, double* out) const {
  fftw_execute_dft_c2r(static_cast<fftw_plan>(c2r_),
                       reinterpret_cast<fftw_complex*>(const_cast<cplx*>(in)), out);
}

}  // namespace isophase::detail
