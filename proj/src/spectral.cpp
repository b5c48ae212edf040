#include "spectral.hpp"

#include <algorithm>
#include <cmath>

#include "fft.hpp"

namespace isophase {

const char* error_name(ErrorCode code) {
  switch (code) {
    case ErrorCode::kInvalidArgument: return "invalid_argument";
    case ErrorCode::kGridMismatch: return "grid_mismatch";
    case ErrorCode::kDivergence: return "divergence";
    case ErrorCode::kNonConvergence: return "non_convergence";
    case ErrorCode::kDegenerate: return "degenerate";
    case ErrorCode::kNotStable: return "not_stable";
    case ErrorCode::kPhaseUndefined: return "phase_undefined";
    case ErrorCode::kNotAttracted: return "not_attracted";
    case ErrorCode::kBudget: return "budget_violation";
    case ErrorCode::kConfig: return "config";
    case ErrorCode::kIo: return "io";
    case ErrorCode::kInsufficientData: return "insufficient_data";
  }
  return "unknown";
}

Grid::Grid(int M_, double L_) : M(M_), L(L_) {
  require(M >= 16 && M % 2 == 0, ErrorCode::kInvalidArgument, "grid: M must be even and >= 16");
  require((M & (M - 1)) == 0, ErrorCode::kInvalidArgument, "grid: M must be a power of two");
  require(L > 0 && std::isfinite(L), ErrorCode::kInvalidArgument, "grid: L must be positive");
}

Field::Field(const Grid& g, int n) : grid_(g), n_(n), v_(std::size_t(n) * g.M, 0.0) {
  require(n >= 1, ErrorCode::kInvalidArgument, "field: component count must be >= 1");
}

Field::Field(const Grid& g, int n, std::vector<double> values) : grid_(g), n_(n), v_(std::move(values)) {
  require(n >= 1, ErrorCode::kInvalidArgument, "field: component count must be >= 1");
  require(v_.size() == std::size_t(n) * g.M, ErrorCode::kInvalidArgument, "field: value count does not match n*M");
  require(all_finite(), ErrorCode::kInvalidArgument, "field: non-finite value");
}

Field Field::from_function(const Grid& g, const std::function<double(double)>& fn) {
  Field f(g, 1);
  for (int j = 0; j < g.M; ++j) f.v_[j] = fn(g.point(j));
  return f;
}

bool Field::all_finite() const {
  return std::all_of(v_.begin(), v_.end(), [](double v) { return std::isfinite(v); });
}

Field& Field::operator+=(const Field& o) {
  check_compatible(*this, o, "field +");
  for (std::size_t i = 0; i < v_.size(); ++i) v_[i] += o.v_[i];
  return *this;
}

Field& Field::operator-=(const Field& o) {
  check_compatible(*this, o, "field -");
  for (std::size_t i = 0; i < v_.size(); ++i) v_[i] -= o.v_[i];
  return *this;
}

Field& Field::operator*=(double s) {
  for (double& v : v_) v *= s;
  return *this;
}

Field& Field::axpy(double a, const Field& x) {
  check_compatible(*this, x, "field axpy");
  for (std::size_t i = 0; i < v_.size(); ++i) v_[i] += a * x.v_[i];
  return *this;
}

Field operator+(Field a, const Field& b) { return a += b; }
Field operator-(Field a, const Field& b) { return a -= b; }
Field operator*(double s, Field a) { return a *= s; }

void check_compatible(const Field& a, const Field& b, const char* where) {
  if (!(a.grid() == b.grid())) fail(ErrorCode::kGridMismatch, std::string(where) + ": grid mismatch");
  if (a.components() != b.components())
    fail(ErrorCode::kGridMismatch, std::string(where) + ": component count mismatch");
}

SpectralField to_spectral(const Field& f) {
  const Grid& g = f.grid();
  const int M = g.M;
  SpectralField F{g, f.components(), std::vector<cplx>(std::size_t(f.components()) * M)};
  const auto& fft = detail::RealFft::get(M);
  std::vector<cplx> half(g.half());
  for (int c = 0; c < f.components(); ++c) {
    fft.forward(f.component(c).data(), half.data());
    cplx* out = F.coeffs.data() + std::size_t(c) * M;
    for (int k = 0; k <= M / 2; ++k) out[k] = half[k];
    for (int k = 1; k < M / 2; ++k) out[M - k] = std::conj(half[k]);
  }
  return F;
}

Field from_spectral(const SpectralField& F) {
  const Grid& g = F.grid;
  const int M = g.M;
  require(F.coeffs.size() == std::size_t(F.n) * M, ErrorCode::kInvalidArgument, "spectral field: size mismatch");
  Field f(g, F.n);
  const auto& fft = detail::RealFft::get(M);
  std::vector<cplx> half(g.half());
  for (int c = 0; c < F.n; ++c) {
    const cplx* in = F.coeffs.data() + std::size_t(c) * M;
    // Hermitian projection: average c_k with conj(c_{-k}) so the result is the real part
    half[0] = cplx(in[0].real(), 0.0);
    half[M / 2] = cplx(in[M / 2].real(), 0.0);
    for (int k = 1; k < M / 2; ++k) half[k] = 0.5 * (in[k] + std::conj(in[M - k]));
    fft.inverse(half.data(), f.component(c).data());
    for (double& v : f.component(c)) v /= M;
  }
  return f;
}

Field shift(const Field& f, double h) {
  require(std::isfinite(h), ErrorCode::kInvalidArgument, "shift: non-finite distance");
  auto s = detail::forward(f);
  detail::shift_in_place(s, f.grid(), h);
  return detail::inverse(s, f.grid());
}

Field derivative(const Field& f) {
  auto s = detail::forward(f);
  detail::derivative_in_place(s, f.grid());
  return detail::inverse(s, f.grid());
}

double inner(const Field& f, const Field& g) {
  check_compatible(f, g, "inner");
  double acc = 0.0;
  const auto a = f.values();
  const auto b = g.values();
  for (std::size_t i = 0; i < a.size(); ++i) acc += a[i] * b[i];
  return acc * f.grid().dx();
}

double norm(const Field& f) { return std::sqrt(inner(f, f)); }

double norm_E(const Field& f) {
  auto s = detail::forward(f);
  return std::sqrt(detail::inner_h1(s, s, f.grid()));
}

double tube_norm(const Field& f, TubeNorm which) { return which == TubeNorm::kH1 ? norm_E(f) : norm(f); }

LinearOp LinearOp::scalar(const Grid& g, int n, double a) {
  LinearOp op;
  op.grid = g;
  op.symbol.assign(n, std::vector<double>(g.half(), a));
  return op;
}

LinearOp LinearOp::diffusion(const Grid& g, const std::vector<double>& D, const std::vector<double>& r,
                             double speed) {
  require(D.size() == r.size() && !D.empty(), ErrorCode::kInvalidArgument, "linear op: D and r sizes differ");
  LinearOp op;
  op.grid = g;
  op.speed = speed;
  op.symbol.resize(D.size());
  for (std::size_t c = 0; c < D.size(); ++c) {
    op.symbol[c].resize(g.half());
    for (int k = 0; k < g.half(); ++k) {
      const double kap = g.wavenumber(k);
      op.symbol[c][k] = -D[c] * kap * kap - r[c];
    }
  }
  return op;
}

double LinearOp::omega() const {
  double w = -INFINITY;
  for (const auto& s : symbol)
    for (double a : s) w = std::max(w, a);
  return w;
}

bool LinearOp::is_scalar() const {
  if (speed != 0.0 || symbol.empty()) return false;
  const double a = symbol[0][0];
  for (const auto& s : symbol)
    for (double v : s)
      if (v != a) return false;
  return true;
}

Field apply_semigroup(const LinearOp& op, double t, const Field& f) {
  require(t >= 0.0, ErrorCode::kInvalidArgument, "apply_semigroup: negative time");
  require(op.grid == f.grid() && op.components() == f.components(), ErrorCode::kGridMismatch,
          "apply_semigroup: operator and field disagree");
  auto s = detail::forward(f);
  const int M = f.grid().M;
  for (int c = 0; c < s.n; ++c) {
    cplx* x = s.comp(c);
    for (int k = 0; k < s.half; ++k) {
      cplx m = std::exp(t * op.multiplier(c, k));
      if (k == M / 2) m = m.real();
      x[k] *= m;
    }
  }
  return detail::inverse(s, f.grid());
}

Field apply_linear(const LinearOp& op, const Field& f) {
  require(op.grid == f.grid() && op.components() == f.components(), ErrorCode::kGridMismatch,
          "apply_linear: operator and field disagree");
  auto s = detail::forward(f);
  const int M = f.grid().M;
  for (int c = 0; c < s.n; ++c) {
    cplx* x = s.comp(c);
    for (int k = 0; k < s.half; ++k) {
      cplx m = op.multiplier(c, k);
      if (k == M / 2) m = m.real();
      x[k] *= m;
    }
  }
  return detail::inverse(s, f.grid());
}

namespace detail {

void forward(const Field& f, Spectrum& out) {
  const int half = f.grid().half();
  if (out.n != f.components() || out.half != half) out = Spectrum(f.components(), half);
  const auto& fft = RealFft::get(f.grid().M);
  for (int c = 0; c < f.components(); ++c) fft.forward(f.component(c).data(), out.comp(c));
}

Spectrum forward(const Field& f) {
  Spectrum s;
  forward(f, s);
  return s;
}

void inverse(const Spectrum& s, Field& out) {
  const int M = out.grid().M;
  const auto& fft = RealFft::get(M);
  const double scale = 1.0 / M;
  for (int c = 0; c < s.n; ++c) {
    double* x = out.component(c).data();
    fft.inverse(s.comp(c), x);
    for (int j = 0; j < M; ++j) x[j] *= scale;
  }
}

Field inverse(const Spectrum& s, const Grid& g) {
  Field f(g, s.n);
  inverse(s, f);
  return f;
}

namespace {
inline double weight(int k, int M) { return (k == 0 || 2 * k == M) ? 1.0 : 2.0; }
}  // namespace

double inner(const Spectrum& a, const Spectrum& b, const Grid& g) {
  const int M = g.M;
  double acc = 0.0;
  for (int c = 0; c < a.n; ++c) {
    const cplx* x = a.comp(c);
    const cplx* y = b.comp(c);
    for (int k = 0; k < a.half; ++k)
      acc += weight(k, M) * (x[k].real() * y[k].real() + x[k].imag() * y[k].imag());
  }
  return acc * g.L / (double(M) * M);
}

double inner_h1(const Spectrum& a, const Spectrum& b, const Grid& g) {
  const int M = g.M;
  double acc = 0.0;
  for (int c = 0; c < a.n; ++c) {
    const cplx* x = a.comp(c);
    const cplx* y = b.comp(c);
    for (int k = 0; k < a.half; ++k) {
      const double kap = (2 * k == M) ? 0.0 : g.wavenumber(k);
      acc += weight(k, M) * (1.0 + kap * kap) * (x[k].real() * y[k].real() + x[k].imag() * y[k].imag());
    }
  }
  return acc * g.L / (double(M) * M);
}

void inner_shifted(const Spectrum& a, const Spectrum& b, const Grid& g, double h, double out[3]) {
  const int M = g.M;
  double s0 = 0.0, s1 = 0.0, s2 = 0.0;
  for (int k = 0; k < a.half; ++k) {
    const double kap = g.wavenumber(k);
    const double w = weight(k, M);
    if (2 * k == M) {
      double p = 0.0;
      for (int c = 0; c < a.n; ++c) p += (a.comp(c)[k] * std::conj(b.comp(c)[k])).real();
      const double ch = std::cos(kap * h), sh = std::sin(kap * h);
      s0 += w * p * ch;
      s1 -= w * p * kap * sh;
      s2 -= w * p * kap * kap * ch;
      continue;
    }
    cplx p = 0.0;
    for (int c = 0; c < a.n; ++c) p += a.comp(c)[k] * std::conj(b.comp(c)[k]);
    const cplx e = std::polar(1.0, -kap * h) * p;
    s0 += w * e.real();
    s1 += w * kap * e.imag();  // Re(-i kap e)
    s2 -= w * kap * kap * e.real();
  }
  const double scale = g.L / (double(M) * M);
  out[0] = s0 * scale;
  out[1] = s1 * scale;
  out[2] = s2 * scale;
}

void shift_in_place(Spectrum& s, const Grid& g, double h) {
  const int M = g.M;
  for (int k = 0; k < s.half; ++k) {
    const double kap = g.wavenumber(k);
    const cplx e = (2 * k == M) ? cplx(std::cos(kap * h), 0.0) : std::polar(1.0, -kap * h);
    for (int c = 0; c < s.n; ++c) s.comp(c)[k] *= e;
  }
}

void derivative_in_place(Spectrum& s, const Grid& g) {
  const int M = g.M;
  for (int k = 0; k < s.half; ++k) {
    const cplx e = (2 * k == M) ? cplx(0.0) : cplx(0.0, g.wavenumber(k));
    for (int c = 0; c < s.n; ++c) s.comp(c)[k] *= e;
  }
}

}  // namespace detail
}  // namespace isophase
