#include "model.hpp"

#include <algorithm>
#include <cmath>

#include "fft.hpp"

namespace isophase {

std::vector<double> nagumo_poly(double a) { return {0.0, -a, 1.0 + a, -1.0}; }

ModelSpec ModelSpec::neural_field(const Grid& g, const NeuralFieldParams& p) {
  require(p.beta > 0, ErrorCode::kInvalidArgument, "neural field: beta must be positive");
  require(!p.adaptation || p.adaptation_epsilon > 0, ErrorCode::kInvalidArgument,
          "neural field: adaptation epsilon must be positive");
  ModelSpec m;
  m.kind = ModelKind::kNeuralFieldRing;
  m.grid = g;
  m.nf = p;
  m.components = p.adaptation ? 2 : 1;
  m.linear = LinearOp::scalar(g, m.components, -1.0);
  if (p.adaptation)
    for (double& a : m.linear.symbol[1]) a = -1.0 / p.adaptation_epsilon;
  m.kernel_symbol.assign(g.half(), 0.0);
  for (std::size_t i = 0; i < p.kernel.size(); ++i) {
    const int k = int(i) + 1;
    require(2 * k < g.M, ErrorCode::kInvalidArgument, "neural field: kernel mode beyond grid resolution");
    // int_0^L A cos(kappa (x - y)) e^{i kappa y} dy = A (L/2) e^{i kappa x}
    m.kernel_symbol[k] = p.kernel[i] * g.L / 2.0;
  }
  m.coupling.assign(m.components, std::vector<double>(m.components, 0.0));
  if (p.adaptation) m.coupling[1][0] = 1.0;
  // the logistic of a resolved profile has Fourier tails reaching far beyond M; a fixed
  // fine quadrature keeps the kernel-mode projection exact and translation equivariant
  m.quadrature_points = std::max(3 * g.M / 2, 1024);
  return m;
}

ModelSpec ModelSpec::reaction_diffusion(const Grid& g, const ReactionDiffusionParams& p) {
  require(!p.poly.empty(), ErrorCode::kInvalidArgument, "reaction-diffusion: empty polynomial");
  require(p.diffusion > 0, ErrorCode::kInvalidArgument, "reaction-diffusion: diffusion must be positive");
  ModelSpec m;
  m.kind = ModelKind::kReactionDiffusion;
  m.grid = g;
  m.rd = p;
  m.components = p.recovery ? 2 : 1;
  std::vector<double> D{p.diffusion}, r{0.0};
  if (p.recovery) {
    D.push_back(p.recovery_diffusion);
    r.push_back(p.eps * p.gamma);
  }
  m.linear = LinearOp::diffusion(g, D, r, p.speed);
  m.coupling.assign(m.components, std::vector<double>(m.components, 0.0));
  if (p.recovery) {
    m.coupling[0][1] = -1.0;
    m.coupling[1][0] = p.eps;
  }
  m.quadrature_points = 3 * g.M / 2;
  return m;
}

ModelSpec ModelSpec::with_speed(double c) const {
  ModelSpec m = *this;
  m.linear.speed = c;
  m.rd.speed = c;
  return m;
}

void ModelSpec::pointwise(double u, double out[4]) const {
  if (kind == ModelKind::kNeuralFieldRing) {
    const double b = nf.beta;
    const double f = 1.0 / (1.0 + std::exp(-b * (u - nf.threshold)));
    const double s = f * (1.0 - f);
    out[0] = f;
    out[1] = b * s;
    out[2] = b * b * s * (1.0 - 2.0 * f);
    out[3] = b * b * b * s * (1.0 - 6.0 * f + 6.0 * f * f);
    return;
  }
  const auto& c = rd.poly;
  double d[4] = {0, 0, 0, 0};
  double pw[4] = {1.0, 0.0, 0.0, 0.0};  // u^(i), u^(i-1), u^(i-2), u^(i-3)
  for (std::size_t i = 0; i < c.size(); ++i) {
    const double di = double(i);
    d[0] += c[i] * pw[0];
    d[1] += c[i] * di * pw[1];
    d[2] += c[i] * di * (di - 1) * pw[2];
    d[3] += c[i] * di * (di - 1) * (di - 2) * pw[3];
    pw[3] = pw[2];
    pw[2] = pw[1];
    pw[1] = pw[0];
    pw[0] *= u;
  }
  for (int i = 0; i < 4; ++i) out[i] = d[i];
}

void check_on_grid(const ModelSpec& m, const Field& u, const char* where) {
  if (!(u.grid() == m.grid)) fail(ErrorCode::kGridMismatch, std::string(where) + ": field not on model grid");
  if (u.components() != m.components)
    fail(ErrorCode::kGridMismatch, std::string(where) + ": component count differs from model");
}

Field eval_N(const ModelSpec& m, const Field& u) {
  check_on_grid(m, u, "eval_N");
  detail::ModelKernel k(m);
  detail::Spectrum out;
  k.set_base(detail::forward(u));
  k.N(out);
  return detail::inverse(out, m.grid);
}

Field eval_DN(const ModelSpec& m, const Field& u, const Field& y) {
  check_on_grid(m, u, "eval_DN");
  check_on_grid(m, y, "eval_DN");
  detail::ModelKernel k(m);
  detail::Spectrum out;
  k.set_base(detail::forward(u));
  k.DN(detail::forward(y), out);
  return detail::inverse(out, m.grid);
}

Field eval_D2N(const ModelSpec& m, const Field& u, const Field& y, const Field& z) {
  check_on_grid(m, u, "eval_D2N");
  check_on_grid(m, y, "eval_D2N");
  check_on_grid(m, z, "eval_D2N");
  detail::ModelKernel k(m);
  detail::Spectrum out;
  std::vector<double> yp, zp;
  k.set_base(detail::forward(u));
  k.pad(detail::forward(y), yp);
  k.pad(detail::forward(z), zp);
  k.D2N_padded(yp, zp, out);
  return detail::inverse(out, m.grid);
}

Field eval_V(const ModelSpec& m, const Field& u) {
  Field v = apply_linear(m.linear, u);
  v += eval_N(m, u);
  return v;
}

std::vector<std::pair<int, double>> kernel_symbol_table(const ModelSpec& m) {
  std::vector<std::pair<int, double>> rows;
  for (std::size_t k = 0; k < m.kernel_symbol.size(); ++k) rows.emplace_back(int(k), m.kernel_symbol[k]);
  return rows;
}

namespace detail {

ModelKernel::ModelKernel(const ModelSpec& m)
    : m_(&m), M_(m.grid.M), P_(m.quadrature_points), base_(m.components, m.grid.half()) {
  require(P_ >= 3 * M_ / 2 && P_ % 2 == 0, ErrorCode::kInvalidArgument, "model: quadrature grid too coarse");
  upad_.resize(P_);
  f0_.resize(P_);
  f1_.resize(P_);
  f2_.resize(P_);
  work_.resize(P_);
  cwork_.resize(P_ / 2 + 1);
}

void ModelKernel::pad(const Spectrum& y, std::vector<double>& out) {
  out.resize(P_);
  const cplx* Y = y.comp(0);
  const double s = 1.0 / M_;
  for (int k = 0; k < M_ / 2; ++k) cwork_[k] = Y[k] * s;
  // split the Nyquist coefficient between +-M/2 so grid values are preserved
  cwork_[M_ / 2] = 0.5 * Y[M_ / 2].real() * s;
  for (int k = M_ / 2 + 1; k <= P_ / 2; ++k) cwork_[k] = 0.0;
  RealFft::get(P_).inverse(cwork_.data(), out.data());
}

void ModelKernel::set_base(const Spectrum& u) {
  base_ = u;
  pad(u, upad_);
  double d[4];
  for (int p = 0; p < P_; ++p) {
    m_->pointwise(upad_[p], d);
    f0_[p] = d[0];
    f1_[p] = d[1];
    f2_[p] = d[2];
  }
}

void ModelKernel::project(const std::vector<double>& g_pad, Spectrum& out) {
  RealFft::get(P_).forward(g_pad.data(), cwork_.data());
  if (out.n != m_->components || out.half != M_ / 2 + 1) out = Spectrum(m_->components, M_ / 2 + 1);
  cplx* O = out.comp(0);
  const double s = double(M_) / P_;
  if (m_->kind == ModelKind::kNeuralFieldRing) {
    const auto& w = m_->kernel_symbol;
    for (int k = 0; k < M_ / 2; ++k) O[k] = w[k] == 0.0 ? cplx(0.0) : cwork_[k] * (s * w[k]);
  } else {
    for (int k = 0; k < M_ / 2; ++k) O[k] = cwork_[k] * s;
  }
  O[M_ / 2] = 0.0;
  for (int c = 1; c < out.n; ++c) std::fill(out.comp(c), out.comp(c) + out.half, cplx(0.0));
}

void ModelKernel::add_coupling(const Spectrum& y, Spectrum& out) const {
  const auto& C = m_->coupling;
  for (int c = 0; c < out.n; ++c)
    for (int d = 0; d < out.n; ++d) {
      const double a = C[c][d];
      if (a == 0.0) continue;
      cplx* O = out.comp(c);
      const cplx* Y = y.comp(d);
      for (int k = 0; k < out.half; ++k) O[k] += a * Y[k];
    }
}

void ModelKernel::N(Spectrum& out) {
  project(f0_, out);
  add_coupling(base_, out);
}

void ModelKernel::DN(const Spectrum& y, Spectrum& out) {
  std::vector<double> yp;
  pad(y, yp);
  DN_padded(y, yp, out);
}

void ModelKernel::DN_padded(const Spectrum& y, const std::vector<double>& ypad, Spectrum& out) {
  for (int p = 0; p < P_; ++p) work_[p] = f1_[p] * ypad[p];
  project(work_, out);
  add_coupling(y, out);
}

void ModelKernel::D2N_padded(const std::vector<double>& ypad, const std::vector<double>& zpad, Spectrum& out) {
  for (int p = 0; p < P_; ++p) work_[p] = f2_[p] * (ypad[p] * zpad[p]);
  project(work_, out);
}

}  // namespace detail
}  // namespace isophase
