#include "flow.hpp"

#include <cmath>
#include <random>

#include "stats.hpp"

namespace isophase {

FlowConfig default_flow_config(const ModelSpec& m) {
  FlowConfig cfg;
  cfg.dt = m.kind == ModelKind::kNeuralFieldRing ? 1e-2 : 1e-3;
  return cfg;
}

void validate(const FlowConfig& cfg) {
  require(cfg.dt > 0 && std::isfinite(cfg.dt), ErrorCode::kInvalidArgument, "flow: dt must be positive");
  require(cfg.convergence_tol > 0, ErrorCode::kInvalidArgument, "flow: convergence_tol must be positive");
  require(cfg.T_max > 0, ErrorCode::kInvalidArgument, "flow: T_max must be positive");
}

namespace detail {

cplx phi1(cplx z) {
  if (std::abs(z) < 1e-4) return 1.0 + z * (0.5 + z * (1.0 / 6.0 + z / 24.0));
  return (std::exp(z) - 1.0) / z;
}

cplx phi2(cplx z) {
  if (std::abs(z) < 1e-2) {
    // sum_{j>=0} z^j / (j+2)!
    cplx term = 0.5, acc = 0.0;
    for (int j = 0; j < 8; ++j) {
      acc += term;
      term *= z / double(j + 3);
    }
    return acc;
  }
  return (std::exp(z) - 1.0 - z) / (z * z);
}

int steps_for(double t, double dt) {
  require(t >= 0 && std::isfinite(t), ErrorCode::kInvalidArgument, "flow: time must be non-negative");
  if (t == 0.0) return 0;
  return std::max(1, int(std::ceil(t / dt - 1e-9)));
}

void check_divergence(const Spectrum& x, const Grid& g, double bound) {
  const double n2 = inner(x, x, g);
  if (!std::isfinite(n2) || n2 > bound * bound)
    fail(ErrorCode::kDivergence, "flow: state norm exceeded divergence bound");
}

Integrator::Integrator(const ModelSpec& m, double dt, Scheme scheme)
    : m_(&m), dt_(dt), scheme_(scheme), k0_(m), k1_(m) {
  require(dt > 0, ErrorCode::kInvalidArgument, "integrator: dt must be positive");
  const int half = m.grid.half();
  E_.resize(std::size_t(m.components) * half);
  Phi_.resize(E_.size());
  Phi2_.resize(E_.size());
  for (int c = 0; c < m.components; ++c)
    for (int k = 0; k < half; ++k) {
      cplx z = dt * m.linear.multiplier(c, k);
      if (2 * k == m.grid.M) z = z.real();
      const std::size_t i = std::size_t(c) * half + k;
      E_[i] = std::exp(z);
      Phi_[i] = dt * phi1(z);
      Phi2_[i] = dt * phi2(z);
    }
}

void Integrator::combine(Spectrum& x, const Spectrum& n) const {
  for (std::size_t i = 0; i < x.c.size(); ++i) x.c[i] = E_[i] * x.c[i] + Phi_[i] * n.c[i];
}

void Integrator::apply_E(Spectrum& x) const {
  for (std::size_t i = 0; i < x.c.size(); ++i) x.c[i] *= E_[i];
}

void Integrator::step(Spectrum& x, Spectrum* y, Spectrum* z, Spectrum* a, Taps* taps) {
  require(!a || (y && z), ErrorCode::kInvalidArgument, "integrator: second variation needs both directions");
  if (scheme_ == Scheme::kExponentialEuler) {
    step_ee(x, y, z, a, taps);
  } else {
    require(!taps, ErrorCode::kInvalidArgument, "integrator: taps are defined for exponential Euler only");
    step_rk2(x, y, z, a);
  }
}

void Integrator::step_ee(Spectrum& x, Spectrum* y, Spectrum* z, Spectrum* a, Taps* taps) {
  k0_.set_base(x);
  k0_.N(n0_);
  if (y) {
    k0_.pad(*y, yp_);
    k0_.DN_padded(*y, yp_, ny_);
  }
  if (z) {
    k0_.pad(*z, zp_);
    k0_.DN_padded(*z, zp_, nz_);
  }
  if (a) {
    k0_.DN(*a, na_);
    k0_.D2N_padded(yp_, zp_, tmp_);
    na_.axpy(1.0, tmp_);
  }
  if (taps) {
    taps->N = n0_;
    if (y) taps->DNy = ny_;
    if (z) taps->DNz = nz_;
    if (a) taps->Q = na_;
  }
  combine(x, n0_);
  if (y) combine(*y, ny_);
  if (z) combine(*z, nz_);
  if (a) combine(*a, na_);
}

void Integrator::step_rk2(Spectrum& x, Spectrum* y, Spectrum* z, Spectrum* a) {
  // stage at x_n
  k0_.set_base(x);
  k0_.N(n0_);
  xa_ = x;
  combine(xa_, n0_);
  if (y) {
    k0_.pad(*y, yp_);
    k0_.DN_padded(*y, yp_, ny_);
    ya_ = *y;
    combine(ya_, ny_);
  }
  if (z) {
    k0_.pad(*z, zp_);
    k0_.DN_padded(*z, zp_, nz_);
    za_ = *z;
    combine(za_, nz_);
  }
  if (a) {
    k0_.DN(*a, na_);
    k0_.D2N_padded(yp_, zp_, tmp_);
    na_.axpy(1.0, tmp_);
    aa_ = *a;
    combine(aa_, na_);
  }
  // stage at the predictor
  k1_.set_base(xa_);
  auto correct = [&](Spectrum& out, const Spectrum& pred, const Spectrum& n_pred, const Spectrum& n_base) {
    out = pred;
    for (std::size_t i = 0; i < out.c.size(); ++i) out.c[i] += Phi2_[i] * (n_pred.c[i] - n_base.c[i]);
  };
  k1_.N(n1_);
  if (y) {
    k1_.pad(ya_, yap_);
    Spectrum d;
    k1_.DN_padded(ya_, yap_, d);
    correct(*y, ya_, d, ny_);
  }
  if (z) {
    k1_.pad(za_, zap_);
    Spectrum d;
    k1_.DN_padded(za_, zap_, d);
    correct(*z, za_, d, nz_);
  }
  if (a) {
    Spectrum d, q;
    k1_.DN(aa_, d);
    k1_.D2N_padded(yap_, zap_, q);
    d.axpy(1.0, q);
    correct(*a, aa_, d, na_);
  }
  correct(x, xa_, n1_, n0_);
}

}  // namespace detail

namespace {

void check_inputs(const ModelSpec& m, const Field& f, double t, const FlowConfig& cfg, const char* where) {
  check_on_grid(m, f, where);
  validate(cfg);
  require(t >= 0, ErrorCode::kInvalidArgument, std::string(where) + ": negative time");
}

struct Run {
  int n;
  double dt;
};

Run plan(double t, const FlowConfig& cfg) {
  const int n = detail::steps_for(t, cfg.dt);
  return {n, n ? t / n : cfg.dt};
}

}  // namespace

Field evolve(const ModelSpec& m, const Field& x0, double t, const FlowConfig& cfg) {
  check_inputs(m, x0, t, cfg, "evolve");
  const Run r = plan(t, cfg);
  if (r.n == 0) return x0;
  detail::Integrator integ(m, r.dt, cfg.scheme);
  auto x = detail::forward(x0);
  for (int i = 0; i < r.n; ++i) {
    integ.step(x);
    if ((i & 15) == 15 || i + 1 == r.n) detail::check_divergence(x, m.grid, cfg.divergence_bound);
  }
  return detail::inverse(x, m.grid);
}

Field evolve_linearized(const ModelSpec& m, const Field& x0, const Field& y0, double t, const FlowConfig& cfg) {
  check_inputs(m, x0, t, cfg, "evolve_linearized");
  check_on_grid(m, y0, "evolve_linearized");
  const Run r = plan(t, cfg);
  if (r.n == 0) return y0;
  detail::Integrator integ(m, r.dt, cfg.scheme);
  auto x = detail::forward(x0);
  auto y = detail::forward(y0);
  for (int i = 0; i < r.n; ++i) {
    integ.step(x, &y);
    if ((i & 15) == 15 || i + 1 == r.n) {
      detail::check_divergence(x, m.grid, cfg.divergence_bound);
      detail::check_divergence(y, m.grid, cfg.divergence_bound);
    }
  }
  return detail::inverse(y, m.grid);
}

Field evolve_second_variation(const ModelSpec& m, const Field& x0, const Field& y0, const Field& z0, double t,
                              const FlowConfig& cfg) {
  check_inputs(m, x0, t, cfg, "evolve_second_variation");
  check_on_grid(m, y0, "evolve_second_variation");
  check_on_grid(m, z0, "evolve_second_variation");
  const Run r = plan(t, cfg);
  Field out(m.grid, m.components);
  if (r.n == 0) return out;
  detail::Integrator integ(m, r.dt, cfg.scheme);
  auto x = detail::forward(x0);
  auto y = detail::forward(y0);
  auto z = detail::forward(z0);
  detail::Spectrum a(m.components, m.grid.half());
  for (int i = 0; i < r.n; ++i) {
    integ.step(x, &y, &z, &a);
    if ((i & 15) == 15 || i + 1 == r.n) {
      detail::check_divergence(x, m.grid, cfg.divergence_bound);
      detail::check_divergence(a, m.grid, cfg.divergence_bound);
    }
  }
  detail::inverse(a, out);
  return out;
}

std::vector<std::vector<double>> evolve_dump(const ModelSpec& m, const Field& x0, double t, const FlowConfig& cfg,
                                             int stride) {
  check_inputs(m, x0, t, cfg, "evolve_dump");
  require(stride >= 1, ErrorCode::kInvalidArgument, "evolve_dump: stride must be >= 1");
  const Run r = plan(t, cfg);
  detail::Integrator integ(m, r.dt, cfg.scheme);
  auto x = detail::forward(x0);
  Field xf = x0;
  std::vector<std::vector<double>> rows;
  auto emit = [&](double time) {
    detail::inverse(x, xf);
    std::vector<double> row{time};
    row.insert(row.end(), xf.values().begin(), xf.values().end());
    rows.push_back(std::move(row));
  };
  emit(0.0);
  for (int i = 0; i < r.n; ++i) {
    integ.step(x);
    if ((i & 15) == 15) detail::check_divergence(x, m.grid, cfg.divergence_bound);
    if ((i + 1) % stride == 0) emit((i + 1) * r.dt);
  }
  return rows;
}

DecayFit measure_decay_rate(const ModelSpec& m, const ManifoldFrame& frame, const Field& y_init,
                            const FlowConfig& cfg, double horizon) {
  validate(cfg);
  check_on_grid(m, y_init, "measure_decay_rate");
  require(horizon > 0, ErrorCode::kInvalidArgument, "measure_decay_rate: horizon must be positive");
  Field y0 = y_init;
  y0.axpy(-inner(frame.psi_star0, y0), frame.psi0);
  const double scale = std::max(norm(y_init), 1e-300);
  require(norm(y0) > 1e-10 * scale, ErrorCode::kDegenerate,
          "measure_decay_rate: perturbation vanishes after tangent removal");

  const Run r = plan(horizon, cfg);
  detail::Integrator integ(m, r.dt, cfg.scheme);
  auto x = detail::forward(frame.gamma0);
  auto y = detail::forward(y0);
  std::vector<double> ts, ls;
  for (int i = 0; i < r.n; ++i) {
    integ.step(x, &y);
    const double t = (i + 1) * r.dt;
    if (t >= 0.5 * horizon) {
      const double ny = std::sqrt(detail::inner(y, y, m.grid));
      require(ny > 0 && std::isfinite(ny), ErrorCode::kDivergence, "measure_decay_rate: norm not finite");
      ts.push_back(t);
      ls.push_back(std::log(ny));
    }
  }
  const LinearFit fit = linear_fit(ts, ls);
  if (!(fit.slope < 0))
    fail(ErrorCode::kNotStable, "measure_decay_rate: non-negative decay slope; manifold not stable");
  return {-fit.slope, fit.r2, horizon};
}

DecayFit measure_decay_rate(const ModelSpec& m, const ManifoldFrame& frame, const FlowConfig& cfg,
                            std::uint64_t seed, double horizon) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> nd;
  Field y0(m.grid, m.components);
  for (double& v : y0.values()) v = nd(rng);
  return measure_decay_rate(m, frame, y0, cfg, horizon);
}

}  // namespace isophase
