#include "isochron.hpp"
#include "manifold.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

namespace isophase {

namespace {
constexpr double kPi = std::numbers::pi;
constexpr double kTwoPi = 2.0 * std::numbers::pi;
}  // namespace

double wrap_phase(double a) {
  double r = std::fmod(a, kTwoPi);
  if (r < 0) r += kTwoPi;
  if (r >= kTwoPi) r -= kTwoPi;
  return r;
}

double wrap_signed(double a) {
  double r = wrap_phase(a);
  if (r > kPi) r -= kTwoPi;
  return r;
}

double circle_distance(double a, double b) {
  const double d = std::abs(wrap_phase(a) - wrap_phase(b));
  return std::min(d, kTwoPi - d);
}

Truncation truncation(const ManifoldFrame& frame, const IsochronConfig& cfg) {
  validate(cfg.flow);
  require(frame.b_hat > 0, ErrorCode::kNotStable, "truncation: frame has no positive decay rate");
  Truncation t;
  const double T = cfg.T_inf > 0 ? cfg.T_inf : std::max(20.0 / frame.b_hat, 50.0);
  const double steps = std::ceil(T / cfg.flow.dt - 1e-9);
  if (steps > double(cfg.max_steps))
    fail(ErrorCode::kBudget, "truncation: horizon needs more than max_steps steps (b_hat too small)");
  t.steps = int(steps);
  t.T = t.steps * cfg.flow.dt;
  t.tail_bound = std::exp(-2.0 * frame.b_hat * t.T);
  if (t.tail_bound > cfg.tail_tolerance)
    fail(ErrorCode::kBudget, "truncation: tail bound exp(-2 b T) = " + std::to_string(t.tail_bound) +
                                 " exceeds tolerance");
  return t;
}

namespace detail {

namespace {

// Variational phase solver on half spectra.
struct PhaseSolver {
  const Grid& g;
  const Spectrum& G0;
  const Spectrum& P0;
  double c0;
  double s;  // distance per radian

  double h(const Spectrum& X, double beta, double* dh) const {
    double o[3];
    inner_shifted(P0, X, g, s * beta, o);
    if (dh) *dh = s * o[1];
    return o[0] - c0;
  }

  // Newton from init; returns nullopt when it wanders, stalls or lands on the wrong branch
  std::optional<double> newton(const Spectrum& X, double init, double max_move) const {
    double a = wrap_phase(init);
    for (int it = 0; it < 60; ++it) {
      double d;
      const double v = h(X, a, &d);
      if (!(d < 0)) return std::nullopt;
      double step = -v / d;
      step = std::clamp(step, -0.5, 0.5);
      a = wrap_phase(a + step);
      if (std::abs(step) < 1e-15) break;
    }
    double d;
    if (std::abs(h(X, a, &d)) > 1e-10 || !(d < 0)) return std::nullopt;
    if (circle_distance(a, init) > max_move) return std::nullopt;
    return a;
  }

  double initializer(const Spectrum& X) const {
    const int K = 64;
    double best = -INFINITY, arg = 0.0;
    double o[3];
    for (int i = 0; i < K; ++i) {
      const double a = kTwoPi * i / K;
      inner_shifted(G0, X, g, s * a, o);
      if (o[0] > best) {
        best = o[0];
        arg = a;
      }
    }
    // remove the translation-invariant mean contribution before applying the floor
    double mean_part = 0.0, gnorm = 0.0;
    for (int c = 0; c < X.n; ++c) {
      mean_part += (G0.comp(c)[0] * std::conj(X.comp(c)[0])).real();
      gnorm += std::norm(G0.comp(c)[0]);
    }
    const double scale = g.L / (double(g.M) * g.M);
    mean_part *= scale;
    gnorm = inner(G0, G0, g) - gnorm * scale;
    if (!(best - mean_part >= 0.25 * gnorm))
      fail(ErrorCode::kPhaseUndefined, "variational_phase: state does not correlate with the orbit");
    return arg;
  }

  double solve(const Spectrum& X, std::optional<double> hint) const {
    if (hint) {
      if (auto r = newton(X, *hint, 0.5)) return *r;
    }
    const double init = initializer(X);
    const double cell = kTwoPi / 64;
    if (auto r = newton(X, init, cell)) return *r;
    // refine: scan for a +/- sign change of h close to the initializer, then bisect
    const int n = 256;
    std::optional<double> best;
    for (int i = 0; i < n; ++i) {
      const double a0 = init - cell + 2 * cell * i / n, a1 = init - cell + 2 * cell * (i + 1) / n;
      const double h0 = h(X, a0, nullptr), h1 = h(X, a1, nullptr);
      if (!(h0 > 0 && h1 <= 0)) continue;
      double lo = a0, hi = a1;
      for (int b = 0; b < 80; ++b) {
        const double mid = 0.5 * (lo + hi);
        (h(X, mid, nullptr) > 0 ? lo : hi) = mid;
      }
      const double root = wrap_phase(0.5 * (lo + hi));
      if (!best || circle_distance(root, init) < circle_distance(*best, init)) best = root;
    }
    if (!best) fail(ErrorCode::kPhaseUndefined, "variational_phase: no root near the initializer");
    if (auto r = newton(X, *best, cell)) return *r;
    return *best;
  }
};

}  // namespace

double variational_phase_spectral(const ManifoldFrame& frame, const Spectrum& x, std::optional<double> hint) {
  const Grid& g = frame.gamma0.grid();
  const Spectrum G0 = forward(frame.gamma0), P0 = forward(frame.psi_star0);
  PhaseSolver ps{g, G0, P0, inner(P0, G0, g), g.L / kTwoPi};
  return ps.solve(x, hint);
}

PhaseTracker::PhaseTracker(const ManifoldFrame& frame)
    : frame_(&frame), g0_(forward(frame.gamma0)), ps0_(forward(frame.psi_star0)) {
  c0_ = inner(ps0_, g0_, frame.gamma0.grid());
}

double PhaseTracker::phase(const Spectrum& x, std::optional<double> hint) const {
  const Grid& g = frame_->gamma0.grid();
  PhaseSolver ps{g, g0_, ps0_, c0_, g.L / kTwoPi};
  return ps.solve(x, hint);
}

double PhaseTracker::distance(const Spectrum& x, double alpha, TubeNorm which) const {
  const Grid& g = frame_->gamma0.grid();
  Spectrum d = g0_;
  shift_in_place(d, g, g.phase_to_distance(alpha));
  for (std::size_t i = 0; i < d.c.size(); ++i) d.c[i] = x.c[i] - d.c[i];
  return std::sqrt(which == TubeNorm::kH1 ? inner_h1(d, d, g) : inner(d, d, g));
}

XiEvaluator::XiEvaluator(const ManifoldFrame& frame, const IsochronConfig& cfg)
    : frame_(&frame),
      cfg_(cfg),
      trunc_(truncation(frame, cfg)),
      integ_(frame.model, cfg.flow.dt, Scheme::kExponentialEuler) {
  const Grid& g = frame.gamma0.grid();
  g0_ = forward(frame.gamma0);
  ps0_ = forward(frame.psi_star0);
  r0_ = forward(frame.dn_adjoint_psi_star);
  ng0_ = forward(eval_N(frame.model, frame.gamma0));
  w0_ = ps0_;
  // W = dt Phi^{-*} psi*
  const auto& Phi = integ_.Phi();
  for (std::size_t i = 0; i < w0_.c.size(); ++i) w0_.c[i] *= cfg.flow.dt / std::conj(Phi[i]);
  cW_ = inner(w0_, g0_, g);
  cN_ = inner(ps0_, ng0_, g);
  cr_ = inner(r0_, g0_, g);
  dscale_ = g.L / kTwoPi;
}

double XiEvaluator::phase_of(const Spectrum& x, std::optional<double> hint) const {
  const Grid& g = frame_->gamma0.grid();
  PhaseSolver ps{g, g0_, ps0_, inner(ps0_, g0_, g), dscale_};
  return ps.solve(x, hint);
}

XiEvaluator::Pass XiEvaluator::run(const Spectrum& x, const Spectrum* y, const Spectrum* z, bool second,
                                   double ref) {
  require(!second || (y && z), ErrorCode::kInvalidArgument, "isochron: second variation needs y and z");
  const Grid& g = frame_->gamma0.grid();
  const double dt = cfg_.flow.dt;
  Pass p;
  p.ref = ref;
  p.T = trunc_.T;
  p.x0 = x;
  p.has_y = y != nullptr;
  p.has_z = z != nullptr;
  p.has_a = second;
  Spectrum gref = g0_, nref = ng0_;
  shift_in_place(gref, g, dscale_ * ref);
  shift_in_place(nref, g, dscale_ * ref);
  const int n = x.n, half = x.half;
  auto zero = [&] { return Spectrum(n, half); };
  p.SN = zero();
  p.Sx = zero();
  Spectrum xs = x, ys, zs, as;
  if (y) {
    p.y0 = *y;
    ys = *y;
    p.SDNy = zero();
    p.Sy = zero();
  }
  if (z) {
    p.z0 = *z;
    zs = *z;
    p.SDNz = zero();
    p.Sz = zero();
  }
  if (second) {
    as = zero();
    p.SQ = zero();
    p.Sa = zero();
  }
  Taps taps;
  const std::size_t len = xs.c.size();
  for (int step = 0; step < trunc_.steps; ++step) {
    for (std::size_t i = 0; i < len; ++i) p.Sx.c[i] += dt * (xs.c[i] - gref.c[i]);
    if (y) p.Sy.axpy(dt, ys);
    if (z) p.Sz.axpy(dt, zs);
    if (second) p.Sa.axpy(dt, as);
    integ_.step(xs, y ? &ys : nullptr, z ? &zs : nullptr, second ? &as : nullptr, &taps);
    for (std::size_t i = 0; i < len; ++i) p.SN.c[i] += dt * (taps.N.c[i] - nref.c[i]);
    if (y) p.SDNy.axpy(dt, taps.DNy);
    if (z) p.SDNz.axpy(dt, taps.DNz);
    if (second) p.SQ.axpy(dt, taps.Q);
    if ((step & 63) == 63) check_divergence(xs, g, cfg_.flow.divergence_bound);
  }
  p.gref = std::move(gref);
  p.nref = std::move(nref);
  return p;
}

void XiEvaluator::xi(const Pass& p, double alpha, double out[3]) const {
  const Grid& g = frame_->gamma0.grid();
  const double h = dscale_ * alpha;
  double a[3], b[3], c[3], d[3], e[3];
  inner_shifted(w0_, p.x0, g, h, a);
  inner_shifted(ps0_, p.SN, g, h, b);
  inner_shifted(r0_, p.Sx, g, h, c);
  inner_shifted(ps0_, p.nref, g, h, d);
  inner_shifted(r0_, p.gref, g, h, e);
  double v[3];
  for (int i = 0; i < 3; ++i) v[i] = a[i] + b[i] - c[i] + p.T * (d[i] - e[i]);
  out[0] = v[0] - cW_ - p.T * (cN_ - cr_);
  out[1] = dscale_ * v[1];
  out[2] = dscale_ * dscale_ * v[2];
}

void XiEvaluator::dxi(const Pass& p, int dir, double alpha, double out[2]) const {
  const Grid& g = frame_->gamma0.grid();
  const double h = dscale_ * alpha;
  const Spectrum& v0 = dir == 0 ? p.y0 : p.z0;
  const Spectrum& sdn = dir == 0 ? p.SDNy : p.SDNz;
  const Spectrum& sv = dir == 0 ? p.Sy : p.Sz;
  double a[3], b[3], c[3];
  inner_shifted(w0_, v0, g, h, a);
  inner_shifted(ps0_, sdn, g, h, b);
  inner_shifted(r0_, sv, g, h, c);
  out[0] = a[0] + b[0] - c[0];
  out[1] = dscale_ * (a[1] + b[1] - c[1]);
}

double XiEvaluator::d2xi(const Pass& p, double alpha) const {
  const Grid& g = frame_->gamma0.grid();
  const double h = dscale_ * alpha;
  double b[3], c[3];
  inner_shifted(ps0_, p.SQ, g, h, b);
  inner_shifted(r0_, p.Sa, g, h, c);
  return b[0] - c[0];
}

double XiEvaluator::solve(const Pass& p, double init) const {
  double a = wrap_phase(init);
  double o[3];
  for (int it = 0; it < cfg_.max_newton; ++it) {
    xi(p, a, o);
    if (!(o[1] != 0.0) || !std::isfinite(o[0]))
      fail(ErrorCode::kNonConvergence, "isochron_newton: degenerate derivative M");
    const double step = std::clamp(-o[0] / o[1], -0.5, 0.5);
    a = wrap_phase(a + step);
    if (std::abs(step) <= cfg_.newton_tol) return a;
  }
  fail(ErrorCode::kNonConvergence, "isochron_newton: Newton stagnation");
}

PhaseDerivatives XiEvaluator::derivatives(const Spectrum& x, const Spectrum* y, const Spectrum* z, bool second,
                                          std::optional<double> hint) {
  const double ref = phase_of(x, hint);
  const Pass p = run(x, y, z, second, ref);
  PhaseDerivatives d;
  d.pi = solve(p, ref);
  double o[3];
  xi(p, d.pi, o);
  d.M = o[1];
  double dy[2] = {0, 0}, dz[2] = {0, 0};
  if (y) {
    dxi(p, 0, d.pi, dy);
    d.dpi_y = -dy[0] / d.M;
  }
  if (z) {
    dxi(p, 1, d.pi, dz);
    d.dpi_z = -dz[0] / d.M;
  }
  if (second) {
    const double D2 = d2xi(p, d.pi);
    d.d2pi_yz = -(D2 + dy[1] * d.dpi_z + dz[1] * d.dpi_y + o[2] * d.dpi_y * d.dpi_z) / d.M;
  }
  return d;
}

}  // namespace detail

double variational_phase(const ManifoldFrame& frame, const Field& x) {
  check_on_grid(frame.model, x, "variational_phase");
  return detail::variational_phase_spectral(frame, detail::forward(x), std::nullopt);
}

double variational_phase(const ManifoldFrame& frame, const Field& x, double hint) {
  check_on_grid(frame.model, x, "variational_phase");
  return detail::variational_phase_spectral(frame, detail::forward(x), hint);
}

TubeState tube_state(const ManifoldFrame& frame, const Field& x, double delta) {
  TubeState t;
  t.x = x;
  t.phase = variational_phase(frame, x);
  const Field r = x - gamma(frame, t.phase);
  t.dist = norm(r);
  t.dist_E = norm_E(r);
  t.inside = t.dist_E <= delta;
  return t;
}

double isochron_flow(const ManifoldFrame& frame, const Field& x, const IsochronConfig& cfg) {
  check_on_grid(frame.model, x, "isochron_flow");
  validate(cfg.flow);
  const Grid& g = frame.gamma0.grid();
  const ModelSpec& m = frame.model;
  detail::Integrator integ(m, cfg.flow.dt, cfg.flow.scheme);
  const detail::Spectrum G0 = detail::forward(frame.gamma0);
  auto X = detail::forward(x);
  const double s = g.L / kTwoPi;
  const long max_steps = long(std::ceil(cfg.flow.T_max / cfg.flow.dt));
  std::optional<double> phase;
  detail::Spectrum diff;
  for (long step = 0;; ++step) {
    if (step % cfg.check_every == 0) {
      try {
        phase = detail::variational_phase_spectral(frame, X, phase);
      } catch (const Error& e) {
        if (e.code() == ErrorCode::kPhaseUndefined)
          fail(ErrorCode::kNotAttracted, "isochron_flow: trajectory left the tube (phase undefined)");
        throw;
      }
      diff = G0;
      detail::shift_in_place(diff, g, s * *phase);
      for (std::size_t i = 0; i < diff.c.size(); ++i) diff.c[i] = X.c[i] - diff.c[i];
      const double d = std::sqrt(detail::inner_h1(diff, diff, g));
      if (d <= cfg.flow.convergence_tol) return *phase;
    }
    if (step >= max_steps) fail(ErrorCode::kNotAttracted, "isochron_flow: not attracted within T_max");
    integ.step(X);
    if ((step & 63) == 63) detail::check_divergence(X, g, cfg.flow.divergence_bound);
  }
}

double isochron_newton(const ManifoldFrame& frame, const Field& x, const IsochronConfig& cfg) {
  check_on_grid(frame.model, x, "isochron_newton");
  detail::XiEvaluator ev(frame, cfg);
  return ev.derivatives(detail::forward(x), nullptr, nullptr, false).pi;
}

double dpi(const ManifoldFrame& frame, const Field& x, const Field& y, const IsochronConfig& cfg) {
  check_on_grid(frame.model, x, "dpi");
  check_on_grid(frame.model, y, "dpi");
  detail::XiEvaluator ev(frame, cfg);
  const auto Y = detail::forward(y);
  return ev.derivatives(detail::forward(x), &Y, nullptr, false).dpi_y;
}

double d2pi(const ManifoldFrame& frame, const Field& x, const Field& y, const Field& z, const IsochronConfig& cfg) {
  check_on_grid(frame.model, x, "d2pi");
  check_on_grid(frame.model, y, "d2pi");
  check_on_grid(frame.model, z, "d2pi");
  detail::XiEvaluator ev(frame, cfg);
  const auto Y = detail::forward(y), Z = detail::forward(z);
  return ev.derivatives(detail::forward(x), &Y, &Z, true).d2pi_yz;
}

PhaseGap phase_gap(const ManifoldFrame& frame, const Field& x, const IsochronConfig& cfg) {
  const double p = isochron_flow(frame, x, cfg);
  const double b = variational_phase(frame, x);
  return {circle_distance(p, b), norm(x - gamma(frame, p))};
}

}  // namespace isophase
