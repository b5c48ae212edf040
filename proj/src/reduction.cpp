#include "reduction.hpp"

#include <gsl/gsl_errno.h>
#include <gsl/gsl_spline.h>

#include <algorithm>
#include <cmath>
#include <memory>
#include <numbers>

#include "manifold.hpp"
#include "parallel.hpp"

namespace isophase {

namespace {

constexpr double kTwoPi = 2.0 * std::numbers::pi;

bool is_constant(const std::vector<double>& v) {
  return std::all_of(v.begin(), v.end(), [&](double x) { return x == v.front(); });
}

// V or g evaluated off the grid: constant tables skip the spline
class Table {
 public:
  explicit Table(const std::vector<double>& v) : c_(is_constant(v)), v0_(v.front()) {
    if (!c_) s_ = std::make_unique<PeriodicSpline>(v);
  }
  double operator()(double a) const { return c_ ? v0_ : (*s_)(a); }

 private:
  bool c_;
  double v0_;
  std::unique_ptr<PeriodicSpline> s_;
};

// normalised stationary density on n uniform points, and the current
std::vector<double> fine_density(const std::vector<double>& V, const std::vector<double>& g, int n, double* current) {
  require(V.size() == g.size() && V.size() >= 4, ErrorCode::kInvalidArgument, "stationary_density: bad tables");
  for (double x : g)
    require(x > 1e-10, ErrorCode::kDegenerate, "stationary_density: diffusion coefficient is not positive");
  const Table Vt(V), gt(g);
  const double h = kTwoPi / n;
  std::vector<double> D(n + 1), phi(n + 1, 0.0), drift(n + 1);
  for (int i = 0; i <= n; ++i) {
    const double a = std::min(i * h, kTwoPi);
    const double gi = gt(i == n ? 0.0 : a);
    D[i] = 0.5 * gi * gi;
    drift[i] = Vt(i == n ? 0.0 : a) / D[i];
  }
  // Phi = int V / D, C = int exp(-Phi), cumulative trapezoid
  for (int i = 1; i <= n; ++i) phi[i] = phi[i - 1] + 0.5 * h * (drift[i] + drift[i - 1]);
  const double shift = *std::max_element(phi.begin(), phi.end());
  std::vector<double> C(n + 1, 0.0);
  for (int i = 1; i <= n; ++i) C[i] = C[i - 1] + 0.5 * h * (std::exp(shift - phi[i]) + std::exp(shift - phi[i - 1]));
  const double tot = phi[n];
  std::vector<double> p(n);
  double mass = 0.0;
  for (int i = 0; i < n; ++i) {
    const double I = (C[n] - C[i]) + std::exp(-tot) * C[i];
    p[i] = std::exp(phi[i] - shift) * I / D[i];
    mass += h * p[i];
  }
  for (double& x : p) x /= mass;
  if (current) *current = (1.0 - std::exp(-tot)) / mass;
  return p;
}

int refine_factor(int n) { return std::max(32, 65536 / std::max(n, 1)); }

}  // namespace

PeriodicSpline::PeriodicSpline(const std::vector<double>& values) {
  const int n = int(values.size());
  require(n >= 3, ErrorCode::kInvalidArgument, "spline: need at least 3 points");
  x_.resize(n + 1);
  y_.resize(n + 1);
  for (int i = 0; i <= n; ++i) {
    x_[i] = kTwoPi * i / n;
    y_[i] = values[i % n];
  }
  gsl_set_error_handler_off();
  auto* s = gsl_spline_alloc(gsl_interp_cspline_periodic, n + 1);
  if (!s || gsl_spline_init(s, x_.data(), y_.data(), n + 1) != GSL_SUCCESS)
    fail(ErrorCode::kInvalidArgument, "spline: initialisation failed");
  spline_ = s;
  acc_ = gsl_interp_accel_alloc();
}

PeriodicSpline::~PeriodicSpline() {
  gsl_spline_free(static_cast<gsl_spline*>(spline_));
  gsl_interp_accel_free(static_cast<gsl_interp_accel*>(acc_));
}

double PeriodicSpline::operator()(double a) const {
  double w = std::fmod(a, kTwoPi);
  if (w < 0) w += kTwoPi;
  return gsl_spline_eval(static_cast<gsl_spline*>(spline_), w, static_cast<gsl_interp_accel*>(acc_));
}

std::vector<double> drift_terms(const ManifoldFrame& frame, const NoiseModel& nm, double alpha,
                                const IsochronConfig& cfg) {
  const Grid& g = frame.model.grid;
  nm.validate(g);
  detail::XiEvaluator ev(frame, cfg);
  const Field x = gamma(frame, alpha);
  const auto X = detail::forward(x);
  std::vector<double> out(nm.modes());
  for (int j = 0; j < nm.modes(); ++j) {
    if (nm.amplitude_of(j) == 0.0) continue;
    const auto Y = detail::forward(noise_direction(nm, x, j));
    out[j] = 0.5 * ev.derivatives(X, &Y, &Y, true, alpha).d2pi_yz;
  }
  return out;
}

double drift_field(const ManifoldFrame& frame, const NoiseModel& nm, double alpha, const IsochronConfig& cfg) {
  const auto t = drift_terms(frame, nm, alpha, cfg);
  double sum = 0.0, scale = 0.0;
  for (double v : t) {
    sum += v;
    scale += std::abs(v);
  }
  // the last wavenumber's contribution against the running sum, with floors at the accuracy
  // of the individual second derivatives (cos/sin pairs cancel to roundoff when the noise is
  // translation invariant, and every term vanishes on a reflection-symmetric profile)
  const double last = nm.K == 0 ? 0.0 : t[2 * nm.K - 1] + t[2 * nm.K];
  if (std::abs(last) > std::max({1e-6 * std::abs(sum), 1e-8 * scale, 1e-12}))
    fail(ErrorCode::kBudget, "drift_field: mode sum not converged at K = " + std::to_string(nm.K) + " (raise K)");
  return sum;
}

double diffusion_coeff(const ManifoldFrame& frame, const NoiseModel& nm, double alpha) {
  double s = 0.0;
  for (double w : projected_noise_weights(frame, nm, alpha)) s += w * w;
  const double g = std::sqrt(s);
  require(g > 1e-10, ErrorCode::kDegenerate, "diffusion_coeff: g below the positivity floor");
  return g;
}

ReducedCoeffs make_coeffs(std::vector<double> V, std::vector<double> g) {
  ReducedCoeffs c;
  const int n = int(V.size());
  c.alpha.resize(n);
  for (int i = 0; i < n; ++i) c.alpha[i] = kTwoPi * i / n;
  c.V = std::move(V);
  c.g = std::move(g);
  const auto sd = stationary_density(c.V, c.g);
  c.Pstar = sd.density;
  c.mean_drift = sd.mean_drift;
  return c;
}

ReducedCoeffs tabulate_coeffs(const ManifoldFrame& frame, const NoiseModel& nm, const IsochronConfig& cfg,
                              const TabulateOptions& opt) {
  require(opt.n_alpha >= 4, ErrorCode::kInvalidArgument, "tabulate_coeffs: n_alpha must be >= 4");
  const int n = opt.n_alpha;
  std::vector<double> V(n), g(n);
  for (int i = 0; i < n; ++i) g[i] = diffusion_coeff(frame, nm, kTwoPi * i / n);
  if (opt.equivariant) {
    std::fill(V.begin(), V.end(), drift_field(frame, nm, 0.0, cfg));
  } else {
    detail::parallel_for(n, opt.threads, [&](int, int i) { V[i] = drift_field(frame, nm, kTwoPi * i / n, cfg); });
  }
  return make_coeffs(std::move(V), std::move(g));
}

StationaryDensity stationary_density(const std::vector<double>& V, const std::vector<double>& g) {
  const int n = int(V.size()), r = refine_factor(n);
  StationaryDensity out;
  const auto p = fine_density(V, g, n * r, &out.current);
  out.density.resize(n);
  double mass = 0.0;
  for (int i = 0; i < n; ++i) mass += (out.density[i] = p[std::size_t(i) * r]);
  // unit mass under the grid's own periodic trapezoid
  mass *= kTwoPi / n;
  for (double& x : out.density) x /= mass;
  const Table Vt(V);
  const double h = kTwoPi / (n * r);
  for (int i = 0; i < n * r; ++i) out.mean_drift += h * Vt(i * h) * p[i];
  return out;
}

double stationary_expectation(const ReducedCoeffs& c, const std::function<double(double)>& f) {
  const int n = c.size() * refine_factor(c.size());
  const auto p = fine_density(c.V, c.g, n, nullptr);
  const double h = kTwoPi / n;
  double s = 0.0;
  for (int i = 0; i < n; ++i) s += h * f(i * h) * p[i];
  return s;
}

std::vector<double> stationary_bin_masses(const ReducedCoeffs& c, int bins) {
  require(bins >= 1, ErrorCode::kInvalidArgument, "stationary_bin_masses: bins must be >= 1");
  const int per = 64, n = bins * per;
  const auto p = fine_density(c.V, c.g, n, nullptr);
  const double h = kTwoPi / n;
  std::vector<double> m(bins, 0.0);
  for (int b = 0; b < bins; ++b)
    for (int i = 0; i < per; ++i) {
      const int a = b * per + i, z = (a + 1) % n;
      m[b] += 0.5 * h * (p[a] + p[z]);
    }
  return m;
}

namespace {

struct ReducedStepper {
  Table V, g;
  double sigma, dt, sq;
  ReducedStepper(const ReducedCoeffs& c, double s, double d) : V(c.V), g(c.g), sigma(s), dt(d), sq(std::sqrt(d)) {}
  double step(double a, double xi) const { return sigma * sigma * V(a) * dt + sigma * g(a) * sq * xi; }
};

void check_reduced(const ReducedCoeffs& c, double sigma, double T, double dt) {
  require(c.size() >= 4 && c.V.size() == c.g.size(), ErrorCode::kInvalidArgument, "simulate_reduced: bad coefficients");
  require(dt > 0 && T >= 0 && sigma >= 0, ErrorCode::kInvalidArgument, "simulate_reduced: need dt > 0, T >= 0, sigma >= 0");
}

}  // namespace

ReducedPath simulate_reduced(const ReducedCoeffs& c, double sigma, double T, double dt, std::uint64_t seed, double pi0,
                             int stride) {
  check_reduced(c, sigma, T, dt);
  require(stride >= 1, ErrorCode::kInvalidArgument, "simulate_reduced: stride must be >= 1");
  const ReducedStepper st(c, sigma, dt);
  PathRng rng(seed, 0);
  ReducedPath p;
  double u = pi0;
  p.t.push_back(0.0);
  p.pi.push_back(wrap_phase(u));
  p.pi_unwrapped.push_back(u);
  const long n = long(std::ceil(T / dt - 1e-9));
  for (long i = 1; i <= n; ++i) {
    u += st.step(wrap_phase(u), rng.normal());
    if (i % stride == 0 || i == n) {
      p.t.push_back(i * dt);
      p.pi.push_back(wrap_phase(u));
      p.pi_unwrapped.push_back(u);
    }
  }
  return p;
}

std::vector<double> reduced_increments(const ReducedCoeffs& c, double sigma, double T, double dt, std::uint64_t seed,
                                       int paths, double pi0, int threads) {
  check_reduced(c, sigma, T, dt);
  std::vector<double> out(std::max(paths, 0));
  const long n = long(std::ceil(T / dt - 1e-9));
  detail::parallel_for(paths, threads, [&](int, int k) {
    const ReducedStepper st(c, sigma, dt);
    PathRng rng(seed, std::uint64_t(k));
    double u = pi0;
    for (long i = 0; i < n; ++i) u += st.step(wrap_phase(u), rng.normal());
    out[k] = u - pi0;
  });
  return out;
}

std::vector<double> reduced_histogram(const ReducedCoeffs& c, double sigma, double T, double burn, double dt,
                                      std::uint64_t seed, int paths, int bins, int threads) {
  check_reduced(c, sigma, T, dt);
  require(bins >= 1 && paths >= 1 && burn < T, ErrorCode::kInvalidArgument, "reduced_histogram: bad arguments");
  std::vector<std::vector<double>> counts(paths, std::vector<double>(bins, 0.0));
  const long n = long(std::ceil(T / dt - 1e-9)), nb = long(std::ceil(burn / dt - 1e-9));
  detail::parallel_for(paths, threads, [&](int, int k) {
    const ReducedStepper st(c, sigma, dt);
    PathRng rng(seed, std::uint64_t(k));
    double u = 0.0;
    auto& h = counts[k];
    for (long i = 1; i <= n; ++i) {
      u = wrap_phase(u + st.step(u, rng.normal()));
      if (i > nb) h[std::min(bins - 1, int(u / kTwoPi * bins))] += 1.0;
    }
  });
  std::vector<double> m(bins, 0.0);
  double tot = 0.0;
  for (const auto& h : counts)
    for (int b = 0; b < bins; ++b) {
      m[b] += h[b];
      tot += h[b];
    }
  for (double& x : m) x /= tot;
  return m;
}

void validate_schedule(const std::vector<double>& sigma, const std::vector<double>& t_sigma) {
  require(!sigma.empty() && sigma.size() == t_sigma.size(), ErrorCode::kConfig, "schedule: sigma and t_sigma differ in length");
  for (std::size_t i = 0; i < sigma.size(); ++i) {
    require(sigma[i] > 0 && t_sigma[i] > 0, ErrorCode::kConfig, "schedule: sigma and t_sigma must be positive");
    require(sigma[i] * sigma[i] * t_sigma[i] >= 1.0, ErrorCode::kConfig, "schedule: sigma^2 t_sigma must be >= 1");
    if (i == 0) continue;
    require(sigma[i] < sigma[i - 1], ErrorCode::kConfig, "schedule: sigma must be strictly decreasing");
    require(sigma[i] * sigma[i] * t_sigma[i] >= sigma[i - 1] * sigma[i - 1] * t_sigma[i - 1] * (1 - 1e-12),
            ErrorCode::kConfig, "schedule: sigma^2 t_sigma must not decrease along the schedule");
  }
}

ErgodicReport ergodic_compare(const std::vector<std::vector<PathRecord>>& ensembles, const std::vector<double>& sigma,
                              const std::vector<double>& t_sigma, double target, double epsilon, int which) {
  validate_schedule(sigma, t_sigma);
  require(ensembles.size() == sigma.size(), ErrorCode::kInvalidArgument, "ergodic_compare: one ensemble per sigma");
  require(epsilon > 0, ErrorCode::kInvalidArgument, "ergodic_compare: epsilon must be > 0");
  ErgodicReport rep;
  rep.target = target;
  rep.epsilon = epsilon;
  for (std::size_t i = 0; i < ensembles.size(); ++i) {
    ErgodicRow row;
    row.sigma = sigma[i];
    row.t_sigma = t_sigma[i];
    row.paths = int(ensembles[i].size());
    double dev = 0.0;
    for (const auto& r : ensembles[i]) {
      if (r.exited()) continue;
      require(which >= 0 && which < int(r.averages.size()), ErrorCode::kInvalidArgument,
              "ergodic_compare: record lacks the requested time average");
      ++row.surviving;
      const double e = std::abs(r.averages[which] - target);
      dev += e;
      row.within += e < epsilon;
    }
    if (row.surviving > 0) {
      row.fraction = double(row.within) / row.surviving;
      row.mean_abs_deviation = dev / row.surviving;
    }
    rep.rows.push_back(row);
  }
  rep.monotone = true;
  for (std::size_t i = 1; i < rep.rows.size(); ++i)
    if (rep.rows[i].fraction < rep.rows[i - 1].fraction) rep.monotone = false;
  return rep;
}

DriftEstimate drift_estimate(const std::vector<PathRecord>& records, double prediction, double level, int resamples,
                             std::uint64_t seed) {
  std::vector<double> v;
  for (const auto& r : records) {
    if (r.exited() || r.t_end <= 0) continue;
    require(r.sigma > 0, ErrorCode::kInvalidArgument, "drift_estimate: records need sigma > 0");
    v.push_back((r.pi_end - r.pi0) / (r.sigma * r.sigma * r.t_end));
  }
  require(v.size() >= 100, ErrorCode::kInsufficientData,
          "drift_estimate: " + std::to_string(v.size()) + " surviving paths (need >= 100)");
  DriftEstimate d;
  d.paths = int(v.size());
  d.estimate = mean(v);
  d.se = std::sqrt(variance(v) / v.size());
  d.ci = bootstrap_mean_ci(v, level, resamples, seed);
  d.prediction = prediction;
  d.covered = d.ci.contains(prediction);
  return d;
}

std::vector<double> paired_window_sup(const ManifoldFrame& frame, const NoiseModel& nm, const PathRecord& r,
                                      const ReducedCoeffs& c, double window) {
  const int n = r.samples();
  require(window > 0, ErrorCode::kInvalidArgument, "paired_window_sup: window must be > 0");
  require(r.replay_modes == nm.modes() && int(r.replay.size()) == nm.modes() * (n - 1), ErrorCode::kInvalidArgument,
          "paired_window_sup: noise replay unavailable");
  require(r.dt > 0, ErrorCode::kInvalidArgument, "paired_window_sup: record has no step size");
  // E_dt commutes with translations, so E_dt^* psi*_alpha is the translate of E_dt^* psi*_0
  ManifoldFrame kicked = frame;
  {
    const detail::Integrator integ(frame.model, r.dt);
    detail::Spectrum s = detail::forward(frame.psi_star0);
    for (std::size_t q = 0; q < s.c.size(); ++q) s.c[q] *= std::conj(integ.E()[q]);
    kicked.psi_star0 = detail::inverse(s, frame.model.grid);
  }
  const Table V(c.V);
  const double s2 = nm.sigma * nm.sigma;
  std::vector<double> sups;
  int i = 0;
  for (int a = 0;; ++a) {
    const double t0 = a * window, t1 = t0 + window;
    if (r.t_end < t1 - 1e-9 || (r.exited() && *r.tau < t1)) break;
    while (i < n && r.t[i] < t0 - 1e-9) ++i;
    double u = r.pi_unwrapped[i], sup = 0.0;
    int k = i;
    for (; k + 1 < n && r.t[k + 1] <= t1 + 1e-9; ++k) {
      const auto w = projected_noise_weights(kicked, nm, wrap_phase(u));
      double m = 0.0;
      for (int j = 0; j < nm.modes(); ++j) m += w[j] * r.replay[std::size_t(j) * (n - 1) + k];
      u += s2 * V(wrap_phase(u)) * (r.t[k + 1] - r.t[k]) + nm.sigma * m;
      sup = std::max(sup, std::abs(r.pi_unwrapped[k + 1] - u));
    }
    sups.push_back(sup);
    i = k;
  }
  return sups;
}

}  // namespace isophase
