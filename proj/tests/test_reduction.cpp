#include <doctest.h>

#include <cmath>
#include <numeric>

#include "reduction.hpp"
#include "stats.hpp"
#include "support.hpp"

using namespace isophase;
using testsupport::kPi;

namespace {

NoiseModel smoothed(int K, double kappa, double sigma = 0.05) {
  NoiseModel nm;
  nm.K = K;
  nm.spectrum = NoiseSpectrum::kSmoothed;
  nm.kappa = kappa;
  nm.sigma = sigma;
  return nm;
}

double sum_abs(const std::vector<double>& v) {
  double s = 0;
  for (double x : v) s += std::abs(x);
  return s;
}

ReducedCoeffs tilted_coeffs(int n) {
  std::vector<double> V(n), g(n);
  for (int i = 0; i < n; ++i) {
    const double a = 2 * kPi * i / n;
    V[i] = 0.4 * std::sin(a) + 0.2 * std::cos(2 * a) + 0.1;
    g[i] = 1.0 + 0.3 * std::cos(a);
  }
  return make_coeffs(V, g);
}

PathRecord fake_record(double sigma, double T, double dpi, double avg, bool exited = false) {
  PathRecord r;
  r.sigma = sigma;
  r.T = T;
  r.t_end = T;
  r.pi0 = 0.5;
  r.pi_end = 0.5 + dpi;
  r.averages = {avg};
  if (exited) r.tau = T / 2;
  return r;
}

}  // namespace

TEST_CASE("drift is translation invariant and the mode sum converges") {
  const ManifoldFrame& fr = testsupport::nf_sim_frame();
  const IsochronConfig cfg = testsupport::nf_config(fr);
  const NoiseModel nm = smoothed(4, 0.05);
  std::vector<double> V;
  double scale = 0;
  for (int i = 0; i < 8; ++i) {
    const double a = 2 * kPi * i / 8;
    const auto t = drift_terms(fr, nm, a, cfg);
    scale = std::max(scale, sum_abs(t));
    V.push_back(drift_field(fr, nm, a, cfg));
  }
  // each cos/sin pair cancels, so V sits at roundoff: compare against the size of the terms
  for (double v : V) CHECK(std::abs(v - V[0]) <= 1e-6 * scale);
  CHECK(std::abs(V[0]) <= 1e-6 * scale);
}

TEST_CASE("drift terms agree with a finite-difference second derivative") {
  const ManifoldFrame& fr = testsupport::nf_sim_frame();
  const IsochronConfig cfg = testsupport::nf_config(fr);
  const NoiseModel nm = smoothed(3, 0.05);
  const double alpha = 0.7;
  const auto terms = drift_terms(fr, nm, alpha, cfg);
  const Field x = gamma(fr, alpha);
  const double p0 = isochron_newton(fr, x, cfg);
  auto second = [&](const Field& y, double e) {
    const double s = wrap_signed(isochron_newton(fr, x + 2 * e * y, cfg) - p0) +
                     wrap_signed(isochron_newton(fr, x - 2 * e * y, cfg) - p0);
    return s / (4 * e * e);
  };
  std::vector<double> fd(nm.modes());
  for (int j = 0; j < nm.modes(); ++j) {
    const Field y = noise_direction(nm, x, j);
    // Richardson step on the centred difference
    fd[j] = 0.5 * (4 * second(y, 0.005) - second(y, 0.01)) / 3;
  }
  const double scale = sum_abs(terms);
  REQUIRE(scale > 1e-3);
  for (int j = 0; j < nm.modes(); ++j)
    CHECK(std::abs(fd[j] - terms[j]) <= 1e-3 * std::max(std::abs(terms[j]), 1e-3 * scale));
  const double Vfd = std::accumulate(fd.begin(), fd.end(), 0.0);
  CHECK(std::abs(Vfd - drift_field(fr, nm, alpha, cfg)) <= 1e-3 * scale);
}

TEST_CASE("diffusion coefficient") {
  const ManifoldFrame& fr = testsupport::nf_sim_frame();

  SUBCASE("white noise recovers the adjoint norm") {
    // psi* has a steep profile, so this needs the resolved grid
    const ManifoldFrame& fine = testsupport::nf_frame(256);
    NoiseModel nm;
    nm.K = fine.model.grid.M / 3;
    const double g = diffusion_coeff(fine, nm, 0.0);
    const double ps = norm(fine.psi_star0);
    CHECK(g * g == doctest::Approx(ps * ps).epsilon(0.01));
    CHECK(g * g <= ps * ps * (1 + 1e-12));
  }
  SUBCASE("constant along the orbit") {
    const NoiseModel nm = smoothed(21, 0.05);
    const double g0 = diffusion_coeff(fr, nm, 0.0);
    for (int i = 1; i < 8; ++i) CHECK(std::abs(diffusion_coeff(fr, nm, 2 * kPi * i / 8) - g0) <= 1e-8 * g0);
  }
  SUBCASE("smoothing lowers g") {
    double prev = 1e300;
    for (double kappa : {0.0, 0.01, 0.03, 0.1, 0.3}) {
      const double g = diffusion_coeff(fr, smoothed(21, kappa), 0.4);
      CHECK(g < prev);
      prev = g;
    }
  }
  SUBCASE("degenerate noise is rejected") {
    // the constant mode alone does not move the phase of a bump
    NoiseModel nm;
    nm.K = 0;
    CHECK_THROWS_AS(diffusion_coeff(fr, nm, 0.0), Error);
  }
}

TEST_CASE("tabulated coefficients") {
  const ManifoldFrame& fr = testsupport::nf_sim_frame();
  const IsochronConfig cfg = testsupport::nf_config(fr);
  TabulateOptions opt;
  opt.n_alpha = 16;
  opt.equivariant = true;
  const auto c = tabulate_coeffs(fr, smoothed(6, 0.05), cfg, opt);
  REQUIRE(c.size() == 16);
  double mass = 0;
  for (double p : c.Pstar) {
    CHECK(p == doctest::Approx(1 / (2 * kPi)).epsilon(1e-10));
    mass += p * 2 * kPi / c.size();
  }
  CHECK(mass == doctest::Approx(1.0).epsilon(1e-8));
  for (double g : c.g) CHECK(g == doctest::Approx(c.g[0]).epsilon(1e-8));
}

TEST_CASE("stationary density") {
  SUBCASE("constant coefficients give the uniform law") {
    const auto c = make_coeffs(std::vector<double>(32, 0.7), std::vector<double>(32, 1.3));
    for (double p : c.Pstar) CHECK(p == doctest::Approx(1 / (2 * kPi)).epsilon(1e-12));
    CHECK(c.mean_drift == doctest::Approx(0.7).epsilon(1e-12));
    // flux V p around the circle
    CHECK(stationary_density(c.V, c.g).current == doctest::Approx(0.7 / (2 * kPi)).epsilon(1e-9));
  }
  SUBCASE("gradient drift gives the Gibbs density") {
    const int n = 64;
    const double gc = 0.8;
    auto U = [](double a) { return 0.3 * std::cos(a) + 0.1 * std::sin(2 * a); };
    auto dU = [](double a) { return -0.3 * std::sin(a) + 0.2 * std::cos(2 * a); };
    std::vector<double> V(n), g(n, gc), gibbs(n);
    for (int i = 0; i < n; ++i) {
      const double a = 2 * kPi * i / n;
      V[i] = -dU(a);
      gibbs[i] = std::exp(-2 * U(a) / (gc * gc));
    }
    // normalise the oracle with a fine periodic trapezoid
    double Z = 0;
    const int fine = 1 << 14;
    for (int i = 0; i < fine; ++i) Z += std::exp(-2 * U(2 * kPi * i / fine) / (gc * gc)) * 2 * kPi / fine;
    const auto sd = stationary_density(V, g);
    for (int i = 0; i < n; ++i) CHECK(sd.density[i] == doctest::Approx(gibbs[i] / Z).epsilon(1e-5));
    CHECK(std::abs(sd.current) <= 1e-6);
    CHECK(std::abs(sd.mean_drift) <= 1e-6);
  }
  SUBCASE("normalised and positive with circulation") {
    const auto c = tilted_coeffs(64);
    double mass = 0;
    for (double p : c.Pstar) {
      CHECK(p > 0);
      mass += p * 2 * kPi / c.size();
    }
    CHECK(mass == doctest::Approx(1.0).epsilon(1e-8));
    const auto bins = stationary_bin_masses(c, 16);
    CHECK(std::accumulate(bins.begin(), bins.end(), 0.0) == doctest::Approx(1.0).epsilon(1e-8));
    CHECK(stationary_expectation(c, [](double) { return 1.0; }) == doctest::Approx(1.0).epsilon(1e-8));
  }
  SUBCASE("non-positive diffusion is rejected") {
    std::vector<double> g(16, 1.0);
    g[3] = 0.0;
    CHECK_THROWS_AS(stationary_density(std::vector<double>(16, 0.0), g), Error);
  }
}

TEST_CASE("periodic spline interpolates smooth tables") {
  const int n = 64;
  std::vector<double> v(n);
  for (int i = 0; i < n; ++i) v[i] = std::sin(2 * kPi * i / n) + 0.5 * std::cos(3 * 2 * kPi * i / n);
  const PeriodicSpline s(v);
  for (double a : {0.013, 1.7, 3.9, 6.2, -0.4, 7.0}) {
    const double exact = std::sin(a) + 0.5 * std::cos(3 * a);
    CHECK(std::abs(s(a) - exact) <= 1e-5);
  }
}

TEST_CASE("reduced SDE") {
  SUBCASE("zero noise") {
    const auto c = tilted_coeffs(32);
    const auto p = simulate_reduced(c, 0.0, 10.0, 0.01, 3, 1.25, 10);
    for (double u : p.pi_unwrapped) CHECK(u == 1.25);
    CHECK(p.t.back() == doctest::Approx(10.0));
  }
  SUBCASE("constant coefficients are Gaussian") {
    const double V = 0.6, g = 0.9, sigma = 0.3, T = 5.0;
    const auto c = make_coeffs(std::vector<double>(16, V), std::vector<double>(16, g));
    const auto inc = reduced_increments(c, sigma, T, 0.05, 11, 1000);
    const double m = sigma * sigma * V * T, s = sigma * g * std::sqrt(T);
    const auto ks = ks_one_sample(inc, [&](double x) { return 0.5 * std::erfc(-(x - m) / (s * std::sqrt(2.0))); });
    CHECK(ks.p_value > 0.01);
  }
  SUBCASE("small noise at time t matches unit noise at sigma^2 t") {
    const auto c = tilted_coeffs(64);
    const double sigma = 0.25, t1 = 2.0;
    const int n = 4000;
    const auto a = reduced_increments(c, sigma, t1 / (sigma * sigma), 0.02 / (sigma * sigma), 21, n, 0.3);
    const auto b = reduced_increments(c, 1.0, t1, 0.005, 22, n, 0.3);
    const double se = std::sqrt((variance(a) + variance(b)) / n);
    CHECK(std::abs(mean(a) - mean(b)) <= 4 * se);
    // variance standard error for near-Gaussian samples
    const double vse = std::sqrt(2.0 / (n - 1)) * std::hypot(variance(a), variance(b));
    CHECK(std::abs(variance(a) - variance(b)) <= 4 * vse);
  }
  SUBCASE("deterministic per seed and thread count") {
    const auto c = tilted_coeffs(32);
    const auto a = reduced_increments(c, 0.5, 3.0, 0.01, 5, 40, 0.0, 1);
    const auto b = reduced_increments(c, 0.5, 3.0, 0.01, 5, 40, 0.0, 3);
    CHECK(a == b);
  }
  SUBCASE("bad arguments") {
    const auto c = tilted_coeffs(32);
    CHECK_THROWS_AS(simulate_reduced(c, 0.1, 1.0, 0.0, 1), Error);
    CHECK_THROWS_AS(simulate_reduced(c, -0.1, 1.0, 0.01, 1), Error);
  }
}

TEST_CASE("long-run histogram matches the analytic density") {
  const auto c = tilted_coeffs(64);
  const int bins = 32;
  const auto h = reduced_histogram(c, 1.0, 200.0, 10.0, 0.005, 7, 40, bins);
  const auto p = stationary_bin_masses(c, bins);
  CHECK(tv_distance(h, p) <= 0.02);
  // the symmetric case is exactly uniform
  const auto u = make_coeffs(std::vector<double>(64, 0.0), std::vector<double>(64, 0.4));
  const std::vector<double> flat(bins, 1.0 / bins);
  CHECK(tv_distance(stationary_bin_masses(u, bins), flat) <= 1e-12);
}

TEST_CASE("ergodic comparison") {
  const std::vector<double> sigma{0.08, 0.04, 0.02};
  std::vector<double> ts;
  for (double s : sigma) ts.push_back(20 / (s * s));

  SUBCASE("constant test function") {
    std::vector<std::vector<PathRecord>> ens(3);
    for (int i = 0; i < 3; ++i)
      for (int k = 0; k < 10; ++k) ens[i].push_back(fake_record(sigma[i], ts[i], 0.0, 1.0, k == 3));
    const auto rep = ergodic_compare(ens, sigma, ts, 1.0, 0.1);
    CHECK(rep.monotone);
    for (const auto& r : rep.rows) {
      CHECK(r.fraction == 1.0);
      CHECK(r.surviving == 9);
      CHECK(r.mean_abs_deviation == 0.0);
    }
  }
  SUBCASE("fractions and monotonicity flag") {
    std::vector<std::vector<PathRecord>> ens(3);
    const std::vector<int> inside{5, 4, 9};
    for (int i = 0; i < 3; ++i)
      for (int k = 0; k < 10; ++k) ens[i].push_back(fake_record(sigma[i], ts[i], 0.0, k < inside[i] ? 0.05 : 0.5));
    const auto rep = ergodic_compare(ens, sigma, ts, 0.0, 0.1);
    CHECK(rep.rows[0].fraction == doctest::Approx(0.5));
    CHECK(rep.rows[2].fraction == doctest::Approx(0.9));
    CHECK_FALSE(rep.monotone);
  }
  SUBCASE("schedule validation") {
    CHECK_NOTHROW(validate_schedule(sigma, ts));
    CHECK_THROWS_AS(validate_schedule({0.04, 0.08}, {1e4, 1e4}), Error);
    CHECK_THROWS_AS(validate_schedule({0.08, 0.04}, {100, 100}), Error);  // sigma^2 t below 1
    CHECK_THROWS_AS(validate_schedule({0.08, 0.04}, {1000, 700}), Error);  // sigma^2 t decreasing
    CHECK_THROWS_AS(validate_schedule({0.08}, {1000, 2000}), Error);
    std::vector<std::vector<PathRecord>> ens(2);
    CHECK_THROWS_AS(ergodic_compare(ens, {0.04, 0.08}, {1e4, 1e4}, 0.0, 0.1), Error);
  }
}

TEST_CASE("drift estimate") {
  std::vector<PathRecord> rs;
  const double sigma = 0.1, T = 100.0;
  std::mt19937_64 rng(9);
  std::normal_distribution<double> nd;
  std::vector<double> scaled;
  for (int k = 0; k < 150; ++k) {
    const double d = sigma * sigma * T * (0.2 + 0.05 * nd(rng));
    rs.push_back(fake_record(sigma, T, d, 0.0));
    scaled.push_back(d / (sigma * sigma * T));
  }
  rs.push_back(fake_record(sigma, T, 100.0, 0.0, true));  // exited paths are ignored
  const auto d = drift_estimate(rs, 0.2);
  CHECK(d.paths == 150);
  CHECK(d.estimate == doctest::Approx(mean(scaled)).epsilon(1e-12));
  CHECK(d.ci.lo < d.estimate);
  CHECK(d.ci.hi > d.estimate);
  CHECK(d.ci.hi - d.ci.lo == doctest::Approx(2 * 1.96 * d.se).epsilon(0.2));
  CHECK(d.covered == d.ci.contains(0.2));
  CHECK_FALSE(drift_estimate(rs, 1.0).covered);

  rs.resize(99);
  try {
    drift_estimate(rs, 0.2);
    FAIL("expected an error");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::kInsufficientData);
  }
}

TEST_CASE("paired reduced path tracks the SPDE phase") {
  const ManifoldFrame& fr = testsupport::nf_sim_frame();
  const IsochronConfig cfg = testsupport::nf_config(fr);
  NoiseModel nm = smoothed(6, 0.05, 0.0);
  TabulateOptions topt;
  topt.n_alpha = 16;
  topt.equivariant = true;
  const auto c = tabulate_coeffs(fr, nm, cfg, topt);
  PathOptions opt;
  opt.dt = 0.1;
  opt.T = 40;
  opt.stride = 5;
  opt.record_replay = true;
  opt.audit_every = 0;

  SUBCASE("noiseless path") {
    const auto r = simulate_path(fr, nm, fr.gamma0, opt, 1, 0);
    const auto sup = paired_window_sup(fr, nm, r, c, 10.0);
    CHECK(sup.size() == 4);
    for (double s : sup) CHECK(s <= 1e-12);
  }
  SUBCASE("small noise") {
    std::vector<double> med;
    for (double s : {0.05, 0.0125}) {
      nm.sigma = s;
      std::vector<double> all;
      for (int k = 0; k < 4; ++k) {
        const auto r = simulate_path(fr, nm, fr.gamma0, opt, 3, k);
        REQUIRE_FALSE(r.exited());
        for (double v : paired_window_sup(fr, nm, r, c, 10.0)) all.push_back(v);
      }
      // the phase itself moves by about sigma g sqrt(window)
      CHECK(median(all) < 0.5 * s * c.g[0] * std::sqrt(10.0));
      med.push_back(median(all));
    }
    CHECK(med[1] < med[0]);
  }
  SUBCASE("requires a replay") {
    opt.record_replay = false;
    nm.sigma = 0.05;
    const auto r = simulate_path(fr, nm, fr.gamma0, opt, 1, 0);
    CHECK_THROWS_AS(paired_window_sup(fr, nm, r, c, 10.0), Error);
  }
}
