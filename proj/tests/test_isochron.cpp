#include "doctest.h"
#include "stats.hpp"
#include "support.hpp"

using namespace isophase;
using testsupport::kPi;

namespace {

const ManifoldFrame& frame() { return testsupport::nf_frame(128); }

// tube point gamma_alpha + r * (smooth unit direction) with the H1 amplitude r
Field tube_point(const ManifoldFrame& fr, double alpha, double r, std::uint64_t seed) {
  Field d = testsupport::smooth_direction(fr.model.grid, seed);
  d *= r / norm_E(d);
  return gamma(fr, alpha) + d;
}

Field generator(const Field& x) {
  Field t = derivative(x);
  t *= -x.grid().L / (2 * kPi);
  return t;
}

}  // namespace

TEST_CASE("phase helpers") {
  CHECK(wrap_phase(-0.1) == doctest::Approx(2 * kPi - 0.1));
  CHECK(wrap_phase(7.0) == doctest::Approx(7.0 - 2 * kPi));
  CHECK(wrap_signed(3.5) == doctest::Approx(3.5 - 2 * kPi));
  CHECK(circle_distance(0.1, 2 * kPi - 0.1) == doctest::Approx(0.2));
}

TEST_CASE("identity on the orbit") {
  const ManifoldFrame& fr = frame();
  const IsochronConfig cfg = testsupport::nf_config(fr);
  for (int i = 0; i < 32; ++i) {
    const double a = 2 * kPi * i / 32;
    const Field g = gamma(fr, a);
    CHECK(circle_distance(variational_phase(fr, g), a) <= 1e-10);
    if (i % 4 == 0) {
      CHECK(circle_distance(isochron_flow(fr, g, cfg), a) <= 1e-9);
      CHECK(circle_distance(isochron_newton(fr, g, cfg), a) <= 1e-9);
      const PhaseGap pg = phase_gap(fr, g, cfg);
      CHECK(pg.gap <= 1e-10);
      CHECK(pg.dist <= 1e-10);
    }
  }
}

TEST_CASE("variational phase") {
  const ManifoldFrame& fr = frame();
  const Grid& g = fr.model.grid;
  const Field x0 = tube_point(fr, 0.7, 0.3, 5);
  const double b0 = variational_phase(fr, x0);
  for (double h : {0.4, 3.0, -1.2}) CHECK(circle_distance(variational_phase(fr, shift(x0, h)), b0 + h) <= 1e-9);

  Field v = testsupport::smooth_direction(g, 9);
  v.axpy(-inner(fr.psi_star0, v) / inner(fr.psi_star0, fr.psi_star0), fr.psi_star0);
  v *= 1.0 / norm(v);
  CHECK(circle_distance(variational_phase(fr, fr.gamma0 + 0.05 * v), 0.0) <= 1e-9);

  // warm start returns the same root
  CHECK(circle_distance(variational_phase(fr, x0, b0 + 0.2), b0) <= 1e-12);
  CHECK_THROWS_AS(variational_phase(fr, Field(g)), Error);

  const TubeState ts = tube_state(fr, x0, 0.5);
  CHECK(ts.dist <= ts.dist_E);
  CHECK(ts.inside);
  CHECK(ts.dist_E == doctest::Approx(norm_E(x0 - gamma(fr, ts.phase))));
}

TEST_CASE("flow and Newton isochrons agree") {
  const ManifoldFrame& fr = frame();
  const IsochronConfig cfg = testsupport::nf_config(fr);
  std::mt19937_64 rng(77);
  std::uniform_real_distribution<double> ua(0, 2 * kPi), ur(0.05, 0.5);
  double worst = 0;
  for (int i = 0; i < 20; ++i) {
    const Field x = tube_point(fr, ua(rng), ur(rng), 100 + i);
    worst = std::max(worst, circle_distance(isochron_flow(fr, x, cfg), isochron_newton(fr, x, cfg)));
  }
  CHECK(worst <= 1e-6);

  const Field x = tube_point(fr, 2.0, 0.4, 3);
  const double p = isochron_flow(fr, x, cfg);
  for (double t : {0.5, 2.0, 10.0}) CHECK(circle_distance(isochron_flow(fr, evolve(fr.model, x, t, cfg.flow), cfg), p) <= 1e-6);
  // equivariance
  CHECK(circle_distance(isochron_newton(fr, shift(x, 1.0), cfg), p + 1.0) <= 1e-8);

  IsochronConfig lazy = cfg;
  lazy.flow.T_max = 0.5;
  CHECK_THROWS_AS(isochron_flow(fr, x, lazy), Error);
  IsochronConfig tight = cfg;
  tight.T_inf = 2.0;
  CHECK_THROWS_AS(isochron_newton(fr, x, tight), Error);
}

TEST_CASE("first derivative") {
  const ManifoldFrame& fr = frame();
  const Grid& g = fr.model.grid;
  const IsochronConfig cfg = testsupport::nf_config(fr);
  std::mt19937_64 rng(5);
  for (double a : {0.0, 1.9}) {
    const Field y = testsupport::random_bandlimited(g, rng, 12, 1, 0.1);
    CHECK(std::abs(dpi(fr, gamma(fr, a), y, cfg) - inner(psi_star(fr, a), y)) <= 1e-8 * norm(y));
    CHECK(dpi(fr, gamma(fr, a), tangent(fr, a), cfg) == doctest::Approx(1.0).epsilon(1e-9));
  }

  // first-order prediction at the manifold
  const Field y = testsupport::smooth_direction(g, 31);
  std::vector<double> eps{0.08, 0.04, 0.02, 0.01}, err;
  for (double e : eps) err.push_back(std::abs(wrap_signed(isochron_flow(fr, fr.gamma0 + e * y, cfg)) - e * inner(fr.psi_star0, y)));
  CHECK(loglog_fit(eps, err).slope == doctest::Approx(2.0).epsilon(0.05));

  // central differences off the manifold
  const Field x = tube_point(fr, 0.8, 0.4, 41);
  const Field z = testsupport::smooth_direction(g, 42);
  const double d = dpi(fr, x, z, cfg);
  std::vector<double> e2{0.04, 0.02, 0.01, 0.005}, err2;
  for (double e : e2) {
    const double fd = wrap_signed(isochron_flow(fr, x + e * z, cfg) - isochron_flow(fr, x - e * z, cfg)) / (2 * e);
    err2.push_back(std::abs(fd - d));
  }
  CHECK(loglog_fit(e2, err2).slope == doctest::Approx(2.0).epsilon(0.075));
  CHECK(dpi(fr, x, generator(x), cfg) == doctest::Approx(1.0).epsilon(1e-6));

  // linearity
  const double lin = dpi(fr, x, 2.0 * z + y, cfg) - 2.0 * d - dpi(fr, x, y, cfg);
  CHECK(std::abs(lin) <= 1e-10);
}

TEST_CASE("second derivative") {
  const ManifoldFrame& fr = frame();
  const Grid& g = fr.model.grid;
  const IsochronConfig cfg = testsupport::nf_config(fr);
  const Field y = testsupport::smooth_direction(g, 51), z = testsupport::smooth_direction(g, 52);

  for (const Field& x : {fr.gamma0, tube_point(fr, 1.2, 0.3, 53)}) {
    const double a = d2pi(fr, x, y, z, cfg), b = d2pi(fr, x, z, y, cfg);
    CHECK(std::abs(a - b) <= 1e-6 * norm(y) * norm(z));
    auto pi = [&](const Field& u) { return isochron_flow(fr, u, cfg); };
    const double p0 = pi(x);
    std::vector<double> eps{0.04, 0.02, 0.01, 0.005}, err;
    double fd_small = 0;
    for (double e : eps) {
      const double s = wrap_signed(pi(x + e * y + e * z) - p0) - wrap_signed(pi(x + e * y - e * z) - p0) -
                       wrap_signed(pi(x - e * y + e * z) - p0) + wrap_signed(pi(x - e * y - e * z) - p0);
      fd_small = s / (4 * e * e);
      err.push_back(std::abs(fd_small - a));
    }
    CHECK(loglog_fit(eps, err).slope == doctest::Approx(2.0).epsilon(0.075));
    CHECK(std::abs(fd_small - a) <= 1e-3 * std::abs(a));
  }

  // translation invariance along the orbit
  const double ref = d2pi(fr, fr.gamma0, y, z, cfg);
  for (double a : {0.9, 3.3}) {
    const double h = g.phase_to_distance(a);
    CHECK(std::abs(d2pi(fr, gamma(fr, a), shift(y, h), shift(z, h), cfg) - ref) <= 1e-6 * std::max(1.0, std::abs(ref)));
  }
}

TEST_CASE("phase gap scales quadratically") {
  const ManifoldFrame& fr = frame();
  const IsochronConfig cfg = testsupport::nf_config(fr);
  const Field y = testsupport::smooth_direction(fr.model.grid, 61);
  std::vector<double> amp{0.4, 0.2, 0.1, 0.05}, gap;
  for (double r : amp) gap.push_back(phase_gap(fr, fr.gamma0 + r * y, cfg).gap);
  CHECK(loglog_fit(amp, gap).slope == doctest::Approx(2.0).epsilon(0.1));
}
