#include <random>

#include "doctest.h"
#include "support.hpp"

using namespace isophase;
using testsupport::kPi;

TEST_CASE("round trip and Parseval") {
  const Grid g(64);
  std::mt19937_64 rng(11);
  const Field f = testsupport::random_values(g, rng, 2);
  const SpectralField F = to_spectral(f);
  const Field back = from_spectral(F);
  CHECK(testsupport::max_abs_diff(f, back) <= 1e-12 * std::sqrt(norm(f) * norm(f) / g.L));

  for (int c = 0; c < 2; ++c) {
    Field fc(g, 1, std::vector<double>(f.component(c).begin(), f.component(c).end()));
    double energy = 0;
    for (int k = 0; k < g.M; ++k) energy += std::norm(F.at(c, k));
    energy *= g.L / (double(g.M) * g.M);
    const double n2 = inner(fc, fc);
    CHECK(std::abs(n2 - energy) / n2 <= 1e-11);
  }
}

TEST_CASE("DC and pure tone spectra") {
  const Grid g(64);
  const SpectralField C = to_spectral(Field::from_function(g, [](double) { return 1.0; }));
  CHECK(std::abs(C.at(0, 0) - cplx(64.0)) < 1e-12);
  for (int k = 1; k < 64; ++k) CHECK(std::abs(C.at(0, k)) < 1e-12);

  const SpectralField T = to_spectral(Field::from_function(g, [](double x) { return std::cos(x); }));
  for (int k = 0; k < 64; ++k) {
    const bool tone = k == 1 || k == 63;
    if (tone)
      CHECK(std::abs(T.at(0, k) - cplx(32.0)) < 1e-12);
    else
      CHECK(std::abs(T.at(0, k)) < 1e-12);
  }
  CHECK(std::abs(T.at(0, -1) - std::conj(T.at(0, 1))) < 1e-12);
}

TEST_CASE("shift") {
  const Grid g(64);
  const Field c = Field::from_function(g, [](double x) { return std::cos(x); });
  const Field expect = Field::from_function(g, [](double x) { return std::cos(x - kPi / 2); });
  CHECK(testsupport::max_abs_diff(shift(c, kPi / 2), expect) <= 1e-12);

  std::mt19937_64 rng(3);
  const Field f = testsupport::random_bandlimited(g, rng);
  CHECK(testsupport::max_abs_diff(shift(f, g.L), f) <= 1e-11);
  CHECK(testsupport::max_abs_diff(shift(f, 0.0), f) <= 1e-12);
  CHECK(testsupport::max_abs_diff(shift(shift(f, 0.3), -0.3), f) <= 1e-12 * 10);
  CHECK(testsupport::max_abs_diff(shift(shift(f, 0.3), 1.1), shift(f, 1.4)) <= 1e-11);
  for (double h : {0.1, 1.7, -2.9, 5.5}) CHECK(std::abs(norm(shift(f, h)) - norm(f)) <= 1e-12 * norm(f));

  // non-2pi domain: shift by a physical distance
  const Grid g2(32, 10.0);
  const Field s = Field::from_function(g2, [](double x) { return std::sin(2 * kPi * x / 10.0); });
  const Field s_exp = Field::from_function(g2, [](double x) { return std::sin(2 * kPi * (x - 1.3) / 10.0); });
  CHECK(testsupport::max_abs_diff(shift(s, 1.3), s_exp) <= 1e-12);
}

TEST_CASE("semigroup") {
  const Grid g(64);
  std::mt19937_64 rng(5);
  const Field f = testsupport::random_bandlimited(g, rng);
  const LinearOp nf = LinearOp::scalar(g, 1, -1.0);
  CHECK(testsupport::max_abs_diff(apply_semigroup(nf, 1.0, f), std::exp(-1.0) * f) <= 1e-12 * 10);
  CHECK(testsupport::max_abs_diff(apply_semigroup(nf, 0.0, f), f) <= 1e-12);

  const LinearOp heat = LinearOp::diffusion(g, {1.0}, {0.0}, 0.0);
  const Field c = Field::from_function(g, [](double x) { return std::cos(x); });
  CHECK(testsupport::max_abs_diff(apply_semigroup(heat, 0.5, c), std::exp(-0.5) * c) <= 1e-12);

  const LinearOp adv = LinearOp::diffusion(g, {0.1}, {0.2}, 0.7);
  std::uniform_real_distribution<double> u(0.0, 5.0);
  for (int i = 0; i < 10; ++i) {
    const double t = u(rng), s = u(rng);
    const Field a = apply_semigroup(adv, t + s, f);
    const Field b = apply_semigroup(adv, t, apply_semigroup(adv, s, f));
    CHECK(testsupport::max_abs_diff(a, b) <= 1e-11);
  }
  CHECK_THROWS_AS(apply_semigroup(nf, -1.0, f), Error);
  CHECK(adv.omega() == doctest::Approx(-0.2));
}

TEST_CASE("inner products and norms") {
  const Grid g(64);
  const Field c = Field::from_function(g, [](double x) { return std::cos(x); });
  const Field s = Field::from_function(g, [](double x) { return std::sin(x); });
  CHECK(std::abs(inner(c, c) - kPi) <= 1e-12);
  CHECK(std::abs(inner(c, s)) <= 1e-12);
  CHECK(norm(Field(g)) == 0.0);
  // H1: ||cos||^2 + ||sin||^2
  CHECK(std::abs(norm_E(c) - std::sqrt(2 * kPi)) <= 1e-12);
  CHECK_THROWS_AS(inner(c, Field(Grid(32))), Error);

  std::mt19937_64 rng(9);
  const Field a = testsupport::random_values(g, rng), b = testsupport::random_values(g, rng);
  CHECK(std::abs(detail::inner(detail::forward(a), detail::forward(b), g) - inner(a, b)) <= 1e-12 * norm(a) * norm(b));
  double o[3];
  detail::inner_shifted(detail::forward(a), detail::forward(b), g, 0.4, o);
  CHECK(std::abs(o[0] - inner(shift(a, 0.4), b)) <= 1e-12 * norm(a) * norm(b));
  const double e = 1e-5;
  const double fd1 = (inner(shift(a, 0.4 + e), b) - inner(shift(a, 0.4 - e), b)) / (2 * e);
  CHECK(std::abs(o[1] - fd1) <= 1e-6 * norm(a) * norm(b) * 50);
}

TEST_CASE("grid validation") {
  CHECK_THROWS_AS(Grid(8), Error);
  CHECK_THROWS_AS(Grid(48), Error);
  CHECK_THROWS_AS(Grid(64, -1.0), Error);
  CHECK_THROWS_AS(Field(Grid(16), 1, std::vector<double>(16, NAN)), Error);
}
