#include "doctest.h"
#include "stats.hpp"
#include "support.hpp"

using namespace isophase;

namespace {
const ManifoldFrame& frame() { return testsupport::nf_frame(128); }
}

TEST_CASE("fixed point and linear flow") {
  const ManifoldFrame& fr = frame();
  const FlowConfig cfg = default_flow_config(fr.model);
  for (double a : {0.0, 1.3, 4.4}) {
    const Field g = gamma(fr, a);
    CHECK(norm(evolve(fr.model, g, 50.0, cfg) - g) <= 1e-8);
  }

  const Grid grid(64);
  NeuralFieldParams p;
  p.kernel = {0.0, 0.0};
  const ModelSpec lin = ModelSpec::neural_field(grid, p);
  std::mt19937_64 rng(1);
  const Field x0 = testsupport::random_bandlimited(grid, rng, 10);
  CHECK(testsupport::max_abs_diff(evolve(lin, x0, 2.5, cfg), std::exp(-2.5) * x0) <= 1e-12);
  CHECK(testsupport::max_abs_diff(evolve(lin, x0, 0.0, cfg), x0) == 0.0);
  CHECK_THROWS_AS(evolve(lin, x0, -1.0, cfg), Error);
}

TEST_CASE("scheme orders under step halving") {
  const ManifoldFrame& fr = frame();
  const Field x0 = fr.gamma0 + 0.4 * testsupport::smooth_direction(fr.model.grid, 7);
  for (Scheme s : {Scheme::kExponentialEuler, Scheme::kEtdRk2}) {
    std::vector<Field> xs;
    for (double dt : {0.08, 0.04, 0.02}) {
      FlowConfig cfg;
      cfg.dt = dt;
      cfg.scheme = s;
      xs.push_back(evolve(fr.model, x0, 2.0, cfg));
    }
    const double ratio = norm(xs[0] - xs[1]) / norm(xs[1] - xs[2]);
    if (s == Scheme::kExponentialEuler)
      CHECK(ratio == doctest::Approx(2.0).epsilon(0.1));
    else
      CHECK(ratio == doctest::Approx(4.0).epsilon(0.15));
  }
}

TEST_CASE("flow property") {
  const ManifoldFrame& fr = frame();
  const FlowConfig cfg = default_flow_config(fr.model);
  const Field x0 = fr.gamma0 + 0.3 * testsupport::smooth_direction(fr.model.grid, 3);
  const Field a = evolve(fr.model, x0, 3.0, cfg);
  const Field b = evolve(fr.model, evolve(fr.model, x0, 1.0, cfg), 2.0, cfg);
  CHECK(norm(a - b) <= 1e-12);
}

TEST_CASE("linearized flow") {
  const ManifoldFrame& fr = frame();
  const FlowConfig cfg = default_flow_config(fr.model);
  for (double a : {0.0, 2.0}) {
    const Field psi = tangent(fr, a);
    for (double t : {5.0, 20.0}) CHECK(norm(evolve_linearized(fr.model, gamma(fr, a), psi, t, cfg) - psi) <= 1e-7);
  }
  const Grid& g = fr.model.grid;
  const Field x0 = fr.gamma0 + 0.3 * testsupport::smooth_direction(g, 5);
  const Field y = testsupport::smooth_direction(g, 6);
  CHECK(norm(evolve_linearized(fr.model, x0, Field(g), 2.0, cfg)) == 0.0);

  const Field dy = evolve_linearized(fr.model, x0, y, 2.0, cfg);
  std::vector<double> eps{4e-2, 2e-2, 1e-2, 5e-3}, err;
  for (double e : eps) {
    Field fd = evolve(fr.model, x0 + e * y, 2.0, cfg) - evolve(fr.model, x0 - e * y, 2.0, cfg);
    fd *= 1.0 / (2 * e);
    err.push_back(norm(fd - dy));
  }
  CHECK(loglog_fit(eps, err).slope == doctest::Approx(2.0).epsilon(0.05));

  // linearity in y0
  const Field z = testsupport::smooth_direction(g, 8);
  const Field lhs = evolve_linearized(fr.model, x0, 2.0 * y + z, 2.0, cfg);
  CHECK(norm(lhs - (2.0 * dy + evolve_linearized(fr.model, x0, z, 2.0, cfg))) <= 1e-12);
}

TEST_CASE("second variation") {
  const ManifoldFrame& fr = frame();
  for (Scheme s : {Scheme::kExponentialEuler, Scheme::kEtdRk2}) {
    FlowConfig cfg = default_flow_config(fr.model);
    cfg.scheme = s;
    const Grid& g = fr.model.grid;
    const Field x0 = fr.gamma0 + 0.3 * testsupport::smooth_direction(g, 15);
    const Field y = testsupport::smooth_direction(g, 16), z = testsupport::smooth_direction(g, 17);
    const double t = 1.5;
    const Field a = evolve_second_variation(fr.model, x0, y, z, t, cfg);
    CHECK(norm(a - evolve_second_variation(fr.model, x0, z, y, t, cfg)) <= 1e-10);
    CHECK(norm(evolve_second_variation(fr.model, x0, y, Field(g), t, cfg)) == 0.0);

    std::vector<double> eps{4e-2, 2e-2, 1e-2, 5e-3}, err;
    for (double e : eps) {
      auto phi = [&](double sy, double sz) { return evolve(fr.model, x0 + (sy * e) * y + (sz * e) * z, t, cfg); };
      Field fd = phi(1, 1) - phi(1, -1) - phi(-1, 1) + phi(-1, -1);
      fd *= 1.0 / (4 * e * e);
      err.push_back(norm(fd - a));
    }
    CHECK(loglog_fit(eps, err).slope == doctest::Approx(2.0).epsilon(0.05));

    // first variation under RK2 against central differences
    const Field dy = evolve_linearized(fr.model, x0, y, t, cfg);
    Field fd = evolve(fr.model, x0 + 1e-4 * y, t, cfg) - evolve(fr.model, x0 - 1e-4 * y, t, cfg);
    fd *= 1.0 / 2e-4;
    CHECK(norm(fd - dy) <= 1e-6);
  }
}

TEST_CASE("decay rate") {
  const ManifoldFrame& fr = frame();
  const FlowConfig cfg = default_flow_config(fr.model);
  const DecayFit d1 = measure_decay_rate(fr.model, fr, cfg, 101);
  const DecayFit d2 = measure_decay_rate(fr.model, fr, cfg, 202);
  CHECK(d1.rate > 0);
  CHECK(d1.r2 >= 0.99);
  CHECK(std::abs(d1.rate - d2.rate) <= 0.05 * d1.rate);
  CHECK_THROWS_AS(measure_decay_rate(fr.model, fr, fr.psi0, cfg), Error);
}

TEST_CASE("divergence guard and trajectory dump") {
  const Grid g(64);
  ReactionDiffusionParams p;
  p.poly = {0.0, 0.0, 0.0, 1.0};  // u' = u^3 blows up
  const ModelSpec m = ModelSpec::reaction_diffusion(g, p);
  const Field x0 = Field::from_function(g, [](double) { return 3.0; });
  FlowConfig cfg = default_flow_config(m);
  CHECK_THROWS_AS(evolve(m, x0, 5.0, cfg), Error);

  const ManifoldFrame& fr = frame();
  const auto rows = evolve_dump(fr.model, fr.gamma0, 1.0, default_flow_config(fr.model), 25);
  CHECK(rows.size() == 5);
  CHECK(rows[4][0] == doctest::Approx(1.0));
  CHECK(rows[0].size() == std::size_t(1 + 128));
}
