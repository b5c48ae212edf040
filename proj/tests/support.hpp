#pragma once

#include <cmath>
#include <map>
#include <numbers>
#include <random>

#include "isochron.hpp"
#include "manifold.hpp"
#include "spectral.hpp"

namespace testsupport {

using namespace isophase;
constexpr double kPi = std::numbers::pi;

// random field with Fourier content restricted to |k| <= kmax (no Nyquist), amplitude ~1
inline Field random_bandlimited(const Grid& g, std::mt19937_64& rng, int kmax = -1, int n = 1,
                                double decay = 0.0) {
  if (kmax < 0) kmax = g.M / 2 - 1;
  std::normal_distribution<double> nd;
  Field f(g, n);
  for (int c = 0; c < n; ++c) {
    const double a0 = nd(rng);
    std::vector<double> a(kmax + 1), b(kmax + 1);
    for (int k = 1; k <= kmax; ++k) {
      const double s = std::exp(-decay * k);
      a[k] = s * nd(rng);
      b[k] = s * nd(rng);
    }
    for (int j = 0; j < g.M; ++j) {
      const double x = g.point(j);
      double v = a0;
      for (int k = 1; k <= kmax; ++k) v += a[k] * std::cos(g.wavenumber(k) * x) + b[k] * std::sin(g.wavenumber(k) * x);
      f(c, j) = v;
    }
  }
  return f;
}

inline Field random_values(const Grid& g, std::mt19937_64& rng, int n = 1) {
  std::normal_distribution<double> nd;
  Field f(g, n);
  for (double& v : f.values()) v = nd(rng);
  return f;
}

inline double max_abs_diff(const Field& a, const Field& b) {
  double m = 0;
  for (std::size_t i = 0; i < a.size(); ++i) m = std::max(m, std::abs(a.values()[i] - b.values()[i]));
  return m;
}

inline Field unit(Field f) {
  f *= 1.0 / norm(f);
  return f;
}

// Neural-field defaults frame, built once per grid size.
inline const ManifoldFrame& nf_frame(int M) {
  static std::map<int, ManifoldFrame> cache;
  auto it = cache.find(M);
  if (it != cache.end()) return it->second;
  const Grid g(M);
  const ModelSpec m = ModelSpec::neural_field(g);
  return cache.emplace(M, build_frame(m, heaviside_bump_guess(g, m.nf), default_flow_config(m))).first->second;
}

// Small grid with a lighter quadrature for path simulations; equivariance error ~1e-14
inline const ManifoldFrame& nf_sim_frame() {
  static const ManifoldFrame fr = [] {
    const Grid g(64);
    ModelSpec m = ModelSpec::neural_field(g);
    m.quadrature_points = 384;
    return build_frame(m, heaviside_bump_guess(g, m.nf), default_flow_config(m));
  }();
  return fr;
}

inline IsochronConfig nf_config(const ManifoldFrame& fr) {
  IsochronConfig cfg;
  cfg.flow = default_flow_config(fr.model);
  return cfg;
}

// smooth unit perturbation
inline Field smooth_direction(const Grid& g, std::uint64_t seed, int kmax = 6) {
  std::mt19937_64 rng(seed);
  return unit(random_bandlimited(g, rng, kmax, 1, 0.2));
}

}  // namespace testsupport
