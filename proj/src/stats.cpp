#include "stats.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>

#include "error.hpp"

namespace isophase {

LinearFit linear_fit(std::span<const double> x, std::span<const double> y) {
  require(x.size() == y.size() && x.size() >= 2, ErrorCode::kInsufficientData, "linear_fit: need >= 2 points");
  const double n = double(x.size());
  const double mx = std::accumulate(x.begin(), x.end(), 0.0) / n;
  const double my = std::accumulate(y.begin(), y.end(), 0.0) / n;
  double sxx = 0, sxy = 0, syy = 0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    sxx += (x[i] - mx) * (x[i] - mx);
    sxy += (x[i] - mx) * (y[i] - my);
    syy += (y[i] - my) * (y[i] - my);
  }
  require(sxx > 0, ErrorCode::kInsufficientData, "linear_fit: degenerate abscissae");
  LinearFit f;
  f.slope = sxy / sxx;
  f.intercept = my - f.slope * mx;
  f.r2 = syy > 0 ? sxy * sxy / (sxx * syy) : 1.0;
  return f;
}

LinearFit loglog_fit(std::span<const double> x, std::span<const double> y) {
  std::vector<double> lx, ly;
  for (std::size_t i = 0; i < x.size(); ++i) {
    lx.push_back(std::log(x[i]));
    ly.push_back(std::log(std::abs(y[i])));
  }
  return linear_fit(lx, ly);
}

double mean(std::span<const double> v) {
  require(!v.empty(), ErrorCode::kInsufficientData, "mean: empty sample");
  return std::accumulate(v.begin(), v.end(), 0.0) / double(v.size());
}

double variance(std::span<const double> v) {
  require(v.size() >= 2, ErrorCode::kInsufficientData, "variance: need >= 2 samples");
  const double m = mean(v);
  double s = 0;
  for (double x : v) s += (x - m) * (x - m);
  return s / double(v.size() - 1);
}

double quantile(std::vector<double> v, double q) {
  require(!v.empty(), ErrorCode::kInsufficientData, "quantile: empty sample");
  std::sort(v.begin(), v.end());
  const double pos = q * double(v.size() - 1);
  const std::size_t i = std::size_t(std::floor(pos));
  if (i + 1 >= v.size()) return v.back();
  const double w = pos - double(i);
  return v[i] * (1 - w) + v[i + 1] * w;
}

double median(std::vector<double> v) { return quantile(std::move(v), 0.5); }

double kolmogorov_q(double lambda) {
  if (lambda < 0.2) return 1.0;
  double sum = 0.0, sign = 1.0;
  for (int j = 1; j <= 200; ++j) {
    const double term = std::exp(-2.0 * j * j * lambda * lambda);
    sum += sign * term;
    sign = -sign;
    if (term < 1e-16) break;
  }
  return std::clamp(2.0 * sum, 0.0, 1.0);
}

namespace {
double ks_p(double d, double ne) {
  const double s = std::sqrt(ne);
  return kolmogorov_q((s + 0.12 + 0.11 / s) * d);
}
}  // namespace

KsResult ks_two_sample(std::vector<double> a, std::vector<double> b) {
  require(!a.empty() && !b.empty(), ErrorCode::kInsufficientData, "ks: empty sample");
  std::sort(a.begin(), a.end());
  std::sort(b.begin(), b.end());
  std::size_t i = 0, j = 0;
  double d = 0.0;
  const double na = double(a.size()), nb = double(b.size());
  while (i < a.size() && j < b.size()) {
    const double x = std::min(a[i], b[j]);
    while (i < a.size() && a[i] <= x) ++i;
    while (j < b.size() && b[j] <= x) ++j;
    d = std::max(d, std::abs(double(i) / na - double(j) / nb));
  }
  return {d, ks_p(d, na * nb / (na + nb))};
}

KsResult ks_one_sample(std::vector<double> a, const std::function<double(double)>& cdf) {
  require(!a.empty(), ErrorCode::kInsufficientData, "ks: empty sample");
  std::sort(a.begin(), a.end());
  const double n = double(a.size());
  double d = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    const double F = cdf(a[i]);
    d = std::max({d, double(i + 1) / n - F, F - double(i) / n});
  }
  return {d, ks_p(d, n)};
}

Interval bootstrap_mean_ci(std::span<const double> v, double level, int resamples, std::uint64_t seed) {
  require(v.size() >= 2, ErrorCode::kInsufficientData, "bootstrap: need >= 2 samples");
  require(level > 0 && level < 1 && resamples >= 100, ErrorCode::kInvalidArgument, "bootstrap: bad parameters");
  std::mt19937_64 rng(seed);
  std::uniform_int_distribution<std::size_t> pick(0, v.size() - 1);
  std::vector<double> means(resamples);
  for (int r = 0; r < resamples; ++r) {
    double s = 0;
    for (std::size_t i = 0; i < v.size(); ++i) s += v[pick(rng)];
    means[r] = s / double(v.size());
  }
  const double tail = 0.5 * (1 - level);
  return {quantile(means, tail), quantile(means, 1 - tail)};
}

double tv_distance(std::span<const double> p, std::span<const double> q) {
  require(p.size() == q.size(), ErrorCode::kInvalidArgument, "tv_distance: size mismatch");
  double s = 0;
  for (std::size_t i = 0; i < p.size(); ++i) s += std::abs(p[i] - q[i]);
  return 0.5 * s;
}

}  // namespace isophase
