#pragma once

#include <cstdint>
#include <functional>
#include <span>
#include <vector>

namespace isophase {

struct LinearFit {
  double slope = 0.0;
  double intercept = 0.0;
  double r2 = 0.0;
};

LinearFit linear_fit(std::span<const double> x, std::span<const double> y);
// slope of log|y| against log x
LinearFit loglog_fit(std::span<const double> x, std::span<const double> y);

double mean(std::span<const double> v);
double variance(std::span<const double> v);  // unbiased
double quantile(std::vector<double> v, double q);
double median(std::vector<double> v);

// Kolmogorov limiting survival function Q(lambda) = 2 sum (-1)^{j-1} exp(-2 j^2 lambda^2)
double kolmogorov_q(double lambda);
struct KsResult {
  double statistic = 0.0;
  double p_value = 1.0;
};
KsResult ks_two_sample(std::vector<double> a, std::vector<double> b);
KsResult ks_one_sample(std::vector<double> a, const std::function<double(double)>& cdf);

struct Interval {
  double lo = 0.0;
  double hi = 0.0;
  bool contains(double v) const { return lo <= v && v <= hi; }
};
// percentile bootstrap interval for the mean
Interval bootstrap_mean_ci(std::span<const double> v, double level, int resamples, std::uint64_t seed);

// total-variation distance between two discrete distributions given as masses
double tv_distance(std::span<const double> p, std::span<const double> q);

}  // namespace isophase
