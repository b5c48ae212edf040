#pragma once

#include <cstdint>
#include <functional>
#include <vector>

#include "stats.hpp"
#include "stochastic.hpp"

namespace isophase {

// Reduced phase diffusion d pi = sigma^2 V(pi) dt + sigma g(pi) dW on the circle. V and g
// carry no sigma.
struct ReducedCoeffs {
  std::vector<double> alpha;  // uniform grid on [0, 2 pi)
  std::vector<double> V;      // radians / time
  std::vector<double> g;      // radians / sqrt(time)
  std::vector<double> Pstar;  // density on alpha, 1 / radian
  double mean_drift = 0.0;    // int V dP*

  int size() const { return int(alpha.size()); }
};

// (1/2) D2 pi(gamma_alpha)[B e_j, B e_j] per noise direction j
std::vector<double> drift_terms(const ManifoldFrame& frame, const NoiseModel& nm, double alpha,
                                const IsochronConfig& cfg);
// sum of drift_terms; throws Budget when the last wavenumber still carries more than 1e-6
// of the running sum (floors: 1e-8 of the summed magnitudes, 1e-12 absolute)
double drift_field(const ManifoldFrame& frame, const NoiseModel& nm, double alpha, const IsochronConfig& cfg);
// sqrt(sum_j <psi*_alpha, B e_j>^2); throws Degenerate below 1e-10
double diffusion_coeff(const ManifoldFrame& frame, const NoiseModel& nm, double alpha);

struct TabulateOptions {
  int n_alpha = 64;
  // evaluate V once and reuse it on the grid (valid for equivariant model and noise)
  bool equivariant = false;
  int threads = 1;
};
ReducedCoeffs tabulate_coeffs(const ManifoldFrame& frame, const NoiseModel& nm, const IsochronConfig& cfg,
                              const TabulateOptions& opt);

// builds a table from values on a uniform grid and fills Pstar, mean_drift
ReducedCoeffs make_coeffs(std::vector<double> V, std::vector<double> g);

// Periodic cubic-spline interpolant of tabulated values on the uniform grid
class PeriodicSpline {
 public:
  explicit PeriodicSpline(const std::vector<double>& values);
  PeriodicSpline(const PeriodicSpline&) = delete;
  PeriodicSpline& operator=(const PeriodicSpline&) = delete;
  ~PeriodicSpline();
  double operator()(double alpha) const;

 private:
  void* spline_ = nullptr;
  void* acc_ = nullptr;
  std::vector<double> x_, y_;
};

struct StationaryDensity {
  std::vector<double> density;  // on the coefficient grid
  double mean_drift = 0.0;
  double current = 0.0;  // constant probability current in rescaled time
};
// Constant-current periodic Fokker-Planck solution of
//   0 = -(V p)' + (1/2) (g^2 p)''
StationaryDensity stationary_density(const std::vector<double>& V, const std::vector<double>& g);
// P*(f) by quadrature on a refined grid
double stationary_expectation(const ReducedCoeffs& c, const std::function<double(double)>& f);
// P* mass per bin for `bins` equal arcs of [0, 2 pi)
std::vector<double> stationary_bin_masses(const ReducedCoeffs& c, int bins);

struct ReducedPath {
  std::vector<double> t, pi, pi_unwrapped;
};

// Euler-Maruyama on the circle, keeping every `stride`-th step
ReducedPath simulate_reduced(const ReducedCoeffs& c, double sigma, double T, double dt, std::uint64_t seed,
                             double pi0 = 0.0, int stride = 1);
// end points only, for many paths (index = path number)
std::vector<double> reduced_increments(const ReducedCoeffs& c, double sigma, double T, double dt,
                                       std::uint64_t seed, int paths, double pi0 = 0.0, int threads = 1);
// histogram of wrapped phases over [burn, T] of `paths` independent runs, normalised masses
std::vector<double> reduced_histogram(const ReducedCoeffs& c, double sigma, double T, double burn, double dt,
                                      std::uint64_t seed, int paths, int bins, int threads = 1);

struct ErgodicRow {
  double sigma = 0.0;
  double t_sigma = 0.0;
  int paths = 0;
  int surviving = 0;
  int within = 0;
  double fraction = 0.0;  // within / surviving
  double mean_abs_deviation = 0.0;
};

struct ErgodicReport {
  double target = 0.0;  // P*(g_test)
  double epsilon = 0.0;
  std::vector<ErgodicRow> rows;
  bool monotone = false;  // fraction non-decreasing as sigma decreases
};

// Rejects schedules where sigma is not strictly decreasing or sigma^2 t_sigma is below 1 or
// decreases along the schedule.
void validate_schedule(const std::vector<double>& sigma, const std::vector<double>& t_sigma);

// ensembles[i] were run at sigma[i] for t_sigma[i] with the time average of g_test in
// averages[which]
ErgodicReport ergodic_compare(const std::vector<std::vector<PathRecord>>& ensembles, const std::vector<double>& sigma,
                              const std::vector<double>& t_sigma, double target, double epsilon, int which = 0);

struct DriftEstimate {
  double estimate = 0.0;
  Interval ci;
  double prediction = 0.0;
  bool covered = false;
  int paths = 0;
  double se = 0.0;
};

// mean of (pi_bar_T - pi_bar_0) / (sigma^2 T) over surviving paths with a percentile bootstrap CI
DriftEstimate drift_estimate(const std::vector<PathRecord>& records, double prediction, double level = 0.95,
                             int resamples = 4000, std::uint64_t seed = 1);

// Reduced path restarted from the SPDE phase at each window start and driven by the
// recorded increments projected onto the noise weights at the reduced phase. The weights
// are those of the noise as the stepper applies it, b_j <psi*, E_dt g e_j> with the record's
// step dt, so the O(dt) damping of each kick by E_dt is not counted as reduction error.
// Returns sup_t |pi_bar_t - pi_tilde_t| per window of length `window`.
std::vector<double> paired_window_sup(const ManifoldFrame& frame, const NoiseModel& nm, const PathRecord& r,
                                      const ReducedCoeffs& c, double window);

}  // namespace isophase
