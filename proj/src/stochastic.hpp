#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <random>
#include <string>
#include <vector>

#include "flow.hpp"
#include "frame.hpp"
#include "isochron.hpp"

namespace isophase {

enum class NoiseSpectrum { kWhite, kSmoothed };

// Truncated cylindrical noise on component 0:
//   sigma g(u) sum_{j < 2K+1} b_{k(j)} e_j dbeta^j
// with the real orthonormal basis e_0 = 1/sqrt(L), e_{2k-1} = sqrt(2/L) cos(kappa_k x),
// e_{2k} = sqrt(2/L) sin(kappa_k x), k = 1..K.
struct NoiseModel {
  int K = 8;
  NoiseSpectrum spectrum = NoiseSpectrum::kWhite;
  double kappa = 0.0;  // b_k = exp(-kappa k^2) for smoothed noise
  // polynomial coefficients of the pointwise gain g(u); {1} is additive noise
  std::vector<double> gain{1.0};
  double sigma = 0.0;

  int modes() const { return 2 * K + 1; }
  double amplitude(int k) const;
  // amplitude of basis element j
  double amplitude_of(int j) const { return amplitude((j + 1) / 2); }
  bool additive() const;
  double gain_at(double u) const;
  void validate(const Grid& g) const;
};

// basis element j as a grid field
Field noise_basis(const Grid& g, int j);
// coordinates <f, e_j> of component 0, j < 2K+1
std::vector<double> noise_coordinates(const Field& f, int K);

// b_j g(u) e_j projected onto the grid modes below Nyquist (the field the stepper applies)
Field noise_direction(const NoiseModel& nm, const Field& u, int j);

// sum_j b_j sqrt(dt) xi_j e_j with independent standard normals xi_j
Field sample_noise_increment(const NoiseModel& nm, const Grid& g, double dt, std::mt19937_64& rng);

// Per-path generator keyed by (master seed, path index); draws standard normals with a
// portable algorithm so streams are identical across standard libraries.
class PathRng {
 public:
  PathRng(std::uint64_t master_seed, std::uint64_t index);
  double normal();
  std::mt19937_64& engine() { return eng_; }

 private:
  std::mt19937_64 eng_;
};

namespace detail {

// Exponential Euler-Maruyama on half spectra:
//   x <- E x + Phi N(x) + sigma E g(x) dW, with dW = sum_j b_j dbeta_j e_j.
class SpdeStepper {
 public:
  SpdeStepper(const ModelSpec& m, const NoiseModel& nm, double dt);
  double dt() const { return integ_.dt(); }
  // dbeta holds 2K+1 Brownian increments over this step
  void step(Spectrum& x, const double* dbeta);
  // half spectrum of sum_j b_j dbeta_j e_j
  void increment_spectrum(const double* dbeta, Spectrum& out) const;

 private:
  const ModelSpec* m_;
  NoiseModel nm_;
  Integrator integ_;
  Spectrum noise_, prod_;
  std::vector<double> wpad_;
  std::vector<cplx> cw_;
};

}  // namespace detail

// single step with increments drawn from rng (no divergence guard)
Field step_spde(const ModelSpec& m, const NoiseModel& nm, const Field& x, double dt, std::mt19937_64& rng);

struct PathOptions {
  double dt = 0.05;
  double T = 10.0;
  double delta = 0.5;
  TubeNorm norm = TubeNorm::kH1;
  int stride = 10;  // steps between phase samples
  // increments are sums of `refine` sub-increments, so a run at (dt, refine = 2) and one at
  // (dt / 2, refine = 1, stride doubled) share the same Brownian path
  int refine = 1;
  bool stop_at_exit = true;
  bool keep_series = true;
  bool record_replay = false;
  // expensive isochron_flow audit every `audit_every` samples (0 disables)
  int audit_every = 100;
  IsochronConfig audit;
  // time integrals of functions of the wrapped phase, accumulated up to exit or T
  std::vector<std::function<double(double)>> averages;
  double divergence_bound = 1e6;
};

struct AuditEntry {
  double t = 0.0;
  double dist = 0.0;
  double variational = 0.0;
  double flow = 0.0;
  double discrepancy = 0.0;
};

struct PathRecord {
  std::uint64_t seed = 0;
  std::uint64_t index = 0;
  double sigma = 0.0;
  double delta = 0.0;
  double T = 0.0;
  std::vector<double> t, pi, pi_unwrapped, dist;
  std::optional<double> tau;  // empty when censored at T
  bool phase_lost = false;    // exit recorded because the phase became undefined
  bool thinned = false;       // only first, exit and last samples kept
  bool refined = false;       // rerun with a halved stride after an ambiguous unwrap
  int stride = 0;
  double dt = 0.0;  // SPDE step
  double max_jump = 0.0;
  double pi0 = 0.0, pi_end = 0.0;  // unwrapped phase at start and at exit/T
  double t_end = 0.0;
  std::vector<double> averages;  // (1/t_end) int f(pi_s) ds
  std::vector<AuditEntry> audits;
  // mode-major Brownian increments aggregated per sample interval: replay[j * n + i]
  // covers (t_i, t_{i+1}]
  std::vector<double> replay;
  int replay_modes = 0;

  bool exited() const { return tau.has_value(); }
  int samples() const { return int(t.size()); }
};

PathRecord simulate_path(const ManifoldFrame& frame, const NoiseModel& nm, const Field& x0, const PathOptions& opt,
                         std::uint64_t master_seed, std::uint64_t index);

// exit time for a tube radius d <= record.delta from the stored distance series
std::optional<double> exit_time(const PathRecord& r, double d);

// Runs paths 0..n-1 on `threads` workers; results are ordered by path index and do not
// depend on scheduling.
std::vector<PathRecord> run_ensemble(const ManifoldFrame& frame, const NoiseModel& nm, const Field& x0,
                                     const PathOptions& opt, std::uint64_t master_seed, int n, int threads);

// b_j <psi*_alpha, g(gamma_alpha) e_j>, the isochron derivative at gamma_alpha along each noise direction
std::vector<double> projected_noise_weights(const ManifoldFrame& frame, const NoiseModel& nm, double alpha);

struct ItoResidual {
  std::vector<double> t, residual;
  double sup = 0.0;
};

// pi_bar_t - (pi_bar_0 + int sigma^2 V(pi_s) ds + sum_j int sigma w_j(pi_s) dbeta^j) on the
// sample grid, with left-point (Ito) sums and V, w evaluated at gamma_{pi_s}
ItoResidual ito_residual(const ManifoldFrame& frame, const NoiseModel& nm, const PathRecord& r,
                         const std::function<double(double)>& V);

struct AuditSummary {
  int n = 0;
  double C = 0.0;  // median discrepancy / dist^2
  int flagged = 0;  // entries above 5 C dist^2
  double worst = 0.0;
};
AuditSummary audit_summary(const std::vector<PathRecord>& records);

struct ExitRow {
  double sigma = 0.0;
  double t = 0.0;
  int n = 0;
  int exits = 0;
  double p = 0.0;
  double se = 0.0;
  bool one_sided = false;  // no exits: p is the upper bound 3/n
};

struct ExitFit {
  double t_ref = 0.0;
  double slope = 0.0;  // d log P / d sigma^-2
  double intercept = 0.0;
  double r2 = 0.0;
  double c_delta2 = 0.0;  // -slope
  int points = 0;
};

struct ExitStats {
  double delta = 0.0;
  std::vector<ExitRow> rows;
  ExitFit fit;
};

// empirical P(tau_delta <= t) per (sigma, t) and the log-linear fit in sigma^-2 at t_ref
ExitStats exit_time_stats(const std::vector<std::vector<PathRecord>>& ensembles, const std::vector<double>& t_grid,
                          double delta, double t_ref);

std::string path_csv(const PathRecord& r);
void write_replay(const PathRecord& r, const std::string& path);
// fills replay and replay_modes of r from a binary log written by write_replay
void read_replay(PathRecord& r, const std::string& path);

}  // namespace isophase
