#pragma once

#include <cstdint>
#include <vector>

#include "frame.hpp"
#include "model.hpp"

namespace isophase {

enum class Scheme { kExponentialEuler, kEtdRk2 };

struct FlowConfig {
  double dt = 1e-2;
  Scheme scheme = Scheme::kExponentialEuler;
  double T_max = 500.0;
  double convergence_tol = 1e-8;
  double divergence_bound = 1e6;
};

FlowConfig default_flow_config(const ModelSpec& m);
void validate(const FlowConfig& cfg);

Field evolve(const ModelSpec& m, const Field& x0, double t, const FlowConfig& cfg);
Field evolve_linearized(const ModelSpec& m, const Field& x0, const Field& y0, double t, const FlowConfig& cfg);
Field evolve_second_variation(const ModelSpec& m, const Field& x0, const Field& y0, const Field& z0, double t,
                              const FlowConfig& cfg);

// Trajectory dump: rows t, x_0 .. x_{nM-1} every `stride` steps, including t = 0.
std::vector<std::vector<double>> evolve_dump(const ModelSpec& m, const Field& x0, double t, const FlowConfig& cfg,
                                             int stride);

struct DecayFit {
  double rate = 0.0;
  double r2 = 0.0;
  double horizon = 0.0;
};

// Decay of a random perturbation, projected off the tangent, under the flow linearized at
// gamma0; least-squares slope of log||y(t)|| over [T/2, T].
DecayFit measure_decay_rate(const ModelSpec& m, const ManifoldFrame& frame, const FlowConfig& cfg,
                            std::uint64_t seed = 1, double horizon = 20.0);
DecayFit measure_decay_rate(const ModelSpec& m, const ManifoldFrame& frame, const Field& y0,
                            const FlowConfig& cfg, double horizon = 20.0);

namespace detail {

// phi_1(z) = (e^z - 1)/z and phi_2(z) = (e^z - 1 - z)/z^2 with series near 0
cplx phi1(cplx z);
cplx phi2(cplx z);

// Per-step nonlinear contributions at the left endpoint x_n, as used by the exponential
// Euler update: N(x_n), DN(x_n) y_n, DN(x_n) z_n and DN(x_n) a_n + D2N(x_n)[y_n, z_n].
struct Taps {
  Spectrum N, DNy, DNz, Q;
};

// Exponential integrator acting on half spectra. An Integrator owns its model evaluators,
// so use one per thread.
class Integrator {
 public:
  Integrator(const ModelSpec& m, double dt, Scheme scheme = Scheme::kExponentialEuler);

  const ModelSpec& model() const { return *m_; }
  double dt() const { return dt_; }
  Scheme scheme() const { return scheme_; }
  // E = exp(dt A), Phi = dt phi1(dt A), Phi2 = dt phi2(dt A), per component then mode
  const std::vector<cplx>& E() const { return E_; }
  const std::vector<cplx>& Phi() const { return Phi_; }
  ModelKernel& kernel() { return k0_; }

  // Advances x by one step; y and z (first variations) and a (second variation along y, z)
  // are advanced consistently with the discrete map when non-null. taps requires the
  // exponential Euler scheme.
  void step(Spectrum& x, Spectrum* y = nullptr, Spectrum* z = nullptr, Spectrum* a = nullptr,
            Taps* taps = nullptr);

  // x <- E x + Phi n (elementwise on half spectra)
  void combine(Spectrum& x, const Spectrum& n) const;
  void apply_E(Spectrum& x) const;

 private:
  void step_ee(Spectrum& x, Spectrum* y, Spectrum* z, Spectrum* a, Taps* taps);
  void step_rk2(Spectrum& x, Spectrum* y, Spectrum* z, Spectrum* a);

  const ModelSpec* m_;
  double dt_;
  Scheme scheme_;
  std::vector<cplx> E_, Phi_, Phi2_;
  ModelKernel k0_, k1_;
  Spectrum n0_, n1_, ny_, nz_, na_, tmp_, ya_, za_, aa_, xa_;
  std::vector<double> yp_, zp_, yap_, zap_;
};

// guard against blow-up: throws Divergence if ||x|| > bound or non-finite
void check_divergence(const Spectrum& x, const Grid& g, double bound);

int steps_for(double t, double dt);

}  // namespace detail

}  // namespace isophase
