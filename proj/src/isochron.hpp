#pragma once

#include <optional>

#include "flow.hpp"
#include "frame.hpp"

namespace isophase {

double wrap_phase(double a);   // into [0, 2 pi)
double wrap_signed(double a);  // into (-pi, pi]
double circle_distance(double a, double b);

struct IsochronConfig {
  FlowConfig flow;
  // time-integral horizon; <= 0 selects max(20 / b_hat, 50)
  double T_inf = 0.0;
  double tail_tolerance = 1e-10;
  long max_steps = 20'000'000;
  double newton_tol = 1e-13;
  int max_newton = 40;
  // stride (in steps) between convergence checks in isochron_flow
  int check_every = 10;
};

struct Truncation {
  double T = 0.0;
  int steps = 0;
  double tail_bound = 0.0;  // exp(-2 b_hat T)
};
Truncation truncation(const ManifoldFrame& frame, const IsochronConfig& cfg);

struct TubeState {
  Field x;
  double phase = 0.0;
  double dist = 0.0;    // H norm of x - gamma_phase
  double dist_E = 0.0;  // H1 norm
  bool inside = false;
};

double variational_phase(const ManifoldFrame& frame, const Field& x);
// Newton from `hint`, falling back to the cross-correlation initializer
double variational_phase(const ManifoldFrame& frame, const Field& x, double hint);
TubeState tube_state(const ManifoldFrame& frame, const Field& x, double delta);

double isochron_flow(const ManifoldFrame& frame, const Field& x, const IsochronConfig& cfg);
double isochron_newton(const ManifoldFrame& frame, const Field& x, const IsochronConfig& cfg);
double dpi(const ManifoldFrame& frame, const Field& x, const Field& y, const IsochronConfig& cfg);
double d2pi(const ManifoldFrame& frame, const Field& x, const Field& y, const Field& z, const IsochronConfig& cfg);

struct PhaseGap {
  double gap = 0.0;
  double dist = 0.0;
};
PhaseGap phase_gap(const ManifoldFrame& frame, const Field& x, const IsochronConfig& cfg);

// All first and second order isochron data at x from a single forward pass.
struct PhaseDerivatives {
  double pi = 0.0;
  double M = 0.0;    // d Xi / d alpha at the root
  double dpi_y = 0.0;
  double dpi_z = 0.0;
  double d2pi_yz = 0.0;
};

namespace detail {

// Reusable evaluator of the discrete isochron functional. Holds spectra of the frame
// vectors and one integrator; use one instance per thread.
class XiEvaluator {
 public:
  XiEvaluator(const ManifoldFrame& frame, const IsochronConfig& cfg);

  const ManifoldFrame& frame() const { return *frame_; }
  const Truncation& horizon() const { return trunc_; }

  // sums accumulated along the discrete trajectory from x
  struct Pass {
    Spectrum x0, y0, z0;
    Spectrum SN, Sx;        // dt sum (N(x_n) - N(g_ref)), dt sum (x_n - g_ref)
    Spectrum SDNy, Sy;      // dt sum DN(x_n) y_n, dt sum y_n
    Spectrum SDNz, Sz;
    Spectrum SQ, Sa;        // dt sum (DN(x_n) a_n + D2N(x_n)[y_n, z_n]), dt sum a_n
    Spectrum gref, nref;    // gamma and N(gamma) at the reference phase
    double ref = 0.0;
    double T = 0.0;
    bool has_y = false, has_z = false, has_a = false;
  };

  Pass run(const Spectrum& x, const Spectrum* y, const Spectrum* z, bool second, double ref);
  // Xi and its first two alpha-derivatives
  void xi(const Pass& p, double alpha, double out[3]) const;
  // DXi[dir] and d/dalpha DXi[dir], dir = 0 for y, 1 for z
  void dxi(const Pass& p, int dir, double alpha, double out[2]) const;
  double d2xi(const Pass& p, double alpha) const;
  // Newton on Xi starting at init
  double solve(const Pass& p, double init) const;

  PhaseDerivatives derivatives(const Spectrum& x, const Spectrum* y, const Spectrum* z, bool second,
                               std::optional<double> hint = std::nullopt);

  // variational phase directly on a spectrum
  double phase_of(const Spectrum& x, std::optional<double> hint) const;

 private:
  const ManifoldFrame* frame_;
  IsochronConfig cfg_;
  Truncation trunc_;
  Integrator integ_;
  Spectrum g0_, ps0_, w0_, r0_, ng0_;
  double cW_ = 0, cN_ = 0, cr_ = 0;
  double dscale_;  // d(distance)/d(alpha)
};

double variational_phase_spectral(const ManifoldFrame& frame, const Spectrum& x, std::optional<double> hint);

// Variational phase and tube distance on half spectra with the frame vectors transformed
// once. Read-only after construction.
class PhaseTracker {
 public:
  explicit PhaseTracker(const ManifoldFrame& frame);
  double phase(const Spectrum& x, std::optional<double> hint) const;
  // norm of x - gamma_alpha
  double distance(const Spectrum& x, double alpha, TubeNorm which) const;

 private:
  const ManifoldFrame* frame_;
  Spectrum g0_, ps0_;
  double c0_;
};

}  // namespace detail

}  // namespace isophase
