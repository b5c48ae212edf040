#pragma once

#include <vector>

#include "spectral.hpp"

namespace isophase {

enum class ModelKind { kNeuralFieldRing, kReactionDiffusion };

struct NeuralFieldParams {
  // w(x) = sum_m A_m cos(m 2 pi x / L), m = 1, 2, ...
  std::vector<double> kernel{1.0, 0.0};
  double beta = 20.0;
  double threshold = 0.3;
  // optional slaved second component y' = -y/epsilon + x
  bool adaptation = false;
  double adaptation_epsilon = 1.0;
};

struct ReactionDiffusionParams {
  // p(u) = sum_i poly[i] u^i acting on component 0; default Nagumo with a = 0.25
  std::vector<double> poly{0.0, -0.25, 1.25, -1.0};
  double diffusion = 1.0;
  double speed = 0.0;
  // FitzHugh-Nagumo recovery v_t = Dv v_xx + eps (u - gamma v), coupled as -v into the u equation
  bool recovery = false;
  double recovery_diffusion = 0.0;
  double eps = 0.01;
  double gamma = 0.0;
};

// Nagumo cubic u (1 - u)(u - a)
std::vector<double> nagumo_poly(double a);

struct ModelSpec {
  ModelKind kind = ModelKind::kNeuralFieldRing;
  Grid grid;
  int components = 1;
  LinearOp linear;
  NeuralFieldParams nf;
  ReactionDiffusionParams rd;
  // convolution multiplier per mode k = 0..M/2 (neural field only); real and even
  std::vector<double> kernel_symbol;
  // points of the padded grid on which the pointwise nonlinearity is evaluated
  int quadrature_points = 0;
  // linear cross-component part of N: (N u)_c += sum_d coupling[c][d] u_d
  std::vector<std::vector<double>> coupling;

  static ModelSpec neural_field(const Grid& g, const NeuralFieldParams& p = {});
  static ModelSpec reaction_diffusion(const Grid& g, const ReactionDiffusionParams& p = {});
  ModelSpec with_speed(double c) const;
  double speed() const { return linear.speed; }

  // pointwise nonlinearity of component 0 and its first three derivatives
  void pointwise(double u, double out[4]) const;
};

void check_on_grid(const ModelSpec& m, const Field& u, const char* where);

Field eval_N(const ModelSpec& m, const Field& u);
Field eval_DN(const ModelSpec& m, const Field& u, const Field& y);
Field eval_D2N(const ModelSpec& m, const Field& u, const Field& y, const Field& z);
Field eval_V(const ModelSpec& m, const Field& u);

// Kernel symbol dump rows k, symbol
std::vector<std::pair<int, double>> kernel_symbol_table(const ModelSpec& m);

namespace detail {

// Stateful evaluator used in time-stepping loops. The base point is set once per step and
// its padded values and pointwise derivative tables are reused by N, DN and D2N. Only
// component 0 enters the nonlinearity in both model families. Not thread-safe: use one
// evaluator per thread.
class ModelKernel {
 public:
  explicit ModelKernel(const ModelSpec& m);

  const ModelSpec& model() const { return *m_; }
  int padded_size() const { return P_; }

  void set_base(const Spectrum& u);
  // padded physical values of component 0 of y
  void pad(const Spectrum& y, std::vector<double>& out);
  void N(Spectrum& out);
  void DN(const Spectrum& y, Spectrum& out);
  void DN_padded(const Spectrum& y, const std::vector<double>& ypad, Spectrum& out);
  void D2N_padded(const std::vector<double>& ypad, const std::vector<double>& zpad, Spectrum& out);
  // padded values of the base point, valid after set_base
  const std::vector<double>& base_padded() const { return upad_; }

 private:
  void project(const std::vector<double>& g_pad, Spectrum& out);
  void add_coupling(const Spectrum& y, Spectrum& out) const;

  const ModelSpec* m_;
  int M_, P_;
  Spectrum base_;
  std::vector<double> upad_, f0_, f1_, f2_, work_;
  std::vector<cplx> cwork_;
};

}  // namespace detail

}  // namespace isophase
