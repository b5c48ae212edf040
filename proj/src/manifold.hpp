#pragma once

#include <Eigen/Dense>

#include "flow.hpp"
#include "frame.hpp"

namespace isophase {

struct StationaryOptions {
  int max_iterations = 40;
  double tolerance = 1e-9;
  // solve for the co-moving speed as the bordering unknown (reaction-diffusion only)
  bool unknown_speed = false;
};

struct StationaryResult {
  Field gamma;
  ModelSpec model;  // carries the solved speed when unknown_speed is set
  double residual = 0.0;
  int iterations = 0;
};

StationaryResult solve_stationary(const ModelSpec& m, const Field& guess, const StationaryOptions& opt = {});
Field compute_stationary(const ModelSpec& m, const Field& guess);

struct FrameOptions {
  StationaryOptions stationary;
  double decay_horizon = 20.0;
  std::uint64_t decay_seed = 1;
  double min_gap = 1e-3;
};

ManifoldFrame build_frame(const ModelSpec& m, const Field& guess, const FlowConfig& cfg, const FrameOptions& opt = {});

Field gamma(const ManifoldFrame& frame, double alpha);
Field tangent(const ManifoldFrame& frame, double alpha);
Field psi_star(const ManifoldFrame& frame, double alpha);
// adjoint null vector of L0 recomputed from gamma0 and psi0, normalized against psi0
Field adjoint_null(const ManifoldFrame& frame);
// L0 y = A y + DN(gamma0) y
Field apply_L0(const ManifoldFrame& frame, const Field& y);

// Dense matrix of y -> A y + DN(u) y in the grid-value basis
Eigen::MatrixXd dense_jacobian(const ModelSpec& m, const Field& u, bool include_linear = true);
// eigenvalues of L0 sorted by magnitude
std::vector<std::complex<double>> linearization_spectrum(const ManifoldFrame& frame);

// Closed-form bump of the beta -> infinity ring model with w = A1 cos x + A2 cos 2x
Field heaviside_bump_guess(const Grid& g, const NeuralFieldParams& p);
// Nagumo front (x ~ L/4) and back (x ~ 3L/4) built from the exact tanh front
Field nagumo_front_pair_guess(const Grid& g, double diffusion = 1.0);

}  // namespace isophase
