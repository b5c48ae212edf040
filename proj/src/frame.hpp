#pragma once

#include "model.hpp"

namespace isophase {

// Precomputed data for the orbit {gamma_alpha}: profile, tangent and adjoint null vector at
// alpha = 0. Every other alpha is obtained by spectral translation.
struct ManifoldFrame {
  ModelSpec model;
  Field gamma0;
  Field psi0;
  Field psi_star0;
  // DN(gamma0)^T psi_star0, the representer of y -> <psi*, DN(gamma0) y>
  Field dn_adjoint_psi_star;
  double b_hat = 0.0;
  double b_hat_r2 = 0.0;
  double newton_residual = 0.0;
  double goldstone_residual = 0.0;  // ||L0 psi||
  double adjoint_residual = 0.0;    // ||L0^T psi*||
  double spectral_gap = 0.0;        // second-smallest |eigenvalue| of L0
};

}  // namespace isophase
