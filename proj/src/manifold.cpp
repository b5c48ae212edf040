#include "manifold.hpp"

#include <Eigen/Eigenvalues>
#include <algorithm>
#include <cmath>
#include <numbers>

namespace isophase {

namespace {

constexpr double kTwoPi = 2.0 * std::numbers::pi;

Eigen::Map<const Eigen::VectorXd> as_vec(const Field& f) { return {f.data(), Eigen::Index(f.size())}; }

Field from_vec(const Grid& g, int n, const Eigen::VectorXd& v) {
  return Field(g, n, std::vector<double>(v.data(), v.data() + v.size()));
}

double tangent_ratio(const Field& f) {
  const double n = norm(f);
  return n > 0 ? norm(derivative(f)) / n : 0.0;
}

}  // namespace

Eigen::MatrixXd dense_jacobian(const ModelSpec& m, const Field& u, bool include_linear) {
  check_on_grid(m, u, "dense_jacobian");
  const int N = int(u.size());
  Eigen::MatrixXd J(N, N);
  detail::ModelKernel k(m);
  k.set_base(detail::forward(u));
  Field e(m.grid, m.components), col(m.grid, m.components);
  detail::Spectrum es, out;
  for (int j = 0; j < N; ++j) {
    std::fill(e.values().begin(), e.values().end(), 0.0);
    e.values()[j] = 1.0;
    detail::forward(e, es);
    k.DN(es, out);
    if (include_linear) {
      for (int c = 0; c < m.components; ++c)
        for (int q = 0; q < es.half; ++q) {
          cplx mult = m.linear.multiplier(c, q);
          if (2 * q == m.grid.M) mult = mult.real();
          out.comp(c)[q] += mult * es.comp(c)[q];
        }
    }
    detail::inverse(out, col);
    J.col(j) = as_vec(col);
  }
  return J;
}

StationaryResult solve_stationary(const ModelSpec& m0, const Field& guess, const StationaryOptions& opt) {
  check_on_grid(m0, guess, "compute_stationary");
  require(!opt.unknown_speed || m0.kind == ModelKind::kReactionDiffusion, ErrorCode::kInvalidArgument,
          "compute_stationary: unknown speed applies to reaction-diffusion models");
  if (tangent_ratio(guess) < 1e-8)
    fail(ErrorCode::kDegenerate, "compute_stationary: guess is translation invariant (zero tangent)");

  const Grid& g = m0.grid;
  const int N = int(guess.size());
  const Field dguess = derivative(guess);
  ModelSpec m = m0;
  Field u = guess;
  double mu = opt.unknown_speed ? m.speed() : 0.0;

  auto residual_of = [&](const ModelSpec& mm, const Field& uu) { return norm(eval_V(mm, uu)); };
  double res = residual_of(m, u);
  int it = 0;
  for (; it < opt.max_iterations && res > 1e-13 * std::max(1.0, norm(u)); ++it) {
    Eigen::MatrixXd B = Eigen::MatrixXd::Zero(N + 1, N + 1);
    B.topLeftCorner(N, N) = dense_jacobian(m, u);
    const Field border = opt.unknown_speed ? derivative(u) : dguess;
    B.block(0, N, N, 1) = as_vec(border);
    B.block(N, 0, 1, N) = g.dx() * as_vec(dguess).transpose();
    Eigen::VectorXd rhs(N + 1);
    Field V = eval_V(m, u);
    if (!opt.unknown_speed) V.axpy(mu, dguess);
    rhs.head(N) = -as_vec(V);
    rhs(N) = -inner(dguess, u - guess);
    const Eigen::VectorXd step = B.partialPivLu().solve(rhs);
    require(step.allFinite(), ErrorCode::kNonConvergence, "compute_stationary: singular Newton system");

    // damped update: accept the first step length that does not increase the residual
    double lambda = 1.0;
    for (int h = 0; h < 12; ++h, lambda *= 0.5) {
      Field trial = u;
      for (int i = 0; i < N; ++i) trial.values()[i] += lambda * step(i);
      const double mu_trial = mu + lambda * step(N);
      const ModelSpec mt = opt.unknown_speed ? m.with_speed(mu_trial) : m;
      Field Vt = eval_V(mt, trial);
      if (!opt.unknown_speed) Vt.axpy(mu_trial, dguess);
      const double rt = norm(Vt);
      if (rt <= res * (1.0 - 1e-4 * lambda) || h == 11 || rt < 1e-12) {
        u = trial;
        mu = mu_trial;
        m = mt;
        break;
      }
    }
    res = residual_of(m, u);
    require(std::isfinite(res) && norm(u) < 1e6, ErrorCode::kDivergence, "compute_stationary: iterate diverged");
  }
  if (!(res <= opt.tolerance))
    fail(ErrorCode::kNonConvergence,
         "compute_stationary: residual " + std::to_string(res) + " after " + std::to_string(it) + " iterations");
  if (tangent_ratio(u) < 1e-6)
    fail(ErrorCode::kDegenerate, "compute_stationary: converged to a constant state (zero tangent)");
  return {u, m, res, it};
}

Field compute_stationary(const ModelSpec& m, const Field& guess) { return solve_stationary(m, guess).gamma; }

Field gamma(const ManifoldFrame& frame, double alpha) {
  return shift(frame.gamma0, frame.gamma0.grid().phase_to_distance(alpha));
}

Field tangent(const ManifoldFrame& frame, double alpha) {
  return shift(frame.psi0, frame.psi0.grid().phase_to_distance(alpha));
}

Field psi_star(const ManifoldFrame& frame, double alpha) {
  return shift(frame.psi_star0, frame.psi_star0.grid().phase_to_distance(alpha));
}

Field apply_L0(const ManifoldFrame& frame, const Field& y) {
  Field out = apply_linear(frame.model.linear, y);
  out += eval_DN(frame.model, frame.gamma0, y);
  return out;
}

namespace {

Field solve_adjoint_null(const Eigen::MatrixXd& L0, const Field& psi) {
  const int N = int(L0.rows());
  const double dx = psi.grid().dx();
  // [L0^T  psi; dx psi^T  0] [psi*; s] = [0; 1]
  Eigen::MatrixXd B = Eigen::MatrixXd::Zero(N + 1, N + 1);
  B.topLeftCorner(N, N) = L0.transpose();
  B.block(0, N, N, 1) = as_vec(psi);
  B.block(N, 0, 1, N) = dx * as_vec(psi).transpose();
  Eigen::VectorXd rhs = Eigen::VectorXd::Zero(N + 1);
  rhs(N) = 1.0;
  Eigen::VectorXd sol = B.partialPivLu().solve(rhs);
  // one step of iterative refinement
  sol += B.partialPivLu().solve(rhs - B * sol);
  require(sol.allFinite(), ErrorCode::kDegenerate, "adjoint_null: bordered system singular");
  Field ps = from_vec(psi.grid(), psi.components(), sol.head(N));
  ps *= 1.0 / inner(ps, psi);
  return ps;
}

std::vector<std::complex<double>> sorted_spectrum(const Eigen::MatrixXd& L0) {
  Eigen::EigenSolver<Eigen::MatrixXd> es(L0, false);
  require(es.info() == Eigen::Success, ErrorCode::kNonConvergence, "spectrum: eigen solver failed");
  std::vector<std::complex<double>> ev(es.eigenvalues().data(), es.eigenvalues().data() + L0.rows());
  std::sort(ev.begin(), ev.end(), [](auto a, auto b) { return std::abs(a) < std::abs(b); });
  return ev;
}

}  // namespace

Field adjoint_null(const ManifoldFrame& frame) {
  const Eigen::MatrixXd L0 = dense_jacobian(frame.model, frame.gamma0);
  return solve_adjoint_null(L0, frame.psi0);
}

std::vector<std::complex<double>> linearization_spectrum(const ManifoldFrame& frame) {
  return sorted_spectrum(dense_jacobian(frame.model, frame.gamma0));
}

ManifoldFrame build_frame(const ModelSpec& m, const Field& guess, const FlowConfig& cfg, const FrameOptions& opt) {
  const StationaryResult st = solve_stationary(m, guess, opt.stationary);
  ManifoldFrame fr;
  fr.model = st.model;
  fr.gamma0 = st.gamma;
  fr.newton_residual = st.residual;
  const Grid& g = m.grid;
  fr.psi0 = derivative(fr.gamma0);
  fr.psi0 *= -g.L / kTwoPi;

  const Eigen::MatrixXd L0 = dense_jacobian(fr.model, fr.gamma0);
  const auto ev = sorted_spectrum(L0);
  fr.spectral_gap = ev.size() > 1 ? std::abs(ev[1]) : 0.0;
  if (!(fr.spectral_gap >= opt.min_gap) || !(std::abs(ev[0]) * 10.0 < fr.spectral_gap))
    fail(ErrorCode::kDegenerate, "build_frame: null space of L0 is not one-dimensional (gap " +
                                     std::to_string(fr.spectral_gap) + ")");
  fr.psi_star0 = solve_adjoint_null(L0, fr.psi0);

  const Eigen::VectorXd ps = as_vec(fr.psi_star0);
  fr.adjoint_residual = g.dx() > 0 ? std::sqrt(g.dx()) * (L0.transpose() * ps).norm() : 0.0;
  fr.goldstone_residual = std::sqrt(g.dx()) * (L0 * as_vec(fr.psi0)).norm();
  const Eigen::MatrixXd DN = dense_jacobian(fr.model, fr.gamma0, false);
  fr.dn_adjoint_psi_star = from_vec(g, m.components, DN.transpose() * ps);

  const DecayFit d = measure_decay_rate(fr.model, fr, cfg, opt.decay_seed, opt.decay_horizon);
  fr.b_hat = d.rate;
  fr.b_hat_r2 = d.r2;
  return fr;
}

Field heaviside_bump_guess(const Grid& g, const NeuralFieldParams& p) {
  const double A1 = p.kernel.size() > 0 ? p.kernel[0] : 0.0;
  const double A2 = p.kernel.size() > 1 ? p.kernel[1] : 0.0;
  require(A1 > 0, ErrorCode::kInvalidArgument, "bump guess: needs A1 > 0");
  // u(x) = 2 A1 sin(a) cos x + A2 sin(2a) cos 2x with threshold crossing u(a) = h
  auto crossing = [&](double a) {
    return 2 * A1 * std::sin(a) * std::cos(a) + A2 * std::sin(2 * a) * std::cos(2 * a) - p.threshold;
  };
  double lo = std::numbers::pi / 4, hi = std::numbers::pi / 2 - 1e-12;
  require(crossing(lo) > 0 && crossing(hi) < 0, ErrorCode::kInvalidArgument,
          "bump guess: threshold outside the wide-bump branch");
  for (int i = 0; i < 200; ++i) {
    const double mid = 0.5 * (lo + hi);
    (crossing(mid) > 0 ? lo : hi) = mid;
  }
  const double a = 0.5 * (lo + hi);
  const double s = kTwoPi / g.L;
  return Field::from_function(g, [&](double x) {
    return 2 * A1 * std::sin(a) * std::cos(s * x) + A2 * std::sin(2 * a) * std::cos(2 * s * x);
  });
}

Field nagumo_front_pair_guess(const Grid& g, double diffusion) {
  const double w = 2.0 * std::sqrt(2.0 * diffusion);
  const double x1 = 0.25 * g.L, x2 = 0.75 * g.L;
  return Field::from_function(
      g, [&](double x) { return 0.5 * (std::tanh((x - x1) / w) - std::tanh((x - x2) / w)); });
}

}  // namespace isophase
