#include <boost/random/normal_distribution.hpp>
#include <cmath>

#include "fft.hpp"
#include "manifold.hpp"
#include "stochastic.hpp"

namespace isophase {

namespace {

// band-limited interpolation onto Q >= M points
Field upsample(const Field& f, int Q) {
  const Grid& g = f.grid();
  const Grid G(Q, g.L);
  const auto S = detail::forward(f);
  detail::Spectrum T(f.components(), G.half());
  const double s = double(Q) / g.M;
  for (int c = 0; c < f.components(); ++c) {
    for (int k = 0; k < g.M / 2; ++k) T.comp(c)[k] = s * S.comp(c)[k];
    T.comp(c)[g.M / 2] = 0.5 * s * S.comp(c)[g.M / 2].real();
  }
  return detail::inverse(T, G);
}

}  // namespace

double NoiseModel::amplitude(int k) const {
  if (k < 0 || k > K) return 0.0;
  return spectrum == NoiseSpectrum::kWhite ? 1.0 : std::exp(-kappa * double(k) * k);
}

bool NoiseModel::additive() const { return gain.size() == 1 && gain[0] == 1.0; }

double NoiseModel::gain_at(double u) const {
  double v = 0.0;
  for (std::size_t i = gain.size(); i-- > 0;) v = v * u + gain[i];
  return v;
}

void NoiseModel::validate(const Grid& g) const {
  require(K >= 0 && 3 * K <= g.M, ErrorCode::kInvalidArgument, "noise: K must satisfy 0 <= K <= M/3");
  require(sigma >= 0 && std::isfinite(sigma), ErrorCode::kInvalidArgument, "noise: sigma must be >= 0");
  require(spectrum == NoiseSpectrum::kWhite || kappa >= 0, ErrorCode::kInvalidArgument, "noise: kappa must be >= 0");
  require(!gain.empty(), ErrorCode::kInvalidArgument, "noise: gain polynomial is empty");
  require(gain.size() <= 2, ErrorCode::kInvalidArgument, "noise: gain must be affine in u");
}

Field noise_basis(const Grid& g, int j) {
  require(j >= 0 && (j + 1) / 2 < g.M / 2, ErrorCode::kInvalidArgument, "noise_basis: index out of range");
  const int k = (j + 1) / 2;
  const double a = std::sqrt(2.0 / g.L), kap = g.wavenumber(k);
  if (j == 0) return Field::from_function(g, [&](double) { return 1.0 / std::sqrt(g.L); });
  if (j % 2 == 1) return Field::from_function(g, [&](double x) { return a * std::cos(kap * x); });
  return Field::from_function(g, [&](double x) { return a * std::sin(kap * x); });
}

std::vector<double> noise_coordinates(const Field& f, int K) {
  const Grid& g = f.grid();
  require(K >= 0 && K < g.M / 2, ErrorCode::kInvalidArgument, "noise_coordinates: K out of range");
  std::vector<cplx> X(g.half());
  detail::RealFft::get(g.M).forward(f.component(0).data(), X.data());
  std::vector<double> out(2 * K + 1);
  out[0] = std::sqrt(g.L) * X[0].real() / g.M;
  const double s = std::sqrt(2.0 / g.L) * g.L / g.M;
  for (int k = 1; k <= K; ++k) {
    out[2 * k - 1] = s * X[k].real();
    out[2 * k] = -s * X[k].imag();
  }
  return out;
}

Field noise_direction(const NoiseModel& nm, const Field& u, int j) {
  const Grid& g = u.grid();
  require(j >= 0 && j < nm.modes(), ErrorCode::kInvalidArgument, "noise_direction: index out of range");
  Field out(g, u.components());
  const double b = nm.amplitude_of(j);
  if (nm.additive()) {
    const Field e = noise_basis(g, j);
    for (int i = 0; i < g.M; ++i) out(0, i) = b * e(0, i);
    return out;
  }
  // the product has modes up to M/2 + K < M, so 2M points resolve it exactly
  const int Q = 2 * g.M;
  const Grid G(Q, g.L);
  const Field uq = upsample(u, Q), e = noise_basis(G, j);
  std::vector<double> v(Q);
  for (int i = 0; i < Q; ++i) v[i] = b * nm.gain_at(uq(0, i)) * e(0, i);
  std::vector<cplx> V(G.half());
  detail::RealFft::get(Q).forward(v.data(), V.data());
  detail::Spectrum S(u.components(), g.half());
  for (int k = 0; k < g.M / 2; ++k) S.comp(0)[k] = V[k] * (double(g.M) / Q);
  return detail::inverse(S, g);
}

Field sample_noise_increment(const NoiseModel& nm, const Grid& g, double dt, std::mt19937_64& rng) {
  require(dt > 0, ErrorCode::kInvalidArgument, "sample_noise_increment: dt must be > 0");
  nm.validate(g);
  boost::random::normal_distribution<double> nd;
  std::vector<double> db(nm.modes());
  for (double& v : db) v = std::sqrt(dt) * nd(rng);
  detail::Spectrum S(1, g.half());
  cplx* X = S.comp(0);
  X[0] = g.M * nm.amplitude(0) * db[0] / std::sqrt(g.L);
  const double c = 0.5 * g.M * std::sqrt(2.0 / g.L);
  for (int k = 1; k <= nm.K; ++k) X[k] = c * nm.amplitude(k) * cplx(db[2 * k - 1], -db[2 * k]);
  return detail::inverse(S, g);
}

PathRng::PathRng(std::uint64_t master_seed, std::uint64_t index) {
  std::seed_seq seq{std::uint32_t(master_seed), std::uint32_t(master_seed >> 32), std::uint32_t(index),
                    std::uint32_t(index >> 32), 0x69736fu};
  eng_.seed(seq);
}

double PathRng::normal() {
  boost::random::normal_distribution<double> nd;
  return nd(eng_);
}

namespace detail {

SpdeStepper::SpdeStepper(const ModelSpec& m, const NoiseModel& nm, double dt)
    : m_(&m), nm_(nm), integ_(m, dt, Scheme::kExponentialEuler) {
  nm.validate(m.grid);
  noise_ = Spectrum(m.components, m.grid.half());
  prod_ = noise_;
  cw_.resize(m.quadrature_points / 2 + 1);
}

void SpdeStepper::increment_spectrum(const double* db, Spectrum& out) const {
  const Grid& g = m_->grid;
  if (out.n != m_->components || out.half != g.half()) out = Spectrum(m_->components, g.half());
  out.zero();
  cplx* X = out.comp(0);
  X[0] = g.M * nm_.amplitude(0) * db[0] / std::sqrt(g.L);
  const double c = 0.5 * g.M * std::sqrt(2.0 / g.L);
  for (int k = 1; k <= nm_.K; ++k) X[k] = c * nm_.amplitude(k) * cplx(db[2 * k - 1], -db[2 * k]);
}

void SpdeStepper::step(Spectrum& x, const double* db) {
  const bool noisy = nm_.sigma > 0;
  integ_.step(x);
  if (!noisy) return;
  increment_spectrum(db, noise_);
  const Spectrum* dw = &noise_;
  if (!nm_.additive()) {
    // g(x_n) dW on the padded grid of the step's base point, projected back to M modes
    ModelKernel& ker = integ_.kernel();
    const int P = ker.padded_size(), M = m_->grid.M;
    ker.pad(noise_, wpad_);
    const auto& u = ker.base_padded();
    for (int p = 0; p < P; ++p) wpad_[p] *= nm_.gain_at(u[p]);
    RealFft::get(P).forward(wpad_.data(), cw_.data());
    prod_.zero();
    cplx* O = prod_.comp(0);
    const double s = double(M) / P;
    for (int k = 0; k < M / 2; ++k) O[k] = cw_[k] * s;
    dw = &prod_;
  }
  const auto& E = integ_.E();
  cplx* X = x.comp(0);
  const cplx* W = dw->comp(0);
  for (int k = 0; k < x.half; ++k) X[k] += nm_.sigma * E[k] * W[k];
}

}  // namespace detail

Field step_spde(const ModelSpec& m, const NoiseModel& nm, const Field& x, double dt, std::mt19937_64& rng) {
  require(dt > 0, ErrorCode::kInvalidArgument, "step_spde: dt must be > 0");
  check_on_grid(m, x, "step_spde");
  boost::random::normal_distribution<double> nd;
  std::vector<double> db(nm.modes());
  for (double& v : db) v = std::sqrt(dt) * nd(rng);
  detail::SpdeStepper st(m, nm, dt);
  auto X = detail::forward(x);
  st.step(X, db.data());
  detail::check_divergence(X, m.grid, 1e6);
  return detail::inverse(X, m.grid);
}

std::vector<double> projected_noise_weights(const ManifoldFrame& frame, const NoiseModel& nm, double alpha) {
  const Grid& g = frame.gamma0.grid();
  nm.validate(g);
  const Field ps = psi_star(frame, alpha);
  std::vector<double> w;
  if (nm.additive()) {
    w = noise_coordinates(ps, nm.K);
  } else {
    // g(gamma) psi* is resolved exactly on 2M points for an affine gain
    const Field gq = upsample(gamma(frame, alpha), 2 * g.M);
    Field pq = upsample(ps, 2 * g.M);
    for (int j = 0; j < 2 * g.M; ++j) pq(0, j) *= nm.gain_at(gq(0, j));
    w = noise_coordinates(pq, nm.K);
  }
  for (int j = 0; j < nm.modes(); ++j) w[j] *= nm.amplitude_of(j);
  return w;
}

}  // namespace isophase
