#include "stochastic.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstdlib>
#include <fstream>
#include <numbers>
#include <sstream>

#include "io.hpp"
#include "parallel.hpp"
#include "stats.hpp"

namespace isophase {

namespace {

constexpr double kPi = std::numbers::pi;

void validate(const PathOptions& o) {
  require(o.dt > 0 && std::isfinite(o.dt), ErrorCode::kInvalidArgument, "simulate_path: dt must be > 0");
  require(o.T > 0 && std::isfinite(o.T), ErrorCode::kInvalidArgument, "simulate_path: T must be > 0");
  require(o.delta > 0, ErrorCode::kInvalidArgument, "simulate_path: delta must be > 0");
  require(o.stride >= 1, ErrorCode::kInvalidArgument, "simulate_path: stride must be >= 1");
  require(o.refine >= 1, ErrorCode::kInvalidArgument, "simulate_path: refine must be >= 1");
  require(o.audit_every >= 0, ErrorCode::kInvalidArgument, "simulate_path: audit_every must be >= 0");
  require(!o.record_replay || o.keep_series, ErrorCode::kInvalidArgument,
          "simulate_path: noise replay needs the sample series");
}

PathRecord simulate_once(const ManifoldFrame& frame, const NoiseModel& nm, const Field& x0, const PathOptions& opt,
                         std::uint64_t master_seed, std::uint64_t index) {
  const Grid& g = frame.model.grid;
  PathRecord r;
  r.seed = master_seed;
  r.index = index;
  r.sigma = nm.sigma;
  r.delta = opt.delta;
  r.T = opt.T;
  r.stride = opt.stride;
  r.dt = opt.dt;
  r.averages.assign(opt.averages.size(), 0.0);
  r.thinned = !opt.keep_series;

  PathRng rng(master_seed, index);
  detail::SpdeStepper st(frame.model, nm, opt.dt);
  const detail::PhaseTracker tr(frame);
  auto X = detail::forward(x0);

  double phase = tr.phase(X, std::nullopt);
  double d = tr.distance(X, phase, opt.norm);
  require(d < opt.delta, ErrorCode::kInvalidArgument, "simulate_path: x0 is not inside the tube");
  double unwrapped = phase;
  double t_prev = 0.0, d_prev = d;
  std::vector<double> f_prev(opt.averages.size());
  for (std::size_t a = 0; a < f_prev.size(); ++a) f_prev[a] = opt.averages[a](phase);

  auto push = [&](double t) {
    r.t.push_back(t);
    r.pi.push_back(phase);
    r.pi_unwrapped.push_back(unwrapped);
    r.dist.push_back(d);
  };
  r.pi0 = unwrapped;
  push(0.0);

  const int nm_modes = nm.modes();
  std::vector<double> db(nm_modes), acc(nm_modes, 0.0), replay_rows;
  const long steps = long(std::ceil(opt.T / opt.dt - 1e-9));
  const double sub = std::sqrt(opt.dt / opt.refine);
  long sample_no = 0;
  bool last_kept = true;

  for (long n = 1; n <= steps; ++n) {
    std::fill(db.begin(), db.end(), 0.0);
    for (int s = 0; s < opt.refine; ++s)
      for (int j = 0; j < nm_modes; ++j) db[j] += sub * rng.normal();
    if (opt.record_replay)
      for (int j = 0; j < nm_modes; ++j) acc[j] += db[j];
    st.step(X, db.data());
    if ((n & 63) == 0) detail::check_divergence(X, g, opt.divergence_bound);
    if (n % opt.stride != 0 && n != steps) continue;

    ++sample_no;
    const double t = double(n) * opt.dt;
    if (opt.record_replay) {
      replay_rows.insert(replay_rows.end(), acc.begin(), acc.end());
      std::fill(acc.begin(), acc.end(), 0.0);
    }
    double next;
    try {
      next = tr.phase(X, phase);
    } catch (const Error& e) {
      if (e.code() != ErrorCode::kPhaseUndefined) throw;
      // conservative: exit at this sample, keep the last defined phase
      r.phase_lost = true;
      r.tau = t;
      d = std::max(d, opt.delta);
      push(t);
      last_kept = true;
      t_prev = t;
      break;
    }
    const double jump = wrap_signed(next - phase);
    r.max_jump = std::max(r.max_jump, std::abs(jump));
    unwrapped += jump;
    phase = next;
    d = tr.distance(X, phase, opt.norm);
    for (std::size_t a = 0; a < f_prev.size(); ++a) {
      const double fa = opt.averages[a](phase);
      r.averages[a] += 0.5 * (fa + f_prev[a]) * (t - t_prev);
      f_prev[a] = fa;
    }
    if (opt.audit_every > 0 && sample_no % opt.audit_every == 0) {
      try {
        AuditEntry a;
        a.t = t;
        a.dist = d;
        a.variational = phase;
        a.flow = isochron_flow(frame, detail::inverse(X, g), opt.audit);
        a.discrepancy = circle_distance(a.flow, a.variational);
        r.audits.push_back(a);
      } catch (const Error& e) {
        if (e.code() != ErrorCode::kNotAttracted && e.code() != ErrorCode::kPhaseUndefined) throw;
      }
    }
    const bool crossed = !r.tau && d >= opt.delta;
    if (crossed) r.tau = t_prev + (opt.delta - d_prev) / (d - d_prev) * (t - t_prev);
    if (opt.keep_series || crossed || n == steps) {
      push(t);
      last_kept = true;
    } else {
      last_kept = false;
    }
    t_prev = t;
    d_prev = d;
    if (crossed && opt.stop_at_exit) break;
  }
  if (!last_kept) push(t_prev);
  r.t_end = t_prev;
  r.pi_end = unwrapped;
  if (r.t_end > 0)
    for (double& a : r.averages) a /= r.t_end;
  if (opt.record_replay) {
    const int ns = int(replay_rows.size()) / nm_modes;
    r.replay_modes = nm_modes;
    r.replay.resize(replay_rows.size());
    for (int i = 0; i < ns; ++i)
      for (int j = 0; j < nm_modes; ++j) r.replay[std::size_t(j) * ns + i] = replay_rows[std::size_t(i) * nm_modes + j];
  }
  return r;
}

}  // namespace

PathRecord simulate_path(const ManifoldFrame& frame, const NoiseModel& nm, const Field& x0, const PathOptions& opt,
                         std::uint64_t master_seed, std::uint64_t index) {
  validate(opt);
  nm.validate(frame.model.grid);
  check_on_grid(frame.model, x0, "simulate_path");
  PathOptions o = opt;
  PathRecord r = simulate_once(frame, nm, x0, o, master_seed, index);
  // an inter-sample move beyond a quarter turn makes the nearest lift ambiguous: the
  // Brownian path does not depend on the stride, so resample it more often
  bool refined = false;
  while (r.max_jump > 0.5 * kPi && o.stride > 1) {
    o.stride = std::max(1, o.stride / 2);
    refined = true;
    r = simulate_once(frame, nm, x0, o, master_seed, index);
  }
  r.refined = refined;
  return r;
}

std::optional<double> exit_time(const PathRecord& r, double d) {
  require(d > 0 && d <= r.delta, ErrorCode::kInvalidArgument, "exit_time: radius must lie in (0, delta]");
  require(!r.t.empty(), ErrorCode::kInsufficientData, "exit_time: empty record");
  if (r.thinned) {
    require(d == r.delta, ErrorCode::kInsufficientData, "exit_time: thinned record only knows its own tube radius");
    return r.tau;
  }
  if (r.dist[0] >= d) return 0.0;
  for (std::size_t i = 1; i < r.t.size(); ++i) {
    if (r.dist[i] >= d) {
      if (r.phase_lost && i + 1 == r.t.size()) return r.t[i];
      return r.t[i - 1] + (d - r.dist[i - 1]) / (r.dist[i] - r.dist[i - 1]) * (r.t[i] - r.t[i - 1]);
    }
  }
  return std::nullopt;
}

int detail::thread_count(int fallback) {
  if (const char* env = std::getenv("ISOPHASE_THREADS")) {
    char* end = nullptr;
    const long v = std::strtol(env, &end, 10);
    if (end != env && *end == '\0' && v > 0) return int(std::min(v, 1024L));
  }
  if (fallback > 0) return fallback;
  return std::max(1u, std::thread::hardware_concurrency());
}

std::vector<PathRecord> run_ensemble(const ManifoldFrame& frame, const NoiseModel& nm, const Field& x0,
                                     const PathOptions& opt, std::uint64_t master_seed, int n, int threads) {
  require(n >= 0, ErrorCode::kInvalidArgument, "run_ensemble: negative path count");
  std::vector<PathRecord> out(n);
  detail::parallel_for(n, threads, [&](int, int i) {
    out[i] = simulate_path(frame, nm, x0, opt, master_seed, std::uint64_t(i));
  });
  return out;
}

ItoResidual ito_residual(const ManifoldFrame& frame, const NoiseModel& nm, const PathRecord& r,
                         const std::function<double(double)>& V) {
  const int n = r.samples();
  require(r.replay_modes > 0 && !r.replay.empty(), ErrorCode::kInvalidArgument, "ito_residual: noise replay unavailable");
  require(r.replay_modes == nm.modes(), ErrorCode::kInvalidArgument, "ito_residual: replay does not match the noise model");
  require(int(r.replay.size()) == r.replay_modes * (n - 1), ErrorCode::kInvalidArgument,
          "ito_residual: replay does not match the sample grid");
  ItoResidual out;
  out.t = r.t;
  out.residual.assign(n, 0.0);
  double acc = 0.0;
  const double s2 = nm.sigma * nm.sigma;
  for (int i = 0; i + 1 < n; ++i) {
    const double a = r.pi[i], dt = r.t[i + 1] - r.t[i];
    if (nm.sigma > 0) {
      const auto w = projected_noise_weights(frame, nm, a);
      double m = 0.0;
      for (int j = 0; j < r.replay_modes; ++j) m += w[j] * r.replay[std::size_t(j) * (n - 1) + i];
      acc += s2 * V(a) * dt + nm.sigma * m;
    }
    out.residual[i + 1] = (r.pi_unwrapped[i + 1] - r.pi_unwrapped[0]) - acc;
    out.sup = std::max(out.sup, std::abs(out.residual[i + 1]));
  }
  return out;
}

AuditSummary audit_summary(const std::vector<PathRecord>& records) {
  AuditSummary s;
  std::vector<double> ratio;
  for (const auto& r : records)
    for (const auto& a : r.audits)
      if (a.dist > 0) ratio.push_back(a.discrepancy / (a.dist * a.dist));
  s.n = int(ratio.size());
  if (ratio.empty()) return s;
  s.C = median(ratio);
  for (double q : ratio) {
    s.worst = std::max(s.worst, q);
    if (q > 5.0 * s.C) ++s.flagged;
  }
  return s;
}

ExitStats exit_time_stats(const std::vector<std::vector<PathRecord>>& ensembles, const std::vector<double>& t_grid,
                          double delta, double t_ref) {
  require(ensembles.size() >= 3, ErrorCode::kInsufficientData, "exit_time_stats: need at least 3 noise levels");
  require(!t_grid.empty(), ErrorCode::kInvalidArgument, "exit_time_stats: empty time grid");
  ExitStats st;
  st.delta = delta;
  std::vector<double> xs, ys;
  for (const auto& ens : ensembles) {
    require(ens.size() >= 200, ErrorCode::kInsufficientData, "exit_time_stats: need at least 200 paths per noise level");
    std::vector<double> tau;
    for (const auto& r : ens) {
      const auto e = exit_time(r, delta);
      tau.push_back(e ? *e : INFINITY);
    }
    auto times = t_grid;
    if (std::find(times.begin(), times.end(), t_ref) == times.end()) times.push_back(t_ref);
    std::sort(times.begin(), times.end());
    for (double t : times) {
      ExitRow row;
      row.sigma = ens.front().sigma;
      row.t = t;
      row.n = int(ens.size());
      row.exits = int(std::count_if(tau.begin(), tau.end(), [&](double x) { return x <= t; }));
      if (row.exits == 0) {
        row.one_sided = true;
        row.p = 3.0 / row.n;
      } else {
        row.p = double(row.exits) / row.n;
        row.se = std::sqrt(row.p * (1 - row.p) / row.n);
      }
      if (t == t_ref && row.exits > 0) {
        xs.push_back(1.0 / (row.sigma * row.sigma));
        ys.push_back(std::log(row.p));
      }
      st.rows.push_back(row);
    }
  }
  st.fit.t_ref = t_ref;
  st.fit.points = int(xs.size());
  if (xs.size() >= 2) {
    const LinearFit f = linear_fit(xs, ys);
    st.fit.slope = f.slope;
    st.fit.intercept = f.intercept;
    st.fit.r2 = f.r2;
    st.fit.c_delta2 = -f.slope;
  }
  return st;
}

std::string path_csv(const PathRecord& r) {
  std::ostringstream os;
  os << "t,pi,pi_unwrapped,dist,exited\n";
  for (int i = 0; i < r.samples(); ++i) {
    const bool ex = r.exited() && i + 1 == r.samples();
    os << fmt_num(r.t[i]) << ',' << fmt_num(r.pi[i]) << ',' << fmt_num(r.pi_unwrapped[i]) << ','
       << fmt_num(r.dist[i]) << ',' << (ex ? 1 : 0) << '\n';
  }
  return os.str();
}

void write_replay(const PathRecord& r, const std::string& path) {
  static_assert(std::endian::native == std::endian::little, "replay logs are written in native little-endian order");
  require(!r.replay.empty(), ErrorCode::kInvalidArgument, "write_replay: record has no replay");
  std::ofstream f(path, std::ios::binary);
  if (!f) fail(ErrorCode::kIo, "write_replay: cannot open " + path);
  f.write(reinterpret_cast<const char*>(r.replay.data()), std::streamsize(r.replay.size() * sizeof(double)));
  if (!f) fail(ErrorCode::kIo, "write_replay: write failed for " + path);
}

void read_replay(PathRecord& r, const std::string& path) {
  std::ifstream f(path, std::ios::binary | std::ios::ate);
  if (!f) fail(ErrorCode::kIo, "read_replay: cannot open " + path);
  const auto bytes = std::size_t(f.tellg());
  const std::size_t intervals = r.t.empty() ? 0 : r.t.size() - 1;
  require(intervals > 0 && bytes % (sizeof(double) * intervals) == 0, ErrorCode::kIo,
          "read_replay: log size does not match the record");
  r.replay.resize(bytes / sizeof(double));
  r.replay_modes = int(r.replay.size() / intervals);
  f.seekg(0);
  f.read(reinterpret_cast<char*>(r.replay.data()), std::streamsize(bytes));
  if (!f) fail(ErrorCode::kIo, "read_replay: read failed for " + path);
}

}  // namespace isophase
