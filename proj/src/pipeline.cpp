#include "pipeline.hpp"

#include <openssl/evp.h>

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <map>
#include <memory>
#include <numbers>
#include <numeric>

#include "io.hpp"
#include "parallel.hpp"
#include "reduction.hpp"
#include "stats.hpp"

namespace isophase {

namespace fs = std::filesystem;
using nlohmann::ordered_json;

namespace {

constexpr double kTwoPi = 2.0 * std::numbers::pi;
// stream offset for the isochron sampling generator, disjoint from path indices
constexpr std::uint64_t kSampleStream = std::uint64_t(1) << 62;

std::function<double(double)> test_function(const std::string& name) {
  if (name == "sin") return [](double a) { return std::sin(a); };
  if (name == "cos2") return [](double a) { return std::cos(2 * a); };
  if (name == "one") return [](double) { return 1.0; };
  return [](double a) { return std::cos(a); };
}

// a polyline chart of CSV columns against the first column
std::string svg_chart(const std::string& title, const CsvTable& t, const std::vector<int>& cols) {
  const double W = 640, H = 400, pad = 50;
  double xmin = 1e300, xmax = -1e300, ymin = 1e300, ymax = -1e300;
  for (const auto& r : t.rows) {
    xmin = std::min(xmin, r[0]);
    xmax = std::max(xmax, r[0]);
    for (int c : cols)
      if (std::isfinite(r[c])) {
        ymin = std::min(ymin, r[c]);
        ymax = std::max(ymax, r[c]);
      }
  }
  if (!(xmax > xmin)) xmax = xmin + 1;
  if (!(ymax > ymin)) ymax = ymin + 1;
  auto X = [&](double x) { return pad + (x - xmin) / (xmax - xmin) * (W - 2 * pad); };
  auto Y = [&](double y) { return H - pad - (y - ymin) / (ymax - ymin) * (H - 2 * pad); };
  static const char* colours[] = {"#1f77b4", "#d62728", "#2ca02c", "#9467bd"};
  std::string s = "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"640\" height=\"400\">\n";
  s += "<rect width=\"640\" height=\"400\" fill=\"white\"/>\n";
  s += "<text x=\"50\" y=\"30\" font-family=\"sans-serif\" font-size=\"14\">" + title + "</text>\n";
  s += "<line x1=\"50\" y1=\"350\" x2=\"590\" y2=\"350\" stroke=\"black\"/>\n";
  s += "<line x1=\"50\" y1=\"50\" x2=\"50\" y2=\"350\" stroke=\"black\"/>\n";
  s += "<text x=\"50\" y=\"368\" font-size=\"10\">" + fmt_num(xmin) + "</text>\n";
  s += "<text x=\"560\" y=\"368\" font-size=\"10\">" + fmt_num(xmax) + "</text>\n";
  s += "<text x=\"4\" y=\"350\" font-size=\"10\">" + fmt_num(ymin) + "</text>\n";
  s += "<text x=\"4\" y=\"58\" font-size=\"10\">" + fmt_num(ymax) + "</text>\n";
  for (std::size_t i = 0; i < cols.size(); ++i) {
    s += "<polyline fill=\"none\" stroke=\"" + std::string(colours[i % 4]) + "\" points=\"";
    for (const auto& r : t.rows)
      if (std::isfinite(r[cols[i]])) s += fmt_num(X(r[0])) + "," + fmt_num(Y(r[cols[i]])) + " ";
    s += "\"/>\n";
    s += "<text x=\"" + fmt_num(W - 150) + "\" y=\"" + fmt_num(30 + 14 * i) + "\" font-size=\"11\" fill=\"" +
         colours[i % 4] + "\">" + t.header[cols[i]] + "</text>\n";
  }
  return s + "</svg>\n";
}

// smooth random direction with unit tube norm
Field random_direction(const Grid& g, int n, PathRng& rng, TubeNorm which) {
  Field f(g, n);
  std::vector<double> a(7), b(7);
  for (int k = 0; k <= 6; ++k) {
    a[k] = std::exp(-0.2 * k) * rng.normal();
    b[k] = std::exp(-0.2 * k) * rng.normal();
  }
  for (int j = 0; j < g.M; ++j) {
    const double x = g.point(j);
    double v = a[0];
    for (int k = 1; k <= 6; ++k) v += a[k] * std::cos(g.wavenumber(k) * x) + b[k] * std::sin(g.wavenumber(k) * x);
    f(0, j) = v;
  }
  f *= 1.0 / tube_norm(f, which);
  return f;
}

class Pipeline {
 public:
  Pipeline(const ExperimentConfig& cfg, const RunOptions& opt) : cfg_(cfg), opt_(opt) {
    seed_ = opt.seed.value_or(cfg.run.seed);
    threads_ = opt.threads > 0 ? opt.threads : detail::thread_count(cfg.run.threads);
    out_ = opt.out.empty() ? cfg.out_dir : opt.out;
    stage_dir_ = (fs::path(out_) / ".partial").string();
  }

  RunResult run(const std::string& stage) {
    const auto& all = pipeline_stages();
    require(std::find(all.begin(), all.end(), stage) != all.end(), ErrorCode::kConfig, "unknown stage '" + stage + "'");
    std::vector<std::string> todo;
    if (stage == "all") {
      todo = {"wave", "isochron", "derivs", "reduce"};
      if (cfg_.run.paths > 0) todo.insert(todo.end(), {"simulate", "compare", "exit-stats"});
    } else {
      todo = {stage};
    }
    fs::remove_all(stage_dir_);
    fs::create_directories(stage_dir_);
    try {
      for (const auto& s : todo) {
        log("stage " + s);
        if (s == "wave") wave();
        else if (s == "isochron") isochron();
        else if (s == "derivs") derivs();
        else if (s == "reduce") reduce();
        else if (s == "simulate") simulate();
        else if (s == "compare") compare();
        else if (s == "exit-stats") exit_stats();
      }
    } catch (...) {
      std::error_code ec;
      fs::remove_all(stage_dir_, ec);
      throw;
    }
    RunResult res;
    res.out_dir = out_;
    res.stages = todo;
    ordered_json files = ordered_json::array();
    std::sort(files_.begin(), files_.end());
    for (const auto& f : files_) {
      const std::string bytes = read_text((fs::path(stage_dir_) / f).string());
      files.push_back({{"path", f}, {"sha256", sha256_hex(bytes)}});
    }
    ordered_json m;
    m["config_sha256"] = sha256_hex(config_fingerprint(cfg_));
    m["seed"] = seed_;
    m["stages"] = todo;
    m["quantities"] = quantities_;
    m["files"] = files;
    put("manifest.json", m.dump(2) + "\n", false);
    // commit: manifest last
    for (const auto& f : files_) commit(f);
    commit("manifest.json");
    fs::remove_all(stage_dir_);
    res.files = files_;
    res.files.push_back("manifest.json");
    res.manifest = m;
    return res;
  }

 private:
  void log(const std::string& s) const {
    if (opt_.log) opt_.log(s);
  }

  void put(const std::string& rel, const std::string& content, bool track = true) {
    write_text((fs::path(stage_dir_) / rel).string(), content);
    if (track) files_.push_back(rel);
  }
  void put_json(const std::string& rel, const ordered_json& j) { put(rel, j.dump(2) + "\n"); }
  void put_csv(const std::string& rel, const CsvTable& t) { put(rel, to_csv(t)); }

  void put_field(const std::string& rel, const Field& f) {
    write_field_csv((fs::path(stage_dir_) / rel).string(), f);
    files_.push_back(rel);
    files_.push_back(rel + ".json");
  }

  void commit(const std::string& rel) {
    const fs::path dst = fs::path(out_) / rel;
    fs::create_directories(dst.parent_path());
    fs::rename(fs::path(stage_dir_) / rel, dst);
  }

  const ManifoldFrame& frame() {
    if (!frame_) {
      log("building frame");
      const Grid& g = cfg_.model.grid;
      const Field guess = cfg_.model.kind == ModelKind::kNeuralFieldRing
                              ? heaviside_bump_guess(g, cfg_.model.nf)
                              : nagumo_front_pair_guess(g, cfg_.model.rd.diffusion);
      FrameOptions fo;
      fo.stationary.unknown_speed = cfg_.unknown_speed;
      fo.decay_seed = seed_;
      frame_ = std::make_unique<ManifoldFrame>(build_frame(cfg_.model, guess, cfg_.flow, fo));
    }
    return *frame_;
  }

  const ReducedCoeffs& coeffs() {
    if (!coeffs_) {
      log("tabulating reduced coefficients");
      TabulateOptions t;
      t.n_alpha = cfg_.n_alpha;
      t.equivariant = cfg_.equivariant;
      t.threads = threads_;
      coeffs_ = std::make_unique<ReducedCoeffs>(tabulate_coeffs(frame(), cfg_.noise, cfg_.isochron(), t));
    }
    return *coeffs_;
  }

  PathOptions path_options(double sigma) const {
    PathOptions p;
    p.dt = cfg_.run.dt;
    p.T = cfg_.horizon(sigma);
    p.delta = cfg_.delta;
    p.norm = cfg_.norm;
    p.stride = cfg_.run.stride;
    p.refine = cfg_.run.refine;
    p.stop_at_exit = cfg_.run.stop_at_exit;
    p.audit_every = cfg_.run.audit_every;
    p.audit = cfg_.isochron();
    p.averages = {test_function(cfg_.run.test_function)};
    p.divergence_bound = cfg_.flow.divergence_bound;
    return p;
  }

  // thinned records for every path; full series and replays for the leading ones
  const std::vector<PathRecord>& ensemble(int i) {
    if (!ensembles_.count(i)) {
      const double sigma = cfg_.sigmas[i];
      log("ensemble sigma = " + fmt_num(sigma) + ", " + std::to_string(cfg_.run.paths) + " paths");
      PathOptions p = path_options(sigma);
      p.keep_series = false;
      ensembles_[i] = run_ensemble(frame(), cfg_.noise_at(sigma), frame().gamma0, p, seed_, cfg_.run.paths, threads_);
      const int n = std::min(cfg_.run.paths, std::max(cfg_.run.path_files, cfg_.run.replay_paths));
      p.keep_series = true;
      p.record_replay = true;
      p.audit_every = 0;
      auto& det = detailed_[i];
      det.resize(n);
      detail::parallel_for(n, threads_, [&](int, int k) {
        det[k] = simulate_path(frame(), cfg_.noise_at(sigma), frame().gamma0, p, seed_, std::uint64_t(k));
      });
    }
    return ensembles_[i];
  }

  std::vector<double> exit_grid() const {
    double h = 1e300;
    for (double s : cfg_.sigmas) h = std::min(h, cfg_.horizon(s));
    if (!cfg_.run.exit_t_grid.empty()) return cfg_.run.exit_t_grid;
    std::vector<double> t;
    for (int k = 1; k <= 8; ++k) t.push_back(h * k / 8);
    return t;
  }
  double t_ref() const {
    if (cfg_.run.t_ref > 0) return cfg_.run.t_ref;
    double h = 1e300;
    for (double s : cfg_.sigmas) h = std::min(h, cfg_.horizon(s));
    return h / 2;
  }

  void wave() {
    const ManifoldFrame& fr = frame();
    const Truncation tr = truncation(fr, cfg_.isochron());
    ordered_json j;
    j["model"] = normalized_json(cfg_)["model"];
    j["M"] = fr.model.grid.M;
    j["L"] = fr.model.grid.L;
    j["speed"] = fr.model.speed();
    j["newton_residual"] = fr.newton_residual;
    j["goldstone_residual"] = fr.goldstone_residual;
    j["adjoint_residual"] = fr.adjoint_residual;
    j["psi_star_pairing"] = inner(fr.psi_star0, fr.psi0);
    j["b_hat"] = fr.b_hat;
    j["b_hat_r2"] = fr.b_hat_r2;
    j["spectral_gap"] = fr.spectral_gap;
    j["T_inf"] = tr.T;
    j["tail_bound"] = tr.tail_bound;
    put_json("frame.json", j);
    put_field("gamma0.csv", fr.gamma0);
    put_field("psi0.csv", fr.psi0);
    put_field("psi_star0.csv", fr.psi_star0);
    quantities_["b_hat"] = fr.b_hat;
    quantities_["newton_residual"] = fr.newton_residual;
  }

  void isochron() {
    const ManifoldFrame& fr = frame();
    const IsochronConfig ic = cfg_.isochron();
    const int n = cfg_.isochron_samples;
    CsvTable t;
    t.header = {"alpha_true", "pi_flow", "pi_newton", "beta", "gap", "dist"};
    t.rows.resize(n);
    detail::parallel_for(n, threads_, [&](int, int i) {
      PathRng rng(seed_, kSampleStream + std::uint64_t(i));
      const double a = kTwoPi * std::uniform_real_distribution<double>(0, 1)(rng.engine());
      const double r = cfg_.isochron_radius * std::uniform_real_distribution<double>(0.25, 1.0)(rng.engine());
      const Field y = random_direction(fr.model.grid, fr.model.components, rng, cfg_.norm);
      const Field x = gamma(fr, a) + r * y;
      const double pf = isochron_flow(fr, x, ic), pn = isochron_newton(fr, x, ic);
      const double b = variational_phase(fr, x, a);
      const Field gap = gamma(fr, pn) - gamma(fr, b);
      t.rows[i] = {a, pf, pn, b, tube_norm(gap, cfg_.norm), tube_norm(x - gamma(fr, b), cfg_.norm)};
    });
    put_csv("isochron_sample.csv", t);
    double worst = 0;
    for (const auto& r : t.rows) worst = std::max(worst, circle_distance(r[1], r[2]));
    ordered_json j{{"samples", n}, {"radius", cfg_.isochron_radius}, {"max_flow_newton", worst}};
    put_json("isochron_summary.json", j);
    quantities_["isochron_max_flow_newton"] = worst;
  }

  void derivs() {
    const ManifoldFrame& fr = frame();
    const IsochronConfig ic = cfg_.isochron();
    const Grid& g = fr.model.grid;
    double d1 = 0, sym = 0;
    std::vector<Field> dirs;
    for (int k = 0; k < 3; ++k) {
      PathRng rng(seed_, kSampleStream + 1000000 + std::uint64_t(k));
      dirs.push_back(random_direction(g, fr.model.components, rng, TubeNorm::kL2));
    }
    for (const auto& y : dirs)
      d1 = std::max(d1, std::abs(dpi(fr, fr.gamma0, y, ic) - inner(fr.psi_star0, y)));
    for (int a = 0; a < 3; ++a)
      for (int b = a + 1; b < 3; ++b) {
        const double u = d2pi(fr, fr.gamma0, dirs[a], dirs[b], ic), v = d2pi(fr, fr.gamma0, dirs[b], dirs[a], ic);
        sym = std::max(sym, std::abs(u - v) / std::max({std::abs(u), std::abs(v), 1e-300}));
      }
    // per-mode drift and diffusion contributions at a generic phase
    const double alpha = 1.0;
    const auto terms = drift_terms(fr, cfg_.noise, alpha, ic);
    const auto w = projected_noise_weights(fr, cfg_.noise, alpha);
    CsvTable t;
    t.header = {"j", "k", "amplitude", "weight", "drift_term"};
    for (int j = 0; j < cfg_.noise.modes(); ++j)
      t.rows.push_back({double(j), double((j + 1) / 2), cfg_.noise.amplitude_of(j), w[j], terms[j]});
    put_csv("drift_terms.csv", t);
    double V = 0;
    for (double x : terms) V += x;
    ordered_json j{{"dpi_adjoint_error", d1}, {"d2pi_symmetry", sym}, {"alpha", alpha}, {"V", V}};
    put_json("derivs.json", j);
  }

  void reduce() {
    const ReducedCoeffs& c = coeffs();
    const auto sd = stationary_density(c.V, c.g);
    ordered_json j;
    j["alpha"] = c.alpha;
    j["V"] = c.V;
    j["g"] = c.g;
    j["Pstar"] = c.Pstar;
    j["mean_drift"] = c.mean_drift;
    j["current"] = sd.current;
    j["equivariant"] = cfg_.equivariant;
    put_json("coeffs.json", j);
    CsvTable t;
    t.header = {"alpha", "V", "g", "Pstar"};
    for (int i = 0; i < c.size(); ++i) t.rows.push_back({c.alpha[i], c.V[i], c.g[i], c.Pstar[i]});
    put_csv("coeffs.csv", t);
    if (cfg_.svg) {
      const auto back = read_csv((fs::path(stage_dir_) / "coeffs.csv").string());
      put("density.svg", svg_chart("stationary density", back, {3}));
    }
    double vbar = 0;
    for (double v : c.V) vbar += v / c.size();
    quantities_["V_bar"] = vbar;
    quantities_["Pstar_V"] = c.mean_drift;
    quantities_["g_mean"] = std::accumulate(c.g.begin(), c.g.end(), 0.0) / c.size();
  }

  void simulate() {
    if (cfg_.run.paths == 0) return;
    const auto tg = exit_grid();
    quantities_["delta"] = cfg_.delta;
    for (int i = 0; i < int(cfg_.sigmas.size()); ++i) {
      const auto& ens = ensemble(i);
      const double sigma = cfg_.sigmas[i];
      const std::string dir = "paths/sigma_" + std::to_string(i);
      const auto& det = detailed_[i];
      for (int k = 0; k < int(det.size()); ++k) {
        if (k < cfg_.run.path_files) put(dir + "/path_" + std::to_string(k) + ".csv", path_csv(det[k]));
        if (k < cfg_.run.replay_paths) {
          const std::string rel = "replay/sigma_" + std::to_string(i) + "/path_" + std::to_string(k) + ".bin";
          const fs::path dst = fs::path(stage_dir_) / rel;
          fs::create_directories(dst.parent_path());
          write_replay(det[k], dst.string());
          files_.push_back(rel);
        }
      }
      std::vector<double> taus, avg, drift;
      int refined = 0, lost = 0;
      for (const auto& r : ens) {
        if (r.exited())
          taus.push_back(*r.tau);
        else {
          avg.push_back(r.averages[0]);
          if (r.t_end > 0) drift.push_back((r.pi_end - r.pi0) / (sigma * sigma * r.t_end));
        }
        refined += r.refined;
        lost += r.phase_lost;
      }
      ordered_json j;
      j["sigma"] = sigma;
      j["T"] = cfg_.horizon(sigma);
      j["paths"] = int(ens.size());
      j["exits"] = int(taus.size());
      j["phase_lost"] = lost;
      j["refined"] = refined;
      ordered_json q;
      for (double p : {0.1, 0.25, 0.5, 0.75, 0.9})
        q[fmt_num(p)] = taus.empty() ? ordered_json(nullptr) : ordered_json(quantile(taus, p));
      j["tau_quantiles"] = q;
      ordered_json ecdf = ordered_json::array();
      for (double t : tg) {
        int c = 0;
        for (const auto& r : ens)
          if (exit_time(r, cfg_.delta).value_or(1e300) <= t) ++c;
        ecdf.push_back({{"t", t}, {"p", double(c) / std::max<std::size_t>(ens.size(), 1)}});
      }
      j["exit_ecdf"] = ecdf;
      j["time_average"] = {{"function", cfg_.run.test_function},
                           {"mean", avg.empty() ? ordered_json(nullptr) : ordered_json(mean(avg))},
                           {"sd", avg.size() < 2 ? ordered_json(nullptr) : ordered_json(std::sqrt(variance(avg)))}};
      j["scaled_increment"] = {{"mean", drift.empty() ? ordered_json(nullptr) : ordered_json(mean(drift))},
                               {"sd", drift.size() < 2 ? ordered_json(nullptr) : ordered_json(std::sqrt(variance(drift)))}};
      if (cfg_.run.audit_every > 0) {
        const auto a = audit_summary(ens);
        j["audit"] = {{"entries", a.n}, {"C", a.C}, {"flagged", a.flagged}, {"worst", a.worst}};
      }
      put_json("ensemble_" + std::to_string(i) + ".json", j);
    }
  }

  void compare() {
    if (cfg_.run.paths == 0) return;
    const ReducedCoeffs& c = coeffs();
    const int ns = int(cfg_.sigmas.size());
    const double target = stationary_expectation(c, test_function(cfg_.run.test_function));
    std::vector<std::vector<PathRecord>> ens;
    std::vector<double> ts;
    for (int i = 0; i < ns; ++i) {
      ens.push_back(ensemble(i));
      ts.push_back(cfg_.horizon(cfg_.sigmas[i]));
    }
    ordered_json j;
    j["test_function"] = cfg_.run.test_function;
    j["target"] = target;
    try {
      const auto rep = ergodic_compare(ens, cfg_.sigmas, ts, target, cfg_.run.epsilon);
      ordered_json rows = ordered_json::array();
      for (const auto& r : rep.rows)
        rows.push_back({{"sigma", r.sigma},
                        {"t_sigma", r.t_sigma},
                        {"paths", r.paths},
                        {"surviving", r.surviving},
                        {"within", r.within},
                        {"fraction", r.fraction},
                        {"mean_abs_deviation", r.mean_abs_deviation}});
      j["ergodic"] = {{"epsilon", rep.epsilon}, {"monotone", rep.monotone}, {"rows", rows}};
    } catch (const Error& e) {
      j["ergodic"] = {{"skipped", e.what()}};
    }

    CsvTable t;
    t.header = {"sigma", "drift_estimate", "ci_lo", "ci_hi", "prediction", "covered", "median_window_sup"};
    ordered_json drifts = ordered_json::array();
    for (int i = 0; i < ns; ++i) {
      const double sigma = cfg_.sigmas[i];
      ordered_json d{{"sigma", sigma}};
      double est = NAN, lo = NAN, hi = NAN, cov = NAN;
      try {
        const auto e = drift_estimate(ens[i], c.mean_drift, 0.95, 4000, seed_);
        est = e.estimate;
        lo = e.ci.lo;
        hi = e.ci.hi;
        cov = e.covered;
        d.update({{"estimate", e.estimate}, {"ci", {e.ci.lo, e.ci.hi}}, {"se", e.se}, {"paths", e.paths},
                  {"prediction", e.prediction}, {"covered", e.covered}});
      } catch (const Error& e) {
        d["skipped"] = e.what();
      }
      // paired projected-noise closeness on the replayed paths
      const double window = cfg_.run.window > 0 ? cfg_.run.window : 1.0 / (sigma * sigma);
      std::vector<double> sups;
      const int np = std::min(int(detailed_[i].size()), cfg_.run.replay_paths);
      for (int k = 0; k < np; ++k)
        for (double s : paired_window_sup(frame(), cfg_.noise_at(sigma), detailed_[i][k], c, window)) sups.push_back(s);
      const double med = sups.empty() ? NAN : median(sups);
      d["window"] = window;
      d["windows"] = int(sups.size());
      d["median_window_sup"] = sups.empty() ? ordered_json(nullptr) : ordered_json(med);
      drifts.push_back(d);
      t.rows.push_back({sigma, est, lo, hi, c.mean_drift, cov, med});
    }
    j["drift"] = drifts;
    put_json("compare.json", j);
    put_csv("compare.csv", t);
    if (cfg_.svg) {
      const auto back = read_csv((fs::path(stage_dir_) / "compare.csv").string());
      put("drift.svg", svg_chart("drift estimate and 95% CI vs sigma", back, {1, 2, 3, 4}));
    }
    quantities_["Pstar_test_function"] = target;
    ordered_json est = ordered_json::array();
    for (const auto& d : drifts) est.push_back(d.contains("estimate") ? d["estimate"] : ordered_json(nullptr));
    quantities_["drift_estimates"] = est;
  }

  void exit_stats() {
    if (cfg_.run.paths == 0) return;
    std::vector<std::vector<PathRecord>> ens;
    for (int i = 0; i < int(cfg_.sigmas.size()); ++i) ens.push_back(ensemble(i));
    const auto tg = exit_grid();
    ordered_json j;
    j["delta"] = cfg_.delta;
    j["t_ref"] = t_ref();
    try {
      const auto st = exit_time_stats(ens, tg, cfg_.delta, t_ref());
      CsvTable t;
      t.header = {"t"};
      for (int i = 0; i < int(cfg_.sigmas.size()); ++i) t.header.push_back("p_sigma_" + std::to_string(i));
      for (std::size_t k = 0; k < tg.size(); ++k) {
        std::vector<double> row{tg[k]};
        for (const auto& r : st.rows)
          if (r.t == tg[k]) row.push_back(r.p);
        t.rows.push_back(row);
      }
      ordered_json rows = ordered_json::array();
      for (const auto& r : st.rows)
        rows.push_back({{"sigma", r.sigma}, {"t", r.t}, {"n", r.n}, {"exits", r.exits}, {"p", r.p}, {"se", r.se},
                        {"one_sided", r.one_sided}});
      j["rows"] = rows;
      j["fit"] = {{"slope", st.fit.slope}, {"intercept", st.fit.intercept}, {"r2", st.fit.r2},
                  {"c_delta2", st.fit.c_delta2}, {"points", st.fit.points}};
      put_csv("exit_stats.csv", t);
      if (cfg_.svg) {
        const auto back = read_csv((fs::path(stage_dir_) / "exit_stats.csv").string());
        std::vector<int> cols;
        for (int i = 1; i < int(back.header.size()); ++i) cols.push_back(i);
        put("exit_ecdf.svg", svg_chart("P(tau <= t)", back, cols));
      }
      quantities_["exit_fit_slope"] = st.fit.slope;
      quantities_["exit_fit_r2"] = st.fit.r2;
    } catch (const Error& e) {
      if (e.code() != ErrorCode::kInsufficientData && e.code() != ErrorCode::kInvalidArgument) throw;
      j["skipped"] = e.what();
    }
    put_json("exit_stats.json", j);
  }

  ExperimentConfig cfg_;
  RunOptions opt_;
  std::uint64_t seed_;
  int threads_;
  std::string out_, stage_dir_;
  std::vector<std::string> files_;
  ordered_json quantities_ = ordered_json::object();
  std::unique_ptr<ManifoldFrame> frame_;
  std::unique_ptr<ReducedCoeffs> coeffs_;
  std::map<int, std::vector<PathRecord>> ensembles_, detailed_;
};

}  // namespace

const std::vector<std::string>& pipeline_stages() {
  static const std::vector<std::string> s{"wave", "isochron", "derivs", "reduce", "simulate", "compare", "exit-stats", "all"};
  return s;
}

std::string sha256_hex(const std::string& bytes) {
  unsigned char md[EVP_MAX_MD_SIZE];
  unsigned int n = 0;
  if (EVP_Digest(bytes.data(), bytes.size(), md, &n, EVP_sha256(), nullptr) != 1) fail(ErrorCode::kIo, "sha256 failed");
  static const char* hex = "0123456789abcdef";
  std::string s;
  for (unsigned i = 0; i < n; ++i) {
    s += hex[md[i] >> 4];
    s += hex[md[i] & 15];
  }
  return s;
}

RunResult run_pipeline(const ExperimentConfig& cfg, const std::string& stage, const RunOptions& opt) {
  Pipeline p(cfg, opt);
  return p.run(stage);
}

}  // namespace isophase
