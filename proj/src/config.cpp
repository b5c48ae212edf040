#include "config.hpp"

#include <yaml-cpp/yaml.h>

#include <algorithm>
#include <cmath>
#include <numbers>
#include <set>

#include "io.hpp"
#include "reduction.hpp"

namespace isophase {

using nlohmann::json;
using nlohmann::ordered_json;

namespace {

json yaml_to_json(const YAML::Node& n) {
  switch (n.Type()) {
    case YAML::NodeType::Null:
    case YAML::NodeType::Undefined:
      return nullptr;
    case YAML::NodeType::Sequence: {
      json a = json::array();
      for (const auto& e : n) a.push_back(yaml_to_json(e));
      return a;
    }
    case YAML::NodeType::Map: {
      json o = json::object();
      for (const auto& kv : n) o[kv.first.as<std::string>()] = yaml_to_json(kv.second);
      return o;
    }
    case YAML::NodeType::Scalar:
      break;
  }
  const std::string s = n.Scalar();
  if (n.Tag() == "!") return s;  // quoted
  if (s == "true" || s == "True" || s == "yes") return true;
  if (s == "false" || s == "False" || s == "no") return false;
  if (s == "~" || s == "null") return nullptr;
  long long i;
  if (YAML::convert<long long>::decode(n, i) && s.find_first_of(".eE") == std::string::npos) return i;
  double d;
  if (YAML::convert<double>::decode(n, d)) return d;
  return s;
}

// One mapping of the config with path-qualified diagnostics and unknown-key detection.
class Block {
 public:
  Block(const json& root, const std::string& key, std::vector<std::string>& errs) : path_(key), errs_(&errs) {
    if (root.contains(key)) {
      if (root[key].is_object())
        j_ = &root[key];
      else if (!root[key].is_null())
        err("", "must be a mapping");
    }
  }

  bool has(const char* key) const { return j_ && j_->contains(key); }

  void get(const char* key, double& out) {
    if (const json* v = take(key)) {
      if (v->is_number())
        out = v->get<double>();
      else
        err(key, "must be a number");
    }
  }
  void get(const char* key, int& out) {
    if (const json* v = take(key)) {
      if (v->is_number_integer())
        out = v->get<int>();
      else
        err(key, "must be an integer");
    }
  }
  void get(const char* key, std::uint64_t& out) {
    if (const json* v = take(key)) {
      if (v->is_number_unsigned() || (v->is_number_integer() && v->get<long long>() >= 0))
        out = v->get<std::uint64_t>();
      else
        err(key, "must be a non-negative integer");
    }
  }
  void get(const char* key, bool& out) {
    if (const json* v = take(key)) {
      if (v->is_boolean())
        out = v->get<bool>();
      else
        err(key, "must be true or false");
    }
  }
  void get(const char* key, std::string& out) {
    if (const json* v = take(key)) {
      if (v->is_string())
        out = v->get<std::string>();
      else
        err(key, "must be a string");
    }
  }
  // a scalar is accepted as a one-element list
  void get(const char* key, std::vector<double>& out) {
    if (const json* v = take(key)) {
      if (v->is_number()) {
        out = {v->get<double>()};
        return;
      }
      if (!v->is_array()) return err(key, "must be a list of numbers");
      std::vector<double> r;
      for (const auto& e : *v) {
        if (!e.is_number()) return err(key, "must be a list of numbers");
        r.push_back(e.get<double>());
      }
      out = std::move(r);
    }
  }

  void err(const std::string& key, const std::string& msg) const {
    errs_->push_back(path_ + (key.empty() ? "" : "." + key) + ": " + msg);
  }
  void check(bool ok, const char* key, const std::string& msg) const {
    if (!ok) err(key, msg);
  }
  // unknown keys
  void finish() const {
    if (!j_) return;
    for (const auto& [k, v] : j_->items())
      if (!seen_.count(k)) err(k, "unknown key");
  }

 private:
  const json* take(const char* key) {
    seen_.insert(key);
    if (!j_ || !j_->contains(key)) return nullptr;
    const json& v = (*j_)[key];
    return v.is_null() ? nullptr : &v;
  }

  const json* j_ = nullptr;
  std::string path_;
  std::vector<std::string>* errs_;
  std::set<std::string> seen_;
};

const char* scheme_name(Scheme s) { return s == Scheme::kEtdRk2 ? "etd_rk2" : "exponential_euler"; }
const char* norm_name(TubeNorm n) { return n == TubeNorm::kL2 ? "L2" : "H1"; }
const char* spectrum_name(NoiseSpectrum s) { return s == NoiseSpectrum::kSmoothed ? "smoothed" : "white"; }

std::string num(double v) { return fmt_num(v); }

const std::set<std::string> kTestFunctions{"cos", "sin", "cos2", "one"};

}  // namespace

IsochronConfig ExperimentConfig::isochron() const {
  IsochronConfig c;
  c.flow = flow;
  c.T_inf = T_inf;
  return c;
}

ConfigReport validate_config_json(const json& doc) {
  ConfigReport rep;
  auto& errs = rep.errors;
  ExperimentConfig& c = rep.config;
  if (!doc.is_object()) {
    errs.push_back("config: top level must be a mapping");
    return rep;
  }
  static const std::set<std::string> kBlocks{"model", "grid", "flow", "noise", "tube",
                                             "reduction", "isochron", "run", "output"};
  for (const auto& [k, v] : doc.items())
    if (!kBlocks.count(k)) errs.push_back(k + ": unknown block");

  // grid
  int M = 256;
  double L = 2 * std::numbers::pi;
  {
    Block b(doc, "grid", errs);
    b.get("M", M);
    b.get("L", L);
    b.check(M >= 8 && M % 2 == 0, "M", "must be an even integer >= 8");
    b.check(L > 0 && std::isfinite(L), "L", "must be > 0");
    b.finish();
  }

  // model
  std::string kind = "neural_field";
  NeuralFieldParams nf;
  ReactionDiffusionParams rd;
  int quadrature = 0;
  {
    Block b(doc, "model", errs);
    b.get("kind", kind);
    if (kind == "neural_field") {
      b.get("kernel", nf.kernel);
      b.get("beta", nf.beta);
      b.get("threshold", nf.threshold);
      b.get("adaptation", nf.adaptation);
      b.get("adaptation_epsilon", nf.adaptation_epsilon);
      b.check(!nf.kernel.empty(), "kernel", "needs at least one cosine coefficient");
      b.check(nf.beta > 0, "beta", "must be > 0");
      b.check(nf.adaptation_epsilon > 0, "adaptation_epsilon", "must be > 0");
    } else if (kind == "reaction_diffusion") {
      b.get("poly", rd.poly);
      b.get("diffusion", rd.diffusion);
      b.get("speed", rd.speed);
      b.get("recovery", rd.recovery);
      b.get("recovery_diffusion", rd.recovery_diffusion);
      b.get("eps", rd.eps);
      b.get("gamma", rd.gamma);
      b.get("unknown_speed", c.unknown_speed);
      b.check(rd.poly.size() >= 2, "poly", "needs at least two coefficients");
      b.check(rd.diffusion > 0, "diffusion", "must be > 0");
      b.check(rd.recovery_diffusion >= 0, "recovery_diffusion", "must be >= 0");
    } else {
      b.err("kind", "must be neural_field or reaction_diffusion");
    }
    b.get("quadrature_points", quadrature);
    b.check(quadrature == 0 || quadrature >= M, "quadrature_points", "must be 0 (automatic) or >= grid.M");
    b.finish();
  }
  const bool model_ok = errs.empty();
  if (model_ok) {
    try {
      const Grid g(M, L);
      c.model = kind == "neural_field" ? ModelSpec::neural_field(g, nf) : ModelSpec::reaction_diffusion(g, rd);
      if (quadrature > 0) c.model.quadrature_points = quadrature;
      c.flow = default_flow_config(c.model);
    } catch (const Error& e) {
      errs.push_back(std::string("model: ") + e.what());
    }
  }

  // flow
  {
    Block b(doc, "flow", errs);
    std::string scheme = scheme_name(c.flow.scheme);
    b.get("dt", c.flow.dt);
    b.get("scheme", scheme);
    b.get("T_max", c.flow.T_max);
    b.get("convergence_tol", c.flow.convergence_tol);
    b.get("divergence_bound", c.flow.divergence_bound);
    if (scheme == "exponential_euler")
      c.flow.scheme = Scheme::kExponentialEuler;
    else if (scheme == "etd_rk2")
      c.flow.scheme = Scheme::kEtdRk2;
    else
      b.err("scheme", "must be exponential_euler or etd_rk2");
    b.check(c.flow.dt > 0, "dt", "must be > 0");
    b.check(c.flow.T_max > 0, "T_max", "must be > 0");
    b.check(c.flow.convergence_tol > 0, "convergence_tol", "must be > 0");
    b.check(c.flow.divergence_bound > 0, "divergence_bound", "must be > 0");
    b.finish();
  }

  // noise
  {
    Block b(doc, "noise", errs);
    std::string spectrum = "white";
    b.get("K", c.noise.K);
    b.get("spectrum", spectrum);
    b.get("kappa", c.noise.kappa);
    b.get("gain", c.noise.gain);
    if (!b.has("sigma"))
      b.err("sigma", "required (list of noise amplitudes)");
    b.get("sigma", c.sigmas);
    if (spectrum == "white")
      c.noise.spectrum = NoiseSpectrum::kWhite;
    else if (spectrum == "smoothed")
      c.noise.spectrum = NoiseSpectrum::kSmoothed;
    else
      b.err("spectrum", "must be white or smoothed");
    b.check(c.noise.K >= 0 && 3 * c.noise.K <= M, "K", "must satisfy 0 <= K <= grid.M / 3");
    b.check(c.noise.kappa >= 0, "kappa", "must be >= 0");
    b.check(!c.noise.gain.empty() && c.noise.gain.size() <= 2, "gain", "must be [g0] or [g0, g1] (affine in u)");
    if (b.has("sigma") && c.sigmas.empty()) b.err("sigma", "must not be empty");
    for (double s : c.sigmas)
      if (!(s > 0) || !std::isfinite(s)) {
        b.err("sigma", "entries must be > 0");
        break;
      }
    std::vector<double> sorted = c.sigmas;
    std::sort(sorted.begin(), sorted.end(), std::greater<>());
    if (std::adjacent_find(sorted.begin(), sorted.end()) != sorted.end()) b.err("sigma", "entries must be distinct");
    if (sorted != c.sigmas) {
      rep.warnings.push_back("noise.sigma: reordered to descending");
      c.sigmas = sorted;
    }
    b.finish();
  }

  // tube
  {
    Block b(doc, "tube", errs);
    std::string norm = "H1";
    b.get("delta", c.delta);
    b.get("norm", norm);
    if (norm == "H1")
      c.norm = TubeNorm::kH1;
    else if (norm == "L2")
      c.norm = TubeNorm::kL2;
    else
      b.err("norm", "must be H1 or L2");
    b.check(c.delta > 0, "delta", "must be > 0");
    b.finish();
  }

  // reduction
  {
    Block b(doc, "reduction", errs);
    b.get("n_alpha", c.n_alpha);
    b.get("T_inf", c.T_inf);
    b.get("equivariant", c.equivariant);
    b.check(c.n_alpha >= 4, "n_alpha", "must be >= 4");
    b.check(c.T_inf >= 0, "T_inf", "must be >= 0 (0 selects the automatic horizon)");
    b.finish();
  }

  // isochron sampling
  {
    Block b(doc, "isochron", errs);
    b.get("samples", c.isochron_samples);
    b.get("radius", c.isochron_radius);
    b.check(c.isochron_samples >= 0, "samples", "must be >= 0");
    b.check(c.isochron_radius >= 0, "radius", "must be >= 0");
    b.finish();
  }

  // run
  {
    RunBlock& r = c.run;
    Block b(doc, "run", errs);
    b.get("paths", r.paths);
    b.get("T", r.T);
    b.get("t_sigma_c", r.t_sigma_c);
    b.get("dt", r.dt);
    b.get("stride", r.stride);
    b.get("refine", r.refine);
    b.get("seed", r.seed);
    b.get("threads", r.threads);
    b.get("audit_every", r.audit_every);
    b.get("stop_at_exit", r.stop_at_exit);
    b.get("path_files", r.path_files);
    b.get("replay_paths", r.replay_paths);
    b.get("exit_t_grid", r.exit_t_grid);
    b.get("t_ref", r.t_ref);
    b.get("test_function", r.test_function);
    b.get("epsilon", r.epsilon);
    b.get("window", r.window);
    b.check(r.paths >= 0, "paths", "must be >= 0");
    b.check(r.T >= 0 && r.t_sigma_c >= 0, "T", "T and t_sigma_c must be >= 0");
    if (r.T > 0 && r.t_sigma_c > 0) b.err("T", "set either run.T or run.t_sigma_c, not both");
    if (r.paths > 0 && r.T == 0 && r.t_sigma_c == 0) b.err("T", "required when paths > 0 (or set run.t_sigma_c)");
    if (r.t_sigma_c > 0 && r.t_sigma_c < 1) b.err("t_sigma_c", "sigma^2 t_sigma must be >= 1");
    b.check(r.dt > 0, "dt", "must be > 0");
    b.check(r.stride >= 1, "stride", "must be >= 1");
    b.check(r.refine >= 1, "refine", "must be >= 1");
    b.check(r.threads >= 0, "threads", "must be >= 0");
    b.check(r.audit_every >= 0, "audit_every", "must be >= 0");
    b.check(r.path_files >= 0, "path_files", "must be >= 0");
    b.check(r.replay_paths >= 0, "replay_paths", "must be >= 0");
    for (std::size_t i = 0; i < r.exit_t_grid.size(); ++i)
      if (!(r.exit_t_grid[i] > 0) || (i && r.exit_t_grid[i] <= r.exit_t_grid[i - 1])) {
        b.err("exit_t_grid", "must be positive and increasing");
        break;
      }
    b.check(r.t_ref >= 0, "t_ref", "must be >= 0");
    b.check(kTestFunctions.count(r.test_function) > 0, "test_function", "must be one of cos, sin, cos2, one");
    b.check(r.epsilon > 0, "epsilon", "must be > 0");
    b.check(r.window >= 0, "window", "must be >= 0 (0 selects 1 / sigma^2)");
    b.finish();
  }

  // output
  {
    Block b(doc, "output", errs);
    b.get("dir", c.out_dir);
    b.get("svg", c.svg);
    b.check(!c.out_dir.empty(), "dir", "must not be empty");
    b.finish();
  }

  if (c.run.t_sigma_c > 0 && !c.sigmas.empty() && errs.empty()) {
    std::vector<double> ts;
    for (double s : c.sigmas) ts.push_back(c.horizon(s));
    try {
      validate_schedule(c.sigmas, ts);
    } catch (const Error& e) {
      errs.push_back(std::string("run.t_sigma_c: ") + e.what());
    }
  }
  for (double s : c.sigmas)
    if (c.delta <= s * s)
      rep.warnings.push_back("tube.delta: delta = " + num(c.delta) + " <= sigma^2 = " + num(s * s) + " (sigma = " +
                             num(s) + "), outside the concentration window sigma^2 < delta < delta*");

  if (rep.ok()) rep.normalized = normalized_json(c);
  return rep;
}

ConfigReport validate_config_text(const std::string& text, bool is_json) {
  json doc;
  try {
    doc = is_json ? json::parse(text) : yaml_to_json(YAML::Load(text));
  } catch (const std::exception& e) {
    ConfigReport rep;
    rep.errors.push_back(std::string("config: parse error: ") + e.what());
    return rep;
  }
  if (doc.is_null()) doc = json::object();
  return validate_config_json(doc);
}

ConfigReport validate_config_file(const std::string& path) {
  std::string text;
  try {
    text = read_text(path);
  } catch (const Error&) {
    ConfigReport rep;
    rep.errors.push_back("config: cannot read " + path);
    return rep;
  }
  const bool is_json = path.size() >= 5 && path.compare(path.size() - 5, 5, ".json") == 0;
  return validate_config_text(text, is_json);
}

ExperimentConfig load_config(const std::string& path) {
  auto rep = validate_config_file(path);
  if (!rep.ok()) fail(ErrorCode::kConfig, rep.errors.front());
  return rep.config;
}

ordered_json normalized_json(const ExperimentConfig& c) {
  const ModelSpec& m = c.model;
  ordered_json j;
  ordered_json model;
  if (m.kind == ModelKind::kNeuralFieldRing) {
    model["kind"] = "neural_field";
    model["kernel"] = m.nf.kernel;
    model["beta"] = m.nf.beta;
    model["threshold"] = m.nf.threshold;
    model["adaptation"] = m.nf.adaptation;
    model["adaptation_epsilon"] = m.nf.adaptation_epsilon;
  } else {
    model["kind"] = "reaction_diffusion";
    model["poly"] = m.rd.poly;
    model["diffusion"] = m.rd.diffusion;
    model["speed"] = m.rd.speed;
    model["recovery"] = m.rd.recovery;
    model["recovery_diffusion"] = m.rd.recovery_diffusion;
    model["eps"] = m.rd.eps;
    model["gamma"] = m.rd.gamma;
    model["unknown_speed"] = c.unknown_speed;
  }
  model["quadrature_points"] = m.quadrature_points;
  j["model"] = model;
  j["grid"] = {{"M", m.grid.M}, {"L", m.grid.L}};
  j["flow"] = {{"dt", c.flow.dt},
               {"scheme", scheme_name(c.flow.scheme)},
               {"T_max", c.flow.T_max},
               {"convergence_tol", c.flow.convergence_tol},
               {"divergence_bound", c.flow.divergence_bound}};
  j["noise"] = {{"K", c.noise.K},
                {"spectrum", spectrum_name(c.noise.spectrum)},
                {"kappa", c.noise.kappa},
                {"gain", c.noise.gain},
                {"sigma", c.sigmas}};
  j["tube"] = {{"delta", c.delta}, {"norm", norm_name(c.norm)}};
  j["reduction"] = {{"n_alpha", c.n_alpha}, {"T_inf", c.T_inf}, {"equivariant", c.equivariant}};
  j["isochron"] = {{"samples", c.isochron_samples}, {"radius", c.isochron_radius}};
  const RunBlock& r = c.run;
  j["run"] = {{"paths", r.paths},
              {"T", r.T},
              {"t_sigma_c", r.t_sigma_c},
              {"dt", r.dt},
              {"stride", r.stride},
              {"refine", r.refine},
              {"seed", r.seed},
              {"threads", r.threads},
              {"audit_every", r.audit_every},
              {"stop_at_exit", r.stop_at_exit},
              {"path_files", r.path_files},
              {"replay_paths", r.replay_paths},
              {"exit_t_grid", r.exit_t_grid},
              {"t_ref", r.t_ref},
              {"test_function", r.test_function},
              {"epsilon", r.epsilon},
              {"window", r.window}};
  j["output"] = {{"dir", c.out_dir}, {"svg", c.svg}};
  return j;
}

std::string config_fingerprint(const ExperimentConfig& c) {
  auto j = normalized_json(c);
  j["output"].erase("dir");
  j["run"].erase("threads");
  j["run"].erase("seed");
  return j.dump();
}

}  // namespace isophase
