#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "json.hpp"
#include "manifold.hpp"
#include "stochastic.hpp"

namespace isophase {

struct RunBlock {
  int paths = 0;
  // horizon per sigma: T when > 0, otherwise t_sigma_c / sigma^2
  double T = 0.0;
  double t_sigma_c = 0.0;
  double dt = 0.1;
  int stride = 10;
  int refine = 1;
  std::uint64_t seed = 1;
  int threads = 0;  // 0: ISOPHASE_THREADS or hardware
  int audit_every = 0;
  bool stop_at_exit = true;
  int path_files = 5;     // per-sigma path CSVs written
  int replay_paths = 20;  // paths whose noise increments are logged
  std::vector<double> exit_t_grid;  // empty: 8 points up to the horizon
  double t_ref = 0.0;               // 0: horizon / 2
  std::string test_function = "cos";
  double epsilon = 0.1;
  double window = 0.0;  // pairing window; 0 selects 1 / sigma^2
};

struct ExperimentConfig {
  ModelSpec model;  // grid, kind and parameters
  bool unknown_speed = false;
  FlowConfig flow;
  NoiseModel noise;  // sigma unused; see sigmas
  std::vector<double> sigmas;  // descending
  double delta = 0.5;
  TubeNorm norm = TubeNorm::kH1;
  int n_alpha = 64;
  double T_inf = 0.0;
  bool equivariant = true;
  int isochron_samples = 50;
  double isochron_radius = 0.2;
  RunBlock run;
  std::string out_dir = "out";
  bool svg = false;

  double horizon(double sigma) const { return run.T > 0 ? run.T : run.t_sigma_c / (sigma * sigma); }
  NoiseModel noise_at(double sigma) const {
    NoiseModel n = noise;
    n.sigma = sigma;
    return n;
  }
  IsochronConfig isochron() const;
};

struct ConfigReport {
  ExperimentConfig config;
  std::vector<std::string> errors;    // "field.path: message"
  std::vector<std::string> warnings;
  nlohmann::ordered_json normalized;  // every field explicit
  bool ok() const { return errors.empty(); }
};

// YAML (.yaml/.yml or anything else) or JSON (.json) file
ConfigReport validate_config_file(const std::string& path);
ConfigReport validate_config_text(const std::string& text, bool json);
ConfigReport validate_config_json(const nlohmann::json& doc);

// throws Config with the first error
ExperimentConfig load_config(const std::string& path);

nlohmann::ordered_json normalized_json(const ExperimentConfig& c);
// normalized config without run-placement fields (output directory, thread count)
std::string config_fingerprint(const ExperimentConfig& c);

}  // namespace isophase
