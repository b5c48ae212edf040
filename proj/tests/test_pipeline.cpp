#include <doctest.h>

#include <filesystem>
#include <fstream>

#include "io.hpp"
#include "pipeline.hpp"

using namespace isophase;
namespace fs = std::filesystem;

namespace {

fs::path scratch(const std::string& name) {
  const fs::path p = fs::temp_directory_path() / ("isophase_test_" + name);
  fs::remove_all(p);
  return p;
}

ExperimentConfig small(const std::string& extra = "") {
  const auto rep = validate_config_text("grid: {M: 64}\nmodel: {quadrature_points: 384}\n"
                                        "noise: {K: 6, spectrum: smoothed, kappa: 0.05, sigma: [0.06, 0.03]}\n"
                                        "isochron: {samples: 3}\nreduction: {n_alpha: 8}\n" +
                                            extra,
                                        false);
  REQUIRE(rep.ok());
  return rep.config;
}

nlohmann::json manifest(const fs::path& dir) { return nlohmann::json::parse(read_text((dir / "manifest.json").string())); }

}  // namespace

TEST_CASE("wave stage on the default neural field") {
  const auto rep = validate_config_text("noise: {sigma: [0.1]}\n", false);
  REQUIRE(rep.ok());
  const fs::path out = scratch("wave");
  RunOptions o;
  o.out = out.string();
  const auto res = run_pipeline(rep.config, "wave", o);
  const auto fr = nlohmann::json::parse(read_text((out / "frame.json").string()));
  CHECK(fr["M"] == 256);
  CHECK(fr["newton_residual"].get<double>() <= 1e-9);
  CHECK(fr["b_hat"].get<double>() > 0);
  CHECK(fs::exists(out / "gamma0.csv"));
  CHECK(fs::exists(out / "psi_star0.csv.json"));
  CHECK_FALSE(fs::exists(out / ".partial"));
  const auto m = manifest(out);
  CHECK(m["seed"] == 1);
  CHECK(m["config_sha256"].get<std::string>().size() == 64);
  CHECK(m["quantities"].contains("b_hat"));
  CHECK(res.files.back() == "manifest.json");
  fs::remove_all(out);
}

TEST_CASE("all with zero paths runs the deterministic stages only") {
  const fs::path out = scratch("det");
  RunOptions o;
  o.out = out.string();
  const auto res = run_pipeline(small(), "all", o);
  CHECK(res.stages == std::vector<std::string>{"wave", "isochron", "derivs", "reduce"});
  for (const char* f : {"frame.json", "isochron_sample.csv", "derivs.json", "drift_terms.csv", "coeffs.json"})
    CHECK(fs::exists(out / f));
  for (const char* f : {"paths", "replay", "ensemble_0.json", "compare.json", "exit_stats.json"})
    CHECK_FALSE(fs::exists(out / f));
  const auto t = read_csv((out / "isochron_sample.csv").string());
  CHECK(t.header == std::vector<std::string>{"alpha_true", "pi_flow", "pi_newton", "beta", "gap", "dist"});
  CHECK(t.rows.size() == 3);
  const auto c = nlohmann::json::parse(read_text((out / "coeffs.json").string()));
  for (const char* k : {"alpha", "V", "g", "Pstar", "mean_drift"}) CHECK(c.contains(k));
  fs::remove_all(out);
}

TEST_CASE("reruns reproduce the artifacts byte for byte") {
  const auto cfg = small("run: {paths: 6, T: 20, stride: 5, path_files: 2, replay_paths: 2}\noutput: {svg: true}\n");
  const fs::path a = scratch("rerun_a"), b = scratch("rerun_b"), c = scratch("rerun_c");
  RunOptions o;
  o.out = a.string();
  o.threads = 1;
  run_pipeline(cfg, "simulate", o);
  o.out = b.string();
  o.threads = 3;
  run_pipeline(cfg, "simulate", o);
  CHECK(read_text((a / "manifest.json").string()) == read_text((b / "manifest.json").string()));
  for (const auto& f : manifest(a)["files"]) {
    const std::string rel = f["path"];
    CHECK(read_text((a / rel).string()) == read_text((b / rel).string()));
  }
  CHECK(fs::exists(a / "paths/sigma_1/path_1.csv"));
  CHECK(fs::exists(a / "replay/sigma_0/path_0.bin"));
  CHECK(read_text((a / "paths/sigma_0/path_0.csv").string()).rfind("t,pi,pi_unwrapped,dist,exited\n", 0) == 0);

  o.out = c.string();
  o.seed = 2;
  run_pipeline(cfg, "simulate", o);
  const auto mc = manifest(c);
  CHECK(mc["seed"] == 2);
  CHECK(mc["config_sha256"] == manifest(a)["config_sha256"]);
  CHECK(read_text((a / "ensemble_0.json").string()) != read_text((c / "ensemble_0.json").string()));
  for (const auto& p : {a, b, c}) fs::remove_all(p);
}

TEST_CASE("stochastic stages report what they cannot estimate") {
  const auto cfg = small("run: {paths: 4, t_sigma_c: 1.2, stride: 5, replay_paths: 2}\noutput: {svg: true}\n");
  const fs::path out = scratch("compare");
  RunOptions o;
  o.out = out.string();
  run_pipeline(cfg, "all", o);
  const auto cmp = nlohmann::json::parse(read_text((out / "compare.json").string()));
  CHECK(cmp["ergodic"]["rows"].size() == 2);
  CHECK(cmp["drift"][0].contains("skipped"));  // fewer than 100 paths
  const auto ex = nlohmann::json::parse(read_text((out / "exit_stats.json").string()));
  CHECK(ex.contains("skipped"));
  CHECK(fs::exists(out / "density.svg"));
  CHECK(fs::exists(out / "drift.svg"));
  fs::remove_all(out);
}

TEST_CASE("failures leave no partial artifacts") {
  const fs::path out = scratch("fail");
  fs::create_directories(out);
  std::ofstream(out / "keep.txt") << "x";
  RunOptions o;
  o.out = out.string();
  auto cfg = small();
  CHECK_THROWS_AS(run_pipeline(cfg, "bogus", o), Error);
  // the isochron stage cannot converge within this horizon, after wave has written its files
  cfg.flow.T_max = 1e-3;
  CHECK_THROWS_AS(run_pipeline(cfg, "all", o), Error);
  std::vector<std::string> left;
  for (const auto& e : fs::directory_iterator(out)) left.push_back(e.path().filename().string());
  CHECK(left == std::vector<std::string>{"keep.txt"});
  fs::remove_all(out);
}
