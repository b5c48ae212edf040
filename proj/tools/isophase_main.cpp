#include <cstdint>
#include <cstdio>
#include <iostream>
#include <string>

#include "CLI11.hpp"
#include "isophase/isophase.h"
#include "json.hpp"

namespace {

constexpr int kExitConfig = 1;
constexpr int kExitRuntime = 2;

int report(int status, const std::string& message) {
  nlohmann::json j{{"error", isophase_status_name(status)}, {"code", status}, {"message", message}};
  std::cerr << j.dump() << "\n";
  return status == ISOPHASE_E_CONFIG ? kExitConfig : kExitRuntime;
}

void log_line(const char* msg, void*) { std::cerr << "[isophase] " << msg << "\n"; }

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"isochronal phase reduction experiments"};
  std::string config, stage = "all", out;
  std::uint64_t seed = 0;
  int threads = 0;
  bool check = false, quiet = false;
  app.add_option("--config", config, "experiment configuration (YAML, or JSON by extension)")->required();
  app.add_option("--stage", stage, "wave, isochron, derivs, reduce, simulate, compare, exit-stats or all");
  auto* seed_opt = app.add_option("--seed", seed, "master seed (overrides run.seed)");
  app.add_option("--threads", threads, "worker threads (overrides ISOPHASE_THREADS)")->check(CLI::NonNegativeNumber);
  app.add_option("--out", out, "output directory (overrides output.dir)");
  app.add_flag("--check", check, "validate the configuration and print the normalized echo");
  app.add_flag("--quiet", quiet, "no progress messages");
  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    if (e.get_exit_code() == 0) return app.exit(e);
    return report(ISOPHASE_E_CONFIG, e.what());
  }

  if (check) {
    char* rep = nullptr;
    const int st = isophase_config_validate(config.c_str(), &rep);
    if (st != ISOPHASE_OK) return report(st, isophase_last_error());
    const auto j = nlohmann::json::parse(rep);
    isophase_string_free(rep);
    for (const auto& w : j["warnings"]) std::cerr << nlohmann::json{{"warning", w}}.dump() << "\n";
    if (!j["ok"].get<bool>()) {
      std::string msg;
      for (const auto& e : j["errors"]) msg += (msg.empty() ? "" : "; ") + e.get<std::string>();
      return report(ISOPHASE_E_CONFIG, msg);
    }
    std::cout << j["normalized"].dump(2) << "\n";
    return 0;
  }

  isophase_config* cfg = nullptr;
  int st = isophase_config_load(config.c_str(), &cfg);
  if (st != ISOPHASE_OK) return report(st, isophase_last_error());
  for (std::size_t i = 0; i < isophase_config_warning_count(cfg); ++i)
    std::cerr << nlohmann::json{{"warning", isophase_config_warning(cfg, i)}}.dump() << "\n";

  isophase_run_options opt{};
  opt.has_seed = seed_opt->count() > 0;
  opt.seed = seed;
  opt.threads = threads;
  opt.out_dir = out.empty() ? nullptr : out.c_str();
  opt.log = quiet ? nullptr : log_line;
  char* manifest = nullptr;
  st = isophase_run(cfg, stage.c_str(), &opt, &manifest);
  isophase_config_free(cfg);
  if (st != ISOPHASE_OK) return report(st, isophase_last_error());
  const auto m = nlohmann::json::parse(manifest);
  isophase_string_free(manifest);
  std::cout << nlohmann::json{{"status", "ok"}, {"stages", m["stages"]}, {"quantities", m["quantities"]}}.dump()
            << "\n";
  return 0;
}
