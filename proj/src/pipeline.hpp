#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "config.hpp"

namespace isophase {

// wave, isochron, derivs, reduce, simulate, compare, exit-stats, all
const std::vector<std::string>& pipeline_stages();

struct RunOptions {
  std::optional<std::uint64_t> seed;  // overrides run.seed
  int threads = 0;                    // > 0 overrides ISOPHASE_THREADS and run.threads
  std::string out;                    // overrides output.dir
  std::function<void(const std::string&)> log;
};

struct RunResult {
  std::string out_dir;
  std::vector<std::string> stages;
  std::vector<std::string> files;  // relative to out_dir, manifest last
  nlohmann::ordered_json manifest;
};

// Runs one stage (or all). Artifacts are staged and moved into the output directory only
// when the stage succeeds; on failure nothing from the failing run is left behind.
RunResult run_pipeline(const ExperimentConfig& cfg, const std::string& stage, const RunOptions& opt = {});

std::string sha256_hex(const std::string& bytes);

}  // namespace isophase
