#include "isophase/isophase.h"

#include <cstdlib>
#include <cstring>
#include <memory>
#include <new>
#include <string>

#include "config.hpp"
#include "pipeline.hpp"

using namespace isophase;

struct isophase_config {
  ConfigReport report;
  std::string normalized;
};

struct isophase_frame {
  ExperimentConfig cfg;
  ManifoldFrame frame;
};

namespace {

thread_local std::string g_last_error;

template <class F>
int guard(F&& f) {
  try {
    f();
    g_last_error.clear();
    return ISOPHASE_OK;
  } catch (const Error& e) {
    g_last_error = e.what();
    return int(e.code());
  } catch (const std::bad_alloc&) {
    g_last_error = "out of memory";
    return ISOPHASE_E_INTERNAL;
  } catch (const std::exception& e) {
    g_last_error = e.what();
    return ISOPHASE_E_INTERNAL;
  }
}

char* dup(const std::string& s) {
  char* p = static_cast<char*>(std::malloc(s.size() + 1));
  if (!p) throw std::bad_alloc();
  std::memcpy(p, s.c_str(), s.size() + 1);
  return p;
}

void need(const void* p, const char* what) {
  if (!p) fail(ErrorCode::kInvalidArgument, std::string(what) + " is null");
}

int adopt(ConfigReport rep, isophase_config** out) {
  return guard([&] {
    need(out, "out");
    *out = nullptr;
    if (!rep.ok()) {
      std::string msg;
      for (const auto& e : rep.errors) msg += (msg.empty() ? "" : "; ") + e;
      fail(ErrorCode::kConfig, msg);
    }
    auto c = std::make_unique<isophase_config>();
    c->normalized = rep.normalized.dump(2);
    c->report = std::move(rep);
    *out = c.release();
  });
}

Field state_from(const isophase_frame* f, const double* x, std::size_t n) {
  const Grid& g = f->frame.model.grid;
  const std::size_t want = std::size_t(g.M) * f->frame.model.components;
  need(x, "x");
  require(n == want, ErrorCode::kInvalidArgument, "state length " + std::to_string(n) + " != " + std::to_string(want));
  return Field(g, f->frame.model.components, std::vector<double>(x, x + n));
}

}  // namespace

extern "C" {

ISOPHASE_API const char* isophase_version(void) { return "0.1.0"; }

ISOPHASE_API const char* isophase_status_name(int status) {
  if (status == ISOPHASE_OK) return "ok";
  if (status == ISOPHASE_E_INTERNAL) return "internal";
  if (status >= 1 && status <= 12) return error_name(ErrorCode(status));
  return "unknown";
}

ISOPHASE_API const char* isophase_last_error(void) { return g_last_error.c_str(); }

ISOPHASE_API void isophase_string_free(char* s) { std::free(s); }

ISOPHASE_API int isophase_config_load(const char* path, isophase_config** out) {
  if (!path) return guard([] { need(nullptr, "path"); });
  return adopt(validate_config_file(path), out);
}

ISOPHASE_API int isophase_config_parse(const char* text, int is_json, isophase_config** out) {
  if (!text) return guard([] { need(nullptr, "text"); });
  return adopt(validate_config_text(text, is_json != 0), out);
}

ISOPHASE_API void isophase_config_free(isophase_config* cfg) { delete cfg; }

ISOPHASE_API const char* isophase_config_normalized(const isophase_config* cfg) {
  return cfg ? cfg->normalized.c_str() : nullptr;
}

ISOPHASE_API size_t isophase_config_warning_count(const isophase_config* cfg) {
  return cfg ? cfg->report.warnings.size() : 0;
}

ISOPHASE_API const char* isophase_config_warning(const isophase_config* cfg, size_t i) {
  if (!cfg || i >= cfg->report.warnings.size()) return nullptr;
  return cfg->report.warnings[i].c_str();
}

ISOPHASE_API int isophase_config_validate(const char* path, char** report_json) {
  return guard([&] {
    need(path, "path");
    need(report_json, "report_json");
    *report_json = nullptr;
    const auto rep = validate_config_file(path);
    nlohmann::ordered_json j;
    j["ok"] = rep.ok();
    j["errors"] = rep.errors;
    j["warnings"] = rep.warnings;
    j["normalized"] = rep.ok() ? rep.normalized : nlohmann::ordered_json(nullptr);
    *report_json = dup(j.dump());
  });
}

ISOPHASE_API int isophase_run(const isophase_config* cfg, const char* stage, const isophase_run_options* opt,
                              char** manifest_json) {
  return guard([&] {
    need(cfg, "cfg");
    need(stage, "stage");
    if (manifest_json) *manifest_json = nullptr;
    RunOptions ro;
    if (opt) {
      if (opt->has_seed) ro.seed = opt->seed;
      ro.threads = opt->threads;
      if (opt->out_dir) ro.out = opt->out_dir;
      if (opt->log) {
        const auto fn = opt->log;
        void* user = opt->user;
        ro.log = [fn, user](const std::string& m) { fn(m.c_str(), user); };
      }
    }
    const auto res = run_pipeline(cfg->report.config, stage, ro);
    if (manifest_json) *manifest_json = dup(res.manifest.dump());
  });
}

ISOPHASE_API int isophase_frame_build(const isophase_config* cfg, isophase_frame** out) {
  return guard([&] {
    need(cfg, "cfg");
    need(out, "out");
    *out = nullptr;
    const ExperimentConfig& c = cfg->report.config;
    const Grid& g = c.model.grid;
    const Field guess = c.model.kind == ModelKind::kNeuralFieldRing ? heaviside_bump_guess(g, c.model.nf)
                                                                     : nagumo_front_pair_guess(g, c.model.rd.diffusion);
    FrameOptions fo;
    fo.stationary.unknown_speed = c.unknown_speed;
    fo.decay_seed = c.run.seed;
    *out = new isophase_frame{c, build_frame(c.model, guess, c.flow, fo)};
  });
}

ISOPHASE_API void isophase_frame_free(isophase_frame* frame) { delete frame; }

ISOPHASE_API int isophase_frame_get_info(const isophase_frame* frame, isophase_frame_info* out) {
  return guard([&] {
    need(frame, "frame");
    need(out, "out");
    const ManifoldFrame& f = frame->frame;
    out->M = f.model.grid.M;
    out->L = f.model.grid.L;
    out->components = f.model.components;
    out->speed = f.model.speed();
    out->b_hat = f.b_hat;
    out->b_hat_r2 = f.b_hat_r2;
    out->newton_residual = f.newton_residual;
    out->goldstone_residual = f.goldstone_residual;
    out->adjoint_residual = f.adjoint_residual;
  });
}

ISOPHASE_API int isophase_frame_gamma(const isophase_frame* frame, double alpha, double* out, size_t n) {
  return guard([&] {
    need(frame, "frame");
    need(out, "out");
    const Field g = gamma(frame->frame, alpha);
    require(n == g.size(), ErrorCode::kInvalidArgument, "output length " + std::to_string(n) + " != " + std::to_string(g.size()));
    std::memcpy(out, g.data(), n * sizeof(double));
  });
}

ISOPHASE_API int isophase_phase(const isophase_frame* frame, const double* x, size_t n, int method, double* phase) {
  return guard([&] {
    need(frame, "frame");
    need(phase, "phase");
    const Field u = state_from(frame, x, n);
    const IsochronConfig ic = frame->cfg.isochron();
    switch (method) {
      case ISOPHASE_PHASE_NEWTON: *phase = isochron_newton(frame->frame, u, ic); break;
      case ISOPHASE_PHASE_FLOW: *phase = isochron_flow(frame->frame, u, ic); break;
      case ISOPHASE_PHASE_VARIATIONAL: *phase = variational_phase(frame->frame, u); break;
      default: fail(ErrorCode::kInvalidArgument, "unknown phase method " + std::to_string(method));
    }
  });
}

}  // extern "C"
