#include "sns3d/sns3d.h"

#include <exception>
#include <string>
#include <vector>

#include "sns3d/config.hpp"
#include "sns3d/integrator.hpp"
#include "sns3d/runner.hpp"

struct sns3d_ctx {
  sns3d::ExperimentConfig config;
  sns3d::RunOptions options;
  sns3d::RunReport report;
  std::string error;
  bool has_run = false;
};

namespace {

sns3d_status fail(sns3d_ctx* ctx, sns3d_status code, const std::string& msg) {
  if (ctx) ctx->error = msg;
  return code;
}

template <typename Fn>
sns3d_status guarded(sns3d_ctx* ctx, Fn&& fn) {
  if (!ctx) return SNS3D_ERR_INVALID_ARGUMENT;
  ctx->error.clear();
  try {
    return fn();
  } catch (const sns3d::ConfigError& e) {
    return fail(ctx, SNS3D_ERR_CONFIG, e.what());
  } catch (const sns3d::CheckpointError& e) {
    return fail(ctx, SNS3D_ERR_IO, e.what());
  } catch (const std::invalid_argument& e) {
    return fail(ctx, SNS3D_ERR_INVALID_ARGUMENT, e.what());
  } catch (const std::exception& e) {
    return fail(ctx, SNS3D_ERR_INTERNAL, e.what());
  }
}

}  // namespace

extern "C" {

const char* sns3d_version(void) { return sns3d::version_string(); }

sns3d_ctx* sns3d_ctx_new(void) {
  try {
    return new sns3d_ctx();
  } catch (...) {
    return nullptr;
  }
}

void sns3d_ctx_free(sns3d_ctx* ctx) { delete ctx; }

const char* sns3d_last_error(const sns3d_ctx* ctx) {
  return ctx ? ctx->error.c_str() : "null context";
}

sns3d_status sns3d_load_config_file(sns3d_ctx* ctx, const char* path) {
  return guarded(ctx, [&]() {
    if (!path) return fail(ctx, SNS3D_ERR_INVALID_ARGUMENT, "path is null");
    ctx->config = sns3d::parse_config_file(path);
    return SNS3D_OK;
  });
}

sns3d_status sns3d_load_config_text(sns3d_ctx* ctx, const char* text) {
  return guarded(ctx, [&]() {
    if (!text) return fail(ctx, SNS3D_ERR_INVALID_ARGUMENT, "text is null");
    ctx->config = sns3d::parse_config_text(text, "<text>");
    return SNS3D_OK;
  });
}

sns3d_status sns3d_set_option(sns3d_ctx* ctx, const char* key, const char* value) {
  return guarded(ctx, [&]() {
    if (!key || !value)
      return fail(ctx, SNS3D_ERR_INVALID_ARGUMENT, "key/value is null");
    sns3d::apply_config_key(ctx->config, key, value);
    return SNS3D_OK;
  });
}

sns3d_status sns3d_set_seed(sns3d_ctx* ctx, uint64_t seed) {
  return guarded(ctx, [&]() {
    ctx->options.seed = seed;
    return SNS3D_OK;
  });
}

sns3d_status sns3d_set_output_dir(sns3d_ctx* ctx, const char* dir) {
  return guarded(ctx, [&]() {
    if (!dir) return fail(ctx, SNS3D_ERR_INVALID_ARGUMENT, "dir is null");
    ctx->options.output_dir = std::string(dir);
    return SNS3D_OK;
  });
}

sns3d_status sns3d_set_resume(sns3d_ctx* ctx, const char* checkpoint_path) {
  return guarded(ctx, [&]() {
    if (!checkpoint_path)
      return fail(ctx, SNS3D_ERR_INVALID_ARGUMENT, "checkpoint path is null");
    ctx->options.resume_checkpoint = std::string(checkpoint_path);
    return SNS3D_OK;
  });
}

sns3d_status sns3d_set_threads(sns3d_ctx* ctx, int threads) {
  return guarded(ctx, [&]() {
    if (threads < 1)
      return fail(ctx, SNS3D_ERR_INVALID_ARGUMENT, "threads must be >= 1");
    ctx->options.threads = threads;
    return SNS3D_OK;
  });
}

sns3d_status sns3d_run(sns3d_ctx* ctx, const char* subcommand) {
  return guarded(ctx, [&]() {
    if (!subcommand)
      return fail(ctx, SNS3D_ERR_INVALID_ARGUMENT, "subcommand is null");
    ctx->report = sns3d::run_experiment(ctx->config, subcommand, ctx->options);
    ctx->has_run = true;
    if (ctx->report.blew_up)
      return fail(ctx, SNS3D_ERR_BLOWUP, "trajectory blew up; see summary.json");
    if (!ctx->report.ok) {
      std::string failed;
      for (const auto& c : ctx->report.checks)
        if (!c.pass) failed += (failed.empty() ? "" : ", ") + c.name;
      return fail(ctx, SNS3D_ERR_CHECK_FAILED, "checks failed: " + failed);
    }
    return SNS3D_OK;
  });
}

const char* sns3d_summary_json(const sns3d_ctx* ctx) {
  if (!ctx || !ctx->has_run) return "";
  return ctx->report.summary_json.c_str();
}

int sns3d_check_count(const sns3d_ctx* ctx) {
  if (!ctx || !ctx->has_run) return 0;
  return static_cast<int>(ctx->report.checks.size());
}

int sns3d_check_get(const sns3d_ctx* ctx, int idx, const char** name,
                    const char** detail) {
  if (!ctx || !ctx->has_run || idx < 0 ||
      idx >= static_cast<int>(ctx->report.checks.size()))
    return -1;
  const auto& c = ctx->report.checks[static_cast<std::size_t>(idx)];
  if (name) *name = c.name.c_str();
  if (detail) *detail = c.detail.c_str();
  return c.pass ? 1 : 0;
}

}  // extern "C"
