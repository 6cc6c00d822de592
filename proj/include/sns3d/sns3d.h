#ifndef SNS3D_H
#define SNS3D_H

/* C interface to the sns3d simulation library.
 *
 * All state lives behind an opaque context handle. Typical use:
 *
 *   sns3d_ctx *ctx = sns3d_ctx_new();
 *   sns3d_load_config_file(ctx, "run.cfg");
 *   sns3d_set_seed(ctx, 7);
 *   if (sns3d_run(ctx, "simulate") != SNS3D_OK)
 *       fprintf(stderr, "%s\n", sns3d_last_error(ctx));
 *   puts(sns3d_summary_json(ctx));
 *   sns3d_ctx_free(ctx);
 *
 * Functions return SNS3D_OK on success; on failure sns3d_last_error()
 * holds a message until the next call on the same context. Contexts are
 * not thread-safe; use one per thread.
 */

#include <stdint.h>

#ifdef __cplusplus
extern "C" {
#endif

typedef struct sns3d_ctx sns3d_ctx;

typedef enum sns3d_status {
  SNS3D_OK = 0,
  SNS3D_ERR_INVALID_ARGUMENT = 1, /* bad key, value, or subcommand */
  SNS3D_ERR_CONFIG = 2,           /* parse or validation failure */
  SNS3D_ERR_IO = 3,               /* file read/write failure */
  SNS3D_ERR_BLOWUP = 4,           /* trajectory left the finite regime */
  SNS3D_ERR_CHECK_FAILED = 5,     /* a requested validation check failed */
  SNS3D_ERR_INTERNAL = 6
} sns3d_status;

const char *sns3d_version(void);

sns3d_ctx *sns3d_ctx_new(void);
void sns3d_ctx_free(sns3d_ctx *ctx);

/* Message describing the most recent failure on this context. */
const char *sns3d_last_error(const sns3d_ctx *ctx);

/* Load / amend the experiment configuration. Keys and values use the same
 * flat dotted-key format as the config file (e.g. "truncation.k_max"). */
sns3d_status sns3d_load_config_file(sns3d_ctx *ctx, const char *path);
sns3d_status sns3d_load_config_text(sns3d_ctx *ctx, const char *text);
sns3d_status sns3d_set_option(sns3d_ctx *ctx, const char *key, const char *value);

/* Run-time overrides mirroring the CLI flags. */
sns3d_status sns3d_set_seed(sns3d_ctx *ctx, uint64_t seed);
sns3d_status sns3d_set_output_dir(sns3d_ctx *ctx, const char *dir);
sns3d_status sns3d_set_resume(sns3d_ctx *ctx, const char *checkpoint_path);
sns3d_status sns3d_set_threads(sns3d_ctx *ctx, int threads);

/* Subcommands: simulate, ou-validate, moments, gevrey, kolmogorov,
 * dissipation. Writes CSV/JSON outputs under the configured directory. */
sns3d_status sns3d_run(sns3d_ctx *ctx, const char *subcommand);

/* JSON summary of the last completed run ("" before any run). The pointer
 * stays valid until the next sns3d_run on the same context. */
const char *sns3d_summary_json(const sns3d_ctx *ctx);

/* Number of validation checks in the last run, and access to one check:
 * returns the pass flag (1/0) or -1 when idx is out of range; name/detail
 * pointers, when non-NULL, receive context-owned strings. */
int sns3d_check_count(const sns3d_ctx *ctx);
int sns3d_check_get(const sns3d_ctx *ctx, int idx, const char **name,
                    const char **detail);

#ifdef __cplusplus
}
#endif

#endif /* SNS3D_H */
