#ifndef VANTAGE_H
#define VANTAGE_H

/* Generated with cbindgen:0.27.0 */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

/*
 Outcome of a fallible call, aligned with the CLI exit codes.
 */
typedef enum vantage_status_t {
  /*
   The call succeeded.
   */
  VANTAGE_STATUS_OK = 0,
  /*
   Invalid input: bad arguments, unreadable files, malformed data.
   */
  VANTAGE_STATUS_VALIDATION_ERROR = 2,
  /*
   The computation was impossible on the given data.
   */
  VANTAGE_STATUS_NUMERIC_ERROR = 3,
  /*
   An internal panic was caught; the handle states are unchanged.
   */
  VANTAGE_STATUS_PANIC = 5,
} vantage_status_t;

/*
 A loaded set of per-affordance manifold models plus the viewpoint set
 they were built on. Opaque; create with `vantage_model_load`, release
 with `vantage_model_free`.
 */
typedef struct vantage_model_t vantage_model_t;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/*
 Version of the library as a static NUL-terminated string; never freed.
 */
const char *vantage_version(void);

/*
 Message of the last error on this thread, empty after a success. The
 pointer stays valid until the next call into the library on the same
 thread; do not free it.
 */
const char *vantage_last_error(void);

/*
 Runs the full pipeline on the trials CSV at `trials_path` and writes all
 artifacts (values.csv, manifolds.json, rejected.json, report.json,
 plotdata/) under `out_dir`. `config_json` is a pipeline configuration
 document, or null for the defaults.

 # Safety
 String arguments must be null or NUL-terminated.
 */
enum vantage_status_t vantage_run_pipeline(const char *trials_path,
                                           const char *config_json,
                                           const char *out_dir);

/*
 Loads manifold models from a run's output directory (or a manifolds.json
 path directly) into a fresh handle stored in `*model`. The built-in
 lattice at the models' radius supplies member poses; load a custom set
 by running the pipeline instead of this shortcut.

 # Safety
 `models_path` must be NUL-terminated; `model` must point to writable
 pointer storage.
 */
enum vantage_status_t vantage_model_load(const char *models_path, struct vantage_model_t **model);

/*
 Releases a handle from `vantage_model_load`. Null is a no-op.

 # Safety
 `model` must be null or a pointer returned by `vantage_model_load` that
 has not been freed yet.
 */
void vantage_model_free(struct vantage_model_t *model);

/*
 Advises on the task plan in `plan_json` against the loaded models and
 stores the advice document in `*advice_json` as a heap string; release
 it with `vantage_string_free`.

 # Safety
 `model` must be a live handle; `plan_json` must be NUL-terminated;
 `advice_json` must point to writable pointer storage.
 */
enum vantage_status_t vantage_model_advise(const struct vantage_model_t *model,
                                           const char *plan_json,
                                           char **advice_json);

/*
 Releases a string produced by this library. Null is a no-op.

 # Safety
 `s` must be null or a string returned through an out-pointer of this
 library that has not been freed yet.
 */
void vantage_string_free(char *s);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* VANTAGE_H */
