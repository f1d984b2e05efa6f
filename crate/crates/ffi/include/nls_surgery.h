#ifndef NLS_SURGERY_H
#define NLS_SURGERY_H

/* Generated by cbindgen from crates/ffi/src/lib.rs; do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

// Result code of every fallible call.
typedef enum NlsStatus {
  NLS_STATUS_OK = 0,
  NLS_STATUS_NULL_POINTER = 1,
  NLS_STATUS_INVALID_ARGUMENT = 2,
  NLS_STATUS_INVALID_GRID = 3,
  NLS_STATUS_LENGTH_MISMATCH = 4,
  NLS_STATUS_GRID_MISMATCH = 5,
  NLS_STATUS_NON_FINITE = 6,
  NLS_STATUS_ALIASING = 7,
  NLS_STATUS_NON_CONVERGENCE = 8,
  NLS_STATUS_UNRESOLVED_CORE = 9,
  NLS_STATUS_BLOWUP_SUSPECTED = 10,
  NLS_STATUS_INSUFFICIENT_POINTS = 11,
  NLS_STATUS_NO_TRIGGER = 12,
  NLS_STATUS_NO_PLATEAU = 13,
  NLS_STATUS_MAX_EVENTS = 14,
  NLS_STATUS_CONFIG = 15,
  NLS_STATUS_IO = 16,
  NLS_STATUS_PARSE = 17,
  NLS_STATUS_PANIC = 18,
} NlsStatus;

typedef enum NlsTrigger {
  NLS_TRIGGER_WINDOW_NORM = 0,
  NLS_TRIGGER_CORE_WIDTH = 1,
  NLS_TRIGGER_GRAD_CAP = 2,
} NlsTrigger;

// Complex radial field handle, tied to the grid it was created on.
typedef struct NlsField NlsField;

// Radial grid handle.
typedef struct NlsGrid NlsGrid;

// Ground state handle.
typedef struct NlsGroundState NlsGroundState;

// Finished surgery run handle.
typedef struct NlsRun NlsRun;

typedef struct NlsObservables {
  double mass;
  double energy;
  double grad_norm;
  double variance;
  double core_radius;
} NlsObservables;

typedef struct NlsEvolveConfig {
  double dt_min;
  double dt_max;
  double dt_safety;
  double grad_cap;
  // Zero for the free Schrödinger flow.
  int nonlinear;
} NlsEvolveConfig;

typedef struct NlsSurgeryConfig {
  double window;
  double s_max;
  double g_max;
  double plateau_tol;
  double min_core_cells;
  size_t max_events;
  size_t trace_every;
  struct NlsEvolveConfig evolve;
} NlsSurgeryConfig;

typedef struct NlsSurgeryEvent {
  double t_event;
  double mass_before;
  double mass_after;
  double jump;
  double excision_radius;
  enum NlsTrigger trigger;
} NlsSurgeryEvent;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

// Message of the last failed call on this thread, or NULL. The pointer is
// valid until the next failing call on the same thread.
const char *nls_last_error_message(void);

// Static name of a status code.
const char *nls_status_name(enum NlsStatus status);

// Grid for dimension `d >= 4` with `n` nodes on `[0, r_max]`.
//
// # Safety
// `out` must be a valid pointer to writable storage for a handle.
enum NlsStatus nls_grid_new(size_t d, size_t n, double r_max, struct NlsGrid **out);

// # Safety
// `grid` must be NULL or a handle from `nls_grid_new`, not yet freed.
void nls_grid_free(struct NlsGrid *grid);

// Number of nodes, 0 for NULL.
//
// # Safety
// `grid` must be NULL or a live grid handle.
size_t nls_grid_len(const struct NlsGrid *grid);

// Copy the `len` radial nodes into `out`.
//
// # Safety
// `grid` must be a live grid handle and `out` must hold `len` doubles.
enum NlsStatus nls_grid_nodes(const struct NlsGrid *grid, double *out, size_t len);

// Field with samples `re[j] + i im[j]` at the grid nodes; `im` may be NULL
// for a real field.
//
// # Safety
// `grid` must be a live grid handle, `re` (and `im` unless NULL) must hold
// `len` doubles, and `out` must be writable.
enum NlsStatus nls_field_new(const struct NlsGrid *grid,
                             const double *re,
                             const double *im,
                             size_t len,
                             struct NlsField **out);

// # Safety
// `field` must be NULL or a live field handle.
void nls_field_free(struct NlsField *field);

// Copy the samples into `re` and `im` (either may be NULL to skip it).
//
// # Safety
// `field` must be a live field handle; non-NULL buffers must hold `len`
// doubles.
enum NlsStatus nls_field_values(const struct NlsField *field, double *re, double *im, size_t len);

// Mass, energy, gradient norm, variance and 50% mass radius.
//
// # Safety
// `field` must be a live field handle and `out` writable.
enum NlsStatus nls_field_observables(const struct NlsField *field, struct NlsObservables *out);

// Solve for the ground state on `grid` to residual `tol`.
//
// # Safety
// `grid` must be a live grid handle and `out` writable.
enum NlsStatus nls_ground_state_solve(const struct NlsGrid *grid,
                                      double tol,
                                      struct NlsGroundState **out);

// # Safety
// `gs` must be NULL or a live ground state handle.
void nls_ground_state_free(struct NlsGroundState *gs);

// Mass, residual and peak value `Q(0)`; any output may be NULL.
//
// # Safety
// `gs` must be a live ground state handle; non-NULL outputs writable.
enum NlsStatus nls_ground_state_info(const struct NlsGroundState *gs,
                                     double *mass,
                                     double *residual,
                                     double *peak);

// The profile `Q` as a new field on the ground state's grid.
//
// # Safety
// `gs` must be a live ground state handle and `out` writable.
enum NlsStatus nls_ground_state_profile(const struct NlsGroundState *gs, struct NlsField **out);

// Pseudoconformal solution at time `t != 0` sampled on `grid`.
//
// # Safety
// `gs` and `grid` must be live handles and `out` writable.
enum NlsStatus nls_pseudoconformal(const struct NlsGroundState *gs,
                                   double t,
                                   const struct NlsGrid *grid,
                                   struct NlsField **out);

// Soliton of radius `radius` at time `t` sampled on `grid`.
//
// # Safety
// `gs` and `grid` must be live handles and `out` writable.
enum NlsStatus nls_rescaled_soliton(const struct NlsGroundState *gs,
                                    double radius,
                                    double t,
                                    const struct NlsGrid *grid,
                                    struct NlsField **out);

// Default time stepping parameters.
struct NlsEvolveConfig nls_evolve_config_default(void);

// Default surgery parameters.
struct NlsSurgeryConfig nls_surgery_config_default(void);

// Evolve `u0` from `t0` to `t_end` with adaptive steps; `config` may be
// NULL for the defaults.
//
// # Safety
// `u0` must be a live field handle, `config` NULL or valid, `out` writable.
enum NlsStatus nls_evolve(const struct NlsField *u0,
                          double t0,
                          double t_end,
                          const struct NlsEvolveConfig *config,
                          struct NlsField **out);

// Continuation with core excision from `t0` to `t_end`; `config` may be
// NULL for the defaults.
//
// # Safety
// `u0` must be a live field handle, `config` NULL or valid, `out` writable.
enum NlsStatus nls_run_semi_strichartz(const struct NlsField *u0,
                                       double t0,
                                       double t_end,
                                       const struct NlsSurgeryConfig *config,
                                       struct NlsRun **out);

// # Safety
// `run` must be NULL or a live run handle.
void nls_run_free(struct NlsRun *run);

// Number of surgery events, 0 for NULL.
//
// # Safety
// `run` must be NULL or a live run handle.
size_t nls_run_event_count(const struct NlsRun *run);

// Event `index` of the run.
//
// # Safety
// `run` must be a live run handle and `out` writable.
enum NlsStatus nls_run_event(const struct NlsRun *run, size_t index, struct NlsSurgeryEvent *out);

// The field at the end of the run.
//
// # Safety
// `run` must be a live run handle and `out` writable.
enum NlsStatus nls_run_final_field(const struct NlsRun *run, struct NlsField **out);

// Run experiment `id` ("e1".."e5"). `overrides` is NULL or a
// newline-separated list of `key=value` settings; outputs go to
// `output_dir/<id>` (the configured directory when NULL). `passed` receives
// 1 when every check passes, else 0.
//
// # Safety
// `id` must be a nul-terminated string; `overrides` and `output_dir` NULL or
// nul-terminated; `passed` NULL or writable.
enum NlsStatus nls_run_experiment(const char *id,
                                  const char *overrides,
                                  const char *output_dir,
                                  int *passed);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* NLS_SURGERY_H */
