/* C interface to the mfewave solvers. */

#pragma once

/* Generated with cbindgen:0.27.0 */

#include <stdarg.h>
#include <stdbool.h>
#include <stdint.h>
#include <stdlib.h>

// Status codes returned by every fallible entry point.
typedef enum MfwStatus {
  MFW_STATUS_OK = 0,
  MFW_STATUS_INVALID_ARGUMENT = 1,
  MFW_STATUS_NUMERICAL_FAILURE = 2,
  MFW_STATUS_CONFIG_ERROR = 3,
  MFW_STATUS_NULL_POINTER = 4,
  MFW_STATUS_IO_ERROR = 5,
  MFW_STATUS_PANIC = 6,
} MfwStatus;

// A configured problem: grid, modulation, source and truncation index.
typedef struct MfwProblem MfwProblem;

// A computed trajectory (direct or coupled-harmonics).
typedef struct MfwTrajectory MfwTrajectory;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

// Copies the most recent error message of this thread into `buf`
// (NUL-terminated, truncated to `len`). Returns the full message length in
// bytes, excluding the terminator.
//
// # Safety
// `buf` must be null or point to at least `len` writable bytes.
uintptr_t mfw_last_error_message(char *buf, uintptr_t len);

// Builds a problem from configuration text in the `key = value` format
// also accepted by the CLI (empty text selects all defaults).
//
// # Safety
// `config_text` must be a NUL-terminated string or null; `out` must point
// to writable storage for one pointer.
enum MfwStatus mfw_problem_create(const char *config_text, struct MfwProblem **out);

// Releases a problem handle; null is ignored.
//
// # Safety
// `problem` must come from [`mfw_problem_create`] and not be freed twice.
void mfw_problem_free(struct MfwProblem *problem);

// Number of interior grid nodes (the length of every field vector).
//
// # Safety
// `problem` must be a live handle from [`mfw_problem_create`].
uintptr_t mfw_problem_grid_size(const struct MfwProblem *problem);

// Trapezoidal solve of the modulated equation itself.
//
// # Safety
// `problem` must be a live handle; `out` must point to writable storage.
enum MfwStatus mfw_solve_direct(const struct MfwProblem *problem,
                                double tau,
                                uintptr_t steps,
                                struct MfwTrajectory **out);

// Trapezoidal solve of the coupled-harmonics system (truncation index
// `mfe.k` from the configuration).
//
// # Safety
// `problem` must be a live handle; `out` must point to writable storage.
enum MfwStatus mfw_solve_mfe(const struct MfwProblem *problem,
                             double tau,
                             uintptr_t steps,
                             struct MfwTrajectory **out);

// Releases a trajectory handle; null is ignored.
//
// # Safety
// `traj` must come from a solve call and not be freed twice.
void mfw_trajectory_free(struct MfwTrajectory *traj);

// Number of stored states (step count + 1); 0 for a null handle.
//
// # Safety
// `traj` must be a live trajectory handle or null.
uintptr_t mfw_trajectory_states(const struct MfwTrajectory *traj);

// Length of the field vectors (interior node count).
//
// # Safety
// `traj` must be a live trajectory handle or null.
uintptr_t mfw_trajectory_field_len(const struct MfwTrajectory *traj);

// Copies the physical field u at one step into `out` (for the expansion
// this is the reconstructed real field).
//
// # Safety
// `traj` and `problem` must be live handles; `out` must point to at least
// `len` writable doubles.
enum MfwStatus mfw_trajectory_field(const struct MfwTrajectory *traj,
                                    const struct MfwProblem *problem,
                                    uintptr_t step,
                                    double *out,
                                    uintptr_t len);

// Discrete energy of a direct trajectory at one step.
//
// # Safety
// `traj` and `problem` must be live handles; `out` must be writable.
enum MfwStatus mfw_trajectory_energy(const struct MfwTrajectory *traj,
                                     const struct MfwProblem *problem,
                                     uintptr_t step,
                                     double *out);

// Number of nonnegative harmonics carried by an expansion trajectory
// (span + 1); 0 for direct trajectories or null.
//
// # Safety
// `traj` must be a live trajectory handle or null.
uintptr_t mfw_trajectory_harmonic_count(const struct MfwTrajectory *traj);

// Space-time norms of the nonnegative harmonics of an expansion
// trajectory, written into `out[0..count]`.
//
// # Safety
// `traj` and `problem` must be live handles; `out` must hold `len` doubles.
enum MfwStatus mfw_trajectory_harmonic_norms(const struct MfwTrajectory *traj,
                                             const struct MfwProblem *problem,
                                             double *out,
                                             uintptr_t len);

// Runs one experiment command ("convergence", "decay", "energy",
// "visualize" or "laplace-diag") with the given configuration text,
// writing CSV (and optional SVG) files under `out_dir`.
//
// # Safety
// `command` and `out_dir` must be NUL-terminated strings; `config_text`
// may be null for defaults.
enum MfwStatus mfw_run_command(const char *command, const char *config_text, const char *out_dir);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus
