#ifndef DFRC_BEAM_H
#define DFRC_BEAM_H

/* Generated by cbindgen from dfrc-beam-ffi; do not edit by hand. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

/**
 * Success.
 */
#define DFRC_OK 0

/**
 * Null pointer, bad index, or an internal panic.
 */
#define DFRC_ERR_INTERNAL 1

/**
 * The scenario is certified infeasible.
 */
#define DFRC_ERR_INFEASIBLE 2

/**
 * The solver stalled or hit a numerical failure.
 */
#define DFRC_ERR_SOLVER 3

/**
 * Malformed JSON or invalid scenario parameters.
 */
#define DFRC_ERR_CONFIG 4

/**
 * An immutable scenario: array geometry, users, noise, seed.
 */
typedef struct DfrcScenario DfrcScenario;

/**
 * A solved scenario: beamformers plus the metric report.
 */
typedef struct DfrcSolution DfrcSolution;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Version string of the underlying library; static storage.
 */
const char *dfrc_version(void);

/**
 * Message for the most recent failure on this thread. Valid until the next
 * failing call; never null.
 */
const char *dfrc_last_error_message(void);

/**
 * Parses a JSON scenario (CLI schema). Returns null on failure.
 */
struct DfrcScenario *dfrc_scenario_from_json(const char *json);

/**
 * Releases a scenario handle. Null is a no-op.
 */
void dfrc_scenario_free(struct DfrcScenario *scenario);

/**
 * Antennas in the scenario's array; 0 on null.
 */
size_t dfrc_scenario_n_antennas(const struct DfrcScenario *scenario);

/**
 * Users in the scenario; 0 on null.
 */
size_t dfrc_scenario_n_users(const struct DfrcScenario *scenario);

/**
 * Solves the scenario. On `DFRC_OK` and `DFRC_ERR_INFEASIBLE` a solution
 * handle is written to `out` (inspect its status and metrics); the caller
 * owns it. Other codes leave `out` null.
 */
int dfrc_solve(const struct DfrcScenario *scenario, struct DfrcSolution **out);

/**
 * Releases a solution handle. Null is a no-op.
 */
void dfrc_solution_free(struct DfrcSolution *solution);

/**
 * Solve status as an error code: OK, INFEASIBLE, or SOLVER.
 */
int dfrc_solution_status(const struct DfrcSolution *solution);

/**
 * True when the solve converged and the matrix solution passed the
 * original-constraint check.
 */
bool dfrc_solution_feasible(const struct DfrcSolution *solution);

/**
 * Array power toward the look direction; NaN when unsolved or null.
 */
double dfrc_solution_objective(const struct DfrcSolution *solution);

/**
 * Sum rate over users at the nominal channels (bps/Hz); NaN when unsolved.
 */
double dfrc_solution_sum_rate(const struct DfrcSolution *solution);

/**
 * Detection probability of the radar probe; NaN when unsolved.
 */
double dfrc_solution_p_detect(const struct DfrcSolution *solution);

/**
 * Inverted sidelobe-to-mainlobe ratio in dB; NaN when unsolved.
 */
double dfrc_solution_ismr_inv_db(const struct DfrcSolution *solution);

/**
 * Users in the solution; 0 on null.
 */
size_t dfrc_solution_n_users(const struct DfrcSolution *solution);

/**
 * Antennas per beamformer; 0 on null or unsolved.
 */
size_t dfrc_solution_n_antennas(const struct DfrcSolution *solution);

/**
 * Rate of one user at its nominal channel; NaN on a bad index.
 */
double dfrc_solution_user_rate(const struct DfrcSolution *solution, size_t user);

/**
 * Monte-Carlo outage estimate of one user; NaN on a bad index.
 */
double dfrc_solution_empirical_outage(const struct DfrcSolution *solution, size_t user);

/**
 * Copies user `user`'s extracted beamformer into `re`/`im`, each with room
 * for `capacity` entries. Needs `capacity >= dfrc_solution_n_antennas`.
 */
int dfrc_solution_beam(const struct DfrcSolution *solution,
                       size_t user,
                       double *re,
                       double *im,
                       size_t capacity);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* DFRC_BEAM_H */
