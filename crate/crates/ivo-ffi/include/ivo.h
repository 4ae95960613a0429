/* C ABI for the ivo collision avoidance toolkit. Generated by cbindgen; do not edit. */

#ifndef IVO_FFI_H
#define IVO_FFI_H

#pragma once

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

/**
 * Result of every fallible call.
 */
typedef enum IvoStatus {
  IVO_STATUS_OK = 0,
  /**
   * A required pointer argument was null.
   */
  IVO_STATUS_NULL_POINTER = 1,
  /**
   * An argument was non-finite, out of range, or not valid UTF-8.
   */
  IVO_STATUS_INVALID_ARGUMENT = 2,
  /**
   * Relative speed below the degenerate threshold; the cone value is
   * undefined there.
   */
  IVO_STATUS_DEGENERATE_VELOCITY = 3,
  /**
   * Observation spacing below the minimum interval.
   */
  IVO_STATUS_DEGENERATE_INTERVAL = 4,
  /**
   * Scenario text could not be parsed, or no such preset exists.
   */
  IVO_STATUS_PARSE_ERROR = 5,
  /**
   * Scenario violated an invariant.
   */
  IVO_STATUS_VALIDATION_ERROR = 6,
  /**
   * Index out of bounds.
   */
  IVO_STATUS_OUT_OF_RANGE = 7,
} IvoStatus;

/**
 * Opaque per-agent planner: parameters plus the current obstacle tracks.
 */
typedef struct IvoPlanner IvoPlanner;

/**
 * Opaque validated scenario.
 */
typedef struct IvoScenario IvoScenario;

/**
 * Opaque simulation trace.
 */
typedef struct IvoTrace IvoTrace;

/**
 * Coefficients of the homogenized cone constraint as a quadratic in the
 * agent velocity: `F(v) = c1*vx^2 + c2*vy^2 + c3*vx*vy + c4*vx + c5*vy + c6`.
 */
typedef struct IvoConeCoefficients {
  double c1;
  double c2;
  double c3;
  double c4;
  double c5;
  double c6;
} IvoConeCoefficients;

/**
 * Planner tuning knobs; see `ivo_planner_params_default` for the defaults.
 */
typedef struct IvoPlannerParams {
  double lambda;
  double v_max;
  double u_max;
  uint32_t n_radial;
  uint32_t n_angular;
  bool approaching_filter;
  double infeasible_penalty;
  double grid_rotation;
  double radius_margin;
} IvoPlannerParams;

/**
 * Outcome of one planning call.
 */
typedef struct IvoControlDecision {
  double ux;
  double uy;
  bool feasible;
  double cost;
  double worst_violation;
} IvoControlDecision;

/**
 * Aggregate run metrics.
 */
typedef struct IvoRunMetrics {
  bool all_arrived;
  /**
   * True iff some pair came closer than the sum of its radii.
   */
  bool collided;
  uint32_t steps;
  double min_separation;
  double min_clearance;
  double mean_plan_time_us;
  double max_plan_time_us;
} IvoRunMetrics;

/**
 * State of one agent at one recorded step.
 */
typedef struct IvoAgentState {
  double x;
  double y;
  double vx;
  double vy;
  double ux;
  double uy;
  bool feasible;
} IvoAgentState;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Static description of a status code.
 */
const char *ivo_status_message(enum IvoStatus status);

/**
 * Collision cone value `f = (r.v)^2/|v|^2 - |r|^2 + R^2` for an obstacle at
 * ego position `(rx, ry)` with relative velocity `(vx, vy)`. `f >= 0` means
 * the relative-velocity ray's supporting line passes within the combined
 * radius.
 *
 * # Safety
 * `out_f` must be a valid pointer to writable memory for one `double`.
 */
enum IvoStatus ivo_cone_value(double rx,
                              double ry,
                              double vx,
                              double vy,
                              double combined_radius,
                              double *out_f);

/**
 * True iff the obstacle will come within the combined radius at some future
 * time, assuming held velocities. Degenerate relative velocity falls back
 * to the static overlap test.
 *
 * # Safety
 * `out` must be a valid pointer to writable memory for one `bool`.
 */
enum IvoStatus ivo_on_collision_course(double rx,
                                       double ry,
                                       double vx,
                                       double vy,
                                       double combined_radius,
                                       bool *out);

/**
 * Finite-difference relative velocity from two consecutive ego observations.
 *
 * # Safety
 * `out_vx` and `out_vy` must be valid pointers to writable `double`s.
 */
enum IvoStatus ivo_estimate_relative_velocity(double prev_x,
                                              double prev_y,
                                              double prev_t,
                                              double curr_x,
                                              double curr_y,
                                              double curr_t,
                                              double *out_vx,
                                              double *out_vy);

/**
 * Quadratic-in-controls form of the cone constraint for an obstacle at ego
 * position `(rx, ry)` moving with velocity `(vox, voy)` in the ego axes.
 * `F(v_agent)` equals the cone value times `|v_obstacle - v_agent|^2`.
 *
 * # Safety
 * `out` must be a valid pointer to a writable [`IvoConeCoefficients`].
 */
enum IvoStatus ivo_cone_coefficients(double rx,
                                     double ry,
                                     double vox,
                                     double voy,
                                     double combined_radius,
                                     struct IvoConeCoefficients *out);

/**
 * Brute-force closest approach of `p(t) = r + v t` to the origin over
 * `[0, horizon]` sampled at `dt`.
 *
 * # Safety
 * `out_t_star` and `out_d_star` must be valid pointers to writable `double`s.
 */
enum IvoStatus ivo_min_separation(double rx,
                                  double ry,
                                  double vx,
                                  double vy,
                                  double horizon,
                                  double dt,
                                  double *out_t_star,
                                  double *out_d_star);

/**
 * Writes the default planner parameters.
 *
 * # Safety
 * `out` must be a valid pointer to a writable [`IvoPlannerParams`].
 */
enum IvoStatus ivo_planner_params_default(struct IvoPlannerParams *out);

/**
 * Creates a planner. Returns null when `params` is null or invalid.
 * Free with `ivo_planner_free`.
 *
 * # Safety
 * `params`, when non-null, must point to a readable [`IvoPlannerParams`].
 */
struct IvoPlanner *ivo_planner_new(const struct IvoPlannerParams *params);

/**
 * Drops all tracks, keeping the parameters.
 *
 * # Safety
 * `planner` must be a live pointer from `ivo_planner_new`, or null.
 */
void ivo_planner_clear_tracks(struct IvoPlanner *planner);

/**
 * Adds one obstacle track: two consecutive ego observations plus the
 * obstacle radius.
 *
 * # Safety
 * `planner` must be a live pointer from `ivo_planner_new`.
 */
enum IvoStatus ivo_planner_add_track(struct IvoPlanner *planner,
                                     uint64_t id,
                                     double prev_x,
                                     double prev_y,
                                     double prev_t,
                                     double curr_x,
                                     double curr_y,
                                     double curr_t,
                                     double radius);

/**
 * Solves the constrained control problem against the stored tracks.
 * `(vrx, vry)` is the agent's commanded velocity, `(goal_x, goal_y)` the
 * goal in the agent frame.
 *
 * # Safety
 * `planner` must be a live pointer from `ivo_planner_new`; `out` must be a
 * valid pointer to a writable [`IvoControlDecision`].
 */
enum IvoStatus ivo_planner_plan(const struct IvoPlanner *planner,
                                double vrx,
                                double vry,
                                double goal_x,
                                double goal_y,
                                double agent_radius,
                                struct IvoControlDecision *out);

/**
 * # Safety
 * `planner` must be a pointer from `ivo_planner_new` not yet freed, or null.
 */
void ivo_planner_free(struct IvoPlanner *planner);

/**
 * Parses and validates a scenario from TOML text.
 * Free with `ivo_scenario_free`.
 *
 * # Safety
 * `toml_text` must be a valid nul-terminated C string; `out` must be a
 * valid pointer to a writable `IvoScenario*`.
 */
enum IvoStatus ivo_scenario_from_toml(const char *toml_text, struct IvoScenario **out);

/**
 * Loads a shipped preset by name (`single5`, `antipodal6`, `circle10`,
 * `circle50`). Free with `ivo_scenario_free`.
 *
 * # Safety
 * `name` must be a valid nul-terminated C string; `out` must be a valid
 * pointer to a writable `IvoScenario*`.
 */
enum IvoStatus ivo_scenario_preset(const char *name, struct IvoScenario **out);

/**
 * Number of agents in the scenario.
 *
 * # Safety
 * `scenario` must be a live pointer from a scenario constructor; `out` must
 * be a valid pointer to a writable `uint32_t`.
 */
enum IvoStatus ivo_scenario_agent_count(const struct IvoScenario *scenario, uint32_t *out);

/**
 * # Safety
 * `scenario` must be a pointer from a scenario constructor not yet freed,
 * or null.
 */
void ivo_scenario_free(struct IvoScenario *scenario);

/**
 * Runs the scenario to completion and returns the trace.
 * Free with `ivo_trace_free`.
 *
 * # Safety
 * `scenario` must be a live pointer from a scenario constructor; `out` must
 * be a valid pointer to a writable `IvoTrace*`.
 */
enum IvoStatus ivo_scenario_run(const struct IvoScenario *scenario, struct IvoTrace **out);

/**
 * Copies the run metrics out of a trace.
 *
 * # Safety
 * `trace` must be a live pointer from `ivo_scenario_run`; `out` must be a
 * valid pointer to a writable [`IvoRunMetrics`].
 */
enum IvoStatus ivo_trace_metrics(const struct IvoTrace *trace, struct IvoRunMetrics *out);

/**
 * Number of recorded states in the trace, including the initial state.
 *
 * # Safety
 * `trace` must be a live pointer from `ivo_scenario_run`; `out` must be a
 * valid pointer to a writable `uint32_t`.
 */
enum IvoStatus ivo_trace_state_count(const struct IvoTrace *trace, uint32_t *out);

/**
 * Copies one agent's state at one recorded step. Step 0 is the initial
 * state; step `k` is the state after the k-th control cycle.
 *
 * # Safety
 * `trace` must be a live pointer from `ivo_scenario_run`; `out` must be a
 * valid pointer to a writable [`IvoAgentState`].
 */
enum IvoStatus ivo_trace_agent_state(const struct IvoTrace *trace,
                                     uint32_t step,
                                     uint32_t agent_index,
                                     struct IvoAgentState *out);

/**
 * # Safety
 * `trace` must be a pointer from `ivo_scenario_run` not yet freed, or null.
 */
void ivo_trace_free(struct IvoTrace *trace);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* IVO_FFI_H */
