/* C interface for fairgeo: representation design under a point-wise
 * chi-squared parity budget. All matrices cross this boundary column-major:
 * entry (row, col) of an R x C matrix sits at index col * R + row. Angles,
 * entropies and divergences are in nats unless a unit argument says bits. */

#pragma once

/* Generated with cbindgen:0.29.4 */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

// Status of every fallible call.
typedef enum FgStatus {
  FG_STATUS_OK = 0,
  FG_STATUS_NULL_ARGUMENT = 1,
  FG_STATUS_PARSE = 2,
  FG_STATUS_VALIDATION = 3,
  FG_STATUS_INFEASIBLE_EPS = 4,
  FG_STATUS_NUMERICAL = 5,
  FG_STATUS_DOMAIN = 6,
  FG_STATUS_BUFFER_TOO_SMALL = 7,
  FG_STATUS_UTF8 = 8,
  FG_STATUS_UNREALIZABLE = 9,
  FG_STATUS_INTERNAL = 10,
} FgStatus;

// Which reconstructed conditional family to read back.
typedef enum FgConditional {
  FG_CONDITIONAL_SENSITIVE_GIVEN_Y = 0,
  FG_CONDITIONAL_TASK_GIVEN_Y = 1,
  FG_CONDITIONAL_DATA_GIVEN_Y = 2,
} FgConditional;

// Fairness constraint selector for the exhaustive search.
typedef enum FgMeasure {
  FG_MEASURE_CHI2 = 0,
  FG_MEASURE_MI = 1,
} FgMeasure;

// Log base selector for the scalar information measures.
typedef enum FgUnit {
  FG_UNIT_NATS = 0,
  FG_UNIT_BITS = 1,
} FgUnit;

// Opaque problem instance.
typedef struct FgInstance FgInstance;

// Opaque design solution.
typedef struct FgSolution FgSolution;

// Result of one exhaustive search.
typedef struct FgOracleResult {
  double best_value_nats;
  double best_value_bits;
  uint64_t evaluated_count;
  uint64_t feasible_count;
} FgOracleResult;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

// Static description of a status code.
const char *fg_status_name(enum FgStatus status);

// Builds an instance from flat buffers.
//
// `p_s_given_x` is `x_size * x_size` and `p_t_given_x` is
// `t_size * x_size`, both column-major (each column is the conditional pmf
// given one data value).
//
// # Safety
// `p_x` must point to `x_size` readable doubles, the two matrices to their
// stated extents, and `out` to a writable pointer slot.
enum FgStatus fg_instance_new(const double *p_x,
                              size_t x_size,
                              const double *p_s_given_x,
                              const double *p_t_given_x,
                              size_t t_size,
                              double eps,
                              double rate,
                              struct FgInstance **out);

// Parses an instance from TOML text (same schema as the CLI files).
//
// # Safety
// `text` must be a NUL-terminated string, `out` a writable pointer slot.
enum FgStatus fg_instance_from_toml(const char *text, struct FgInstance **out);

// # Safety
// `instance` must be null or a pointer from `fg_instance_new` /
// `fg_instance_from_toml`, not yet freed.
void fg_instance_free(struct FgInstance *instance);

// Writes the alphabet sizes of an instance.
//
// # Safety
// `instance` must be a live instance pointer; size outputs may be null.
enum FgStatus fg_instance_sizes(const struct FgInstance *instance,
                                size_t *s_size,
                                size_t *x_size,
                                size_t *t_size);

// Runs the spectral design.
//
// # Safety
// `instance` must be a live instance pointer and `out` a writable slot.
enum FgStatus fg_solve(const struct FgInstance *instance, struct FgSolution **out);

// # Safety
// `solution` must be null or a live pointer from `fg_solve`.
void fg_solution_free(struct FgSolution *solution);

// Objective value of the quadratic surrogate, nats.
//
// # Safety
// `solution` must be a live pointer from `fg_solve`.
double fg_solution_objective_nats(const struct FgSolution *solution);

// Singular value the design rides on.
//
// # Safety
// `solution` must be a live pointer from `fg_solve`.
double fg_solution_sigma(const struct FgSolution *solution);

// Rate-feasibility scaling, >= 1.
//
// # Safety
// `solution` must be a live pointer from `fg_solve`.
double fg_solution_k_factor(const struct FgSolution *solution);

// True when the unit top singular value forced the second pair.
//
// # Safety
// `solution` must be a live pointer from `fg_solve`.
bool fg_solution_used_second(const struct FgSolution *solution);

// True when the value is exactly optimal (binary sensitive alphabet).
//
// # Safety
// `solution` must be a live pointer from `fg_solve`.
bool fg_solution_tight(const struct FgSolution *solution);

// True when a channel realizes the design exactly.
//
// # Safety
// `solution` must be a live pointer from `fg_solve`.
bool fg_solution_realizable(const struct FgSolution *solution);

// Writes the representation marginal (length 2).
//
// # Safety
// `solution` must be live; `buf` must hold `len` writable doubles.
enum FgStatus fg_solution_p_y(const struct FgSolution *solution, double *buf, size_t len);

// Writes one perturbation direction (length = sensitive alphabet size).
//
// # Safety
// `solution` must be live; `buf` must hold `len` writable doubles.
enum FgStatus fg_solution_direction(const struct FgSolution *solution,
                                    size_t y,
                                    double *buf,
                                    size_t len);

// Writes one reconstructed conditional family, column-major with one
// column per representation value. The data conditional may carry a
// negative entry when the design is not realizable.
//
// # Safety
// `solution` must be live; `buf` must hold `len` writable doubles.
enum FgStatus fg_solution_conditional(const struct FgSolution *solution,
                                      enum FgConditional which,
                                      double *buf,
                                      size_t len);

// Writes the realized representation channel, column-major `|Y| x |X|`
// (one column per data value). Fails with `FG_STATUS_UNREALIZABLE` when no
// channel realizes the design at this eps.
//
// # Safety
// `solution` must be live; `buf` must hold `len` writable doubles.
enum FgStatus fg_solution_channel(const struct FgSolution *solution, double *buf, size_t len);

// Exhaustive search over representation channels; `channel_buf` (nullable)
// receives the best channel column-major `y_cardinality x |X|` when
// something is feasible.
//
// # Safety
// `instance` must be live, `result` writable; `channel_buf`, when not
// null, must hold `channel_len` writable doubles.
enum FgStatus fg_grid_search(const struct FgInstance *instance,
                             size_t grid_resolution,
                             size_t y_cardinality,
                             enum FgMeasure measure,
                             struct FgOracleResult *result,
                             double *channel_buf,
                             size_t channel_len);

// Utility bound in the low-rate regime (domain error outside it).
//
// # Safety
// `instance` must be live and `out` writable.
enum FgStatus fg_low_rate_bound(const struct FgInstance *instance, double *out);

// Shannon entropy of a pmf.
//
// # Safety
// `probs` must point to `len` readable doubles and `out` be writable.
enum FgStatus fg_entropy(const double *probs, size_t len, enum FgUnit unit, double *out);

// Kullback-Leibler divergence D(p || q).
//
// # Safety
// `p` and `q` must point to `len` readable doubles and `out` be writable.
enum FgStatus fg_kl_divergence(const double *p,
                               const double *q,
                               size_t len,
                               enum FgUnit unit,
                               double *out);

// Chi-squared divergence sum (p - q)^2 / q.
//
// # Safety
// `p` and `q` must point to `len` readable doubles and `out` be writable.
enum FgStatus fg_chi_squared(const double *p, const double *q, size_t len, double *out);

// Exact mutual information of a joint table (column-major `rows x cols`).
//
// # Safety
// `joint` must point to `rows * cols` readable doubles, `out` writable.
enum FgStatus fg_mutual_information(const double *joint,
                                    size_t rows,
                                    size_t cols,
                                    enum FgUnit unit,
                                    double *out);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus
