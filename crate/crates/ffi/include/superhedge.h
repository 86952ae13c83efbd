#ifndef SUPERHEDGE_H
#define SUPERHEDGE_H

/* Generated by cbindgen. Do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

typedef enum ShStatus {
  SH_STATUS_OK = 0,
  SH_STATUS_NULL_POINTER = 1,
  SH_STATUS_INVALID_ARGUMENT = 2,
  SH_STATUS_DIMENSION_MISMATCH = 3,
  SH_STATUS_INVALID_RETURNS = 4,
  SH_STATUS_BUDGET_EXCEEDED = 5,
  SH_STATUS_UNDEFINED_PAYOFF = 6,
  SH_STATUS_HORIZON_REACHED = 7,
  SH_STATUS_PANIC = 8,
} ShStatus;

typedef enum ShPriceMethod {
  SH_PRICE_METHOD_DIRECT = 0,
  SH_PRICE_METHOD_RECURRENCE = 1,
  SH_PRICE_METHOD_TWO_STOCK = 2,
} ShPriceMethod;

typedef enum ShHorizonMethod {
  SH_HORIZON_METHOD_EXACT = 0,
  SH_HORIZON_METHOD_SHTARKOV = 1,
} ShHorizonMethod;

typedef enum ShPrior {
  SH_PRIOR_COVER_ORDENTLICH = 0,
  SH_PRIOR_UNIFORM = 1,
} ShPrior;

/**
 * Opaque `T x m` matrix of gross returns.
 */
typedef struct ShReturnMatrix ShReturnMatrix;

/**
 * Opaque online universal portfolio for a fixed horizon.
 */
typedef struct ShUniversal ShUniversal;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Message for the last failed call on this thread, or null. The pointer is
 * valid until the next call into this library on the same thread.
 */
const char *sh_last_error_message(void);

/**
 * Copies `periods * assets` row-major returns into a new matrix handle.
 *
 * # Safety
 * `data` must point to `periods * assets` readable doubles and `out` must be
 * a valid pointer.
 */
enum ShStatus sh_returns_new(const double *data,
                             size_t periods,
                             size_t assets,
                             struct ShReturnMatrix **out);

/**
 * # Safety
 * `x` must be null or a handle from [`sh_returns_new`] not yet freed.
 */
void sh_returns_free(struct ShReturnMatrix *x);

/**
 * # Safety
 * `x` must be a live handle.
 */
size_t sh_returns_periods(const struct ShReturnMatrix *x);

/**
 * # Safety
 * `x` must be a live handle.
 */
size_t sh_returns_assets(const struct ShReturnMatrix *x);

/**
 * Superhedging price `p(T, m)` of the best-CRP payoff.
 *
 * # Safety
 * `out` must be a valid pointer.
 */
enum ShStatus sh_price(size_t periods, size_t assets, enum ShPriceMethod method, double *out);

/**
 * # Safety
 * `out` must be a valid pointer.
 */
enum ShStatus sh_shtarkov_bound(size_t periods, size_t assets, double *out);

/**
 * Smallest horizon with `log p(T, m) / T <= eps`. `out_rate` may be null.
 *
 * # Safety
 * `out_horizon` must be valid; `out_rate` must be valid or null.
 */
enum ShStatus sh_horizon(double eps,
                         size_t assets,
                         enum ShHorizonMethod method,
                         size_t *out_horizon,
                         double *out_rate);

/**
 * Years needed at `frequency` rebalances per year. `out_periods` may be null.
 *
 * # Safety
 * `out_years` must be valid; `out_periods` must be valid or null.
 */
enum ShStatus sh_years_needed(double eps,
                              size_t assets,
                              uint32_t frequency,
                              double *out_years,
                              size_t *out_periods);

/**
 * Best constant-rebalanced portfolio in hindsight. Writes `assets` weights
 * to `out_weights` and the wealth to `out_value`.
 *
 * # Safety
 * `x` must be live; `out_weights` must hold `assets` doubles; `out_value`
 * must be valid.
 */
enum ShStatus sh_best_crp(const struct ShReturnMatrix *x,
                          double tolerance,
                          double *out_weights,
                          size_t assets,
                          double *out_value);

/**
 * Wealth of the constant-rebalanced portfolio `weights` on `x`.
 *
 * # Safety
 * `x` must be live; `weights` must hold `assets` doubles; `out` must be valid.
 */
enum ShStatus sh_crp_wealth(const struct ShReturnMatrix *x,
                            const double *weights,
                            size_t assets,
                            double *out);

/**
 * Creates the horizon-`periods` replicating strategy for a symmetric prior.
 *
 * # Safety
 * `out` must be a valid pointer.
 */
enum ShStatus sh_universal_new(size_t periods,
                               size_t assets,
                               enum ShPrior prior,
                               struct ShUniversal **out);

/**
 * # Safety
 * `u` must be null or a handle from [`sh_universal_new`] not yet freed.
 */
void sh_universal_free(struct ShUniversal *u);

/**
 * Number of return rows observed so far.
 *
 * # Safety
 * `u` must be a live handle.
 */
size_t sh_universal_stage(const struct ShUniversal *u);

/**
 * Portfolio to hold for the next period. Fails with `HorizonReached` once
 * `periods` rows have been observed.
 *
 * # Safety
 * `u` must be live; `out_weights` must hold `assets` doubles.
 */
enum ShStatus sh_universal_portfolio(const struct ShUniversal *u,
                                     double *out_weights,
                                     size_t assets);

/**
 * Records one period of gross returns.
 *
 * # Safety
 * `u` must be live; `row` must hold `assets` doubles.
 */
enum ShStatus sh_universal_update(struct ShUniversal *u, const double *row, size_t assets);

/**
 * Wealth of the strategy so far, from an initial wealth of 1.
 *
 * # Safety
 * `u` must be live; `out` must be valid.
 */
enum ShStatus sh_universal_wealth(const struct ShUniversal *u, double *out);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* SUPERHEDGE_H */
