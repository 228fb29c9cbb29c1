#ifndef UFPL_UFPL_H
#define UFPL_UFPL_H

#include <stddef.h>
#include <stdint.h>

#if defined(_WIN32)
#  if defined(UFPL_BUILDING_LIBRARY)
#    define UFPL_API __declspec(dllexport)
#  else
#    define UFPL_API __declspec(dllimport)
#  endif
#else
#  define UFPL_API __attribute__((visibility("default")))
#endif

#ifdef __cplusplus
extern "C" {
#endif

/* Every function returns a status; on failure ufpl_last_error() holds a
 * message for the calling thread until its next failing call. */
typedef enum ufpl_status {
  UFPL_OK = 0,
  UFPL_ERR_INVALID_ARGUMENT = 1,
  UFPL_ERR_MODE_VIOLATION = 2,
  UFPL_ERR_OVERFLOW = 3,
  UFPL_ERR_NOT_POSITIVE_DEFINITE = 4,
  UFPL_ERR_IO = 5,
  UFPL_ERR_CONFIG = 6,
  UFPL_ERR_BUFFER_TOO_SMALL = 7,
  UFPL_ERR_INTERNAL = 8
} ufpl_status;

typedef enum ufpl_game_mode {
  UFPL_MODE_ONE_HOT = 0,
  UFPL_MODE_ZERO_SUM = 1,
  UFPL_MODE_GENERAL_NONNEGATIVE = 2,
  UFPL_MODE_INFER = -1 /* readers only: pick the most specific mode */
} ufpl_game_mode;

/* Exit codes of ufpl_run_experiment / ufpl_check_trace_file. */
enum {
  UFPL_EXIT_OK = 0,
  UFPL_EXIT_USAGE = 1,
  UFPL_EXIT_VIOLATION = 2,
  UFPL_EXIT_RUNTIME = 3
};

typedef struct ufpl_gains ufpl_gains;
typedef struct ufpl_policy ufpl_policy;
typedef struct ufpl_trace ufpl_trace;
typedef struct ufpl_report ufpl_report;
typedef struct ufpl_path ufpl_path;

typedef struct ufpl_trace_row {
  double s1, s2;
  double prob1_fpl, prob1_ifpl;
  double l, r;       /* expected FPL / IFPL gain at the step */
  double cuml, cumr; /* running sums */
} ufpl_trace_row;

UFPL_API const char* ufpl_last_error(void);
UFPL_API const char* ufpl_status_string(ufpl_status status);

/* String outputs: copies at most cap-1 bytes plus a terminator and stores the
 * full size including the terminator in *needed (may be NULL). Returns
 * UFPL_ERR_BUFFER_TOO_SMALL when cap is short; buf may be NULL when cap is 0. */

UFPL_API ufpl_status ufpl_comparison_probability(double a, double* out);
UFPL_API ufpl_status ufpl_fgn_covariance(size_t lag, double hurst, double* out);

/* Gain sequences. */
UFPL_API ufpl_status ufpl_gains_create(ufpl_game_mode mode, ufpl_gains** out);
UFPL_API void ufpl_gains_destroy(ufpl_gains* gains);
UFPL_API ufpl_status ufpl_gains_append(ufpl_gains* gains, double s1, double s2);
UFPL_API ufpl_status ufpl_gains_size(const ufpl_gains* gains, size_t* out);
UFPL_API ufpl_status ufpl_gains_mode(const ufpl_gains* gains, ufpl_game_mode* out);
/* Cumulatives after t steps, 0 <= t <= size. Any output may be NULL. */
UFPL_API ufpl_status ufpl_gains_state(const ufpl_gains* gains, size_t t,
                                      double* cum1, double* cum2, double* volume);
UFPL_API ufpl_status ufpl_gains_lift(const ufpl_gains* zero_sum, ufpl_gains** out);
/* family: one-hot, bounded, zero-sum or general; horizon is exact. */
UFPL_API ufpl_status ufpl_gains_fuzz(const char* family, uint64_t seed,
                                     size_t horizon, ufpl_gains** out);
UFPL_API ufpl_status ufpl_gains_read_csv(const char* path, ufpl_game_mode mode,
                                         ufpl_gains** out);
UFPL_API ufpl_status ufpl_gains_write_csv(const ufpl_gains* gains, const char* path);

/* Policies, e.g. "fpl mu=0.618", "ifpl mu=0.5 schedule=zero-sum-remark",
 * "threshold delta=0.05", "ftl", "uniform". */
UFPL_API ufpl_status ufpl_policy_parse(const char* descriptor, ufpl_policy** out);
UFPL_API void ufpl_policy_destroy(ufpl_policy* policy);
UFPL_API ufpl_status ufpl_policy_describe(const ufpl_policy* policy, char* buf,
                                          size_t cap, size_t* needed);
/* Probability of following Expert 1 at step `step` (1-based) of `gains`:
 * decided on the state after step-1 steps; ifpl also sees step's gains. */
UFPL_API ufpl_status ufpl_policy_decide(const ufpl_policy* policy,
                                        const ufpl_gains* gains, size_t step,
                                        double* prob1);

/* Exact FPL/IFPL evaluation. remark != 0 selects the zero-sum-remark rate
 * for zero-sum games instead of the lift. */
UFPL_API ufpl_status ufpl_trace_exact(const ufpl_gains* gains, double mu,
                                      int remark, ufpl_trace** out);
UFPL_API void ufpl_trace_destroy(ufpl_trace* trace);
UFPL_API ufpl_status ufpl_trace_size(const ufpl_trace* trace, size_t* out);
UFPL_API ufpl_status ufpl_trace_row_at(const ufpl_trace* trace, size_t t,
                                       ufpl_trace_row* out);
UFPL_API ufpl_status ufpl_trace_write_csv(const ufpl_trace* trace, const char* path);
/* Bound checks as a JSON array. delta <= 0 or NaN disables the
 * low-deviation checks. *all_pass (may be NULL) is 1 when every applicable
 * check holds. */
UFPL_API ufpl_status ufpl_trace_check_json(const ufpl_trace* trace,
                                           const ufpl_gains* gains, double delta,
                                           int* all_pass, char* buf, size_t cap,
                                           size_t* needed);

/* Sampled cumulative gain of `policy`; threads == 0 uses every core. */
UFPL_API ufpl_status ufpl_monte_carlo(const ufpl_gains* gains,
                                      const ufpl_policy* policy, size_t replicas,
                                      uint64_t seed, unsigned threads,
                                      double* mean, double* standard_error);

/* Adversarial constructions, e.g. "thm1 delta=0.05 delta_prime=0.1". */
UFPL_API ufpl_status ufpl_adversary_run(const char* descriptor,
                                        const ufpl_policy* policy,
                                        ufpl_report** out);
UFPL_API void ufpl_report_destroy(ufpl_report* report);
/* complete: horizon reached without search failure or truncation;
 * all_ok: every applicable checkpoint holds. Either may be NULL. */
UFPL_API ufpl_status ufpl_report_status(const ufpl_report* report, int* complete,
                                        int* all_ok);
UFPL_API ufpl_status ufpl_report_gains(const ufpl_report* report, ufpl_gains** out);
UFPL_API ufpl_status ufpl_report_json(const ufpl_report* report, char* buf,
                                      size_t cap, size_t* needed);

/* Fractional Brownian motion price paths. */
UFPL_API ufpl_status ufpl_path_generate(size_t steps, double hurst, double sigma,
                                        double s0, uint64_t seed, ufpl_path** out);
/* params: "hurst=.. steps=.. [sigma=1] [s0=100] [seed=0]" */
UFPL_API ufpl_status ufpl_path_from_params(const char* params, ufpl_path** out);
UFPL_API void ufpl_path_destroy(ufpl_path* path);
UFPL_API ufpl_status ufpl_path_steps(const ufpl_path* path, size_t* out);
/* Copies S_0 .. S_T; cap must be at least steps + 1. */
UFPL_API ufpl_status ufpl_path_prices(const ufpl_path* path, double* out, size_t cap);
UFPL_API ufpl_status ufpl_path_write_csv(const ufpl_path* path, const char* file);
UFPL_API ufpl_status ufpl_path_expert_gains(const ufpl_path* path, double c,
                                            ufpl_gains** out);
/* Derandomized mixture trading. cumulative (may be NULL) receives the
 * running income per step and must hold steps - 1 values. */
UFPL_API ufpl_status ufpl_path_trade(const ufpl_policy* policy,
                                     const ufpl_path* path, double c,
                                     double* total_income, double* cumulative,
                                     size_t cap);

/* Output root: override if non-NULL, else $UFPL_OUTPUT_ROOT, else the
 * working directory. */
UFPL_API ufpl_status ufpl_output_root(const char* override_root, char* buf,
                                      size_t cap, size_t* needed);

/* Runs a config file. output_root NULL resolves as in ufpl_output_root.
 * Config errors return UFPL_ERR_CONFIG with the line and field in the
 * message. */
UFPL_API ufpl_status ufpl_run_experiment(const char* config_path,
                                         const char* output_root, int* exit_code);

/* Re-verifies a trace CSV. gains_path NULL uses gains.csv next to the
 * trace; mu, delta (NaN) and schedule (NULL) fall back to meta.json next to
 * the trace. The checks are written as JSON to buf. */
UFPL_API ufpl_status ufpl_check_trace_file(const char* trace_path,
                                           const char* gains_path, double mu,
                                           double delta, const char* schedule,
                                           int* exit_code, char* buf, size_t cap,
                                           size_t* needed);

#ifdef __cplusplus
}
#endif

#endif /* UFPL_UFPL_H */
