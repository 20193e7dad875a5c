/* Generated by cbindgen. Do not edit. */

#ifndef ADGT_H
#define ADGT_H

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

typedef enum AdgtStatus {
  ADGT_STATUS_OK = 0,
  ADGT_STATUS_NULL_POINTER = 1,
  ADGT_STATUS_INVALID_ARGUMENT = 2,
  ADGT_STATUS_GRAPH = 3,
  ADGT_STATUS_OBJECTIVE = 4,
  ADGT_STATUS_CONFIG = 5,
  ADGT_STATUS_IO = 6,
  ADGT_STATUS_ALGORITHM = 7,
  ADGT_STATUS_THEORY = 8,
  ADGT_STATUS_OUT_OF_RANGE = 9,
  ADGT_STATUS_PANIC = 10,
} AdgtStatus;

typedef enum AdgtTopologyKind {
  ADGT_TOPOLOGY_KIND_STAR = 0,
  ADGT_TOPOLOGY_KIND_CYCLE = 1,
  ADGT_TOPOLOGY_KIND_LINE = 2,
  ADGT_TOPOLOGY_KIND_LADDER = 3,
  ADGT_TOPOLOGY_KIND_RANDOM = 4,
} AdgtTopologyKind;

typedef enum AdgtPolicy {
  ADGT_POLICY_ADGT = 0,
  ADGT_POLICY_ADGT_COMBINED = 1,
  ADGT_POLICY_ADGD = 2,
  ADGT_POLICY_METHOD_DM = 3,
  ADGT_POLICY_FIXED = 4,
} AdgtPolicy;

typedef enum AdgtRunStatus {
  ADGT_RUN_STATUS_CONVERGED = 0,
  ADGT_RUN_STATUS_DIVERGED = 1,
  ADGT_RUN_STATUS_BUDGET_EXHAUSTED = 2,
} AdgtRunStatus;

typedef struct AdgtEnsemble AdgtEnsemble;

typedef struct AdgtMixing AdgtMixing;

typedef struct AdgtTopology AdgtTopology;

typedef struct AdgtTrace AdgtTrace;

// One trace row.
typedef struct AdgtTraceRecord {
  uint64_t k;
  double residual;
  double consensus_x;
  double consensus_y;
  double alpha_min;
  double alpha_mean;
  double alpha_max;
  double delta_alpha;
} AdgtTraceRecord;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

// Message for the last failed call on this thread, or NULL. The pointer
// stays valid until the next failing call on the same thread.
const char *adgt_last_error(void);

// Library version as a static NUL-terminated string.
const char *adgt_version(void);

// Builds a topology. `ratio` is read only for random graphs.
//
// # Safety
// `out` must be a valid pointer to writable storage for one handle.
enum AdgtStatus adgt_topology_build(enum AdgtTopologyKind kind,
                                    size_t n,
                                    double ratio,
                                    uint64_t seed,
                                    struct AdgtTopology **out);

// # Safety
// `t` must be a live topology handle.
size_t adgt_topology_agents(const struct AdgtTopology *t);

// # Safety
// `t` must be a live topology handle.
size_t adgt_topology_edge_count(const struct AdgtTopology *t);

// Endpoints of edge `index`, smaller agent first.
//
// # Safety
// `t` must be a live topology handle; `i` and `j` must be writable.
enum AdgtStatus adgt_topology_edge(const struct AdgtTopology *t,
                                   size_t index,
                                   size_t *i,
                                   size_t *j);

// # Safety
// `t` must be NULL or a handle from [`adgt_topology_build`], freed once.
void adgt_topology_free(struct AdgtTopology *t);

// Metropolis weights for a topology.
//
// # Safety
// `t` must be a live topology handle and `out` writable.
enum AdgtStatus adgt_mixing_metropolis(const struct AdgtTopology *t, struct AdgtMixing **out);

// `‖W − 11ᵀ/n‖₂`; NaN for a NULL handle.
//
// # Safety
// `w` must be NULL or a live mixing handle.
double adgt_mixing_lambda(const struct AdgtMixing *w);

// # Safety
// `w` must be a live mixing handle and `out` writable.
enum AdgtStatus adgt_mixing_weight(const struct AdgtMixing *w, size_t i, size_t j, double *out);

// # Safety
// `w` must be NULL or a handle from [`adgt_mixing_metropolis`], freed once.
void adgt_mixing_free(struct AdgtMixing *w);

// Diagonal quadratics, one `tau` per agent.
//
// # Safety
// `taus` must point to `n` readable doubles and `out` be writable.
enum AdgtStatus adgt_ensemble_quadratic(size_t n,
                                        size_t dim,
                                        const double *taus,
                                        uint64_t seed,
                                        struct AdgtEnsemble **out);

// # Safety
// `e` must be NULL or a live ensemble handle.
size_t adgt_ensemble_dim(const struct AdgtEnsemble *e);

// Gradient of agent `agent` at `x`, written to `grad`.
//
// # Safety
// `e` must be a live ensemble handle; `x` and `grad` must each hold
// `adgt_ensemble_dim(e)` doubles.
enum AdgtStatus adgt_ensemble_gradient(const struct AdgtEnsemble *e,
                                       size_t agent,
                                       const double *x,
                                       double *grad);

// # Safety
// `e` must be NULL or a handle from an ensemble builder, freed once.
void adgt_ensemble_free(struct AdgtEnsemble *e);

// Decentralized run from the zero point. `alpha0` is the initial stepsize,
// or the constant one under the fixed policy.
//
// # Safety
// `w` and `e` must be live handles and `out` writable.
enum AdgtStatus adgt_run(const struct AdgtMixing *w,
                         const struct AdgtEnsemble *e,
                         enum AdgtPolicy policy,
                         double gamma,
                         double alpha0,
                         size_t max_iters,
                         double tol,
                         struct AdgtTrace **out);

// Runs a JSON experiment config. Artifacts are written only when the
// config names a trace file.
//
// # Safety
// `json` must be a NUL-terminated string and `out` writable.
enum AdgtStatus adgt_run_config_json(const char *json, struct AdgtTrace **out);

// Number of rows, `iterations + 1`.
//
// # Safety
// `t` must be NULL or a live trace handle.
size_t adgt_trace_len(const struct AdgtTrace *t);

// # Safety
// `t` must be a live trace handle and `out` writable.
enum AdgtStatus adgt_trace_record(const struct AdgtTrace *t,
                                  size_t index,
                                  struct AdgtTraceRecord *out);

// Final status and iteration count.
//
// # Safety
// `t` must be a live trace handle; `status` and `iterations` writable.
enum AdgtStatus adgt_trace_status(const struct AdgtTrace *t,
                                  enum AdgtRunStatus *status,
                                  uint64_t *iterations);

// Writes the trace CSV to `path`.
//
// # Safety
// `t` must be a live trace handle and `path` a NUL-terminated string.
enum AdgtStatus adgt_trace_write_csv(const struct AdgtTrace *t, const char *path);

// # Safety
// `t` must be NULL or a handle from a run call, freed once.
void adgt_trace_free(struct AdgtTrace *t);

// Stepsize ceiling `D` and damping floor `1/(2Dμ)` with
// `α_max = 1/(2μ)`.
//
// # Safety
// `d` and `gamma_floor` must be writable.
enum AdgtStatus adgt_theory_ceiling(double lambda,
                                    double l,
                                    double mu,
                                    double delta_alpha,
                                    double *d,
                                    double *gamma_floor);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* ADGT_H */
