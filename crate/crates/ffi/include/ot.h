/* C ABI for the ot optimal-transport solvers.
 *
 * Maintained by hand in lockstep with src/lib.rs (the symbol list is checked
 * by the crate's tests). Link against the cdylib or staticlib produced by
 * `cargo build -p ot-ffi --release`.
 */

#ifndef OT_H
#define OT_H

#include <stddef.h>
#include <stdint.h>

#ifdef __cplusplus
extern "C" {
#endif

/* Error codes. */
#define OT_OK 0
#define OT_ERR_INVALID_ARGUMENT 1
#define OT_ERR_NUMERICAL 2
#define OT_ERR_IO 3
#define OT_ERR_NULL_POINTER 4
#define OT_ERR_PANIC 5

/* Solver selectors for ot_approx. */
#define OT_METHOD_SINKHORN 0
#define OT_METHOD_GREENKHORN 1
#define OT_METHOD_APDAMD 2
#define OT_METHOD_APDAGD 3

/* Opaque handles; release with the matching *_free. */
typedef struct OtInstance OtInstance;
typedef struct OtResult OtResult;

/* Copies this thread's last error message into buf (NUL-terminated,
 * truncated to cap bytes); returns the full message length. buf may be NULL
 * to query the length. */
size_t ot_last_error(char *buf, size_t cap);

/* Instance with row-major n-by-n cost and unit-sum marginals of length n.
 * Returns NULL on invalid input (see ot_last_error). */
OtInstance *ot_instance_new(size_t n, const double *cost, const double *r,
                            const double *c);

/* Instance from a JSON document in the `ot gen` file format. */
OtInstance *ot_instance_from_json(const char *json);

size_t ot_instance_n(const OtInstance *inst);

void ot_instance_free(OtInstance *inst);

/* Runs the epsilon-approximation pipeline (schedule, reweight, solve, round).
 * On OT_OK, *out holds a result handle owned by the caller. */
int32_t ot_approx(const OtInstance *inst, double eps, int32_t method,
                  OtResult **out);

/* Exact LP optimum (n <= 256). */
int32_t ot_exact_value(const OtInstance *inst, double *out_value);

double ot_result_cost(const OtResult *res);

uint64_t ot_result_iterations(const OtResult *res);

int32_t ot_result_schedule(const OtResult *res, double *out_eta,
                           double *out_eps_prime);

/* Copies the n-by-n plan row-major into buf (len >= n*n). */
int32_t ot_result_plan(const OtResult *res, double *buf, size_t len);

void ot_result_free(OtResult *res);

#ifdef __cplusplus
}
#endif

#endif /* OT_H */
