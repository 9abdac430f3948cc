/* SPDX-License-Identifier: Apache-2.0 */
/*
 * mhs: orbit counting on Markoff-Hurwitz surfaces and the spectral growth
 * exponent.  Plain C interface over the C++ library.
 *
 * Conventions
 *   - Every fallible call returns an mhs_status; MHS_OK is zero.
 *   - On failure, mhs_last_error() describes the most recent error raised on
 *     the calling thread.  The pointer stays valid until the next failing
 *     call on that thread.
 *   - Handles are opaque; each *_new has a matching *_free which accepts NULL.
 *   - Strings returned by a handle stay valid until the handle is modified or
 *     freed.
 */
#ifndef MHS_MHS_H
#define MHS_MHS_H

#include <stddef.h>

#if defined(_WIN32)
#define MHS_API __declspec(dllexport)
#else
#define MHS_API __attribute__((visibility("default")))
#endif

#ifdef __cplusplus
extern "C" {
#endif

typedef enum mhs_status {
  MHS_OK = 0,
  MHS_E_USAGE = 1,         /* invalid parameters or options */
  MHS_E_DIMENSION = 2,     /* tuple length does not match n */
  MHS_E_INVALID_STATE = 3, /* e.g. a move applied to a non-solution */
  MHS_E_DOMAIN = 4,        /* point outside the admissible region */
  MHS_E_EXCEPTIONAL = 5,   /* exceptional solution where an unexceptional one is required */
  MHS_E_INVARIANT = 6,     /* internal invariant violation or failed check */
  MHS_E_CONVERGENCE = 7,   /* iterative method did not converge */
  MHS_E_GEOMETRY = 8,      /* interpolation target outside the grid */
  MHS_E_FIT = 9,           /* degenerate regression design */
  MHS_E_CAPACITY = 10,     /* workload refused as infeasible */
  MHS_E_IO = 11,           /* file or parse failure */
  MHS_E_NO_ROOT = 12,      /* no solution of lambda_s = 1 above the lower bound */
  MHS_E_EMPTY = 13,        /* no unexceptional base tuples */
  MHS_E_INTERNAL = 99
} mhs_status;

MHS_API const char* mhs_version(void);
MHS_API const char* mhs_last_error(void);
MHS_API const char* mhs_status_name(mhs_status status);

/* ---- command table (for front ends) ---------------------------------- */

MHS_API int mhs_command_count(void);
MHS_API const char* mhs_command_name(int command);
MHS_API const char* mhs_command_help(int command);
MHS_API int mhs_option_count(int command);
MHS_API const char* mhs_option_key(int command, int option);
MHS_API const char* mhs_option_help(int command, int option);
MHS_API const char* mhs_option_default(int command, int option); /* "" when none */
MHS_API int mhs_option_is_flag(int command, int option);
MHS_API int mhs_option_is_required(int command, int option);

/* ---- sessions: configure and run one command ------------------------- */

typedef struct mhs_session mhs_session;

MHS_API mhs_status mhs_session_new(mhs_session** out);
MHS_API void mhs_session_free(mhs_session* session);
/* Set one option; later calls override earlier ones (flags override config). */
MHS_API mhs_status mhs_session_set(mhs_session* session, const char* key, const char* value);
/* Merge a key=value config file into the session. */
MHS_API mhs_status mhs_session_load_config(mhs_session* session, const char* path);
/* Run a command; artifacts and meta.json are written to the "out" option. */
MHS_API mhs_status mhs_session_run(mhs_session* session, const char* command);
MHS_API const char* mhs_session_summary(const mhs_session* session);
MHS_API size_t mhs_session_artifact_count(const mhs_session* session);
MHS_API const char* mhs_session_artifact(const mhs_session* session, size_t index);

/* ---- direct access to the transfer operator -------------------------- */

typedef struct mhs_operator mhs_operator;

/* grid = 0 and A_max = 0 select the defaults for n. */
MHS_API mhs_status mhs_operator_new(int n, int grid, int A_max, int threads, mhs_operator** out);
MHS_API void mhs_operator_free(mhs_operator* op);
MHS_API size_t mhs_operator_size(const mhs_operator* op);
MHS_API mhs_status mhs_operator_leading_eigenvalue(mhs_operator* op, double s, double* lambda, double* residual);
MHS_API mhs_status mhs_operator_solve_beta(mhs_operator* op, double tol, double* beta, double* lo, double* hi);

/* ---- direct access to the surface ------------------------------------ */

/* Number of ordered positive unexceptional solutions with max <= R (decimal
 * string), written as a decimal string into buf (size including the NUL). */
MHS_API mhs_status mhs_count_ball(int n, long a, long k, const char* R, char* buf, size_t size);

#ifdef __cplusplus
}
#endif

#endif /* MHS_MHS_H */
