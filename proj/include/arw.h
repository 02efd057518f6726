/* arw — one-dimensional activated random walk simulation laboratory.
 *
 * C interface to the shared library: opaque handles, integer status codes,
 * and key=value experiment plans. Every function that can fail returns an
 * arw_status; a human-readable message for the most recent failure on the
 * calling thread is available from arw_last_error().
 */
#ifndef ARW_H
#define ARW_H

#include <stdint.h>

#ifdef __cplusplus
extern "C" {
#endif

typedef enum arw_status {
  ARW_OK = 0,
  ARW_EINVAL = 1,   /* invalid argument or configuration */
  ARW_ECHECK = 2,   /* an embedded acceptance check failed */
  ARW_ERUNTIME = 3, /* simulation error (conservation, toppling misuse, ...) */
  ARW_ENOMEM = 4,
  ARW_EINTERNAL = 5
} arw_status;

typedef enum arw_instruction {
  ARW_INSTR_SLEEP = 0,
  ARW_INSTR_JUMP_LEFT = 1,
  ARW_INSTR_JUMP_RIGHT = 2,
  ARW_INSTR_EJECT = 3
} arw_instruction;

const char* arw_version(void);

/* Message describing the most recent failure on this thread, or "". */
const char* arw_last_error(void);

/* Counter-based replica seeding; stable across versions and platforms. */
uint64_t arw_derive_replica_seed(uint64_t master_seed, uint64_t replica_index);

/* ---- instruction tapes ------------------------------------------------ */

typedef struct arw_tape arw_tape;

/* A deterministic tape of i.i.d. instruction stacks for sleep rate lambda
 * and left-jump probability p. */
arw_status arw_tape_create(double lambda, double p, uint64_t seed, arw_tape** out);

/* View of `base` with every instruction j >= threshold_k at `site` replaced
 * by an ejector seat. */
arw_status arw_tape_create_ejector(const arw_tape* base, int64_t site, uint64_t threshold_k,
                                   arw_tape** out);

/* Instruction tau_{site,j}, j >= 1. Pure in (seed, site, j). */
arw_status arw_tape_instruction_at(const arw_tape* tape, int64_t site, uint64_t j,
                                   arw_instruction* out);

void arw_tape_destroy(arw_tape* tape);

/* ---- one-shot stabilization runs -------------------------------------- */

typedef struct arw_report {
  int64_t exits_left;
  int64_t exits_right;
  int64_t exits_ejected;
  int64_t sleepers_remaining;
  uint64_t topplings;
  int64_t visited_count;
  int64_t visited_lo; /* hull of the visited set; lo > hi when empty */
  int64_t visited_hi;
  int fuel_exhausted;
} arw_report;

/* Stabilizes one active particle per site of {lo,...,hi} with killing at
 * both exits; sleepers_remaining samples the stationary sleeper count. */
arw_status arw_stabilize_ones(const arw_tape* tape, int64_t lo, int64_t hi, uint64_t fuel,
                              arw_report* out);

/* Stabilizes k active particles at the origin on the full line; the visited
 * hull describes the aggregate A_k. */
arw_status arw_stabilize_point_source(const arw_tape* tape, int64_t k, uint64_t fuel,
                                      arw_report* out);

/* ---- experiment plans -------------------------------------------------- */

typedef struct arw_plan arw_plan;
typedef struct arw_result arw_result;

arw_status arw_plan_create(arw_plan** out);

/* Sets one configuration entry, e.g. ("command", "sample-sn"), ("n", "100").
 * Keys mirror the CLI flags; values are validated when the plan runs. */
arw_status arw_plan_set(arw_plan* plan, const char* key, const char* value);

/* Runs the configured experiment. Identical plans produce byte-identical
 * renderings, whatever the worker count. */
arw_status arw_plan_run(const arw_plan* plan, arw_result** out);

void arw_plan_destroy(arw_plan* plan);

/* Rendered result in "csv" or "json"; the string is owned by the result and
 * lives until arw_result_destroy. */
arw_status arw_result_render(const arw_result* result, const char* format, const char** out_text);

/* Metadata header alone ('# key = value' lines). */
arw_status arw_result_meta(const arw_result* result, const char** out_text);

/* 1 when the experiment's embedded check failed, else 0. */
int arw_result_check_failed(const arw_result* result);

void arw_result_destroy(arw_result* result);

#ifdef __cplusplus
}
#endif

#endif /* ARW_H */
