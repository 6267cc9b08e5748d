#ifndef QDIALOG_H
#define QDIALOG_H

/* Generated by cbindgen from crates/ffi/src/lib.rs. Do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

typedef enum QdBellOutcome {
  QD_BELL_OUTCOME_PHI_PLUS = 0,
  QD_BELL_OUTCOME_PHI_MINUS = 1,
  QD_BELL_OUTCOME_PSI_PLUS = 2,
  QD_BELL_OUTCOME_PSI_MINUS = 3,
} QdBellOutcome;

typedef enum QdQubit {
  QD_QUBIT_TRAVEL = 0,
  QD_QUBIT_HOME = 1,
} QdQubit;

typedef enum QdStatus {
  QD_STATUS_OK = 0,
  QD_STATUS_NULL_POINTER = 1,
  QD_STATUS_INVALID_CONFIG = 2,
  QD_STATUS_SCHEMA = 3,
  QD_STATUS_MISMATCH = 4,
  QD_STATUS_TAMPER_PHI = 5,
  QD_STATUS_INVALID_ARGUMENT = 6,
  QD_STATUS_PANIC = 7,
} QdStatus;

/**
 * Opaque experiment result: summary, transcript and (for live runs) the
 * effective configuration.
 */
typedef struct QdExperiment QdExperiment;

/**
 * Experiment parameters. String fields may be NULL: `adversary` defaults to
 * "none", message sources to "random".
 */
typedef struct QdConfig {
  uint64_t rounds;
  double control_prob;
  double announce_fraction;
  double loss_p;
  uint64_t seed;
  const char *adversary;
  const char *alice_message;
  const char *bob_message;
  enum QdQubit bob_target;
} QdConfig;

/**
 * Flattened summary. Rates without trials are NaN; `would_abort_round` is
 * -1 when nothing would abort.
 */
typedef struct QdSummary {
  uint64_t rounds;
  uint64_t control_rounds;
  uint64_t message_rounds;
  uint64_t lost_rounds;
  uint64_t payload_bits;
  double message_delivery;
  double detection_rate;
  double ber_alice_to_bob;
  double ber_bob_to_alice;
  double phi_rate;
  double mismatch_rate;
  double eve_accuracy_j;
  double eve_accuracy_k;
  double throughput;
  int64_t would_abort_round;
} QdSummary;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Library version as a static NUL-terminated string.
 */
const char *qd_version(void);

/**
 * Message for the last failed call on this thread, or NULL. The pointer is
 * valid until the next library call on the same thread.
 */
const char *qd_last_error(void);

/**
 * Fills `out` with the default configuration.
 *
 * # Safety
 * `out` must be NULL or point to writable memory for one `QdConfig`.
 */
enum QdStatus qd_config_default(struct QdConfig *out);

/**
 * Runs an experiment. On success `*out` receives a handle to release with
 * `qd_experiment_free`.
 *
 * # Safety
 * `config` must point to a valid `QdConfig` whose string fields are NULL or
 * NUL-terminated; `out` must be writable.
 */
enum QdStatus qd_experiment_run(const struct QdConfig *config, struct QdExperiment **out);

/**
 * Rebuilds an experiment from JSON-lines transcript text (replay).
 *
 * # Safety
 * `transcript` must be a NUL-terminated string; `out` must be writable.
 */
enum QdStatus qd_experiment_from_jsonl(const char *transcript, struct QdExperiment **out);

/**
 * # Safety
 * `exp` must be a live handle (or NULL); `out` must be writable.
 */
enum QdStatus qd_experiment_summary(const struct QdExperiment *exp, struct QdSummary *out);

/**
 * Number of rounds in the transcript; 0 for NULL.
 *
 * # Safety
 * `exp` must be a live handle or NULL.
 */
uint64_t qd_experiment_round_count(const struct QdExperiment *exp);

/**
 * Transcript as JSON lines, identical to `transcript.jsonl`.
 *
 * # Safety
 * `exp` must be a live handle; `out` must be writable.
 */
enum QdStatus qd_experiment_transcript_jsonl(const struct QdExperiment *exp, char **out);

/**
 * Summary document, identical in content to `summary.json`.
 *
 * # Safety
 * `exp` must be a live handle; `out` must be writable.
 */
enum QdStatus qd_experiment_summary_json(const struct QdExperiment *exp, char **out);

/**
 * # Safety
 * `exp` must be a handle from this library not yet freed, or NULL.
 */
void qd_experiment_free(struct QdExperiment *exp);

/**
 * # Safety
 * `s` must be a string returned by this library not yet freed, or NULL.
 */
void qd_string_free(char *s);

/**
 * Checks the four encoding-table cells. `out_table` receives the observed
 * outcome for `(j, k)` at index `2 * j + k`. Returns `Mismatch` if any cell
 * is not deterministic or differs from the reference.
 *
 * # Safety
 * `out_table` must point to four writable `QdBellOutcome` slots.
 */
enum QdStatus qd_check_table(enum QdQubit bob_target,
                             uint64_t repetitions,
                             uint64_t seed,
                             enum QdBellOutcome *out_table);

/**
 * `psi_parity(outcome) XOR own_bit`; `TamperPhi` for Φ outcomes.
 *
 * # Safety
 * `out_bit` must be writable.
 */
enum QdStatus qd_decode_peer_bit(enum QdBellOutcome outcome, uint8_t own_bit, uint8_t *out_bit);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* QDIALOG_H */
