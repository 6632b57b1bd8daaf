#ifndef SQUEEZER_H
#define SQUEEZER_H

/* Generated by cbindgen; do not edit by hand. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

// Status codes returned by every fallible call.
typedef enum SqStatus {
  SQ_STATUS_OK = 0,
  SQ_STATUS_NULL_POINTER = 1,
  SQ_STATUS_INVALID_ARGUMENT = 2,
  SQ_STATUS_CUTOFF_ERROR = 3,
  SQ_STATUS_NUMERICAL_ERROR = 4,
  SQ_STATUS_SERIALIZATION_ERROR = 5,
} SqStatus;

// Opaque single-mode state handle (a density matrix).
typedef struct SqState SqState;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

// Most recent error message on this thread, or NULL when the last call
// succeeded. The pointer stays valid until the next failing call.
const char *sq_last_error_message(void);

// Release a string returned by this API.
//
// # Safety
// `s` must be a pointer previously returned by a `sq_*` call that documents
// this deallocator, and must not be used afterwards.
void sq_string_free(char *s);

// Release a state handle.
//
// # Safety
// `state` must come from a `sq_state_*` constructor and not be freed twice.
void sq_state_free(struct SqState *state);

// Fock state |n⟩ at the given cutoff.
enum SqStatus sq_state_fock(size_t n, size_t cutoff, struct SqState **out);

// Coherent state |α⟩.
enum SqStatus sq_state_coherent(double alpha_re,
                                double alpha_im,
                                size_t cutoff,
                                struct SqState **out);

// Coherent-state superposition |α⟩ ± |-α⟩; `odd` selects the minus sign.
enum SqStatus sq_state_css(double alpha_re,
                           double alpha_im,
                           bool odd,
                           size_t cutoff,
                           struct SqState **out);

// Realistic heralded single photon for a loss budget
// (detection/propagation efficiencies, dark and two-photon fractions).
enum SqStatus sq_state_experimental_photon(double eta_detection,
                                           double eta_propagation,
                                           double dark_fraction,
                                           double multiphoton_fraction,
                                           size_t cutoff,
                                           struct SqState **out);

// Apply the measurement-based squeezing gate.
//
// `squeezed_db`/`antisqueezed_db` describe the ancilla relative to shot
// noise (e.g. -6.8 and 10.3); `dephasing_stddev` adds Gaussian phase jitter
// in radians (0 disables it). A new state is written to `out`.
enum SqStatus sq_apply_squeeze_gate(const struct SqState *state,
                                    double gamma,
                                    double squeezed_db,
                                    double antisqueezed_db,
                                    double dephasing_stddev,
                                    struct SqState **out);

// Cutoff dimension of a state.
enum SqStatus sq_state_dim(const struct SqState *state, size_t *out);

// Photon-number probability P(n).
enum SqStatus sq_state_photon_probability(const struct SqState *state, size_t n, double *out);

// Uhlmann fidelity between two states of equal cutoff.
enum SqStatus sq_state_fidelity(const struct SqState *a, const struct SqState *b, double *out);

// Wigner function value at one phase-space point.
enum SqStatus sq_wigner_at(const struct SqState *state, double x, double p, double *out);

// Global Wigner minimum over a square search window.
enum SqStatus sq_wigner_min(const struct SqState *state,
                            double half_range,
                            double *out_value,
                            double *out_x,
                            double *out_p);

// Coherent-state distinguishability D(β).
enum SqStatus sq_distinguishability(const struct SqState *state,
                                    double beta_re,
                                    double beta_im,
                                    double *out);

// Coherent-state interference V(β).
enum SqStatus sq_interference(const struct SqState *state,
                              double beta_re,
                              double beta_im,
                              double *out);

// Anti-correlation witness from splitting on a balanced beam splitter with
// on/off detectors of efficiency `eta`.
enum SqStatus sq_anticorrelation(const struct SqState *state,
                                 double eta,
                                 double *out_a,
                                 double *out_pc,
                                 double *out_ps);

// Best-fitting odd-superposition amplitude and the achieved fidelity.
enum SqStatus sq_fit_css_amplitude(const struct SqState *state,
                                   double *out_alpha,
                                   double *out_fidelity);

// Serialize a state to the JSON object `{dim, re[][], im[][]}`; free the
// returned string with [`sq_string_free`].
enum SqStatus sq_state_to_json(const struct SqState *state, char **out);

// Parse a state from the JSON object `{dim, re[][], im[][]}`.
//
// # Safety
// `json` must point to a NUL-terminated UTF-8 string.
enum SqStatus sq_state_from_json(const char *json, struct SqState **out);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* SQUEEZER_H */
