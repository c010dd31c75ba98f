#ifndef NMRQI_H
#define NMRQI_H

/* Generated by cbindgen from crates/ffi/src/lib.rs. Do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

/**
 * Result codes.
 */
typedef enum NmrqiStatus {
  NMRQI_STATUS_OK = 0,
  NMRQI_STATUS_NULL_POINTER = 1,
  NMRQI_STATUS_INVALID_ARGUMENT = 2,
  NMRQI_STATUS_PARSE = 3,
  NMRQI_STATUS_DIMENSION_MISMATCH = 4,
  NMRQI_STATUS_RANK_DEFICIENT = 5,
  NMRQI_STATUS_NEGATIVE_DELAY = 6,
  NMRQI_STATUS_NUMERICAL = 7,
  NMRQI_STATUS_BUFFER_TOO_SMALL = 8,
  NMRQI_STATUS_PANIC = 9,
} NmrqiStatus;

/**
 * DD sequence family for `nmrqi_dd_sequence_new`.
 */
typedef enum NmrqiScheme {
  NMRQI_SCHEME_CPMG = 0,
  NMRQI_SCHEME_UDD = 1,
  NMRQI_SCHEME_RUDD = 2,
} NmrqiScheme;

/**
 * Opaque pulse-program model with its parameter values.
 */
typedef struct NmrqiModel NmrqiModel;

/**
 * Opaque DD pulse sequence.
 */
typedef struct NmrqiSequence NmrqiSequence;

/**
 * Opaque single-scan process-tomography pipeline.
 */
typedef struct NmrqiSspt NmrqiSspt;

/**
 * Opaque spin system.
 */
typedef struct NmrqiSystem NmrqiSystem;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Library version as a static NUL-terminated string.
 */
const char *nmrqi_version(void);

/**
 * Copies the calling thread's last error message into `buf` (NUL-terminated,
 * truncated to `len`) and returns the full message length in bytes.
 *
 * # Safety
 * `buf` must be null or valid for `len` bytes.
 */
size_t nmrqi_last_error_message(char *buf, size_t len);

/**
 * Parses a spin system from TOML text.
 *
 * # Safety
 * `toml` must be a NUL-terminated string and `out` a valid pointer.
 */
enum NmrqiStatus nmrqi_system_from_toml(const char *toml, struct NmrqiSystem **out);

/**
 * # Safety
 * `sys` must be null or a handle from `nmrqi_system_from_toml` not yet freed.
 */
void nmrqi_system_free(struct NmrqiSystem *sys);

/**
 * Number of spins in the system.
 *
 * # Safety
 * `sys` must be a live handle and `out` a valid pointer.
 */
enum NmrqiStatus nmrqi_system_n_spins(const struct NmrqiSystem *sys, size_t *out);

/**
 * Parses a pulse-program model from TOML text.
 *
 * # Safety
 * `toml` must be a NUL-terminated string and `out` a valid pointer.
 */
enum NmrqiStatus nmrqi_model_from_toml(const char *toml, struct NmrqiModel **out);

/**
 * # Safety
 * `model` must be null or a handle from `nmrqi_model_from_toml` not yet freed.
 */
void nmrqi_model_free(struct NmrqiModel *model);

/**
 * Number of free delay parameters of the model.
 *
 * # Safety
 * `model` must be a live handle and `out` a valid pointer.
 */
enum NmrqiStatus nmrqi_model_n_params(const struct NmrqiModel *model, size_t *out);

/**
 * Condition number of the tomography constraint matrix at `params`
 * (`n_params` delays in seconds); infinite when rank deficient.
 *
 * # Safety
 * Handles must be live, `params` valid for `n_params` reads, `out` valid.
 */
enum NmrqiStatus nmrqi_condition_number(const struct NmrqiSystem *sys,
                                        const struct NmrqiModel *model,
                                        const double *params,
                                        size_t n_params,
                                        double *out);

/**
 * Simulates the tomography readout of a register deviation matrix (row-major
 * `dim x dim`, `im` may be null), optionally adds noise of level `eta` with
 * `seed`, reconstructs, and writes the estimate to `out_re` / `out_im`.
 *
 * # Safety
 * Handles must be live; matrix pointers must be valid for `dim * dim` values.
 */
enum NmrqiStatus nmrqi_aaqst_round_trip(const struct NmrqiSystem *sys,
                                        const struct NmrqiModel *model,
                                        size_t dim,
                                        const double *re,
                                        const double *im,
                                        double eta,
                                        uint64_t seed,
                                        double *out_re,
                                        double *out_im);

/**
 * Builds a process-tomography pipeline. Null `system_toml` or `model_toml`
 * selects the bundled three-spin register or readout program.
 *
 * # Safety
 * Strings must be null or NUL-terminated; `out` must be valid.
 */
enum NmrqiStatus nmrqi_sspt_new(const char *system_toml,
                                const char *model_toml,
                                struct NmrqiSspt **out);

/**
 * # Safety
 * `p` must be null or a handle from `nmrqi_sspt_new` not yet freed.
 */
void nmrqi_sspt_free(struct NmrqiSspt *p);

/**
 * Fidelity of the tomographed named gate (`nop`, `not-x`, `not-y`,
 * `hadamard`, `phase-pi`, `phase-pi/4`) against its ideal process matrix.
 *
 * # Safety
 * `p` must be live, `gate` NUL-terminated and `out` valid.
 */
enum NmrqiStatus nmrqi_sspt_gate_fidelity(const struct NmrqiSspt *p,
                                          const char *gate,
                                          double eta,
                                          uint64_t seed,
                                          double *out);

/**
 * Tomographed twirl process matrix at angle `phi`, written row-major as
 * 16 real and 16 imaginary parts in the basis E, X, Y, Z.
 *
 * # Safety
 * `p` must be live and `out_re` / `out_im` valid for 16 writes each.
 */
enum NmrqiStatus nmrqi_sspt_twirl_chi(const struct NmrqiSspt *p,
                                      double phi,
                                      double *out_re,
                                      double *out_im);

/**
 * Information deficit `D_n(theta)` in bits.
 *
 * # Safety
 * `out` must be valid.
 */
enum NmrqiStatus nmrqi_information_deficit(double theta, size_t n, double *out);

/**
 * Builds a DD sequence. CPMG uses `tau` and ignores `total_t`; UDD and RUDD
 * use `total_t` and ignore `tau`. All times in seconds.
 *
 * # Safety
 * `out` must be valid.
 */
enum NmrqiStatus nmrqi_dd_sequence_new(enum NmrqiScheme scheme,
                                       size_t n,
                                       double tau,
                                       double tau_pi,
                                       double total_t,
                                       struct NmrqiSequence **out);

/**
 * # Safety
 * `seq` must be null or a handle from `nmrqi_dd_sequence_new` not yet freed.
 */
void nmrqi_dd_sequence_free(struct NmrqiSequence *seq);

/**
 * Total duration and pulse count.
 *
 * # Safety
 * `seq` must be live; outputs must be valid.
 */
enum NmrqiStatus nmrqi_dd_sequence_info(const struct NmrqiSequence *seq,
                                        double *total_t,
                                        size_t *n_pulses);

/**
 * Pulse center times; `len` must be at least the pulse count.
 *
 * # Safety
 * `seq` must be live and `out` valid for `len` writes.
 */
enum NmrqiStatus nmrqi_dd_pulse_centers(const struct NmrqiSequence *seq, double *out, size_t len);

/**
 * Filter function `F(omega)` for `omega` in rad/s.
 *
 * # Safety
 * `seq` must be live and `out` valid.
 */
enum NmrqiStatus nmrqi_dd_filter_function(const struct NmrqiSequence *seq,
                                          double omega,
                                          double *out);

/**
 * Integral of `F(omega) / omega^2` over `[omega_lo, omega_hi]`.
 *
 * # Safety
 * `seq` must be live and `out` valid.
 */
enum NmrqiStatus nmrqi_dd_ff_area(const struct NmrqiSequence *seq,
                                  double omega_lo,
                                  double omega_hi,
                                  double *out);

/**
 * Effective gyromagnetic ratio and amplification of a star system with one
 * central spin `gamma_a` and `n_total - 1` satellites `gamma_m`.
 *
 * # Safety
 * Outputs must be valid.
 */
enum NmrqiStatus nmrqi_noon_gfactor(double gamma_a,
                                    double gamma_m,
                                    size_t n_total,
                                    double *gamma_eff,
                                    double *g);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* NMRQI_H */
