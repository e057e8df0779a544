#ifndef OSC_ECHO_H
#define OSC_ECHO_H

/*
 * C interface to the oscillator-echo library.
 *
 * Every function returns an oe_status. On failure a human-readable message is
 * available from oe_last_error() on the calling thread until the next call
 * into the library from that thread. Objects are opaque handles created by
 * oe_*_create / oe_*_load and released by the matching oe_*_free; all other
 * functions borrow them. Handles are not synchronized: share a handle across
 * threads only for concurrent read-only calls.
 *
 * Units follow the C++ library: zero-point-normalized phase space, angular
 * frequencies in rad/s, forces divided by p_zp (1/s).
 */

#include <stddef.h>
#include <stdint.h>

#if defined(_WIN32)
#  if defined(OSC_ECHO_BUILD)
#    define OE_API __declspec(dllexport)
#  else
#    define OE_API __declspec(dllimport)
#  endif
#else
#  define OE_API __attribute__((visibility("default")))
#endif

#ifdef __cplusplus
extern "C" {
#endif

typedef enum oe_status {
  OE_OK = 0,
  OE_ERR_NULL_ARGUMENT = 1,
  OE_ERR_DOMAIN = 2,
  OE_ERR_INVARIANT = 3,
  OE_ERR_INSUFFICIENT_DATA = 4,
  OE_ERR_UNIDENTIFIABLE = 5,
  OE_ERR_FIT_FAILURE = 6,
  OE_ERR_CONFIG = 7,
  OE_ERR_IO = 8,
  OE_ERR_BUFFER_TOO_SMALL = 9,
  OE_ERR_INTERNAL = 10
} oe_status;

typedef enum oe_backend { OE_BACKEND_DEFAULT = 0, OE_BACKEND_ANALYTIC = 1, OE_BACKEND_MC = 2 } oe_backend;

typedef struct oe_phase_vec {
  double q;
  double p;
} oe_phase_vec;

typedef struct oe_cov {
  double qq;
  double qp;
  double pp;
} oe_cov;

typedef struct oe_state {
  oe_phase_vec mean;
  oe_cov cov;
} oe_state;

typedef struct oe_oscillator {
  double omega; /* rad/s */
  double gamma; /* 1/s */
  double n0;
} oe_oscillator;

typedef struct oe_echo_spec {
  double r;
  double r_prime;
  double theta2;
} oe_echo_spec;

OE_API const char* oe_version(void);
OE_API const char* oe_status_string(oe_status status);
OE_API const char* oe_last_error(void);

/* ---- single-segment closed forms ---------------------------------------- */

/* Row-major 2x2. */
OE_API oe_status oe_transition_matrix(double r, double theta, double out[4]);
OE_API oe_status oe_displacement(double f0, double r, double theta, double omega, oe_phase_vec* out);
OE_API oe_status oe_rotation_center(double f0, double r, double omega, oe_phase_vec* out);
OE_API oe_status oe_heating_cov(double r, double theta, double gamma, double omega, oe_cov* out);
OE_API oe_status oe_shot_cov(double sigma_f0, double r, double theta, double omega, oe_cov* out);
OE_API oe_status oe_propagate_segment(const oe_state* state, double r, double theta, double f0,
                                      const oe_oscillator* osc, oe_state* out);
OE_API oe_status oe_normalized_force(double force_si, double mass_kg, double omega, double* out);

/* ---- echo protocol ------------------------------------------------------- */

OE_API oe_status oe_optimal_ratio(double r, double* out);
OE_API oe_status oe_echo_mean(oe_phase_vec d0, double f0, const oe_echo_spec* spec, double omega,
                              oe_phase_vec* out);
OE_API oe_status oe_echo_cov(const oe_cov* cov0, const oe_echo_spec* spec, const oe_oscillator* osc,
                             double sigma_f0, oe_cov* out);
OE_API oe_status oe_state_size(const oe_cov* cov, double* out);

/* ---- jump sequences ------------------------------------------------------ */

typedef struct oe_sequence oe_sequence;

OE_API oe_status oe_sequence_create(oe_sequence** out);
/* The three-step echo (r', pi) (r, theta2) (r', pi) without marks. */
OE_API oe_status oe_sequence_create_echo(const oe_echo_spec* spec, double omega, oe_sequence** out);
OE_API void oe_sequence_free(oe_sequence* seq);
OE_API oe_status oe_sequence_add_segment(oe_sequence* seq, double ratio, double phase);
/* Marks must be added in protocol order; label may be NULL. */
OE_API oe_status oe_sequence_add_mark(oe_sequence* seq, size_t segment, double phase, const char* label);
OE_API oe_status oe_sequence_segment_count(const oe_sequence* seq, size_t* out);
OE_API oe_status oe_sequence_mark_count(const oe_sequence* seq, size_t* out);

/* Closed-form propagation. Writes one state per mark then the final state
 * (mark_count + 1 entries) into `out`, whose capacity is `cap`. The ensemble
 * variant reports the mean at f0_mean and includes the shot-to-shot term. */
OE_API oe_status oe_sequence_run(const oe_sequence* seq, const oe_state* state0, double f0,
                                 const oe_oscillator* osc, oe_state* out, size_t cap);
OE_API oe_status oe_sequence_run_ensemble(const oe_sequence* seq, const oe_state* state0, double f0_mean,
                                          double f0_sigma, const oe_oscillator* osc, oe_state* out,
                                          size_t cap);

/* ---- Monte Carlo ensembles ----------------------------------------------- */

typedef struct oe_ensemble oe_ensemble;

typedef struct oe_mc_options {
  size_t shots;
  size_t steps_per_period; /* >= 100 */
  uint64_t master_seed;
  unsigned threads;      /* 0: OSC_ECHO_THREADS, then hardware */
  int euler_maruyama;    /* nonzero selects the first-order cross-check scheme */
} oe_mc_options;

OE_API oe_status oe_ensemble_run(const oe_sequence* seq, const oe_state* state0, double f0_mean, double f0_sigma,
                                 const oe_oscillator* osc, const oe_mc_options* options, oe_ensemble** out);
OE_API void oe_ensemble_free(oe_ensemble* ens);
OE_API oe_status oe_ensemble_shot_count(const oe_ensemble* ens, size_t* out);
/* Samples per shot: mark_count + 1. */
OE_API oe_status oe_ensemble_sample_count(const oe_ensemble* ens, size_t* out);
OE_API oe_status oe_ensemble_sample(const oe_ensemble* ens, size_t shot, size_t sample, oe_phase_vec* out);
OE_API oe_status oe_ensemble_force(const oe_ensemble* ens, size_t shot, double* out);
/* Unbiased mean and covariance of sample `sample` across shots. */
OE_API oe_status oe_ensemble_stats(const oe_ensemble* ens, size_t sample, oe_state* out);

/* ---- run configuration and commands -------------------------------------- */

typedef struct oe_config oe_config;

OE_API oe_status oe_config_load_file(const char* path, oe_config** out);
OE_API oe_status oe_config_load_string(const char* json, oe_config** out);
OE_API oe_status oe_config_preset(const char* name, oe_config** out);
OE_API void oe_config_free(oe_config* cfg);
OE_API oe_status oe_config_set_seed(oe_config* cfg, uint64_t seed);
/* Serialized JSON. Writes at most `cap` bytes including the terminating NUL;
 * `needed` (optional) receives the full size including the NUL. */
OE_API oe_status oe_config_to_json(const oe_config* cfg, char* buf, size_t cap, size_t* needed);

/* command: "propagate", "mc", "sweep" or "fig4". */
OE_API oe_status oe_run_command(const oe_config* cfg, const char* command, const char* out_dir,
                                oe_backend backend);

#ifdef __cplusplus
}
#endif

#endif /* OSC_ECHO_H */
