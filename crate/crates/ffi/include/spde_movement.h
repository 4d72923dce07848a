/* C interface to the spde-movement simulator and estimator.
 *
 * Handles are opaque; create with *_new / spde_simulate, release with the
 * matching *_free (freeing NULL is a no-op). Functions returning int32_t
 * use the SPDE_OK / SPDE_ERR_* codes below; after a failure,
 * spde_last_error() returns a message valid on the calling thread until the
 * next failing call. */

#ifndef SPDE_MOVEMENT_H
#define SPDE_MOVEMENT_H

#include <stdint.h>

#ifdef __cplusplus
extern "C" {
#endif

#define SPDE_OK 0
#define SPDE_ERR_INVALID 1   /* bad parameters or grid */
#define SPDE_ERR_NUMERICAL 2 /* path overflow or singular normal equations */
#define SPDE_ERR_INTERNAL 3  /* null handle or bad buffer */

#define SPDE_SCHEME_EXACT 0
#define SPDE_SCHEME_EULER 1

typedef struct SpdeConfig SpdeConfig;
typedef struct SpdeEnsemble SpdeEnsemble;

typedef struct SpdeEstimate {
  double theta_hat;
  double beta_hat;
  double j1;
  double j2;
  double det_factor;
  double r1;
  double r2;
  double fisher_theta;
} SpdeEstimate;

const char *spde_last_error(void);

/* Validate parameters and build a configuration; NULL on failure. */
SpdeConfig *spde_config_new(double theta, double beta, double sigma,
                            double gamma, uint32_t dimension, uint32_t n_modes,
                            double t_final, double dt, uint64_t seed,
                            int32_t scheme);
void spde_config_free(SpdeConfig *config);

/* Simulate replication rep_id (zero initial condition); NULL on failure.
 * A fixed (seed, rep_id) pair always yields a bit-identical ensemble. */
SpdeEnsemble *spde_simulate(const SpdeConfig *config, uint32_t rep_id);
void spde_ensemble_free(SpdeEnsemble *ensemble);

/* Grid times per path (n_steps + 1); 0 for NULL. */
uint64_t spde_ensemble_times(const SpdeEnsemble *ensemble);

/* Reconstructed field time series at one location. xi holds xi_len
 * coordinates (the spatial dimension); out receives exactly
 * spde_ensemble_times(ensemble) values. */
int32_t spde_trajectory(const SpdeEnsemble *ensemble, const double *xi,
                        uint64_t xi_len, double *out, uint64_t out_len);

/* Closed-form (theta, beta) MLE with diagnostics. epsilon is the relative
 * singularity threshold for the normal-equation determinant; pass 1e-12 for
 * the default. */
int32_t spde_estimate(const SpdeEnsemble *ensemble, double epsilon,
                      SpdeEstimate *out);

/* Fisher information for theta: exact spectral sum and large-(N, T)
 * asymptote under the configured parameters. */
int32_t spde_fisher(const SpdeConfig *config, double *exact,
                    double *asymptotic);

#ifdef __cplusplus
}
#endif

#endif /* SPDE_MOVEMENT_H */
