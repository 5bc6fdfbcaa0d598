/*
 * robmix C API: robust model-based clustering via the geometric median and
 * the median covariation matrix.
 *
 * All functions returning robmix_status report ROBMIX_OK (0) on success.
 * On failure, robmix_last_error() returns a thread-local message. Objects
 * behind opaque handles are created by robmix_* constructors and must be
 * released with the matching *_free function. Handles are immutable after
 * creation, so sharing them across threads is safe.
 */
#ifndef ROBMIX_H
#define ROBMIX_H

#include <stddef.h>
#include <stdint.h>

#if defined(_WIN32)
#define ROBMIX_API __declspec(dllexport)
#else
#define ROBMIX_API __attribute__((visibility("default")))
#endif

#ifdef __cplusplus
extern "C" {
#endif

typedef enum robmix_status {
    ROBMIX_OK = 0,
    ROBMIX_ERR_INVALID_ARG = 1,
    ROBMIX_ERR_NUMERIC = 2,
    ROBMIX_ERR_DEGENERATE = 3,
    ROBMIX_ERR_FIT_FAILED = 4,
    ROBMIX_ERR_IO = 5,
    ROBMIX_ERR_INTERNAL = 6
} robmix_status;

typedef enum robmix_family {
    ROBMIX_FAMILY_GAUSSIAN = 0,
    ROBMIX_FAMILY_STUDENT = 1,
    ROBMIX_FAMILY_LAPLACE = 2
} robmix_family;

typedef enum robmix_solver {
    ROBMIX_SOLVER_FIXPOINT = 0,
    ROBMIX_SOLVER_GRADIENT = 1,
    ROBMIX_SOLVER_ROBBINS_MONRO = 2
} robmix_solver;

typedef enum robmix_criterion {
    ROBMIX_CRITERION_BIC = 0,
    ROBMIX_CRITERION_ICL = 1
} robmix_criterion;

typedef enum robmix_method {
    ROBMIX_METHOD_ROBUST = 0,
    ROBMIX_METHOD_NAIVE = 1 /* mean/covariance M-step baseline */
} robmix_method;

typedef enum robmix_preset {
    ROBMIX_PRESET_PAPER3 = 0,      /* 3 clusters: mu1..mu3, Sigma1..Sigma3, d=5 */
    ROBMIX_PRESET_VARIANCE = 1     /* 1 cluster: center 0, Sigma0, d=5 */
} robmix_preset;

typedef struct robmix_dataset robmix_dataset;
typedef struct robmix_params robmix_params;
typedef struct robmix_result robmix_result;

ROBMIX_API const char* robmix_version(void);
ROBMIX_API const char* robmix_last_error(void);

/* ------------------------------------------------------------------ */
/* datasets                                                            */

/* x is row-major n x d; labels (1-based) and outlier flags may be NULL. */
ROBMIX_API robmix_status robmix_dataset_create(const double* x, int64_t n, int64_t d,
                                               const int32_t* labels,
                                               const int32_t* outliers,
                                               robmix_dataset** out);
ROBMIX_API robmix_status robmix_dataset_load_csv(const char* path, robmix_dataset** out);
ROBMIX_API robmix_status robmix_dataset_save_csv(const robmix_dataset* ds, const char* path);
ROBMIX_API int64_t robmix_dataset_rows(const robmix_dataset* ds);
ROBMIX_API int64_t robmix_dataset_dim(const robmix_dataset* ds);
ROBMIX_API int robmix_dataset_has_labels(const robmix_dataset* ds);
ROBMIX_API int robmix_dataset_has_outliers(const robmix_dataset* ds);
/* buffers must hold n*d doubles / n ints respectively */
ROBMIX_API robmix_status robmix_dataset_copy_values(const robmix_dataset* ds, double* buf);
ROBMIX_API robmix_status robmix_dataset_copy_labels(const robmix_dataset* ds, int32_t* buf);
ROBMIX_API robmix_status robmix_dataset_copy_outliers(const robmix_dataset* ds, int32_t* buf);
ROBMIX_API void robmix_dataset_free(robmix_dataset* ds);

/* ------------------------------------------------------------------ */
/* ground-truth parameters and simulation                              */

ROBMIX_API robmix_status robmix_preset_params(robmix_preset preset, robmix_family family,
                                              int nu, robmix_params** out);
/* centers: k x d row-major; sigmas: k x d x d row-major; pi may be NULL (=1/k) */
ROBMIX_API robmix_status robmix_params_create(robmix_family family, int nu, int32_t k,
                                              int64_t d, const double* pi,
                                              const double* centers, const double* sigmas,
                                              robmix_params** out);
ROBMIX_API int32_t robmix_params_k(const robmix_params* p);
ROBMIX_API int64_t robmix_params_dim(const robmix_params* p);
ROBMIX_API robmix_family robmix_params_family(const robmix_params* p);
ROBMIX_API int robmix_params_nu(const robmix_params* p);
ROBMIX_API robmix_status robmix_params_copy_pi(const robmix_params* p, double* buf);
ROBMIX_API robmix_status robmix_params_copy_center(const robmix_params* p, int32_t k,
                                                   double* buf);
ROBMIX_API robmix_status robmix_params_copy_sigma(const robmix_params* p, int32_t k,
                                                  double* buf /* d*d */);
ROBMIX_API robmix_status robmix_params_copy_mcm(const robmix_params* p, int32_t k,
                                                double* buf /* d*d */);
ROBMIX_API void robmix_params_free(robmix_params* p);

/* Samples nk[k] rows per cluster from truth, then replaces round(delta*nk)
 * rows per cluster with scenario draws ('a'..'e'); delta 0 skips that step. */
ROBMIX_API robmix_status robmix_generate(const robmix_params* truth, const int64_t* nk,
                                         int32_t k, char scenario, double delta,
                                         uint64_t seed, robmix_dataset** out);

/* ------------------------------------------------------------------ */
/* fitting                                                             */

typedef struct robmix_fit_options {
    int32_t max_outer_iter;
    double loglik_tol;
    double pi_floor;
    int32_t restarts;
    uint64_t seed;
    robmix_method method;
    robmix_solver solver;
    int32_t mc_samples;     /* N */
    int32_t mc_iterations;  /* T; Robbins-Monro consumes N*T draws in one pass */
    double weiszfeld_tol;
    int32_t weiszfeld_max_iter;
    int32_t threads; /* restart parallelism; 0 = hardware */
} robmix_fit_options;

ROBMIX_API void robmix_fit_options_init(robmix_fit_options* opts);

ROBMIX_API robmix_status robmix_fit(const robmix_dataset* ds, int32_t k,
                                    robmix_family family, int nu,
                                    const robmix_fit_options* opts,
                                    robmix_result** out);

typedef struct robmix_select_row {
    int32_t k;
    double loglik;
    double bic;
    double icl;
    int32_t converged;
    int32_t failed; /* 1 when this K produced no fit */
} robmix_select_row;

/* Fits every K in [kmin, kmax]; rows (if non-NULL) must hold kmax-kmin+1
 * entries and receive the per-K criterion table in order. */
ROBMIX_API robmix_status robmix_select_k(const robmix_dataset* ds, int32_t kmin,
                                         int32_t kmax, robmix_criterion criterion,
                                         robmix_family family, int nu,
                                         const robmix_fit_options* opts,
                                         robmix_select_row* rows, int32_t* best_k,
                                         robmix_result** best);

/* ------------------------------------------------------------------ */
/* fit results                                                         */

ROBMIX_API const robmix_params* robmix_result_params(const robmix_result* r);
ROBMIX_API double robmix_result_loglik(const robmix_result* r);
ROBMIX_API double robmix_result_bic(const robmix_result* r);
ROBMIX_API double robmix_result_icl(const robmix_result* r);
ROBMIX_API int robmix_result_converged(const robmix_result* r);
ROBMIX_API int32_t robmix_result_n_iter(const robmix_result* r);
ROBMIX_API int64_t robmix_result_rows(const robmix_result* r);
/* buf must hold rows*k doubles */
ROBMIX_API robmix_status robmix_result_copy_tau(const robmix_result* r, double* buf);
/* 1-based hard assignments (argmax tau); buf must hold rows entries */
ROBMIX_API robmix_status robmix_result_copy_assignments(const robmix_result* r,
                                                        int32_t* buf);
ROBMIX_API robmix_status robmix_result_save_json(const robmix_result* r, const char* path);
ROBMIX_API robmix_status robmix_result_load_json(const char* path, robmix_result** out);
ROBMIX_API void robmix_result_free(robmix_result* r);

/* ------------------------------------------------------------------ */
/* evaluation                                                          */

ROBMIX_API robmix_status robmix_adjusted_rand_index(const int32_t* a, const int32_t* b,
                                                    int64_t n, double* out);
/* MSE after center matching; normalized by d (mu) and d^2 (Sigma). */
ROBMIX_API robmix_status robmix_match_mse(const robmix_params* truth,
                                          const robmix_params* est, double* mse_mu,
                                          double* mse_sigma);

/* ------------------------------------------------------------------ */
/* low-level robust estimators                                         */

/* weights may be NULL (unit weights); out must hold d doubles */
ROBMIX_API robmix_status robmix_geometric_median(const double* x, int64_t n, int64_t d,
                                                 const double* weights, double* out);
/* center may be NULL (computed by Weiszfeld); out_v / out_v_psd hold d*d
 * doubles row-major; out_v_psd may be NULL */
ROBMIX_API robmix_status robmix_median_covariation(const double* x, int64_t n, int64_t d,
                                                   const double* weights,
                                                   const double* center, double* out_v,
                                                   double* out_v_psd);
/* Rebuilds the covariance from a d x d MCM estimate. */
ROBMIX_API robmix_status robmix_covariance_from_mcm(const double* v, int64_t d,
                                                    robmix_family family, int nu,
                                                    robmix_solver solver,
                                                    int32_t mc_samples,
                                                    int32_t iterations, uint64_t seed,
                                                    double* out_sigma);

#ifdef __cplusplus
}
#endif

#endif /* ROBMIX_H */
