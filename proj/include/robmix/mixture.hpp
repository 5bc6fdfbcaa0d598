#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "robmix/matrix.hpp"
#include "robmix/mcm.hpp"
#include "robmix/median.hpp"
#include "robmix/recovery.hpp"

namespace robmix {

/// Mixture parameters in the robust parametrization: component weights,
/// medians m_k, median covariation matrices V_k and the rebuilt covariances
/// Sigma_k = Psi_U(V_k).
struct MixtureParams {
    EmissionFamily family;
    std::size_t k = 0;
    std::size_t dim = 0;
    Vec pi;
    std::vector<Vec> centers;
    std::vector<SymMatrix> mcm;
    std::vector<SymMatrix> sigma;
};

void validate(const MixtureParams& params);

struct Responsibilities {
    Matrix tau;              // n x K, rows on the simplex
    int underflow_rows = 0;  // rows assigned uniform because no component had mass
};

enum class FitMethod { Robust, Naive };

/// Score used to pick the winning restart. The total log-likelihood rewards
/// solutions that park one wide component on the outliers, so the default
/// compares restarts by n * median of the per-point log-densities instead;
/// both scores coincide in ranking on clean data.
enum class RestartScore { MedianLoglik, TotalLoglik };

struct FitConfig {
    int max_outer_iter = 200;
    double loglik_tol = 1e-6;  // relative log-likelihood change
    double pi_floor = 1e-6;
    int restarts = 5;
    std::uint64_t seed = 0;
    WeiszfeldConfig median_cfg{};
    WeiszfeldConfig mcm_cfg{};
    RecoveryConfig recovery{};
    FitMethod method = FitMethod::Robust;  // Naive = mean/covariance M-step baseline
    RestartScore restart_score = RestartScore::MedianLoglik;
    int threads = 0;                       // restart parallelism; 0 = hardware
};

void validate(const FitConfig& cfg, std::size_t k);

struct FitResult {
    MixtureParams params;
    Responsibilities tau;
    Vec loglik_trace;
    bool converged = false;
    int n_iter = 0;
    double loglik = 0.0;
    double median_loglik = 0.0;  // n * median per-point log-density
    double bic = 0.0;
    double icl = 0.0;
    std::uint64_t seed = 0;
    FitConfig config;
};

/// Density of the symmetric emission with mean m and covariance sigma.
/// Student uses the scale matrix (nu-2)/nu * sigma so the variance is sigma;
/// Laplace is the normal variance mixture with Exp(1) mixing.
double emission_density(std::span<const double> x, std::span<const double> m,
                        const SymMatrix& sigma, const EmissionFamily& family);

/// Row-normalized posteriors, computed in log space.
Responsibilities e_step(const Matrix& x, const MixtureParams& params);

/// Observed-data log-likelihood sum_i log sum_k pi_k phi_k(x_i).
double log_likelihood(const Matrix& x, const MixtureParams& params);

/// Robust M-step: floored/renormalized pi, weighted Weiszfeld median,
/// weighted Weiszfeld MCM around the new center, Sigma_k = Psi_U(V_k).
/// Throws DegenerateClusterError when a component's effective weight drops
/// below d+1. The Monte-Carlo sample for Psi_U is drawn from
/// cfg.recovery.seed; fit() reuses one sample across sweeps instead.
MixtureParams m_step(const Matrix& x, const Responsibilities& tau,
                     const MixtureParams& prev, const FitConfig& cfg);

/// One robust M-step with a caller-provided standardized sample (the
/// Psi_U map is then a fixed deterministic function across EM sweeps).
MixtureParams m_step_with_sample(const Matrix& x, const Responsibilities& tau,
                                 const MixtureParams& prev, const FitConfig& cfg,
                                 const Matrix& u_sample);

/// Mean/covariance M-step (the non-robust EM baseline).
MixtureParams m_step_naive(const Matrix& x, const Responsibilities& tau,
                           const MixtureParams& prev, const FitConfig& cfg);

/// Random initialization: K distinct rows as centers, pi = 1/K,
/// Sigma_k = I_d and V_k = c * I_d with c the isotropic forward-map scale
/// (so that Psi_U(V_k) is approximately I_d).
MixtureParams init_random(const Matrix& x, int k, const EmissionFamily& family,
                          std::uint64_t seed);

/// Alternates e_step / m_step until the relative log-likelihood change
/// drops below loglik_tol, over cfg.restarts random initializations run in
/// parallel; keeps the restart with the best final log-likelihood.
FitResult fit(const Matrix& x, int k, const EmissionFamily& family,
              const FitConfig& cfg);

/// fit() from one explicit initialization (no restarts).
FitResult fit_from_init(const Matrix& x, const MixtureParams& init,
                        const FitConfig& cfg);

/// The standardized sample fit() holds fixed across EM sweeps, derived from
/// cfg.seed (Robbins-Monro solvers get mc_samples * iterations rows).
Matrix fit_standardized_sample(const EmissionFamily& family, std::size_t d,
                               const FitConfig& cfg);

/// BIC(K) = loglik - log(n) D_K / 2 with D_K = (K-1) + Kd + Kd(d+1)/2;
/// ICL(K) = BIC(K) + sum_ik tau log tau (0 log 0 := 0).
std::pair<double, double> information_criteria(const FitResult& fit, std::size_t n,
                                               std::size_t d, std::size_t k);

enum class Criterion { Bic, Icl };

struct SelectResult {
    int best_k = 0;
    std::vector<int> ks;
    std::vector<std::optional<FitResult>> fits;  // aligned with ks
    std::vector<std::string> errors;             // empty string when fit succeeded
};

/// Fits every K in k_range (failures recorded, not fatal) and returns the
/// argmax of the chosen criterion, ties broken toward smaller K.
SelectResult select_k(const Matrix& x, const std::vector<int>& k_range,
                      Criterion criterion, const EmissionFamily& family,
                      const FitConfig& cfg);

/// Model document round trip (lossless doubles).
std::string model_to_json(const FitResult& result);
FitResult model_from_json(const std::string& text);

}  // namespace robmix
