#pragma once

#include <cstdint>
#include <span>

#include "robmix/matrix.hpp"

namespace robmix {

enum class Family { Gaussian, Student, Laplace };

/// Emission family of a mixture component; determines the density and the
/// standardized law U used by the Monte-Carlo eigenvalue recovery.
struct EmissionFamily {
    Family kind = Family::Gaussian;
    int nu = 0;  // Student degrees of freedom (>= 3); ignored otherwise

    static EmissionFamily gaussian() { return {Family::Gaussian, 0}; }
    static EmissionFamily student(int nu) { return {Family::Student, nu}; }
    static EmissionFamily laplace() { return {Family::Laplace, 0}; }

    const char* name() const;
};

void validate(const EmissionFamily& family);

enum class Solver { FixPoint, Gradient, RobbinsMonro };

struct RecoveryConfig {
    Solver solver = Solver::FixPoint;
    int mc_samples = 2000;  // N
    int iterations = 50;    // T (FixPoint/Gradient sweeps)
    // Robbins-Monro: step c_gamma * k^-gamma, log(k+1)^omega averaging.
    // Draws N*T samples and makes a single pass, so budgets are comparable
    // with the iterative solvers.
    double c_gamma = 1.0;
    double gamma = 0.75;
    double omega = 2.0;
    // Gradient step sequence eta_t = eta0 / sqrt(1 + t); eta0 <= 0 selects
    // the scale-aware default 8 * mean(delta) / N.
    double eta0 = 0.0;
    std::uint64_t seed = 0;
};

void validate(const RecoveryConfig& cfg);

/// h(delta, lambda, U) = (sum_i (delta_i - lambda_i U_i^2)^2
///                        + sum_{i != j} lambda_i lambda_j U_i^2 U_j^2)^(-1/2),
/// with the inner sum clamped below at 1e-24.
double h_kernel(std::span<const double> delta, std::span<const double> lambda,
                std::span<const double> u);

/// n i.i.d. draws of the standardized law U (identity covariance):
/// Gaussian N(0, I); Student sqrt(nu-2) N / sqrt(chi2_nu) with the mixing
/// variable shared across a row; Laplace sqrt(W) N with W ~ Exp(1).
Matrix sample_standardized(const EmissionFamily& family, std::size_t d,
                           std::size_t n, std::uint64_t seed);

/// Solves delta_k = lambda_k E[U_k^2 h] / E[h] for lambda >= 0 by the chosen
/// solver, Monte-Carlo sample drawn from cfg.seed.
Vec recover_eigenvalues(std::span<const double> delta, const EmissionFamily& family,
                        const RecoveryConfig& cfg);

/// Same, over a caller-provided sample; FixPoint/Gradient sweep all rows
/// cfg.iterations times, Robbins-Monro makes exactly one pass.
Vec recover_eigenvalues_with_sample(std::span<const double> delta, const Matrix& u,
                                    const RecoveryConfig& cfg);

/// Rebuilds Sigma from an MCM estimate: PSD-project, eigendecompose, recover
/// the eigenvalues, reassemble on the MCM eigenvectors, floor to positive
/// definite.
SymMatrix psi_u(const SymMatrix& v, const EmissionFamily& family,
                const RecoveryConfig& cfg);
SymMatrix psi_u_with_sample(const SymMatrix& v, const Matrix& u,
                            const RecoveryConfig& cfg);

/// Scalar c such that the MCM of a distribution with identity covariance is
/// c * I_d (the isotropic forward map). Monte-Carlo with a fixed internal
/// seed, cached per (family, d).
double isotropic_mcm_scale(const EmissionFamily& family, std::size_t d);

}  // namespace robmix
