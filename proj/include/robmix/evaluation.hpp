#pragma once

#include <limits>
#include <span>
#include <string>
#include <vector>

#include "robmix/mixture.hpp"

namespace robmix {

struct EvalReport {
    double ari = std::numeric_limits<double>::quiet_NaN();
    double mse_mu = 0.0;
    double mse_sigma = 0.0;
    std::vector<std::size_t> matching;  // truth cluster k matched to est matching[k]
};

/// Hubert-Arabie adjusted Rand index between two labelings.
double adjusted_rand_index(std::span<const int> a, std::span<const int> b);

/// Matches estimated clusters to truth clusters by minimizing the summed
/// squared center distances (exhaustive over permutations), then
///   MSE(mu)    = K^-1 sum_k ||mu*_k - mu_hat||^2 / d
///   MSE(Sigma) = K^-1 sum_k ||Sigma*_k - Sigma_hat||_F^2 / d^2.
EvalReport match_and_mse(const MixtureParams& truth, const MixtureParams& est);

/// One benchmark result row:
/// method,scenario,delta,seed,ari,mse_mu,mse_sigma,khat,converged.
/// Missing metrics (degenerate fits) render as empty fields.
std::string eval_csv_header();
std::string eval_csv_row(const std::string& method, char scenario, double delta,
                         std::uint64_t seed, double ari, double mse_mu,
                         double mse_sigma, int khat, bool converged);

}  // namespace robmix
