#include "robmix/recovery.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <mutex>
#include <tuple>

#include "robmix/errors.hpp"
#include "robmix/rng.hpp"

namespace robmix {

const char* EmissionFamily::name() const {
    switch (kind) {
        case Family::Gaussian: return "gaussian";
        case Family::Student: return "student";
        case Family::Laplace: return "laplace";
    }
    return "?";
}

void validate(const EmissionFamily& family) {
    if (family.kind == Family::Student && family.nu < 3)
        throw InvalidInputError("EmissionFamily: Student requires nu >= 3");
}

void validate(const RecoveryConfig& cfg) {
    if (cfg.mc_samples < 1) throw InvalidInputError("RecoveryConfig: mc_samples must be >= 1");
    if (cfg.iterations < 1) throw InvalidInputError("RecoveryConfig: iterations must be >= 1");
    if (!(cfg.gamma > 0.5 && cfg.gamma < 1.0))
        throw InvalidInputError("RecoveryConfig: gamma must lie in (1/2, 1)");
    if (!(cfg.c_gamma > 0.0)) throw InvalidInputError("RecoveryConfig: c_gamma must be > 0");
    if (cfg.omega < 0.0) throw InvalidInputError("RecoveryConfig: omega must be >= 0");
}

double h_kernel(std::span<const double> delta, std::span<const double> lambda,
                std::span<const double> u) {
    const std::size_t d = delta.size();
    double diag = 0.0, s1 = 0.0, s2 = 0.0;
    for (std::size_t i = 0; i < d; ++i) {
        const double lu2 = lambda[i] * u[i] * u[i];
        const double a = delta[i] - lu2;
        diag += a * a;
        s1 += lu2;
        s2 += lu2 * lu2;
    }
    // sum_{i != j} lambda_i lambda_j U_i^2 U_j^2 = (sum lu2)^2 - sum lu2^2
    const double inner = std::max(diag + s1 * s1 - s2, 1e-24);
    return 1.0 / std::sqrt(inner);
}

Matrix sample_standardized(const EmissionFamily& family, std::size_t d,
                           std::size_t n, std::uint64_t seed) {
    validate(family);
    if (d < 1 || n < 1) throw InvalidInputError("sample_standardized: d and n must be >= 1");
    Rng rng(seed);
    Matrix u(n, d);
    for (std::size_t i = 0; i < n; ++i) {
        auto row = u.row(i);
        switch (family.kind) {
            case Family::Gaussian:
                for (std::size_t j = 0; j < d; ++j) row[j] = rng.normal();
                break;
            case Family::Student: {
                const double k = rng.chi_squared(family.nu);
                const double s = std::sqrt((family.nu - 2.0) / k);
                for (std::size_t j = 0; j < d; ++j) row[j] = s * rng.normal();
                break;
            }
            case Family::Laplace: {
                const double s = std::sqrt(rng.exponential());
                for (std::size_t j = 0; j < d; ++j) row[j] = s * rng.normal();
                break;
            }
        }
    }
    return u;
}

namespace {

void check_iterate(const Vec& lambda, const char* solver, int iteration) {
    for (double v : lambda)
        if (!std::isfinite(v))
            throw NumericError(std::string(solver) + ": non-finite eigenvalue iterate",
                               iteration);
}

Vec solve_fixpoint(std::span<const double> delta, const Matrix& u, int iters) {
    const std::size_t d = delta.size(), n = u.rows;
    Vec lambda(delta.begin(), delta.end());
    Vec num(d);
    for (int t = 0; t < iters; ++t) {
        double hsum = 0.0;
        std::fill(num.begin(), num.end(), 0.0);
        for (std::size_t i = 0; i < n; ++i) {
            const auto ui = u.row(i);
            const double h = h_kernel(delta, lambda, ui);
            hsum += h;
            for (std::size_t k = 0; k < d; ++k) num[k] += ui[k] * ui[k] * h;
        }
        for (std::size_t k = 0; k < d; ++k)
            lambda[k] = num[k] > 0.0 ? std::max(delta[k] * hsum / num[k], 0.0) : 0.0;
        check_iterate(lambda, "fixpoint", t);
    }
    return lambda;
}

Vec solve_gradient(std::span<const double> delta, const Matrix& u,
                   const RecoveryConfig& cfg) {
    const std::size_t d = delta.size(), n = u.rows;
    Vec lambda(delta.begin(), delta.end());
    double mean_delta = 0.0;
    for (double v : delta) mean_delta += v;
    mean_delta /= static_cast<double>(d);
    const double eta0 = cfg.eta0 > 0.0
                            ? cfg.eta0
                            : 8.0 * mean_delta / static_cast<double>(n);
    Vec grad(d);
    for (int t = 0; t < cfg.iterations; ++t) {
        std::fill(grad.begin(), grad.end(), 0.0);
        for (std::size_t i = 0; i < n; ++i) {
            const auto ui = u.row(i);
            const double h = h_kernel(delta, lambda, ui);
            for (std::size_t k = 0; k < d; ++k)
                grad[k] += (lambda[k] * ui[k] * ui[k] - delta[k]) * h;
        }
        const double eta = eta0 / std::sqrt(1.0 + t);
        for (std::size_t k = 0; k < d; ++k)
            lambda[k] = std::max(lambda[k] - eta * grad[k], 0.0);
        check_iterate(lambda, "gradient", t);
    }
    return lambda;
}

Vec solve_robbins_monro(std::span<const double> delta, const Matrix& u,
                        const RecoveryConfig& cfg) {
    const std::size_t d = delta.size(), n = u.rows;
    Vec lambda(delta.begin(), delta.end());
    Vec lbar = lambda;
    // weighted averaging: lbar_k = sum_l log(l+1)^w lambda_l / sum_l log(l+1)^w
    double wsum = std::pow(std::log(1.0), cfg.omega);  // iterate 0
    for (std::size_t i = 0; i < n; ++i) {
        const auto ui = u.row(i);
        const double h = h_kernel(delta, lambda, ui);
        const double step = cfg.c_gamma * std::pow(static_cast<double>(i + 1), -cfg.gamma);
        for (std::size_t k = 0; k < d; ++k)
            lambda[k] = std::max(
                lambda[k] - step * (lambda[k] * ui[k] * ui[k] - delta[k]) * h, 0.0);
        const double w = std::pow(std::log(static_cast<double>(i + 2)), cfg.omega);
        wsum += w;
        if (wsum > 0.0) {
            const double a = w / wsum;
            for (std::size_t k = 0; k < d; ++k) lbar[k] += a * (lambda[k] - lbar[k]);
        }
        if ((i & 1023u) == 0u) check_iterate(lambda, "robbins-monro", static_cast<int>(i));
    }
    check_iterate(lbar, "robbins-monro", static_cast<int>(n));
    return lbar;
}

}  // namespace

Vec recover_eigenvalues_with_sample(std::span<const double> delta, const Matrix& u,
                                    const RecoveryConfig& cfg) {
    validate(cfg);
    if (delta.size() != u.cols)
        throw InvalidInputError("recover_eigenvalues: delta/sample dimension mismatch");
    for (double v : delta)
        if (!std::isfinite(v) || v < 0.0)
            throw InvalidInputError("recover_eigenvalues: delta must be finite and >= 0");
    switch (cfg.solver) {
        case Solver::FixPoint: return solve_fixpoint(delta, u, cfg.iterations);
        case Solver::Gradient: return solve_gradient(delta, u, cfg);
        case Solver::RobbinsMonro: return solve_robbins_monro(delta, u, cfg);
    }
    throw InvalidInputError("recover_eigenvalues: unknown solver");
}

Vec recover_eigenvalues(std::span<const double> delta, const EmissionFamily& family,
                        const RecoveryConfig& cfg) {
    validate(cfg);
    const std::size_t n =
        cfg.solver == Solver::RobbinsMonro
            ? static_cast<std::size_t>(cfg.mc_samples) * static_cast<std::size_t>(cfg.iterations)
            : static_cast<std::size_t>(cfg.mc_samples);
    const Matrix u = sample_standardized(family, delta.size(), n, cfg.seed);
    return recover_eigenvalues_with_sample(delta, u, cfg);
}

SymMatrix psi_u_with_sample(const SymMatrix& v, const Matrix& u,
                            const RecoveryConfig& cfg) {
    const SymMatrix vp = psd_project(v);
    EigenPairs ep = sym_eigen(vp);
    const Vec lambda = recover_eigenvalues_with_sample(ep.values, u, cfg);
    ep.values = lambda;
    return psd_project(ep.reconstruct());
}

SymMatrix psi_u(const SymMatrix& v, const EmissionFamily& family,
                const RecoveryConfig& cfg) {
    validate(cfg);
    const std::size_t n =
        cfg.solver == Solver::RobbinsMonro
            ? static_cast<std::size_t>(cfg.mc_samples) * static_cast<std::size_t>(cfg.iterations)
            : static_cast<std::size_t>(cfg.mc_samples);
    const Matrix u = sample_standardized(family, v.dim(), n, cfg.seed);
    return psi_u_with_sample(v, u, cfg);
}

double isotropic_mcm_scale(const EmissionFamily& family, std::size_t d) {
    validate(family);
    if (d < 1) throw InvalidInputError("isotropic_mcm_scale: d must be >= 1");

    static std::mutex mu;
    static std::map<std::tuple<Family, int, std::size_t>, double> cache;
    const auto key = std::make_tuple(family.kind, family.nu, d);
    {
        std::lock_guard lock(mu);
        if (auto it = cache.find(key); it != cache.end()) return it->second;
    }

    // forward fix point in delta = c * 1 at lambda = 1; fixed internal seed
    const Matrix u = sample_standardized(family, d, 100000, 0x6d63735f69736fULL);
    const Vec lambda(d, 1.0);
    Vec delta(d, 1.0);
    double c = 1.0;
    for (int t = 0; t < 600; ++t) {
        double hsum = 0.0, num = 0.0;
        for (std::size_t i = 0; i < u.rows; ++i) {
            const auto ui = u.row(i);
            const double h = h_kernel(delta, lambda, ui);
            hsum += h;
            for (std::size_t k = 0; k < d; ++k) num += ui[k] * ui[k] * h;
        }
        const double c_next = num / (static_cast<double>(d) * hsum);
        const bool done = std::abs(c_next - c) < 1e-9 * std::max(c, 1e-12);
        c = c_next;
        std::fill(delta.begin(), delta.end(), c);
        if (done) break;
    }

    std::lock_guard lock(mu);
    cache.emplace(key, c);
    return c;
}

}  // namespace robmix
