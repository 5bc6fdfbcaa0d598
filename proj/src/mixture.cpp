#include "robmix/mixture.hpp"

#include <algorithm>
#include <cmath>
#include <exception>
#include <functional>
#include <iostream>
#include <limits>
#include <numeric>
#include <thread>

#include <json.hpp>

#include "robmix/errors.hpp"
#include "robmix/rng.hpp"

namespace robmix {

namespace {

constexpr double kLog2Pi = 1.8378770664093454835606594728112;

// Stream ids for seeds derived from FitConfig::seed.
constexpr std::uint64_t kSampleStream = 0x7073695f73616d70ULL;
constexpr std::uint64_t kRestartStream = 0x72657374617274ULL;

double log_bessel_k(double order, double x) {
    // K is symmetric in the order
    const double v = std::abs(order);
    if (x < 500.0) return std::log(std::cyl_bessel_k(v, x));
    // asymptotic expansion for large argument
    const double a = 4.0 * v * v;
    const double s = 1.0 + (a - 1.0) / (8.0 * x) + (a - 1.0) * (a - 9.0) / (128.0 * x * x);
    return 0.5 * std::log(M_PI / (2.0 * x)) - x + std::log(s);
}

struct ComponentDensity {
    Matrix chol;     // of Sigma (Gaussian/Laplace) or of the Student scale
    double log_norm = 0.0;
    double nu = 0.0;
    Family kind = Family::Gaussian;
    std::size_t d = 0;

    static ComponentDensity prepare(const SymMatrix& sigma, const EmissionFamily& family) {
        ComponentDensity c;
        c.kind = family.kind;
        c.d = sigma.dim();
        const double d = static_cast<double>(c.d);
        switch (family.kind) {
            case Family::Gaussian:
                c.chol = cholesky(sigma);
                c.log_norm = -0.5 * d * kLog2Pi - 0.5 * log_det(c.chol);
                break;
            case Family::Student: {
                c.nu = family.nu;
                SymMatrix scale = sigma;
                scale *= (c.nu - 2.0) / c.nu;  // variance-matching scale matrix
                c.chol = cholesky(scale);
                c.log_norm = std::lgamma(0.5 * (c.nu + d)) - std::lgamma(0.5 * c.nu) -
                             0.5 * d * std::log(c.nu * M_PI) - 0.5 * log_det(c.chol);
                break;
            }
            case Family::Laplace:
                c.chol = cholesky(sigma);
                c.log_norm = std::log(2.0) - 0.5 * d * kLog2Pi - 0.5 * log_det(c.chol);
                break;
        }
        return c;
    }

    double log_density(std::span<const double> x, std::span<const double> m,
                       std::span<double> scratch) const {
        for (std::size_t j = 0; j < d; ++j) scratch[j] = x[j] - m[j];
        forward_solve(chol, scratch);
        double q = 0.0;
        for (std::size_t j = 0; j < d; ++j) q += scratch[j] * scratch[j];
        switch (kind) {
            case Family::Gaussian:
                return log_norm - 0.5 * q;
            case Family::Student:
                return log_norm - 0.5 * (nu + static_cast<double>(d)) * std::log1p(q / nu);
            case Family::Laplace: {
                q = std::max(q, 1e-12);  // density diverges at the center for d >= 2
                const double order = 1.0 - 0.5 * static_cast<double>(d);
                return log_norm + 0.5 * order * std::log(0.5 * q) +
                       log_bessel_k(order, std::sqrt(2.0 * q));
            }
        }
        return -std::numeric_limits<double>::infinity();
    }
};

// Shared E-step core: fills tau (if non-null) and returns the log-likelihood.
double e_step_impl(const Matrix& x, const MixtureParams& params, Matrix* tau_out,
                   int* underflow_out, Vec* row_loglik = nullptr) {
    const std::size_t n = x.rows, k = params.k;
    std::vector<ComponentDensity> comp;
    comp.reserve(k);
    for (std::size_t c = 0; c < k; ++c)
        comp.push_back(ComponentDensity::prepare(params.sigma[c], params.family));
    Vec log_pi(k);
    for (std::size_t c = 0; c < k; ++c) log_pi[c] = std::log(params.pi[c]);

    double loglik = 0.0;
    int underflow = 0;
    Vec lg(k), scratch(params.dim);
    if (row_loglik) row_loglik->assign(n, -std::numeric_limits<double>::infinity());
    for (std::size_t i = 0; i < n; ++i) {
        const auto xi = x.row(i);
        double mx = -std::numeric_limits<double>::infinity();
        for (std::size_t c = 0; c < k; ++c) {
            lg[c] = log_pi[c] + comp[c].log_density(xi, params.centers[c], scratch);
            mx = std::max(mx, lg[c]);
        }
        if (!std::isfinite(mx)) {
            ++underflow;
            if (tau_out)
                for (std::size_t c = 0; c < k; ++c)
                    tau_out->at(i, c) = 1.0 / static_cast<double>(k);
            continue;  // row contributes nothing the caller can use
        }
        double sum = 0.0;
        for (std::size_t c = 0; c < k; ++c) sum += std::exp(lg[c] - mx);
        const double lse = mx + std::log(sum);
        loglik += lse;
        if (row_loglik) (*row_loglik)[i] = lse;
        if (tau_out) {
            const double inv = 1.0 / sum;
            for (std::size_t c = 0; c < k; ++c)
                tau_out->at(i, c) = std::exp(lg[c] - mx) * inv;
        }
    }
    if (underflow_out) *underflow_out = underflow;
    return loglik;
}

double median_of(Vec values) {
    const std::size_t n = values.size();
    const std::size_t mid = n / 2;
    std::nth_element(values.begin(), values.begin() + mid, values.end());
    double m = values[mid];
    if (n % 2 == 0) {
        const double lo = *std::max_element(values.begin(), values.begin() + mid);
        m = 0.5 * (lo + m);
    }
    return m;
}

void check_tau(const Matrix& tau, std::size_t n, std::size_t k) {
    if (tau.rows != n || tau.cols != k)
        throw InvalidInputError("m_step: tau shape mismatch");
    for (double v : tau.data)
        if (!std::isfinite(v) || v < 0.0)
            throw InvalidInputError("m_step: tau must be finite and nonnegative");
}

Vec update_pi(const Matrix& tau, double pi_floor) {
    const std::size_t n = tau.rows, k = tau.cols;
    Vec pi(k, 0.0);
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t c = 0; c < k; ++c) pi[c] += tau.at(i, c);
    double total = 0.0;
    for (double v : pi) total += v;
    for (double& v : pi) v /= total;
    // exact floored simplex: floored entries keep pi_floor, the rest are
    // rescaled to absorb the difference (pi_floor < 1/K guarantees feasibility)
    std::vector<bool> floored(k, false);
    for (int pass = 0; pass < static_cast<int>(k); ++pass) {
        double lifted = 0.0, free_mass = 0.0;
        bool changed = false;
        for (std::size_t c = 0; c < k; ++c) {
            if (floored[c]) continue;
            if (pi[c] < pi_floor) {
                floored[c] = true;
                changed = true;
            } else {
                free_mass += pi[c];
            }
        }
        for (std::size_t c = 0; c < k; ++c)
            if (floored[c]) {
                pi[c] = pi_floor;
                lifted += pi_floor;
            }
        if (free_mass > 0.0) {
            const double scale = (1.0 - lifted) / free_mass;
            for (std::size_t c = 0; c < k; ++c)
                if (!floored[c]) pi[c] *= scale;
        }
        if (!changed) break;
    }
    return pi;
}

void run_tasks(std::size_t count, int threads, const std::function<void(std::size_t)>& fn) {
    int hw = static_cast<int>(std::thread::hardware_concurrency());
    if (hw <= 0) hw = 1;
    const int nt = std::min<int>(threads > 0 ? threads : hw, static_cast<int>(count));
    if (nt <= 1) {
        for (std::size_t i = 0; i < count; ++i) fn(i);
        return;
    }
    std::vector<std::exception_ptr> errs(nt);
    std::vector<std::thread> pool;
    pool.reserve(nt);
    for (int t = 0; t < nt; ++t) {
        pool.emplace_back([&, t] {
            try {
                for (std::size_t i = t; i < count; i += nt) fn(i);
            } catch (...) {
                errs[t] = std::current_exception();
            }
        });
    }
    for (auto& th : pool) th.join();
    for (auto& e : errs)
        if (e) std::rethrow_exception(e);
}

}  // namespace

void validate(const MixtureParams& params) {
    validate(params.family);
    if (params.k == 0 || params.dim == 0)
        throw InvalidInputError("MixtureParams: empty mixture");
    if (params.pi.size() != params.k || params.centers.size() != params.k ||
        params.mcm.size() != params.k || params.sigma.size() != params.k)
        throw InvalidInputError("MixtureParams: component count mismatch");
    double s = 0.0;
    for (double p : params.pi) {
        if (!(p > 0.0)) throw InvalidInputError("MixtureParams: pi must be positive");
        s += p;
    }
    if (std::abs(s - 1.0) > 1e-12)
        throw InvalidInputError("MixtureParams: pi must sum to 1");
    for (const auto& c : params.centers)
        if (c.size() != params.dim)
            throw InvalidInputError("MixtureParams: center dimension mismatch");
    for (const auto& m : params.mcm)
        if (m.dim() != params.dim)
            throw InvalidInputError("MixtureParams: V dimension mismatch");
    for (const auto& m : params.sigma)
        if (m.dim() != params.dim)
            throw InvalidInputError("MixtureParams: Sigma dimension mismatch");
}

void validate(const FitConfig& cfg, std::size_t k) {
    if (cfg.max_outer_iter < 1) throw InvalidInputError("FitConfig: max_outer_iter must be >= 1");
    if (!(cfg.loglik_tol > 0.0)) throw InvalidInputError("FitConfig: loglik_tol must be > 0");
    if (cfg.restarts < 1) throw InvalidInputError("FitConfig: restarts must be >= 1");
    if (!(cfg.pi_floor > 0.0) || cfg.pi_floor >= 1.0 / static_cast<double>(k))
        throw InvalidInputError("FitConfig: pi_floor must lie in (0, 1/K)");
    validate(cfg.median_cfg);
    validate(cfg.mcm_cfg);
    validate(cfg.recovery);
}

double emission_density(std::span<const double> x, std::span<const double> m,
                        const SymMatrix& sigma, const EmissionFamily& family) {
    validate(family);
    if (x.size() != m.size() || x.size() != sigma.dim())
        throw InvalidInputError("emission_density: dimension mismatch");
    const ComponentDensity c = ComponentDensity::prepare(sigma, family);
    Vec scratch(x.size());
    return std::exp(c.log_density(x, m, scratch));
}

Responsibilities e_step(const Matrix& x, const MixtureParams& params) {
    validate(params);
    if (x.cols != params.dim) throw InvalidInputError("e_step: dimension mismatch");
    Responsibilities r;
    r.tau = Matrix(x.rows, params.k);
    e_step_impl(x, params, &r.tau, &r.underflow_rows);
    return r;
}

double log_likelihood(const Matrix& x, const MixtureParams& params) {
    validate(params);
    return e_step_impl(x, params, nullptr, nullptr);
}

MixtureParams m_step_with_sample(const Matrix& x, const Responsibilities& tau,
                                 const MixtureParams& prev, const FitConfig& cfg,
                                 const Matrix& u_sample) {
    const std::size_t n = x.rows, d = x.cols, k = prev.k;
    check_tau(tau.tau, n, k);
    validate(cfg, k);

    MixtureParams out;
    out.family = prev.family;
    out.k = k;
    out.dim = d;
    out.pi = update_pi(tau.tau, cfg.pi_floor);
    out.centers.resize(k);
    out.mcm.resize(k);
    out.sigma.resize(k);

    Vec w(n);
    for (std::size_t c = 0; c < k; ++c) {
        double wsum = 0.0;
        for (std::size_t i = 0; i < n; ++i) {
            w[i] = tau.tau.at(i, c);
            wsum += w[i];
        }
        if (wsum < static_cast<double>(d + 1))
            throw DegenerateClusterError("m_step: component " + std::to_string(c + 1) +
                                         " has effective weight below d+1");
        out.centers[c] = weiszfeld_median(x, w, cfg.median_cfg, &prev.centers[c]);
        McmEstimate est =
            weiszfeld_mcm(x, out.centers[c], w, cfg.mcm_cfg, &prev.mcm[c]);
        out.mcm[c] = est.mcm;

        EigenPairs ep = sym_eigen(est.mcm_psd);
        ep.values = recover_eigenvalues_with_sample(ep.values, u_sample, cfg.recovery);
        const double top = *std::max_element(ep.values.begin(), ep.values.end());
        if (top <= 1e-12)
            throw DegenerateClusterError("m_step: component " + std::to_string(c + 1) +
                                         " scatter collapsed");
        out.sigma[c] = psd_project(ep.reconstruct());
    }
    return out;
}

MixtureParams m_step(const Matrix& x, const Responsibilities& tau,
                     const MixtureParams& prev, const FitConfig& cfg) {
    const std::size_t rows =
        cfg.recovery.solver == Solver::RobbinsMonro
            ? static_cast<std::size_t>(cfg.recovery.mc_samples) * cfg.recovery.iterations
            : static_cast<std::size_t>(cfg.recovery.mc_samples);
    const Matrix u = sample_standardized(prev.family, x.cols, rows, cfg.recovery.seed);
    return m_step_with_sample(x, tau, prev, cfg, u);
}

MixtureParams m_step_naive(const Matrix& x, const Responsibilities& tau,
                           const MixtureParams& prev, const FitConfig& cfg) {
    const std::size_t n = x.rows, d = x.cols, k = prev.k;
    check_tau(tau.tau, n, k);

    MixtureParams out;
    out.family = prev.family;
    out.k = k;
    out.dim = d;
    out.pi = update_pi(tau.tau, cfg.pi_floor);
    out.centers.resize(k);
    out.mcm.resize(k);
    out.sigma.resize(k);

    for (std::size_t c = 0; c < k; ++c) {
        double wsum = 0.0;
        Vec m(d, 0.0);
        for (std::size_t i = 0; i < n; ++i) {
            const double w = tau.tau.at(i, c);
            wsum += w;
            const auto xi = x.row(i);
            for (std::size_t j = 0; j < d; ++j) m[j] += w * xi[j];
        }
        if (wsum < static_cast<double>(d + 1))
            throw DegenerateClusterError("m_step_naive: component " +
                                         std::to_string(c + 1) +
                                         " has effective weight below d+1");
        for (double& v : m) v /= wsum;
        SymMatrix cov(d);
        Vec y(d);
        for (std::size_t i = 0; i < n; ++i) {
            const double w = tau.tau.at(i, c);
            if (w == 0.0) continue;
            const auto xi = x.row(i);
            for (std::size_t j = 0; j < d; ++j) y[j] = xi[j] - m[j];
            for (std::size_t a = 0; a < d; ++a)
                for (std::size_t b = 0; b <= a; ++b)
                    cov.set(a, b, cov.at(a, b) + w * y[a] * y[b]);
        }
        cov *= 1.0 / wsum;
        out.centers[c] = std::move(m);
        out.sigma[c] = psd_project(cov);
        out.mcm[c] = out.sigma[c];
    }
    return out;
}

MixtureParams init_random(const Matrix& x, int k, const EmissionFamily& family,
                          std::uint64_t seed) {
    validate(family);
    const std::size_t n = x.rows, d = x.cols;
    if (k < 1) throw InvalidInputError("init_random: K must be >= 1");
    if (n < static_cast<std::size_t>(k))
        throw InvalidInputError("init_random: fewer rows than clusters");

    // partial Fisher-Yates for K distinct rows
    std::vector<std::size_t> idx(n);
    std::iota(idx.begin(), idx.end(), 0);
    Rng rng(seed);
    for (int j = 0; j < k; ++j) {
        const std::size_t pick = j + rng.index(n - j);
        std::swap(idx[j], idx[pick]);
    }

    const double c_iso = isotropic_mcm_scale(family, d);
    MixtureParams p;
    p.family = family;
    p.k = static_cast<std::size_t>(k);
    p.dim = d;
    p.pi.assign(p.k, 1.0 / static_cast<double>(k));
    for (int j = 0; j < k; ++j) {
        const auto row = x.row(idx[j]);
        p.centers.emplace_back(row.begin(), row.end());
        p.mcm.push_back(SymMatrix::identity(d, c_iso));
        p.sigma.push_back(SymMatrix::identity(d));
    }
    return p;
}

Matrix fit_standardized_sample(const EmissionFamily& family, std::size_t d,
                               const FitConfig& cfg) {
    const std::size_t rows =
        cfg.recovery.solver == Solver::RobbinsMonro
            ? static_cast<std::size_t>(cfg.recovery.mc_samples) * cfg.recovery.iterations
            : static_cast<std::size_t>(cfg.recovery.mc_samples);
    return sample_standardized(family, d, rows, derive_seed(cfg.seed, kSampleStream));
}

FitResult fit_from_init(const Matrix& x, const MixtureParams& init,
                        const FitConfig& cfg) {
    validate(init);
    validate(cfg, init.k);
    const Matrix u = cfg.method == FitMethod::Robust
                         ? fit_standardized_sample(init.family, x.cols, cfg)
                         : Matrix();

    MixtureParams params = init;
    FitResult res;
    res.seed = cfg.seed;
    res.config = cfg;
    double ll_prev = std::numeric_limits<double>::quiet_NaN();
    Responsibilities tau;
    tau.tau = Matrix(x.rows, init.k);
    Vec row_ll;

    for (int h = 0; h < cfg.max_outer_iter; ++h) {
        const double ll = e_step_impl(x, params, &tau.tau, &tau.underflow_rows, &row_ll);
        res.loglik_trace.push_back(ll);
        if (h > 0 && std::abs(ll - ll_prev) / std::max(1.0, std::abs(ll)) < cfg.loglik_tol) {
            res.converged = true;
            res.loglik = ll;
            break;
        }
        ll_prev = ll;
        params = cfg.method == FitMethod::Robust
                     ? m_step_with_sample(x, tau, params, cfg, u)
                     : m_step_naive(x, tau, params, cfg);
        res.n_iter = h + 1;
    }
    if (!res.converged) {
        // the loop ended on an M-step; refresh tau / loglik for the final params
        res.loglik = e_step_impl(x, params, &tau.tau, &tau.underflow_rows, &row_ll);
        res.loglik_trace.push_back(res.loglik);
    }
    res.median_loglik = static_cast<double>(x.rows) * median_of(std::move(row_ll));
    res.params = std::move(params);
    res.tau = std::move(tau);
    const auto [bic, icl] = information_criteria(res, x.rows, x.cols, res.params.k);
    res.bic = bic;
    res.icl = icl;
    return res;
}

FitResult fit(const Matrix& x, int k, const EmissionFamily& family,
              const FitConfig& cfg) {
    validate(family);
    if (k < 1) throw InvalidInputError("fit: K must be >= 1");
    validate(cfg, static_cast<std::size_t>(k));
    if (x.rows == 0 || x.cols == 0) throw InvalidInputError("fit: empty dataset");
    if (x.rows < static_cast<std::size_t>(k) * (x.cols + 1))
        std::cerr << "robmix: warning: n = " << x.rows << " is below K(d+1) = "
                  << static_cast<std::size_t>(k) * (x.cols + 1) << "\n";

    std::vector<std::optional<FitResult>> outcomes(cfg.restarts);
    run_tasks(static_cast<std::size_t>(cfg.restarts), cfg.threads, [&](std::size_t r) {
        FitConfig rcfg = cfg;
        rcfg.threads = 1;
        try {
            const MixtureParams init =
                init_random(x, k, family, derive_seed(cfg.seed, kRestartStream + r));
            outcomes[r] = fit_from_init(x, init, rcfg);
        } catch (const DegenerateClusterError&) {
            outcomes[r] = std::nullopt;
        }
    });

    const auto score = [&](const FitResult& r) {
        return cfg.restart_score == RestartScore::MedianLoglik ? r.median_loglik
                                                               : r.loglik;
    };
    int best = -1;
    for (int r = 0; r < cfg.restarts; ++r) {
        if (!outcomes[r]) continue;
        if (best < 0 || score(*outcomes[r]) > score(*outcomes[best])) best = r;
    }
    if (best < 0) throw FitFailureError("fit: every restart ended degenerate");
    FitResult res = std::move(*outcomes[best]);
    res.seed = cfg.seed;
    res.config = cfg;
    return res;
}

std::pair<double, double> information_criteria(const FitResult& fit, std::size_t n,
                                               std::size_t d, std::size_t k) {
    const double dk = static_cast<double>(k - 1) + static_cast<double>(k * d) +
                      static_cast<double>(k * d * (d + 1) / 2);
    const double bic = fit.loglik - 0.5 * std::log(static_cast<double>(n)) * dk;
    double entropy = 0.0;
    for (double t : fit.tau.tau.data)
        if (t > 0.0) entropy += t * std::log(t);
    return {bic, bic + entropy};
}

SelectResult select_k(const Matrix& x, const std::vector<int>& k_range,
                      Criterion criterion, const EmissionFamily& family,
                      const FitConfig& cfg) {
    if (k_range.empty()) throw InvalidInputError("select_k: empty K range");

    SelectResult out;
    out.ks = k_range;
    out.fits.resize(k_range.size());
    out.errors.assign(k_range.size(), "");

    run_tasks(k_range.size(), cfg.threads, [&](std::size_t i) {
        FitConfig inner = cfg;
        inner.threads = 1;
        try {
            out.fits[i] = fit(x, k_range[i], family, inner);
        } catch (const Error& e) {
            out.errors[i] = e.what();
        }
    });

    int best = -1;
    double best_val = -std::numeric_limits<double>::infinity();
    for (std::size_t i = 0; i < k_range.size(); ++i) {
        if (!out.fits[i]) continue;
        const double v = criterion == Criterion::Bic ? out.fits[i]->bic : out.fits[i]->icl;
        const bool better =
            best < 0 || v > best_val ||
            (v == best_val && k_range[i] < k_range[static_cast<std::size_t>(best)]);
        if (better) {
            best = static_cast<int>(i);
            best_val = v;
        }
    }
    if (best < 0) throw FitFailureError("select_k: every K failed");
    out.best_k = k_range[static_cast<std::size_t>(best)];
    return out;
}

// ---------------------------------------------------------------------------
// model JSON

namespace {

using nlohmann::json;

json dense_to_json(const SymMatrix& m) {
    json rows = json::array();
    for (std::size_t i = 0; i < m.dim(); ++i) {
        json row = json::array();
        for (std::size_t j = 0; j < m.dim(); ++j) row.push_back(m.at(i, j));
        rows.push_back(std::move(row));
    }
    return rows;
}

SymMatrix dense_from_json(const json& rows) {
    const std::size_t d = rows.size();
    SymMatrix m(d);
    for (std::size_t i = 0; i < d; ++i)
        for (std::size_t j = 0; j <= i; ++j)
            m.set(i, j, rows.at(i).at(j).get<double>());
    return m;
}

const char* solver_name(Solver s) {
    switch (s) {
        case Solver::FixPoint: return "fixpoint";
        case Solver::Gradient: return "gradient";
        case Solver::RobbinsMonro: return "robbinsmonro";
    }
    return "?";
}

Solver solver_from(const std::string& s) {
    if (s == "fixpoint") return Solver::FixPoint;
    if (s == "gradient") return Solver::Gradient;
    if (s == "robbinsmonro") return Solver::RobbinsMonro;
    throw InvalidInputError("unknown solver: " + s);
}

EmissionFamily family_from(const std::string& s, int nu) {
    if (s == "gaussian") return EmissionFamily::gaussian();
    if (s == "student") return EmissionFamily::student(nu);
    if (s == "laplace") return EmissionFamily::laplace();
    throw InvalidInputError("unknown family: " + s);
}

json config_to_json(const FitConfig& c) {
    return json{
        {"max_outer_iter", c.max_outer_iter},
        {"loglik_tol", c.loglik_tol},
        {"pi_floor", c.pi_floor},
        {"restarts", c.restarts},
        {"method", c.method == FitMethod::Robust ? "robust" : "naive"},
        {"restart_score", c.restart_score == RestartScore::MedianLoglik ? "median" : "total"},
        {"threads", c.threads},
        {"median", {{"tol", c.median_cfg.tol},
                    {"max_iter", c.median_cfg.max_iter},
                    {"singularity_eps", c.median_cfg.singularity_eps}}},
        {"mcm", {{"tol", c.mcm_cfg.tol},
                 {"max_iter", c.mcm_cfg.max_iter},
                 {"singularity_eps", c.mcm_cfg.singularity_eps}}},
        {"recovery", {{"solver", solver_name(c.recovery.solver)},
                      {"mc_samples", c.recovery.mc_samples},
                      {"iterations", c.recovery.iterations},
                      {"c_gamma", c.recovery.c_gamma},
                      {"gamma", c.recovery.gamma},
                      {"omega", c.recovery.omega},
                      {"eta0", c.recovery.eta0},
                      {"seed", c.recovery.seed}}},
    };
}

FitConfig config_from_json(const json& j) {
    FitConfig c;
    c.max_outer_iter = j.at("max_outer_iter").get<int>();
    c.loglik_tol = j.at("loglik_tol").get<double>();
    c.pi_floor = j.at("pi_floor").get<double>();
    c.restarts = j.at("restarts").get<int>();
    c.method = j.at("method").get<std::string>() == "naive" ? FitMethod::Naive
                                                            : FitMethod::Robust;
    c.restart_score = j.at("restart_score").get<std::string>() == "total"
                          ? RestartScore::TotalLoglik
                          : RestartScore::MedianLoglik;
    c.threads = j.at("threads").get<int>();
    const json& med = j.at("median");
    c.median_cfg = {med.at("tol").get<double>(), med.at("max_iter").get<int>(),
                    med.at("singularity_eps").get<double>()};
    const json& mc = j.at("mcm");
    c.mcm_cfg = {mc.at("tol").get<double>(), mc.at("max_iter").get<int>(),
                 mc.at("singularity_eps").get<double>()};
    const json& r = j.at("recovery");
    c.recovery.solver = solver_from(r.at("solver").get<std::string>());
    c.recovery.mc_samples = r.at("mc_samples").get<int>();
    c.recovery.iterations = r.at("iterations").get<int>();
    c.recovery.c_gamma = r.at("c_gamma").get<double>();
    c.recovery.gamma = r.at("gamma").get<double>();
    c.recovery.omega = r.at("omega").get<double>();
    c.recovery.eta0 = r.at("eta0").get<double>();
    c.recovery.seed = r.at("seed").get<std::uint64_t>();
    return c;
}

}  // namespace

std::string model_to_json(const FitResult& result) {
    const MixtureParams& p = result.params;
    json j;
    j["family"] = p.family.name();
    if (p.family.kind == Family::Student) j["nu"] = p.family.nu;
    j["K"] = p.k;
    j["dim"] = p.dim;
    j["pi"] = p.pi;
    json centers = json::array();
    for (const auto& c : p.centers) centers.push_back(c);
    j["m"] = std::move(centers);
    json vs = json::array(), sigmas = json::array();
    for (const auto& v : p.mcm) vs.push_back(dense_to_json(v));
    for (const auto& s : p.sigma) sigmas.push_back(dense_to_json(s));
    j["V"] = std::move(vs);
    j["Sigma"] = std::move(sigmas);
    j["loglik"] = result.loglik;
    j["bic"] = result.bic;
    j["icl"] = result.icl;
    j["converged"] = result.converged;
    j["n_iter"] = result.n_iter;
    j["seed"] = result.seed;
    j["config"] = config_to_json(result.config);
    return j.dump(2) + "\n";
}

FitResult model_from_json(const std::string& text) {
    FitResult r;
    try {
        const json j = json::parse(text);
        MixtureParams& p = r.params;
        p.family = family_from(j.at("family").get<std::string>(),
                               j.contains("nu") ? j.at("nu").get<int>() : 0);
        p.k = j.at("K").get<std::size_t>();
        p.dim = j.at("dim").get<std::size_t>();
        p.pi = j.at("pi").get<Vec>();
        for (const auto& c : j.at("m")) p.centers.push_back(c.get<Vec>());
        for (const auto& v : j.at("V")) p.mcm.push_back(dense_from_json(v));
        for (const auto& s : j.at("Sigma")) p.sigma.push_back(dense_from_json(s));
        r.loglik = j.at("loglik").get<double>();
        r.bic = j.at("bic").get<double>();
        r.icl = j.at("icl").get<double>();
        r.converged = j.at("converged").get<bool>();
        r.n_iter = j.at("n_iter").get<int>();
        r.seed = j.at("seed").get<std::uint64_t>();
        r.config = config_from_json(j.at("config"));
    } catch (const json::exception& e) {
        throw IoError(std::string("model json: ") + e.what());
    }
    validate(r.params);
    return r;
}

}  // namespace robmix
