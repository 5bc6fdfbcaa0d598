#include "robmix.h"

#include <cstring>
#include <fstream>
#include <sstream>
#include <string>

#include "robmix/errors.hpp"
#include "robmix/evaluation.hpp"
#include "robmix/mixture.hpp"
#include "robmix/simulation.hpp"

using namespace robmix;

struct robmix_dataset {
    Dataset data;
};

struct robmix_params {
    MixtureParams params;
};

struct robmix_result {
    FitResult result;
    robmix_params params_view;  // exposes result.params through the C API
};

namespace {

thread_local std::string g_last_error;

robmix_status fail(robmix_status code, const char* what) {
    g_last_error = what;
    return code;
}

template <typename Fn>
robmix_status guarded(Fn&& fn) {
    try {
        fn();
        return ROBMIX_OK;
    } catch (const InvalidInputError& e) {
        return fail(ROBMIX_ERR_INVALID_ARG, e.what());
    } catch (const NumericError& e) {
        return fail(ROBMIX_ERR_NUMERIC, e.what());
    } catch (const DegenerateClusterError& e) {
        return fail(ROBMIX_ERR_DEGENERATE, e.what());
    } catch (const FitFailureError& e) {
        return fail(ROBMIX_ERR_FIT_FAILED, e.what());
    } catch (const IoError& e) {
        return fail(ROBMIX_ERR_IO, e.what());
    } catch (const std::exception& e) {
        return fail(ROBMIX_ERR_INTERNAL, e.what());
    }
}

EmissionFamily make_family(robmix_family family, int nu) {
    EmissionFamily f;
    switch (family) {
        case ROBMIX_FAMILY_GAUSSIAN: f = EmissionFamily::gaussian(); break;
        case ROBMIX_FAMILY_STUDENT: f = EmissionFamily::student(nu); break;
        case ROBMIX_FAMILY_LAPLACE: f = EmissionFamily::laplace(); break;
        default: throw InvalidInputError("unknown family code");
    }
    validate(f);
    return f;
}

Solver make_solver(robmix_solver solver) {
    switch (solver) {
        case ROBMIX_SOLVER_FIXPOINT: return Solver::FixPoint;
        case ROBMIX_SOLVER_GRADIENT: return Solver::Gradient;
        case ROBMIX_SOLVER_ROBBINS_MONRO: return Solver::RobbinsMonro;
    }
    throw InvalidInputError("unknown solver code");
}

FitConfig make_config(const robmix_fit_options* opts) {
    FitConfig cfg;
    if (!opts) return cfg;
    cfg.max_outer_iter = opts->max_outer_iter;
    cfg.loglik_tol = opts->loglik_tol;
    cfg.pi_floor = opts->pi_floor;
    cfg.restarts = opts->restarts;
    cfg.seed = opts->seed;
    cfg.method = opts->method == ROBMIX_METHOD_NAIVE ? FitMethod::Naive
                                                     : FitMethod::Robust;
    cfg.recovery.solver = make_solver(opts->solver);
    cfg.recovery.mc_samples = opts->mc_samples;
    cfg.recovery.iterations = opts->mc_iterations;
    cfg.median_cfg.tol = opts->weiszfeld_tol;
    cfg.median_cfg.max_iter = opts->weiszfeld_max_iter;
    cfg.mcm_cfg = cfg.median_cfg;
    cfg.threads = opts->threads;
    return cfg;
}

robmix_result* wrap_result(FitResult&& r) {
    auto* out = new robmix_result{std::move(r), {}};
    out->params_view.params = out->result.params;
    return out;
}

void copy_sym(const SymMatrix& m, double* buf) {
    const std::size_t d = m.dim();
    for (std::size_t i = 0; i < d; ++i)
        for (std::size_t j = 0; j < d; ++j) buf[i * d + j] = m.at(i, j);
}

}  // namespace

extern "C" {

const char* robmix_version(void) { return "0.1.0"; }

const char* robmix_last_error(void) { return g_last_error.c_str(); }

/* ------------------------------------------------------------------ */

robmix_status robmix_dataset_create(const double* x, int64_t n, int64_t d,
                                    const int32_t* labels, const int32_t* outliers,
                                    robmix_dataset** out) {
    return guarded([&] {
        if (!x || !out || n < 1 || d < 1)
            throw InvalidInputError("dataset_create: bad arguments");
        Dataset ds;
        ds.x = Matrix(static_cast<std::size_t>(n), static_cast<std::size_t>(d));
        std::memcpy(ds.x.data.data(), x, sizeof(double) * ds.x.data.size());
        if (labels) ds.labels.assign(labels, labels + n);
        if (outliers) {
            ds.outliers.resize(static_cast<std::size_t>(n));
            for (int64_t i = 0; i < n; ++i) ds.outliers[i] = outliers[i] != 0;
        }
        *out = new robmix_dataset{std::move(ds)};
    });
}

robmix_status robmix_dataset_load_csv(const char* path, robmix_dataset** out) {
    return guarded([&] {
        if (!path || !out) throw InvalidInputError("dataset_load_csv: bad arguments");
        *out = new robmix_dataset{load_csv(path)};
    });
}

robmix_status robmix_dataset_save_csv(const robmix_dataset* ds, const char* path) {
    return guarded([&] {
        if (!ds || !path) throw InvalidInputError("dataset_save_csv: bad arguments");
        save_csv(ds->data, path);
    });
}

int64_t robmix_dataset_rows(const robmix_dataset* ds) {
    return ds ? static_cast<int64_t>(ds->data.x.rows) : 0;
}

int64_t robmix_dataset_dim(const robmix_dataset* ds) {
    return ds ? static_cast<int64_t>(ds->data.x.cols) : 0;
}

int robmix_dataset_has_labels(const robmix_dataset* ds) {
    return ds && ds->data.has_labels() ? 1 : 0;
}

int robmix_dataset_has_outliers(const robmix_dataset* ds) {
    return ds && ds->data.has_outliers() ? 1 : 0;
}

robmix_status robmix_dataset_copy_values(const robmix_dataset* ds, double* buf) {
    return guarded([&] {
        if (!ds || !buf) throw InvalidInputError("dataset_copy_values: bad arguments");
        std::memcpy(buf, ds->data.x.data.data(), sizeof(double) * ds->data.x.data.size());
    });
}

robmix_status robmix_dataset_copy_labels(const robmix_dataset* ds, int32_t* buf) {
    return guarded([&] {
        if (!ds || !buf || !ds->data.has_labels())
            throw InvalidInputError("dataset_copy_labels: no labels");
        for (std::size_t i = 0; i < ds->data.labels.size(); ++i)
            buf[i] = ds->data.labels[i];
    });
}

robmix_status robmix_dataset_copy_outliers(const robmix_dataset* ds, int32_t* buf) {
    return guarded([&] {
        if (!ds || !buf || !ds->data.has_outliers())
            throw InvalidInputError("dataset_copy_outliers: no outlier flags");
        for (std::size_t i = 0; i < ds->data.outliers.size(); ++i)
            buf[i] = ds->data.outliers[i];
    });
}

void robmix_dataset_free(robmix_dataset* ds) { delete ds; }

/* ------------------------------------------------------------------ */

robmix_status robmix_preset_params(robmix_preset preset, robmix_family family, int nu,
                                   robmix_params** out) {
    return guarded([&] {
        if (!out) throw InvalidInputError("preset_params: bad arguments");
        const EmissionFamily fam = make_family(family, nu);
        MixtureParams p;
        switch (preset) {
            case ROBMIX_PRESET_PAPER3: p = presets::paper3(fam); break;
            case ROBMIX_PRESET_VARIANCE: p = presets::variance_study(fam); break;
            default: throw InvalidInputError("unknown preset code");
        }
        *out = new robmix_params{std::move(p)};
    });
}

robmix_status robmix_params_create(robmix_family family, int nu, int32_t k, int64_t d,
                                   const double* pi, const double* centers,
                                   const double* sigmas, robmix_params** out) {
    return guarded([&] {
        if (!out || !centers || !sigmas || k < 1 || d < 1)
            throw InvalidInputError("params_create: bad arguments");
        MixtureParams p;
        p.family = make_family(family, nu);
        p.k = static_cast<std::size_t>(k);
        p.dim = static_cast<std::size_t>(d);
        if (pi) p.pi.assign(pi, pi + k);
        else p.pi.assign(p.k, 1.0 / static_cast<double>(k));
        const std::size_t dd = p.dim;
        for (std::size_t c = 0; c < p.k; ++c) {
            p.centers.emplace_back(centers + c * dd, centers + (c + 1) * dd);
            Matrix m(dd, dd);
            std::memcpy(m.data.data(), sigmas + c * dd * dd, sizeof(double) * dd * dd);
            p.sigma.push_back(SymMatrix::from_dense(m));
        }
        p.mcm = p.sigma;
        validate(p);
        *out = new robmix_params{std::move(p)};
    });
}

int32_t robmix_params_k(const robmix_params* p) {
    return p ? static_cast<int32_t>(p->params.k) : 0;
}

int64_t robmix_params_dim(const robmix_params* p) {
    return p ? static_cast<int64_t>(p->params.dim) : 0;
}

robmix_family robmix_params_family(const robmix_params* p) {
    if (!p) return ROBMIX_FAMILY_GAUSSIAN;
    switch (p->params.family.kind) {
        case Family::Gaussian: return ROBMIX_FAMILY_GAUSSIAN;
        case Family::Student: return ROBMIX_FAMILY_STUDENT;
        case Family::Laplace: return ROBMIX_FAMILY_LAPLACE;
    }
    return ROBMIX_FAMILY_GAUSSIAN;
}

int robmix_params_nu(const robmix_params* p) { return p ? p->params.family.nu : 0; }

robmix_status robmix_params_copy_pi(const robmix_params* p, double* buf) {
    return guarded([&] {
        if (!p || !buf) throw InvalidInputError("params_copy_pi: bad arguments");
        for (std::size_t i = 0; i < p->params.k; ++i) buf[i] = p->params.pi[i];
    });
}

robmix_status robmix_params_copy_center(const robmix_params* p, int32_t k, double* buf) {
    return guarded([&] {
        if (!p || !buf || k < 0 || static_cast<std::size_t>(k) >= p->params.k)
            throw InvalidInputError("params_copy_center: bad arguments");
        const Vec& c = p->params.centers[static_cast<std::size_t>(k)];
        for (std::size_t i = 0; i < c.size(); ++i) buf[i] = c[i];
    });
}

robmix_status robmix_params_copy_sigma(const robmix_params* p, int32_t k, double* buf) {
    return guarded([&] {
        if (!p || !buf || k < 0 || static_cast<std::size_t>(k) >= p->params.k)
            throw InvalidInputError("params_copy_sigma: bad arguments");
        copy_sym(p->params.sigma[static_cast<std::size_t>(k)], buf);
    });
}

robmix_status robmix_params_copy_mcm(const robmix_params* p, int32_t k, double* buf) {
    return guarded([&] {
        if (!p || !buf || k < 0 || static_cast<std::size_t>(k) >= p->params.k)
            throw InvalidInputError("params_copy_mcm: bad arguments");
        copy_sym(p->params.mcm[static_cast<std::size_t>(k)], buf);
    });
}

void robmix_params_free(robmix_params* p) { delete p; }

robmix_status robmix_generate(const robmix_params* truth, const int64_t* nk, int32_t k,
                              char scenario, double delta, uint64_t seed,
                              robmix_dataset** out) {
    return guarded([&] {
        if (!truth || !nk || !out || k < 1)
            throw InvalidInputError("generate: bad arguments");
        ScenarioSpec spec;
        spec.scenario = scenario;
        spec.delta = delta;
        spec.family = truth->params.family;
        spec.truth = truth->params;
        for (int32_t i = 0; i < k; ++i)
            spec.nk.push_back(static_cast<std::size_t>(nk[i]));
        *out = new robmix_dataset{generate_scenario(spec, seed)};
    });
}

/* ------------------------------------------------------------------ */

void robmix_fit_options_init(robmix_fit_options* opts) {
    if (!opts) return;
    const FitConfig cfg;
    opts->max_outer_iter = cfg.max_outer_iter;
    opts->loglik_tol = cfg.loglik_tol;
    opts->pi_floor = cfg.pi_floor;
    opts->restarts = cfg.restarts;
    opts->seed = cfg.seed;
    opts->method = ROBMIX_METHOD_ROBUST;
    opts->solver = ROBMIX_SOLVER_FIXPOINT;
    opts->mc_samples = cfg.recovery.mc_samples;
    opts->mc_iterations = cfg.recovery.iterations;
    opts->weiszfeld_tol = cfg.median_cfg.tol;
    opts->weiszfeld_max_iter = cfg.median_cfg.max_iter;
    opts->threads = cfg.threads;
}

robmix_status robmix_fit(const robmix_dataset* ds, int32_t k, robmix_family family,
                         int nu, const robmix_fit_options* opts, robmix_result** out) {
    return guarded([&] {
        if (!ds || !out) throw InvalidInputError("fit: bad arguments");
        FitResult r = fit(ds->data.x, k, make_family(family, nu), make_config(opts));
        *out = wrap_result(std::move(r));
    });
}

robmix_status robmix_select_k(const robmix_dataset* ds, int32_t kmin, int32_t kmax,
                              robmix_criterion criterion, robmix_family family, int nu,
                              const robmix_fit_options* opts, robmix_select_row* rows,
                              int32_t* best_k, robmix_result** best) {
    return guarded([&] {
        if (!ds || !best_k || kmin < 1 || kmax < kmin)
            throw InvalidInputError("select_k: bad arguments");
        std::vector<int> ks;
        for (int32_t k = kmin; k <= kmax; ++k) ks.push_back(k);
        SelectResult sel = select_k(ds->data.x, ks,
                                    criterion == ROBMIX_CRITERION_ICL ? Criterion::Icl
                                                                      : Criterion::Bic,
                                    make_family(family, nu), make_config(opts));
        if (rows) {
            for (std::size_t i = 0; i < ks.size(); ++i) {
                robmix_select_row& row = rows[i];
                row.k = ks[i];
                if (sel.fits[i]) {
                    row.loglik = sel.fits[i]->loglik;
                    row.bic = sel.fits[i]->bic;
                    row.icl = sel.fits[i]->icl;
                    row.converged = sel.fits[i]->converged ? 1 : 0;
                    row.failed = 0;
                } else {
                    row.loglik = row.bic = row.icl = 0.0;
                    row.converged = 0;
                    row.failed = 1;
                }
            }
        }
        *best_k = sel.best_k;
        if (best) {
            for (std::size_t i = 0; i < ks.size(); ++i)
                if (ks[i] == sel.best_k)
                    *best = wrap_result(std::move(*sel.fits[i]));
        }
    });
}

/* ------------------------------------------------------------------ */

const robmix_params* robmix_result_params(const robmix_result* r) {
    return r ? &r->params_view : nullptr;
}

double robmix_result_loglik(const robmix_result* r) { return r ? r->result.loglik : 0.0; }
double robmix_result_bic(const robmix_result* r) { return r ? r->result.bic : 0.0; }
double robmix_result_icl(const robmix_result* r) { return r ? r->result.icl : 0.0; }
int robmix_result_converged(const robmix_result* r) {
    return r && r->result.converged ? 1 : 0;
}
int32_t robmix_result_n_iter(const robmix_result* r) { return r ? r->result.n_iter : 0; }
int64_t robmix_result_rows(const robmix_result* r) {
    return r ? static_cast<int64_t>(r->result.tau.tau.rows) : 0;
}

robmix_status robmix_result_copy_tau(const robmix_result* r, double* buf) {
    return guarded([&] {
        if (!r || !buf) throw InvalidInputError("result_copy_tau: bad arguments");
        std::memcpy(buf, r->result.tau.tau.data.data(),
                    sizeof(double) * r->result.tau.tau.data.size());
    });
}

robmix_status robmix_result_copy_assignments(const robmix_result* r, int32_t* buf) {
    return guarded([&] {
        if (!r || !buf) throw InvalidInputError("result_copy_assignments: bad arguments");
        const Matrix& tau = r->result.tau.tau;
        for (std::size_t i = 0; i < tau.rows; ++i) {
            std::size_t arg = 0;
            for (std::size_t c = 1; c < tau.cols; ++c)
                if (tau.at(i, c) > tau.at(i, arg)) arg = c;
            buf[i] = static_cast<int32_t>(arg + 1);
        }
    });
}

robmix_status robmix_result_save_json(const robmix_result* r, const char* path) {
    return guarded([&] {
        if (!r || !path) throw InvalidInputError("result_save_json: bad arguments");
        std::ofstream f(path, std::ios::binary);
        if (!f) throw IoError(std::string("cannot open for writing: ") + path);
        f << model_to_json(r->result);
        if (!f) throw IoError(std::string("write failed: ") + path);
    });
}

robmix_status robmix_result_load_json(const char* path, robmix_result** out) {
    return guarded([&] {
        if (!path || !out) throw InvalidInputError("result_load_json: bad arguments");
        std::ifstream f(path, std::ios::binary);
        if (!f) throw IoError(std::string("cannot open: ") + path);
        std::ostringstream ss;
        ss << f.rdbuf();
        *out = wrap_result(model_from_json(ss.str()));
    });
}

void robmix_result_free(robmix_result* r) { delete r; }

/* ------------------------------------------------------------------ */

robmix_status robmix_adjusted_rand_index(const int32_t* a, const int32_t* b, int64_t n,
                                         double* out) {
    return guarded([&] {
        if (!a || !b || !out || n < 0)
            throw InvalidInputError("adjusted_rand_index: bad arguments");
        std::vector<int> va(a, a + n), vb(b, b + n);
        *out = adjusted_rand_index(va, vb);
    });
}

robmix_status robmix_match_mse(const robmix_params* truth, const robmix_params* est,
                               double* mse_mu, double* mse_sigma) {
    return guarded([&] {
        if (!truth || !est || !mse_mu || !mse_sigma)
            throw InvalidInputError("match_mse: bad arguments");
        const EvalReport rep = match_and_mse(truth->params, est->params);
        *mse_mu = rep.mse_mu;
        *mse_sigma = rep.mse_sigma;
    });
}

/* ------------------------------------------------------------------ */

robmix_status robmix_geometric_median(const double* x, int64_t n, int64_t d,
                                      const double* weights, double* out) {
    return guarded([&] {
        if (!x || !out || n < 1 || d < 1)
            throw InvalidInputError("geometric_median: bad arguments");
        Matrix pts(static_cast<std::size_t>(n), static_cast<std::size_t>(d));
        std::memcpy(pts.data.data(), x, sizeof(double) * pts.data.size());
        std::span<const double> w;
        if (weights) w = {weights, static_cast<std::size_t>(n)};
        const Vec m = weiszfeld_median(pts, w);
        for (int64_t j = 0; j < d; ++j) out[j] = m[static_cast<std::size_t>(j)];
    });
}

robmix_status robmix_median_covariation(const double* x, int64_t n, int64_t d,
                                        const double* weights, const double* center,
                                        double* out_v, double* out_v_psd) {
    return guarded([&] {
        if (!x || !out_v || n < 1 || d < 1)
            throw InvalidInputError("median_covariation: bad arguments");
        Matrix pts(static_cast<std::size_t>(n), static_cast<std::size_t>(d));
        std::memcpy(pts.data.data(), x, sizeof(double) * pts.data.size());
        std::span<const double> w;
        if (weights) w = {weights, static_cast<std::size_t>(n)};
        Vec c;
        if (center) c.assign(center, center + d);
        else c = weiszfeld_median(pts, w);
        const McmEstimate est = weiszfeld_mcm(pts, c, w);
        copy_sym(est.mcm, out_v);
        if (out_v_psd) copy_sym(est.mcm_psd, out_v_psd);
    });
}

robmix_status robmix_covariance_from_mcm(const double* v, int64_t d,
                                         robmix_family family, int nu,
                                         robmix_solver solver, int32_t mc_samples,
                                         int32_t iterations, uint64_t seed,
                                         double* out_sigma) {
    return guarded([&] {
        if (!v || !out_sigma || d < 1)
            throw InvalidInputError("covariance_from_mcm: bad arguments");
        Matrix m(static_cast<std::size_t>(d), static_cast<std::size_t>(d));
        std::memcpy(m.data.data(), v, sizeof(double) * m.data.size());
        RecoveryConfig cfg;
        cfg.solver = make_solver(solver);
        cfg.mc_samples = mc_samples;
        cfg.iterations = iterations;
        cfg.seed = seed;
        const SymMatrix sigma =
            psi_u(SymMatrix::from_dense(m), make_family(family, nu), cfg);
        copy_sym(sigma, out_sigma);
    });
}

}  // extern "C"
