#include "robmix/mcm.hpp"

#include <algorithm>
#include <cmath>

#include "robmix/errors.hpp"

namespace robmix {

namespace {

// Packed-entry Frobenius coefficients: off-diagonal entries count twice.
std::vector<double> frob_coefs(std::size_t d) {
    std::vector<double> c(d * (d + 1) / 2);
    std::size_t k = 0;
    for (std::size_t i = 0; i < d; ++i)
        for (std::size_t j = 0; j <= i; ++j) c[k++] = (i == j) ? 1.0 : 2.0;
    return c;
}

void packed_outer(std::span<const double> x, const Vec& center, std::span<double> out) {
    const std::size_t d = center.size();
    std::size_t k = 0;
    for (std::size_t i = 0; i < d; ++i) {
        const double yi = x[i] - center[i];
        for (std::size_t j = 0; j <= i; ++j) out[k++] = yi * (x[j] - center[j]);
    }
}

}  // namespace

McmEstimate weiszfeld_mcm(const Matrix& points, const Vec& center,
                          std::span<const double> weights,
                          const WeiszfeldConfig& cfg, const SymMatrix* init,
                          std::vector<double>* objective_trace) {
    validate(cfg);
    if (points.rows == 0 || points.cols == 0)
        throw InvalidInputError("weiszfeld_mcm: empty input");
    const std::size_t n = points.rows, d = points.cols;
    if (center.size() != d) throw InvalidInputError("weiszfeld_mcm: center dimension mismatch");
    for (double v : center)
        if (!std::isfinite(v)) throw InvalidInputError("weiszfeld_mcm: non-finite center");
    for (double v : points.data)
        if (!std::isfinite(v)) throw InvalidInputError("weiszfeld_mcm: non-finite point");
    if (!weights.empty()) {
        if (weights.size() != n)
            throw InvalidInputError("weiszfeld_mcm: weight count does not match rows");
        double total = 0.0;
        for (double w : weights) {
            if (!std::isfinite(w) || w < 0.0)
                throw InvalidInputError("weiszfeld_mcm: weights must be finite and nonnegative");
            total += w;
        }
        if (!(total > 0.0)) throw InvalidInputError("weiszfeld_mcm: all weights are zero");
    }
    const auto w = [&](std::size_t i) { return weights.empty() ? 1.0 : weights[i]; };

    const std::size_t p = d * (d + 1) / 2;
    const std::vector<double> coef = frob_coefs(d);

    // cache the packed outer products
    Matrix op(n, p);
    double scale = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        packed_outer(points.row(i), center, op.row(i));
        for (double v : op.row(i)) scale = std::max(scale, std::abs(v));
    }
    const double eps = cfg.singularity_eps * std::max(1.0, scale);

    Vec v(p);
    if (init) {
        if (init->dim() != d) throw InvalidInputError("weiszfeld_mcm: init dimension mismatch");
        const auto pk = init->packed();
        v.assign(pk.begin(), pk.end());
    } else {
        Vec col(n);
        for (std::size_t k = 0; k < p; ++k) {
            for (std::size_t i = 0; i < n; ++i) col[i] = op.at(i, k);
            v[k] = weighted_scalar_median(col, weights);
        }
    }

    Vec num(p), num_c(p), v_next(p);
    for (int it = 0; it < cfg.max_iter; ++it) {
        std::fill(num.begin(), num.end(), 0.0);
        std::fill(num_c.begin(), num_c.end(), 0.0);
        double den = 0.0, den_c = 0.0, obj = 0.0;
        for (std::size_t i = 0; i < n; ++i) {
            const auto mi = op.row(i);
            double dist2 = 0.0;
            for (std::size_t k = 0; k < p; ++k) {
                const double s = mi[k] - v[k];
                dist2 += coef[k] * s * s;
            }
            const double dist = std::sqrt(dist2);
            obj += w(i) * dist;
            const double wi = w(i) / std::max(dist, eps);
            for (std::size_t k = 0; k < p; ++k) {
                const double term = wi * mi[k];
                const double t = num[k] + term;
                num_c[k] += std::abs(num[k]) >= std::abs(term) ? (num[k] - t) + term
                                                               : (term - t) + num[k];
                num[k] = t;
            }
            const double t = den + wi;
            den_c += std::abs(den) >= std::abs(wi) ? (den - t) + wi : (wi - t) + den;
            den = t;
        }
        if (objective_trace) objective_trace->push_back(obj);
        den += den_c;

        double step2 = 0.0, norm2 = 0.0;
        for (std::size_t k = 0; k < p; ++k) {
            v_next[k] = (num[k] + num_c[k]) / den;
            const double s = v_next[k] - v[k];
            step2 += coef[k] * s * s;
            norm2 += coef[k] * v[k] * v[k];
        }
        v = v_next;
        if (std::sqrt(step2) / std::max(1.0, std::sqrt(norm2)) < cfg.tol) break;
    }

    McmEstimate out;
    out.center = center;
    out.mcm = SymMatrix(d);
    std::copy(v.begin(), v.end(), out.mcm.packed().begin());
    out.mcm_psd = psd_project(out.mcm);
    return out;
}

std::pair<Vec, McmEstimate> asgd_median_mcm(const Matrix& stream,
                                            std::span<const double> weights,
                                            const AsgdConfig& cfg,
                                            const Vec& init_m,
                                            const SymMatrix& init_v) {
    validate(cfg);
    if (stream.rows == 0 || stream.cols == 0)
        throw InvalidInputError("asgd_median_mcm: empty stream");
    const std::size_t n = stream.rows, d = stream.cols;
    if (init_m.size() != d || init_v.dim() != d)
        throw InvalidInputError("asgd_median_mcm: init dimension mismatch");
    for (double v : stream.data)
        if (!std::isfinite(v)) throw InvalidInputError("asgd_median_mcm: non-finite observation");
    {
        const EigenPairs ep = sym_eigen(init_v);
        if (ep.values.back() <= 0.0)
            throw InvalidInputError("asgd_median_mcm: init_v must be symmetric positive");
    }

    const std::size_t p = d * (d + 1) / 2;
    const std::vector<double> coef = frob_coefs(d);

    Vec m = init_m, mbar = init_m;
    Vec v(init_v.packed().begin(), init_v.packed().end());
    Vec vbar = v, outer(p);

    std::size_t k = 0;
    for (int pass = 0; pass < cfg.passes; ++pass) {
        for (std::size_t i = 0; i < n; ++i, ++k) {
            const auto x = stream.row(i);
            const double wi = weights.empty() ? 1.0 : weights[i];
            const double gamma =
                cfg.c_gamma * std::pow(static_cast<double>(k + 1), -cfg.gamma) * wi;
            const double a = 1.0 / static_cast<double>(k + 1);

            // MCM step, centered at the averaged median before this update
            packed_outer(x, mbar, outer);
            double nd2 = 0.0;
            for (std::size_t q = 0; q < p; ++q) {
                const double s = outer[q] - v[q];
                nd2 += coef[q] * s * s;
            }
            const double nd = std::sqrt(nd2);
            if (nd >= 1e-12)
                for (std::size_t q = 0; q < p; ++q) v[q] += gamma * (outer[q] - v[q]) / nd;
            for (std::size_t q = 0; q < p; ++q) vbar[q] += a * (v[q] - vbar[q]);

            // median step
            double dist2 = 0.0;
            for (std::size_t j = 0; j < d; ++j) {
                const double s = x[j] - m[j];
                dist2 += s * s;
            }
            const double dist = std::sqrt(dist2);
            if (dist >= 1e-12)
                for (std::size_t j = 0; j < d; ++j) m[j] += gamma * (x[j] - m[j]) / dist;
            for (std::size_t j = 0; j < d; ++j) mbar[j] += a * (m[j] - mbar[j]);
        }
    }

    McmEstimate est;
    est.center = mbar;
    est.mcm = SymMatrix(d);
    std::copy(vbar.begin(), vbar.end(), est.mcm.packed().begin());
    est.mcm_psd = psd_project(est.mcm);
    return {mbar, std::move(est)};
}

}  // namespace robmix
