#include "robmix/median.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "robmix/errors.hpp"

namespace robmix {

void validate(const WeiszfeldConfig& cfg) {
    if (!(cfg.tol > 0.0)) throw InvalidInputError("WeiszfeldConfig: tol must be > 0");
    if (cfg.max_iter < 1) throw InvalidInputError("WeiszfeldConfig: max_iter must be >= 1");
    if (!(cfg.singularity_eps > 0.0))
        throw InvalidInputError("WeiszfeldConfig: singularity_eps must be > 0");
}

void validate(const AsgdConfig& cfg) {
    if (!(cfg.c_gamma > 0.0)) throw InvalidInputError("AsgdConfig: c_gamma must be > 0");
    if (!(cfg.gamma > 0.5 && cfg.gamma < 1.0))
        throw InvalidInputError("AsgdConfig: gamma must lie in (1/2, 1)");
    if (cfg.passes < 1) throw InvalidInputError("AsgdConfig: passes must be >= 1");
}

namespace {

void check_points_weights(const Matrix& points, std::span<const double> weights) {
    if (points.rows == 0 || points.cols == 0)
        throw InvalidInputError("weiszfeld: empty input");
    for (double v : points.data)
        if (!std::isfinite(v)) throw InvalidInputError("weiszfeld: non-finite point");
    if (!weights.empty()) {
        if (weights.size() != points.rows)
            throw InvalidInputError("weiszfeld: weight count does not match rows");
        double total = 0.0;
        for (double w : weights) {
            if (!std::isfinite(w) || w < 0.0)
                throw InvalidInputError("weiszfeld: weights must be finite and nonnegative");
            total += w;
        }
        if (!(total > 0.0)) throw InvalidInputError("weiszfeld: all weights are zero");
    }
}

double data_scale(const Matrix& points) {
    double m = 0.0;
    for (double v : points.data) m = std::max(m, std::abs(v));
    return std::max(1.0, m);
}

}  // namespace

double weighted_scalar_median(std::span<const double> values,
                              std::span<const double> weights) {
    const std::size_t n = values.size();
    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), 0);
    std::sort(order.begin(), order.end(),
              [&](std::size_t a, std::size_t b) { return values[a] < values[b]; });
    double total = 0.0;
    for (std::size_t i = 0; i < n; ++i) total += weights.empty() ? 1.0 : weights[i];
    const double half = 0.5 * total;
    double acc = 0.0;
    for (std::size_t i : order) {
        acc += weights.empty() ? 1.0 : weights[i];
        if (acc >= half) return values[i];
    }
    return values[order.back()];
}

Vec weiszfeld_median(const Matrix& points, std::span<const double> weights,
                     const WeiszfeldConfig& cfg, const Vec* init,
                     std::vector<double>* objective_trace) {
    validate(cfg);
    check_points_weights(points, weights);
    const std::size_t n = points.rows, d = points.cols;
    const double eps = cfg.singularity_eps * data_scale(points);
    const auto w = [&](std::size_t i) { return weights.empty() ? 1.0 : weights[i]; };

    Vec m(d);
    if (init) {
        if (init->size() != d) throw InvalidInputError("weiszfeld: init dimension mismatch");
        m = *init;
    } else {
        Vec col(n);
        for (std::size_t j = 0; j < d; ++j) {
            for (std::size_t i = 0; i < n; ++i) col[i] = points.at(i, j);
            m[j] = weighted_scalar_median(col, weights);
        }
    }

    Vec num(d), m_next(d);
    for (int it = 0; it < cfg.max_iter; ++it) {
        std::fill(num.begin(), num.end(), 0.0);
        Vec num_c(d, 0.0);  // Neumaier compensation
        double den = 0.0, den_c = 0.0, obj = 0.0;
        for (std::size_t i = 0; i < n; ++i) {
            const auto x = points.row(i);
            double dist2 = 0.0;
            for (std::size_t j = 0; j < d; ++j) {
                const double v = x[j] - m[j];
                dist2 += v * v;
            }
            const double dist = std::sqrt(dist2);
            obj += w(i) * dist;
            const double wi = w(i) / std::max(dist, eps);
            for (std::size_t j = 0; j < d; ++j) {
                const double term = wi * x[j];
                const double t = num[j] + term;
                num_c[j] += std::abs(num[j]) >= std::abs(term) ? (num[j] - t) + term
                                                               : (term - t) + num[j];
                num[j] = t;
            }
            const double t = den + wi;
            den_c += std::abs(den) >= std::abs(wi) ? (den - t) + wi : (wi - t) + den;
            den = t;
        }
        if (objective_trace) objective_trace->push_back(obj);
        den += den_c;

        double step2 = 0.0, norm2 = 0.0;
        for (std::size_t j = 0; j < d; ++j) {
            m_next[j] = (num[j] + num_c[j]) / den;
            const double s = m_next[j] - m[j];
            step2 += s * s;
            norm2 += m[j] * m[j];
        }
        m = m_next;
        if (std::sqrt(step2) / std::max(1.0, std::sqrt(norm2)) < cfg.tol) break;
    }
    return m;
}

Vec asgd_median(const Matrix& stream, std::span<const double> weights,
                const AsgdConfig& cfg, const Vec& init) {
    validate(cfg);
    check_points_weights(stream, weights);
    const std::size_t n = stream.rows, d = stream.cols;
    if (init.size() != d) throw InvalidInputError("asgd_median: init dimension mismatch");
    for (double v : init)
        if (!std::isfinite(v)) throw InvalidInputError("asgd_median: non-finite init");

    Vec m = init, mbar = init;
    std::size_t k = 0;
    for (int pass = 0; pass < cfg.passes; ++pass) {
        for (std::size_t i = 0; i < n; ++i, ++k) {
            const auto x = stream.row(i);
            const double wi = weights.empty() ? 1.0 : weights[i];
            double dist2 = 0.0;
            for (std::size_t j = 0; j < d; ++j) {
                const double v = x[j] - m[j];
                dist2 += v * v;
            }
            const double dist = std::sqrt(dist2);
            if (dist >= 1e-12) {
                const double step =
                    cfg.c_gamma * std::pow(static_cast<double>(k + 1), -cfg.gamma) * wi / dist;
                for (std::size_t j = 0; j < d; ++j) m[j] += step * (x[j] - m[j]);
            }
            const double a = 1.0 / static_cast<double>(k + 1);
            for (std::size_t j = 0; j < d; ++j) mbar[j] += a * (m[j] - mbar[j]);
        }
    }
    return mbar;
}

}  // namespace robmix
