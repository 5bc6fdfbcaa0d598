#include "robmix/matrix.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "robmix/errors.hpp"

namespace robmix {

SymMatrix SymMatrix::identity(std::size_t d, double scale) {
    SymMatrix m(d);
    for (std::size_t i = 0; i < d; ++i) m.set(i, i, scale);
    return m;
}

SymMatrix SymMatrix::from_dense(const Matrix& m) {
    if (m.rows != m.cols) throw InvalidInputError("from_dense: matrix not square");
    SymMatrix s(m.rows);
    for (std::size_t i = 0; i < m.rows; ++i)
        for (std::size_t j = 0; j <= i; ++j)
            s.set(i, j, 0.5 * (m.at(i, j) + m.at(j, i)));
    return s;
}

Matrix SymMatrix::to_dense() const {
    Matrix m(dim_, dim_);
    for (std::size_t i = 0; i < dim_; ++i)
        for (std::size_t j = 0; j < dim_; ++j) m.at(i, j) = at(i, j);
    return m;
}

double SymMatrix::frob_norm() const {
    double s = 0.0;
    for (std::size_t i = 0; i < dim_; ++i) {
        for (std::size_t j = 0; j < i; ++j) {
            const double v = at(i, j);
            s += 2.0 * v * v;
        }
        const double d = at(i, i);
        s += d * d;
    }
    return std::sqrt(s);
}

bool SymMatrix::all_finite() const {
    return std::all_of(e_.begin(), e_.end(),
                       [](double v) { return std::isfinite(v); });
}

SymMatrix& SymMatrix::operator+=(const SymMatrix& o) {
    for (std::size_t k = 0; k < e_.size(); ++k) e_[k] += o.e_[k];
    return *this;
}

SymMatrix& SymMatrix::operator-=(const SymMatrix& o) {
    for (std::size_t k = 0; k < e_.size(); ++k) e_[k] -= o.e_[k];
    return *this;
}

SymMatrix& SymMatrix::operator*=(double s) {
    for (double& v : e_) v *= s;
    return *this;
}

SymMatrix EigenPairs::reconstruct() const {
    const std::size_t d = values.size();
    SymMatrix m(d);
    for (std::size_t i = 0; i < d; ++i)
        for (std::size_t j = 0; j <= i; ++j) {
            double s = 0.0;
            for (std::size_t k = 0; k < d; ++k)
                s += values[k] * vectors.at(i, k) * vectors.at(j, k);
            m.set(i, j, s);
        }
    return m;
}

EigenPairs sym_eigen(const SymMatrix& m) {
    if (!m.all_finite()) throw InvalidInputError("sym_eigen: non-finite entries");
    const std::size_t d = m.dim();
    if (d == 0) throw InvalidInputError("sym_eigen: empty matrix");

    Matrix a = m.to_dense();
    Matrix v = Matrix::identity(d);
    const double total_norm = m.frob_norm();
    const double off_tol = 1e-12 * std::max(total_norm, 1e-300);

    for (int sweep = 0; sweep < 100; ++sweep) {
        double off = 0.0;
        for (std::size_t p = 0; p < d; ++p)
            for (std::size_t q = p + 1; q < d; ++q) off += 2.0 * a.at(p, q) * a.at(p, q);
        if (std::sqrt(off) < off_tol) break;

        for (std::size_t p = 0; p + 1 < d; ++p) {
            for (std::size_t q = p + 1; q < d; ++q) {
                const double apq = a.at(p, q);
                if (apq == 0.0) continue;
                const double theta = (a.at(q, q) - a.at(p, p)) / (2.0 * apq);
                const double t = (theta >= 0.0 ? 1.0 : -1.0) /
                                 (std::abs(theta) + std::sqrt(theta * theta + 1.0));
                const double c = 1.0 / std::sqrt(t * t + 1.0);
                const double s = t * c;
                const double tau = s / (1.0 + c);

                const double app = a.at(p, p), aqq = a.at(q, q);
                a.at(p, p) = app - t * apq;
                a.at(q, q) = aqq + t * apq;
                a.at(p, q) = 0.0;
                a.at(q, p) = 0.0;
                for (std::size_t i = 0; i < d; ++i) {
                    if (i == p || i == q) continue;
                    const double aip = a.at(i, p), aiq = a.at(i, q);
                    a.at(i, p) = aip - s * (aiq + tau * aip);
                    a.at(p, i) = a.at(i, p);
                    a.at(i, q) = aiq + s * (aip - tau * aiq);
                    a.at(q, i) = a.at(i, q);
                }
                for (std::size_t i = 0; i < d; ++i) {
                    const double vip = v.at(i, p), viq = v.at(i, q);
                    v.at(i, p) = vip - s * (viq + tau * vip);
                    v.at(i, q) = viq + s * (vip - tau * viq);
                }
            }
        }
    }

    // sort eigenpairs by decreasing eigenvalue
    std::vector<std::size_t> order(d);
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(), [&](std::size_t x, std::size_t y) {
        return a.at(x, x) > a.at(y, y);
    });

    EigenPairs out;
    out.values.resize(d);
    out.vectors = Matrix(d, d);
    for (std::size_t k = 0; k < d; ++k) {
        out.values[k] = a.at(order[k], order[k]);
        for (std::size_t i = 0; i < d; ++i) out.vectors.at(i, k) = v.at(i, order[k]);
    }
    return out;
}

double frobenius_distance(const SymMatrix& a, const SymMatrix& b) {
    if (a.dim() != b.dim())
        throw InvalidInputError("frobenius_distance: dimension mismatch");
    SymMatrix diff = a;
    diff -= b;
    return diff.frob_norm();
}

double frobenius_distance(const Matrix& a, const Matrix& b) {
    if (a.rows != b.rows || a.cols != b.cols)
        throw InvalidInputError("frobenius_distance: dimension mismatch");
    double s = 0.0;
    for (std::size_t k = 0; k < a.data.size(); ++k) {
        const double v = a.data[k] - b.data[k];
        s += v * v;
    }
    return std::sqrt(s);
}

SymMatrix psd_project(const SymMatrix& m, double floor) {
    if (floor <= 0.0) throw InvalidInputError("psd_project: floor must be positive");
    EigenPairs ep = sym_eigen(m);
    for (double& v : ep.values) v = std::max(v, floor);
    return ep.reconstruct();
}

SymMatrix psd_project(const SymMatrix& m) {
    EigenPairs ep = sym_eigen(m);
    const double top = ep.values.empty() ? 0.0 : ep.values.front();
    const double floor = 1e-8 * std::max(1.0, top);
    for (double& v : ep.values) v = std::max(v, floor);
    return ep.reconstruct();
}

Matrix cholesky(const SymMatrix& m) {
    const std::size_t d = m.dim();
    Matrix l(d, d);
    for (std::size_t j = 0; j < d; ++j) {
        double diag = m.at(j, j);
        for (std::size_t k = 0; k < j; ++k) diag -= l.at(j, k) * l.at(j, k);
        if (!(diag > 0.0) || !std::isfinite(diag))
            throw NumericError("cholesky: matrix not positive definite",
                               static_cast<int>(j));
        l.at(j, j) = std::sqrt(diag);
        for (std::size_t i = j + 1; i < d; ++i) {
            double s = m.at(i, j);
            for (std::size_t k = 0; k < j; ++k) s -= l.at(i, k) * l.at(j, k);
            l.at(i, j) = s / l.at(j, j);
        }
    }
    return l;
}

double log_det(const Matrix& chol_lower) {
    double s = 0.0;
    for (std::size_t i = 0; i < chol_lower.rows; ++i)
        s += std::log(chol_lower.at(i, i));
    return 2.0 * s;
}

void forward_solve(const Matrix& chol_lower, std::span<double> b) {
    const std::size_t d = chol_lower.rows;
    for (std::size_t i = 0; i < d; ++i) {
        double s = b[i];
        for (std::size_t k = 0; k < i; ++k) s -= chol_lower.at(i, k) * b[k];
        b[i] = s / chol_lower.at(i, i);
    }
}

}  // namespace robmix
