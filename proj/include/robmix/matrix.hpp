#pragma once

#include <cstddef>
#include <span>
#include <vector>

namespace robmix {

using Vec = std::vector<double>;

/// Dense row-major matrix. Used for datasets (n x d) and eigenvector blocks.
struct Matrix {
    std::size_t rows = 0;
    std::size_t cols = 0;
    std::vector<double> data;

    Matrix() = default;
    Matrix(std::size_t r, std::size_t c, double fill = 0.0)
        : rows(r), cols(c), data(r * c, fill) {}

    double& at(std::size_t i, std::size_t j) { return data[i * cols + j]; }
    double at(std::size_t i, std::size_t j) const { return data[i * cols + j]; }

    std::span<const double> row(std::size_t i) const {
        return {data.data() + i * cols, cols};
    }
    std::span<double> row(std::size_t i) {
        return {data.data() + i * cols, cols};
    }

    static Matrix identity(std::size_t d) {
        Matrix m(d, d);
        for (std::size_t i = 0; i < d; ++i) m.at(i, i) = 1.0;
        return m;
    }
};

/// Symmetric d x d matrix with packed lower-triangular storage
/// (d(d+1)/2 entries). Frobenius norms count off-diagonal pairs twice,
/// matching the norm on full matrices.
class SymMatrix {
public:
    SymMatrix() = default;
    explicit SymMatrix(std::size_t d, double fill = 0.0)
        : dim_(d), e_(d * (d + 1) / 2, fill) {}

    static SymMatrix identity(std::size_t d, double scale = 1.0);
    static SymMatrix from_dense(const Matrix& m);  // symmetrizes (A+A^T)/2

    std::size_t dim() const { return dim_; }

    double at(std::size_t i, std::size_t j) const { return e_[idx(i, j)]; }
    void set(std::size_t i, std::size_t j, double v) { e_[idx(i, j)] = v; }

    std::span<const double> packed() const { return e_; }
    std::span<double> packed() { return e_; }

    Matrix to_dense() const;

    /// Frobenius norm on the full matrix (off-diagonals counted twice).
    double frob_norm() const;

    bool all_finite() const;

    SymMatrix& operator+=(const SymMatrix& o);
    SymMatrix& operator-=(const SymMatrix& o);
    SymMatrix& operator*=(double s);

    friend SymMatrix operator-(SymMatrix a, const SymMatrix& b) { return a -= b; }
    friend SymMatrix operator+(SymMatrix a, const SymMatrix& b) { return a += b; }
    friend SymMatrix operator*(SymMatrix a, double s) { return a *= s; }

private:
    // packed lower triangle, row-major: (i,j) with i >= j at i(i+1)/2 + j
    std::size_t idx(std::size_t i, std::size_t j) const {
        return i >= j ? i * (i + 1) / 2 + j : j * (j + 1) / 2 + i;
    }

    std::size_t dim_ = 0;
    std::vector<double> e_;
};

/// Eigendecomposition of a SymMatrix: values sorted decreasing, vectors
/// stored as orthonormal columns of a d x d matrix.
struct EigenPairs {
    Vec values;
    Matrix vectors;

    /// sum_k values[k] * v_k v_k^T
    SymMatrix reconstruct() const;
};

/// Cyclic Jacobi eigendecomposition. Converges when the off-diagonal
/// Frobenius mass drops below 1e-12 * ||M||_F; capped at 100 sweeps.
EigenPairs sym_eigen(const SymMatrix& m);

double frobenius_distance(const SymMatrix& a, const SymMatrix& b);
double frobenius_distance(const Matrix& a, const Matrix& b);

/// Clips eigenvalues below `floor` and rebuilds in the original eigenbasis.
SymMatrix psd_project(const SymMatrix& m, double floor);

/// Default floor: 1e-8 * max(1, largest eigenvalue).
SymMatrix psd_project(const SymMatrix& m);

/// Lower Cholesky factor. Throws NumericError if the matrix is not
/// positive definite.
Matrix cholesky(const SymMatrix& m);

/// log(det), via Cholesky; requires positive definiteness.
double log_det(const Matrix& chol_lower);

/// Solves L y = b in place given the lower factor.
void forward_solve(const Matrix& chol_lower, std::span<double> b);

}  // namespace robmix
