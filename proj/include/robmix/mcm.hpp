#pragma once

#include <span>
#include <utility>
#include <vector>

#include "robmix/matrix.hpp"
#include "robmix/median.hpp"

namespace robmix {

struct McmEstimate {
    Vec center;         // the median the outer products were taken around
    SymMatrix mcm;      // raw Weiszfeld/ASGD output, not forced positive
    SymMatrix mcm_psd;  // psd_project(mcm) with the default floor
};

/// Weighted Weiszfeld iteration over the outer-product matrices
/// (x_i - center)(x_i - center)^T in Frobenius geometry. Stopping rule and
/// singularity guard mirror weiszfeld_median.
McmEstimate weiszfeld_mcm(const Matrix& points, const Vec& center,
                          std::span<const double> weights,
                          const WeiszfeldConfig& cfg = {},
                          const SymMatrix* init = nullptr,
                          std::vector<double>* objective_trace = nullptr);

/// Joint streaming recursion: one averaged-SGD pass updating the median and
/// the MCM together; the MCM step centers each observation at the current
/// averaged median. init_v must be symmetric positive definite.
std::pair<Vec, McmEstimate> asgd_median_mcm(const Matrix& stream,
                                            std::span<const double> weights,
                                            const AsgdConfig& cfg,
                                            const Vec& init_m,
                                            const SymMatrix& init_v);

}  // namespace robmix
