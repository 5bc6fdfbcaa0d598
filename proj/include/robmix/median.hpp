#pragma once

#include <span>
#include <vector>

#include "robmix/matrix.hpp"

namespace robmix {

struct WeiszfeldConfig {
    double tol = 1e-8;    // relative step-size stopping threshold
    int max_iter = 200;
    // distance guard, relative to the data scale max(1, max |x_ij|)
    double singularity_eps = 1e-10;
};

struct AsgdConfig {
    double c_gamma = 1.0;
    double gamma = 0.75;  // step exponent, must lie in (1/2, 1)
    int passes = 1;
};

void validate(const WeiszfeldConfig& cfg);
void validate(const AsgdConfig& cfg);

/// Weighted geometric median by Weiszfeld iteration. Empty `weights` means
/// unit weights. Starts from the weighted coordinate-wise median unless
/// `init` is given; appends the weighted objective sum_i w_i ||x_i - m_t||
/// per iteration to `objective_trace` when non-null.
Vec weiszfeld_median(const Matrix& points, std::span<const double> weights,
                     const WeiszfeldConfig& cfg = {}, const Vec* init = nullptr,
                     std::vector<double>* objective_trace = nullptr);

/// Averaged stochastic gradient pass over the rows of `stream` in order.
/// Returns the averaged iterate; steps where the iterate coincides with the
/// observation (distance < 1e-12) are skipped but still advance averaging.
Vec asgd_median(const Matrix& stream, std::span<const double> weights,
                const AsgdConfig& cfg, const Vec& init);

/// Lower weighted median of scalars (smallest x with cumulative weight
/// >= half the total). Shared by the Weiszfeld initializers.
double weighted_scalar_median(std::span<const double> values,
                              std::span<const double> weights);

}  // namespace robmix
