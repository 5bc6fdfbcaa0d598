#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "robmix/matrix.hpp"
#include "robmix/mixture.hpp"

namespace robmix {

/// Observation matrix with optional ground-truth labels (1-based) and
/// outlier flags.
struct Dataset {
    Matrix x;
    std::vector<int> labels;
    std::vector<std::uint8_t> outliers;

    bool has_labels() const { return !labels.empty(); }
    bool has_outliers() const { return !outliers.empty(); }
};

/// One contamination scenario: which contaminating law, at which rate.
struct ScenarioSpec {
    char scenario = 'a';            // 'a'..'e'
    double delta = 0.0;             // contamination rate, in [0, 0.5]
    EmissionFamily family;          // emission family of the clean clusters
    std::vector<std::size_t> nk;    // per-cluster counts
    MixtureParams truth;            // ground-truth centers / covariances
};

void validate(const ScenarioSpec& spec);

/// The d = 5 simulation presets: three cluster means, three cluster
/// covariances, the single-cluster covariance used by the variance study,
/// and the default Student degrees of freedom (3).
namespace presets {

Vec mu1();
Vec mu2();
Vec mu3();
SymMatrix sigma0();
SymMatrix sigma1();
SymMatrix sigma2();
SymMatrix sigma3();
constexpr int default_nu = 3;

/// Equal-weight 3-cluster truth with (mu1, Sigma1), (mu2, Sigma2), (mu3, Sigma3).
MixtureParams paper3(const EmissionFamily& family);

/// Single cluster centered at 0 with covariance Sigma0.
MixtureParams variance_study(const EmissionFamily& family);

}  // namespace presets

/// Samples the clean mixture: block of nk[k] rows per cluster, labels 1..K.
/// Student clusters draw from the variance-matching scale (nu-2)/nu * Sigma;
/// Laplace clusters from the Exp(1) normal variance mixture.
Dataset generate_mixture(const MixtureParams& truth,
                         const std::vector<std::size_t>& nk, std::uint64_t seed);

/// Replaces round(delta * nk) observations per cluster with draws from the
/// scenario's contaminating law; labels stay with the source cluster and
/// flags mark the replaced rows.
///   a: uniform on [-20, 20]^d            b: t(0, I, 1)    c: t(mu_k, I, 1)
///                                        d: t(0, I, 2)    e: t(mu_k, I, 2)
Dataset contaminate(const Dataset& data, char scenario, double delta,
                    const std::vector<Vec>& cluster_centers, std::uint64_t seed);

/// generate_mixture + contaminate in one call.
Dataset generate_scenario(const ScenarioSpec& spec, std::uint64_t seed);

/// CSV with header x1..xd,label,outlier; floats with 17 significant digits,
/// LF line endings.
void save_csv(const Dataset& data, const std::string& path);
Dataset load_csv(const std::string& path);
std::string dataset_to_csv(const Dataset& data);
Dataset dataset_from_csv(const std::string& text);

/// %.17g rendering shared by every emitted file.
std::string format_double(double v);

}  // namespace robmix
