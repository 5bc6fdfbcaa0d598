#include "robmix/simulation.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <numeric>
#include <sstream>

#include "robmix/errors.hpp"
#include "robmix/rng.hpp"

namespace robmix {

namespace presets {

namespace {

SymMatrix sym5(const double (&rows)[5][5]) {
    SymMatrix m(5);
    for (std::size_t i = 0; i < 5; ++i)
        for (std::size_t j = 0; j <= i; ++j) m.set(i, j, rows[i][j]);
    return m;
}

}  // namespace

Vec mu1() { return {0, 0, 0, 0, 0}; }
Vec mu2() { return {3, 3, 3, 3, -3}; }
Vec mu3() { return {-3, -3, -3, -3, -3}; }

SymMatrix sigma0() {
    return sym5({{4, 0.86, 0.83, 0.29, 1.35},
                 {0.86, 4, 1.4, 0.97, 1.79},
                 {0.83, 1.4, 4, 0.35, 0.84},
                 {0.29, 0.97, 0.35, 4, 0.86},
                 {1.35, 1.79, 0.84, 0.86, 4}});
}

SymMatrix sigma1() {
    return sym5({{2, 0.43, 0.41, 0.15, 0.68},
                 {0.43, 2, 0.7, 0.49, 0.89},
                 {0.41, 0.7, 2, 0.17, 0.42},
                 {0.15, 0.49, 0.17, 2, 0.43},
                 {0.68, 0.89, 0.42, 0.43, 2}});
}

SymMatrix sigma2() {
    return sym5({{1, 0.46, 0.17, 0.04, 1.06},
                 {0.46, 2, 0.61, 0.18, 1.22},
                 {0.17, 0.61, 3, 0.7, 0.65},
                 {0.04, 0.18, 0.7, 4, 0.16},
                 {1.06, 1.22, 0.65, 0.16, 5}});
}

SymMatrix sigma3() {
    return sym5({{1, 0.6, 0.11, 0.03, 0.26},
                 {0.6, 0.5, 0.09, 0.02, 0.17},
                 {0.11, 0.09, 0.33, 0.03, 0.04},
                 {0.03, 0.02, 0.03, 0.25, 0.01},
                 {0.26, 0.17, 0.04, 0.01, 0.2}});
}

MixtureParams paper3(const EmissionFamily& family) {
    MixtureParams p;
    p.family = family;
    p.k = 3;
    p.dim = 5;
    p.pi = {1.0 / 3.0, 1.0 / 3.0, 1.0 / 3.0};
    p.centers = {mu1(), mu2(), mu3()};
    p.sigma = {sigma1(), sigma2(), sigma3()};
    p.mcm = p.sigma;
    return p;
}

MixtureParams variance_study(const EmissionFamily& family) {
    MixtureParams p;
    p.family = family;
    p.k = 1;
    p.dim = 5;
    p.pi = {1.0};
    p.centers = {Vec(5, 0.0)};
    p.sigma = {sigma0()};
    p.mcm = p.sigma;
    return p;
}

}  // namespace presets

void validate(const ScenarioSpec& spec) {
    if (spec.scenario < 'a' || spec.scenario > 'e')
        throw InvalidInputError("ScenarioSpec: scenario must be one of a..e");
    if (!(spec.delta >= 0.0 && spec.delta <= 0.5))
        throw InvalidInputError("ScenarioSpec: delta must lie in [0, 0.5]");
    if (spec.nk.empty() || spec.nk.size() != spec.truth.k)
        throw InvalidInputError("ScenarioSpec: nk must have one entry per cluster");
    for (std::size_t n : spec.nk)
        if (n < 1) throw InvalidInputError("ScenarioSpec: nk entries must be >= 1");
    validate(spec.truth);
}

namespace {

void sample_emission_row(Rng& rng, const EmissionFamily& family, const Vec& mu,
                         const Matrix& chol_scale, std::span<double> out, Vec& z) {
    const std::size_t d = mu.size();
    for (std::size_t j = 0; j < d; ++j) z[j] = rng.normal();
    double mix = 1.0;
    switch (family.kind) {
        case Family::Gaussian:
            break;
        case Family::Student:
            // chol_scale factors (nu-2)/nu * Sigma; multiply by sqrt(nu/chi2_nu)
            mix = std::sqrt(family.nu / rng.chi_squared(family.nu));
            break;
        case Family::Laplace:
            mix = std::sqrt(rng.exponential());
            break;
    }
    for (std::size_t i = 0; i < d; ++i) {
        double s = 0.0;
        for (std::size_t j = 0; j <= i; ++j) s += chol_scale.at(i, j) * z[j];
        out[i] = mu[i] + mix * s;
    }
}

std::size_t round_half_up(double v) {
    return static_cast<std::size_t>(std::floor(v + 0.5));
}

}  // namespace

Dataset generate_mixture(const MixtureParams& truth,
                         const std::vector<std::size_t>& nk, std::uint64_t seed) {
    validate(truth);
    if (nk.size() != truth.k)
        throw InvalidInputError("generate_mixture: nk must have one entry per cluster");
    for (std::size_t n : nk)
        if (n < 1) throw InvalidInputError("generate_mixture: nk entries must be >= 1");

    const std::size_t d = truth.dim;
    const std::size_t total = std::accumulate(nk.begin(), nk.end(), std::size_t{0});

    Dataset out;
    out.x = Matrix(total, d);
    out.labels.resize(total);
    out.outliers.assign(total, 0);

    std::size_t row = 0;
    Vec z(d);
    for (std::size_t k = 0; k < truth.k; ++k) {
        SymMatrix scale = truth.sigma[k];
        if (truth.family.kind == Family::Student)
            scale *= (truth.family.nu - 2.0) / truth.family.nu;
        const Matrix chol_scale = cholesky(scale);
        Rng rng(derive_seed(seed, 0xc1u + k));
        for (std::size_t i = 0; i < nk[k]; ++i, ++row) {
            sample_emission_row(rng, truth.family, truth.centers[k], chol_scale,
                                out.x.row(row), z);
            out.labels[row] = static_cast<int>(k + 1);
        }
    }
    return out;
}

Dataset contaminate(const Dataset& data, char scenario, double delta,
                    const std::vector<Vec>& cluster_centers, std::uint64_t seed) {
    if (scenario < 'a' || scenario > 'e')
        throw InvalidInputError("contaminate: scenario must be one of a..e");
    if (!(delta >= 0.0 && delta <= 0.5))
        throw InvalidInputError("contaminate: delta must lie in [0, 0.5]");
    if (!data.has_labels())
        throw InvalidInputError("contaminate: dataset carries no cluster labels");

    Dataset out = data;
    out.outliers.assign(data.x.rows, 0);
    if (delta == 0.0) return out;

    const std::size_t d = data.x.cols;
    const int max_label =
        *std::max_element(data.labels.begin(), data.labels.end());
    for (int lab = 1; lab <= max_label; ++lab) {
        std::vector<std::size_t> members;
        for (std::size_t i = 0; i < data.labels.size(); ++i)
            if (data.labels[i] == lab) members.push_back(i);
        if (members.empty()) continue;
        const std::size_t n_out =
            round_half_up(delta * static_cast<double>(members.size()));
        if (n_out == 0) continue;

        Rng rng(derive_seed(seed, 0xc0u + static_cast<std::uint64_t>(lab)));
        // partial Fisher-Yates over the cluster members
        for (std::size_t j = 0; j < n_out; ++j) {
            const std::size_t pick = j + rng.index(members.size() - j);
            std::swap(members[j], members[pick]);
        }
        const bool centered = scenario == 'c' || scenario == 'e';
        const int df = (scenario == 'b' || scenario == 'c') ? 1
                       : (scenario == 'd' || scenario == 'e') ? 2
                                                              : 0;
        if (centered && cluster_centers.size() < static_cast<std::size_t>(lab))
            throw InvalidInputError("contaminate: scenario needs a center per cluster");
        for (std::size_t j = 0; j < n_out; ++j) {
            auto row = out.x.row(members[j]);
            if (scenario == 'a') {
                for (std::size_t c = 0; c < d; ++c) row[c] = rng.uniform(-20.0, 20.0);
            } else {
                // t(location, I, df): location + z / sqrt(chi2_df / df)
                const double mix = std::sqrt(df / rng.chi_squared(df));
                for (std::size_t c = 0; c < d; ++c) {
                    const double loc = centered ? cluster_centers[lab - 1][c] : 0.0;
                    row[c] = loc + mix * rng.normal();
                }
            }
            out.outliers[members[j]] = 1;
        }
    }
    return out;
}

Dataset generate_scenario(const ScenarioSpec& spec, std::uint64_t seed) {
    validate(spec);
    Dataset clean = generate_mixture(spec.truth, spec.nk, derive_seed(seed, 1));
    if (spec.delta == 0.0) return clean;
    return contaminate(clean, spec.scenario, spec.delta, spec.truth.centers,
                       derive_seed(seed, 2));
}

std::string format_double(double v) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

std::string dataset_to_csv(const Dataset& data) {
    std::string s;
    for (std::size_t j = 0; j < data.x.cols; ++j) {
        if (j) s += ',';
        s += 'x' + std::to_string(j + 1);
    }
    if (data.has_labels()) s += ",label";
    if (data.has_outliers()) s += ",outlier";
    s += '\n';
    for (std::size_t i = 0; i < data.x.rows; ++i) {
        for (std::size_t j = 0; j < data.x.cols; ++j) {
            if (j) s += ',';
            s += format_double(data.x.at(i, j));
        }
        if (data.has_labels()) s += ',' + std::to_string(data.labels[i]);
        if (data.has_outliers()) s += ',' + std::to_string(int(data.outliers[i]));
        s += '\n';
    }
    return s;
}

Dataset dataset_from_csv(const std::string& text) {
    std::istringstream in(text);
    std::string line;
    if (!std::getline(in, line)) throw IoError("csv: empty input");
    if (!line.empty() && line.back() == '\r') line.pop_back();

    std::vector<std::string> header;
    {
        std::istringstream hs(line);
        std::string tok;
        while (std::getline(hs, tok, ',')) header.push_back(tok);
    }
    std::size_t d = 0;
    while (d < header.size() && header[d] == "x" + std::to_string(d + 1)) ++d;
    if (d == 0) throw IoError("csv: expected columns x1..xd");
    int label_col = -1, outlier_col = -1;
    for (std::size_t c = d; c < header.size(); ++c) {
        if (header[c] == "label") label_col = static_cast<int>(c);
        else if (header[c] == "outlier") outlier_col = static_cast<int>(c);
        else throw IoError("csv: unexpected column " + header[c]);
    }

    std::vector<double> values;
    std::vector<int> labels;
    std::vector<std::uint8_t> outliers;
    std::size_t rows = 0;
    while (std::getline(in, line)) {
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty()) continue;
        std::istringstream ls(line);
        std::string tok;
        std::size_t col = 0;
        while (std::getline(ls, tok, ',')) {
            char* end = nullptr;
            const double v = std::strtod(tok.c_str(), &end);
            if (end == tok.c_str()) throw IoError("csv: bad number: " + tok);
            if (col < d) values.push_back(v);
            else if (static_cast<int>(col) == label_col) labels.push_back(static_cast<int>(v));
            else if (static_cast<int>(col) == outlier_col)
                outliers.push_back(static_cast<std::uint8_t>(v != 0.0));
            ++col;
        }
        if (col != header.size()) throw IoError("csv: ragged row");
        ++rows;
    }
    if (rows == 0) throw IoError("csv: no data rows");

    Dataset out;
    out.x = Matrix(rows, d);
    out.x.data = std::move(values);
    out.labels = std::move(labels);
    out.outliers = std::move(outliers);
    return out;
}

void save_csv(const Dataset& data, const std::string& path) {
    std::ofstream f(path, std::ios::binary);
    if (!f) throw IoError("cannot open for writing: " + path);
    f << dataset_to_csv(data);
    if (!f) throw IoError("write failed: " + path);
}

Dataset load_csv(const std::string& path) {
    std::ifstream f(path, std::ios::binary);
    if (!f) throw IoError("cannot open: " + path);
    std::ostringstream ss;
    ss << f.rdbuf();
    return dataset_from_csv(ss.str());
}

}  // namespace robmix
