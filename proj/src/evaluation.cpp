#include "robmix/evaluation.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <numeric>

#include "robmix/errors.hpp"
#include "robmix/simulation.hpp"

namespace robmix {

double adjusted_rand_index(std::span<const int> a, std::span<const int> b) {
    if (a.size() != b.size())
        throw InvalidInputError("adjusted_rand_index: label vectors differ in length");
    const std::size_t n = a.size();
    if (n < 2) throw InvalidInputError("adjusted_rand_index: need at least 2 points");

    std::map<int, std::size_t> ia, ib;
    for (int v : a) ia.emplace(v, ia.size());
    for (int v : b) ib.emplace(v, ib.size());

    Matrix cm(ia.size(), ib.size());
    for (std::size_t i = 0; i < n; ++i) cm.at(ia[a[i]], ib[b[i]]) += 1.0;

    const auto comb2 = [](double x) { return 0.5 * x * (x - 1.0); };
    double sij = 0.0, si = 0.0, sj = 0.0;
    for (std::size_t r = 0; r < cm.rows; ++r) {
        double rs = 0.0;
        for (std::size_t c = 0; c < cm.cols; ++c) {
            sij += comb2(cm.at(r, c));
            rs += cm.at(r, c);
        }
        si += comb2(rs);
    }
    for (std::size_t c = 0; c < cm.cols; ++c) {
        double cs = 0.0;
        for (std::size_t r = 0; r < cm.rows; ++r) cs += cm.at(r, c);
        sj += comb2(cs);
    }
    const double expected = si * sj / comb2(static_cast<double>(n));
    const double maximum = 0.5 * (si + sj);
    if (maximum == expected) return 1.0;  // both partitions trivial
    return (sij - expected) / (maximum - expected);
}

EvalReport match_and_mse(const MixtureParams& truth, const MixtureParams& est) {
    if (truth.k != est.k)
        throw InvalidInputError("match_and_mse: cluster counts differ");
    if (truth.dim != est.dim)
        throw InvalidInputError("match_and_mse: dimensions differ");
    const std::size_t k = truth.k, d = truth.dim;
    if (k > 10)
        throw InvalidInputError("match_and_mse: exhaustive matching supports K <= 10");

    // center-distance cost table
    Matrix cost(k, k);
    for (std::size_t i = 0; i < k; ++i)
        for (std::size_t j = 0; j < k; ++j) {
            double s = 0.0;
            for (std::size_t c = 0; c < d; ++c) {
                const double v = truth.centers[i][c] - est.centers[j][c];
                s += v * v;
            }
            cost.at(i, j) = s;
        }

    std::vector<std::size_t> perm(k), best(k);
    std::iota(perm.begin(), perm.end(), 0);
    best = perm;
    double best_cost = std::numeric_limits<double>::infinity();
    do {
        double c = 0.0;
        for (std::size_t i = 0; i < k; ++i) c += cost.at(i, perm[i]);
        if (c < best_cost) {
            best_cost = c;
            best = perm;
        }
    } while (std::next_permutation(perm.begin(), perm.end()));

    EvalReport rep;
    rep.matching = best;
    double mse_mu = 0.0, mse_sigma = 0.0;
    for (std::size_t i = 0; i < k; ++i) {
        mse_mu += cost.at(i, best[i]) / static_cast<double>(d);
        const double fd = frobenius_distance(truth.sigma[i], est.sigma[best[i]]);
        mse_sigma += fd * fd / static_cast<double>(d * d);
    }
    rep.mse_mu = mse_mu / static_cast<double>(k);
    rep.mse_sigma = mse_sigma / static_cast<double>(k);
    return rep;
}

std::string eval_csv_header() {
    return "method,scenario,delta,seed,ari,mse_mu,mse_sigma,khat,converged\n";
}

std::string eval_csv_row(const std::string& method, char scenario, double delta,
                         std::uint64_t seed, double ari, double mse_mu,
                         double mse_sigma, int khat, bool converged) {
    const auto field = [](double v) {
        return std::isnan(v) ? std::string() : format_double(v);
    };
    std::string s = method;
    s += ',';
    s += scenario;
    s += ',' + format_double(delta);
    s += ',' + std::to_string(seed);
    s += ',' + field(ari);
    s += ',' + field(mse_mu);
    s += ',' + field(mse_sigma);
    s += ',' + (khat > 0 ? std::to_string(khat) : std::string());
    s += ',' + std::to_string(int(converged));
    s += '\n';
    return s;
}

}  // namespace robmix
