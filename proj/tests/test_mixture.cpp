#include <doctest.h>

#include <algorithm>
#include <cmath>

#include "robmix/errors.hpp"
#include "robmix/mixture.hpp"
#include "testutil.hpp"

using namespace robmix;

namespace {

constexpr double kPi = 3.14159265358979323846;

// Two well-separated 2-D gaussian blobs; small enough for fast unit tests.
Matrix two_blobs(std::size_t n_per, std::uint64_t seed, std::vector<int>* labels = nullptr) {
    testutil::TestRng rng(seed);
    Matrix x(2 * n_per, 2);
    for (std::size_t i = 0; i < n_per; ++i) {
        x.at(i, 0) = rng.normal();
        x.at(i, 1) = rng.normal();
        if (labels) labels->push_back(1);
    }
    for (std::size_t i = n_per; i < 2 * n_per; ++i) {
        x.at(i, 0) = 8.0 + rng.normal();
        x.at(i, 1) = 8.0 + rng.normal();
        if (labels) labels->push_back(2);
    }
    return x;
}

Matrix one_blob(std::size_t n, std::uint64_t seed) {
    testutil::TestRng rng(seed);
    Matrix x(n, 2);
    for (std::size_t i = 0; i < n; ++i) {
        x.at(i, 0) = 1.0 + rng.normal();
        x.at(i, 1) = -2.0 + 1.5 * rng.normal();
    }
    return x;
}

FitConfig fast_config(std::uint64_t seed) {
    FitConfig cfg;
    cfg.seed = seed;
    cfg.restarts = 3;
    cfg.recovery.mc_samples = 1000;
    cfg.recovery.iterations = 30;
    cfg.threads = 1;
    return cfg;
}

// Simpson rule over [lo, hi]
double simpson(const std::function<double(double)>& f, double lo, double hi, int n) {
    const double h = (hi - lo) / n;
    double s = f(lo) + f(hi);
    for (int i = 1; i < n; ++i) s += f(lo + i * h) * (i % 2 ? 4.0 : 2.0);
    return s * h / 3.0;
}

}  // namespace

TEST_CASE("emission_density: gaussian fixed values") {
    for (std::size_t d : {1u, 2u, 3u}) {
        const Vec x(d, 0.5), m(d, 0.5);
        const double v = emission_density(x, m, SymMatrix::identity(d),
                                          EmissionFamily::gaussian());
        CHECK(v == doctest::Approx(std::pow(2.0 * kPi, -0.5 * d)).epsilon(1e-12));
    }
    const double v = emission_density(Vec{1.0}, Vec{0.0}, SymMatrix::identity(1),
                                      EmissionFamily::gaussian());
    CHECK(v == doctest::Approx(std::exp(-0.5) / std::sqrt(2.0 * kPi)).epsilon(1e-12));
    CHECK(v == doctest::Approx(0.24197072451914337).epsilon(1e-12));
}

TEST_CASE("emission_density: student t3 with unit variance") {
    // t3 scaled to variance 1 has scale 1/sqrt(3); its mode value is 2/pi.
    // (The unscaled t3 density at 0 is 0.3676; the variance-matching scale
    // multiplies it by sqrt(3).)
    const double v = emission_density(Vec{0.0}, Vec{0.0}, SymMatrix::identity(1),
                                      EmissionFamily::student(3));
    CHECK(v == doctest::Approx(2.0 / kPi).epsilon(1e-10));

    const auto dens = [](double x) {
        return emission_density(Vec{x}, Vec{0.0}, SymMatrix::identity(1),
                                EmissionFamily::student(3));
    };
    CHECK(simpson(dens, -150.0, 150.0, 40000) == doctest::Approx(1.0).epsilon(1e-3));
    const auto second = [&](double x) { return x * x * dens(x); };
    CHECK(simpson(second, -400.0, 400.0, 200000) == doctest::Approx(1.0).epsilon(2e-2));
}

TEST_CASE("emission_density: laplace closed forms") {
    // d=1, variance 1: f(0) = 1/sqrt(2), f at q=1 is exp(-sqrt(2))/sqrt(2)
    CHECK(emission_density(Vec{0.0}, Vec{0.0}, SymMatrix::identity(1),
                           EmissionFamily::laplace()) ==
          doctest::Approx(1.0 / std::sqrt(2.0)).epsilon(1e-6));
    CHECK(emission_density(Vec{1.0}, Vec{0.0}, SymMatrix::identity(1),
                           EmissionFamily::laplace()) ==
          doctest::Approx(std::exp(-std::sqrt(2.0)) / std::sqrt(2.0)).epsilon(1e-10));
    // d=2, q=1: K_0(sqrt(2))/pi
    CHECK(emission_density(Vec{1.0, 0.0}, Vec{0.0, 0.0}, SymMatrix::identity(2),
                           EmissionFamily::laplace()) ==
          doctest::Approx(0.076121329877959).epsilon(1e-9));
    // integrates to 1 in 1-D
    const auto dens = [](double x) {
        return emission_density(Vec{x}, Vec{0.0}, SymMatrix::identity(1),
                                EmissionFamily::laplace());
    };
    CHECK(simpson(dens, -40.0, 40.0, 20000) == doctest::Approx(1.0).epsilon(1e-4));
}

TEST_CASE("emission_density: rejects a non-PD sigma") {
    SymMatrix bad(2);
    bad.set(0, 0, 1.0);
    bad.set(1, 1, -1.0);
    CHECK_THROWS_AS(
        emission_density(Vec{0, 0}, Vec{0, 0}, bad, EmissionFamily::gaussian()),
        NumericError);
}

TEST_CASE("e_step: K=1 gives tau = 1") {
    const Matrix x = two_blobs(20, 1);
    MixtureParams p;
    p.family = EmissionFamily::gaussian();
    p.k = 1;
    p.dim = 2;
    p.pi = {1.0};
    p.centers = {Vec{0, 0}};
    p.mcm = {SymMatrix::identity(2)};
    p.sigma = {SymMatrix::identity(2)};
    const Responsibilities r = e_step(x, p);
    for (double t : r.tau.data) CHECK(t == 1.0);
}

TEST_CASE("e_step: symmetric midpoint and unequal priors") {
    MixtureParams p;
    p.family = EmissionFamily::gaussian();
    p.k = 2;
    p.dim = 1;
    p.pi = {0.5, 0.5};
    p.centers = {Vec{-1.0}, Vec{1.0}};
    p.mcm = {SymMatrix::identity(1), SymMatrix::identity(1)};
    p.sigma = {SymMatrix::identity(1), SymMatrix::identity(1)};

    Matrix x(1, 1);
    x.at(0, 0) = 0.0;
    Responsibilities r = e_step(x, p);
    CHECK(r.tau.at(0, 0) == doctest::Approx(0.5).epsilon(1e-12));

    // pi = (0.3, 0.7), centers 0 and 4, x = 2: densities equal, tau = pi
    p.pi = {0.3, 0.7};
    p.centers = {Vec{0.0}, Vec{4.0}};
    x.at(0, 0) = 2.0;
    r = e_step(x, p);
    CHECK(r.tau.at(0, 0) == doctest::Approx(0.3).epsilon(1e-12));
    CHECK(r.tau.at(0, 1) == doctest::Approx(0.7).epsilon(1e-12));
}

TEST_CASE("e_step: rows sum to one") {
    const Matrix x = two_blobs(50, 3);
    MixtureParams p;
    p.family = EmissionFamily::gaussian();
    p.k = 2;
    p.dim = 2;
    p.pi = {0.4, 0.6};
    p.centers = {Vec{0, 0}, Vec{8, 8}};
    p.mcm = {SymMatrix::identity(2), SymMatrix::identity(2)};
    p.sigma = {SymMatrix::identity(2), SymMatrix::identity(2)};
    const Responsibilities r = e_step(x, p);
    for (std::size_t i = 0; i < x.rows; ++i)
        CHECK(std::abs(r.tau.at(i, 0) + r.tau.at(i, 1) - 1.0) <= 1e-10);
}

TEST_CASE("m_step: all-ones tau reduces to the module primitives") {
    const Matrix x = one_blob(60, 7);
    Responsibilities tau;
    tau.tau = Matrix(x.rows, 1, 1.0);
    MixtureParams prev;
    prev.family = EmissionFamily::gaussian();
    prev.k = 1;
    prev.dim = 2;
    prev.pi = {1.0};
    prev.centers = {Vec{1.0, 1.0}};
    prev.mcm = {SymMatrix::identity(2)};
    prev.sigma = {SymMatrix::identity(2)};

    const FitConfig cfg = fast_config(9);
    const MixtureParams out = m_step(x, tau, prev, cfg);

    const Vec med = weiszfeld_median(x, {}, cfg.median_cfg);
    CHECK(std::abs(out.centers[0][0] - med[0]) <= 1e-6);
    CHECK(std::abs(out.centers[0][1] - med[1]) <= 1e-6);
    const McmEstimate mcm = weiszfeld_mcm(x, out.centers[0], {}, cfg.mcm_cfg);
    CHECK(frobenius_distance(out.mcm[0], mcm.mcm) <= 1e-6);
    CHECK(out.pi[0] == 1.0);
}

TEST_CASE("m_step: hard partition equals per-blob medians") {
    std::vector<int> labels;
    const Matrix x = two_blobs(25, 15, &labels);
    Responsibilities tau;
    tau.tau = Matrix(x.rows, 2, 0.0);
    for (std::size_t i = 0; i < x.rows; ++i) tau.tau.at(i, labels[i] - 1) = 1.0;

    MixtureParams prev;
    prev.family = EmissionFamily::gaussian();
    prev.k = 2;
    prev.dim = 2;
    prev.pi = {0.5, 0.5};
    prev.centers = {Vec{0, 0}, Vec{8, 8}};
    prev.mcm = {SymMatrix::identity(2), SymMatrix::identity(2)};
    prev.sigma = {SymMatrix::identity(2), SymMatrix::identity(2)};

    const FitConfig cfg = fast_config(16);
    const MixtureParams out = m_step(x, tau, prev, cfg);

    // zero weights remove points exactly: compare against per-blob runs
    Matrix blob1(25, 2), blob2(25, 2);
    std::copy(x.data.begin(), x.data.begin() + 50, blob1.data.begin());
    std::copy(x.data.begin() + 50, x.data.end(), blob2.data.begin());
    WeiszfeldConfig wcfg = cfg.median_cfg;
    const Vec m1 = weiszfeld_median(blob1, {}, wcfg, &prev.centers[0]);
    const Vec m2 = weiszfeld_median(blob2, {}, wcfg, &prev.centers[1]);
    CHECK(std::abs(out.centers[0][0] - m1[0]) <= 1e-10);
    CHECK(std::abs(out.centers[0][1] - m1[1]) <= 1e-10);
    CHECK(std::abs(out.centers[1][0] - m2[0]) <= 1e-10);
    CHECK(std::abs(out.centers[1][1] - m2[1]) <= 1e-10);
}

TEST_CASE("m_step: pi update is the tau column mean") {
    Matrix x(100, 1);
    testutil::TestRng rng(18);
    for (double& v : x.data) v = rng.normal();
    Responsibilities tau;
    tau.tau = Matrix(100, 2, 0.0);
    for (std::size_t i = 0; i < 100; ++i) {
        tau.tau.at(i, 0) = i < 30 ? 1.0 : 0.0;
        tau.tau.at(i, 1) = i < 30 ? 0.0 : 1.0;
    }
    MixtureParams prev;
    prev.family = EmissionFamily::gaussian();
    prev.k = 2;
    prev.dim = 1;
    prev.pi = {0.5, 0.5};
    prev.centers = {Vec{-1.0}, Vec{1.0}};
    prev.mcm = {SymMatrix::identity(1), SymMatrix::identity(1)};
    prev.sigma = {SymMatrix::identity(1), SymMatrix::identity(1)};
    const MixtureParams out = m_step(x, tau, prev, fast_config(19));
    CHECK(out.pi[0] == doctest::Approx(0.3).epsilon(1e-12));
    CHECK(out.pi[1] == doctest::Approx(0.7).epsilon(1e-12));
}

TEST_CASE("m_step: degenerate component weight throws") {
    const Matrix x = two_blobs(20, 21);
    Responsibilities tau;
    tau.tau = Matrix(x.rows, 2, 0.0);
    for (std::size_t i = 0; i < x.rows; ++i) {
        tau.tau.at(i, 0) = 1.0 - 1e-6;
        tau.tau.at(i, 1) = 1e-6;  // column sum far below d+1
    }
    MixtureParams prev;
    prev.family = EmissionFamily::gaussian();
    prev.k = 2;
    prev.dim = 2;
    prev.pi = {0.5, 0.5};
    prev.centers = {Vec{0, 0}, Vec{8, 8}};
    prev.mcm = {SymMatrix::identity(2), SymMatrix::identity(2)};
    prev.sigma = {SymMatrix::identity(2), SymMatrix::identity(2)};
    CHECK_THROWS_AS(m_step(x, tau, prev, fast_config(22)), DegenerateClusterError);
}

TEST_CASE("init_random: determinism, permutation at K=n, uniform selection") {
    const Matrix x = two_blobs(10, 23);

    const MixtureParams a = init_random(x, 3, EmissionFamily::gaussian(), 5);
    const MixtureParams b = init_random(x, 3, EmissionFamily::gaussian(), 5);
    for (std::size_t k = 0; k < 3; ++k) CHECK(a.centers[k] == b.centers[k]);

    // K = n: centers are a permutation of the rows
    const MixtureParams all = init_random(x, 20, EmissionFamily::gaussian(), 7);
    std::vector<Vec> rows;
    for (std::size_t i = 0; i < x.rows; ++i)
        rows.emplace_back(x.row(i).begin(), x.row(i).end());
    auto sorted_rows = rows;
    auto sorted_centers = all.centers;
    std::sort(sorted_rows.begin(), sorted_rows.end());
    std::sort(sorted_centers.begin(), sorted_centers.end());
    CHECK(sorted_rows == sorted_centers);

    CHECK_THROWS_AS(init_random(x, 21, EmissionFamily::gaussian(), 1),
                    InvalidInputError);

    // uniformity: K=3 of 1000 rows over many seeds; allow a few 3-sigma
    // binomial excursions among the 1000 per-row counts
    Matrix big(1000, 1);
    for (std::size_t i = 0; i < 1000; ++i) big.at(i, 0) = static_cast<double>(i);
    std::vector<int> count(1000, 0);
    const int trials = 10000;
    for (int s = 0; s < trials; ++s) {
        const MixtureParams p = init_random(big, 3, EmissionFamily::gaussian(), 1000 + s);
        for (const Vec& c : p.centers) count[static_cast<std::size_t>(c[0])]++;
    }
    const double expect = 3.0 / 1000.0 * trials;
    const double sigma = std::sqrt(trials * (3.0 / 1000.0) * (1.0 - 3.0 / 1000.0));
    int outside = 0;
    for (int c : count)
        if (std::abs(c - expect) > 3.0 * sigma) ++outside;
    CHECK(outside <= 8);  // ~2.7 expected by chance at 3 sigma
}

TEST_CASE("fit: K=1 reduces to median + psi_u(MCM)") {
    const Matrix x = one_blob(80, 29);
    FitConfig cfg = fast_config(30);
    cfg.restarts = 1;
    const FitResult res = fit(x, 1, EmissionFamily::gaussian(), cfg);
    CHECK(res.params.pi[0] == 1.0);
    const Vec med = weiszfeld_median(x, {}, cfg.median_cfg);
    CHECK(std::abs(res.params.centers[0][0] - med[0]) <= 1e-6);
    CHECK(std::abs(res.params.centers[0][1] - med[1]) <= 1e-6);
    CHECK(res.converged);
}

TEST_CASE("fit: separates two blobs and stays at the fix point") {
    std::vector<int> labels;
    const Matrix x = two_blobs(60, 31, &labels);
    FitConfig cfg = fast_config(32);
    cfg.loglik_tol = 1e-8;
    const FitResult res = fit(x, 2, EmissionFamily::gaussian(), cfg);
    CHECK(res.converged);

    // assignments match the construction up to label swap
    int agree = 0;
    for (std::size_t i = 0; i < x.rows; ++i) {
        const int hard = res.tau.tau.at(i, 0) >= res.tau.tau.at(i, 1) ? 1 : 2;
        agree += hard == labels[i];
    }
    const int correct = std::max(agree, static_cast<int>(x.rows) - agree);
    CHECK(correct >= static_cast<int>(x.rows) - 1);

    // one extra EM sweep barely moves the parameters
    const Matrix u = fit_standardized_sample(res.params.family, x.cols, cfg);
    const Responsibilities tau2 = e_step(x, res.params);
    const MixtureParams next = m_step_with_sample(x, tau2, res.params, cfg, u);
    for (std::size_t k = 0; k < 2; ++k) {
        double dc = 0.0, nc = 0.0;
        for (std::size_t j = 0; j < 2; ++j) {
            dc += (next.centers[k][j] - res.params.centers[k][j]) *
                  (next.centers[k][j] - res.params.centers[k][j]);
            nc += res.params.centers[k][j] * res.params.centers[k][j];
        }
        CHECK(std::sqrt(dc) / std::max(1.0, std::sqrt(nc)) <= 1e-4);
        CHECK(std::abs(next.pi[k] - res.params.pi[k]) /
                  std::max(res.params.pi[k], 1e-12) <=
              1e-4);
        CHECK(frobenius_distance(next.mcm[k], res.params.mcm[k]) /
                  std::max(1.0, res.params.mcm[k].frob_norm()) <=
              1e-3);
    }
}

TEST_CASE("fit: permutation invariance from a permuted initialization") {
    const Matrix x = two_blobs(40, 41);
    FitConfig cfg = fast_config(42);
    const MixtureParams init = init_random(x, 2, EmissionFamily::gaussian(), 43);

    MixtureParams swapped = init;
    std::swap(swapped.centers[0], swapped.centers[1]);
    std::swap(swapped.mcm[0], swapped.mcm[1]);
    std::swap(swapped.sigma[0], swapped.sigma[1]);
    std::swap(swapped.pi[0], swapped.pi[1]);

    const FitResult a = fit_from_init(x, init, cfg);
    const FitResult b = fit_from_init(x, swapped, cfg);
    CHECK(a.loglik == doctest::Approx(b.loglik).epsilon(1e-12));
    for (std::size_t k = 0; k < 2; ++k) {
        CHECK(a.params.centers[k] == b.params.centers[1 - k]);
        CHECK(a.params.pi[k] == b.params.pi[1 - k]);
        CHECK(frobenius_distance(a.params.sigma[k], b.params.sigma[1 - k]) == 0.0);
    }
}

TEST_CASE("fit: naive baseline recovers moments on clean data") {
    std::vector<int> labels;
    const Matrix x = two_blobs(60, 51, &labels);
    FitConfig cfg = fast_config(52);
    cfg.method = FitMethod::Naive;
    const FitResult res = fit(x, 2, EmissionFamily::gaussian(), cfg);
    CHECK(res.converged);
    // centers near (0,0) and (8,8) in some order
    const bool first_low = res.params.centers[0][0] < 4.0;
    const Vec& low = res.params.centers[first_low ? 0 : 1];
    const Vec& high = res.params.centers[first_low ? 1 : 0];
    CHECK(std::abs(low[0]) <= 0.5);
    CHECK(std::abs(high[0] - 8.0) <= 0.5);
}

TEST_CASE("fit: every restart degenerate raises FitFailure") {
    // 3 identical points cannot support K=2 with effective weight >= d+1
    Matrix x(3, 2);
    for (std::size_t i = 0; i < 3; ++i) {
        x.at(i, 0) = 1.0;
        x.at(i, 1) = 2.0;
    }
    FitConfig cfg = fast_config(53);
    cfg.restarts = 2;
    CHECK_THROWS_AS(fit(x, 2, EmissionFamily::gaussian(), cfg), FitFailureError);
}

TEST_CASE("information_criteria: parameter count and entropy arithmetic") {
    FitResult fr;
    fr.loglik = -100.0;
    fr.tau.tau = Matrix(10, 2, 0.5);
    const auto [bic, icl] = information_criteria(fr, 10, 5, 3);
    // D_K = (3-1) + 3*5 + 3*15 = 62
    CHECK(bic == doctest::Approx(-100.0 - 0.5 * std::log(10.0) * 62.0).epsilon(1e-12));
    // uniform tau over K=2, n=10: ICL = BIC - 10 log 2
    CHECK(icl == doctest::Approx(bic - 10.0 * std::log(2.0)).epsilon(1e-12));
    CHECK(icl <= bic);

    // one-hot tau: ICL == BIC
    FitResult hard;
    hard.loglik = -50.0;
    hard.tau.tau = Matrix(6, 2, 0.0);
    for (std::size_t i = 0; i < 6; ++i) hard.tau.tau.at(i, i % 2) = 1.0;
    const auto [bic2, icl2] = information_criteria(hard, 6, 2, 2);
    CHECK(icl2 == bic2);
}

TEST_CASE("select_k: trivial single-K range and two-blob selection") {
    const Matrix x = two_blobs(50, 61);
    FitConfig cfg = fast_config(62);
    cfg.restarts = 2;

    const SelectResult one = select_k(x, {3}, Criterion::Bic,
                                      EmissionFamily::gaussian(), cfg);
    CHECK(one.best_k == 3);

    const SelectResult sel = select_k(x, {1, 2, 3}, Criterion::Bic,
                                      EmissionFamily::gaussian(), cfg);
    CHECK(sel.best_k == 2);
    const SelectResult sel_icl = select_k(x, {1, 2, 3}, Criterion::Icl,
                                          EmissionFamily::gaussian(), cfg);
    CHECK(sel_icl.best_k == 2);
}

TEST_CASE("select_k: penalty picks K=1 on a single tight blob") {
    const Matrix x = one_blob(300, 65);
    FitConfig cfg = fast_config(66);
    cfg.restarts = 2;
    const SelectResult sel = select_k(x, {1, 2, 3, 4}, Criterion::Bic,
                                      EmissionFamily::gaussian(), cfg);
    CHECK(sel.best_k == 1);
}

TEST_CASE("fit: result does not depend on the restart thread count") {
    const Matrix x = two_blobs(50, 91);
    FitConfig cfg = fast_config(92);
    cfg.restarts = 5;
    cfg.threads = 1;
    const FitResult serial = fit(x, 2, EmissionFamily::gaussian(), cfg);
    cfg.threads = 4;
    const FitResult parallel = fit(x, 2, EmissionFamily::gaussian(), cfg);
    CHECK(serial.loglik == parallel.loglik);
    CHECK(serial.tau.tau.data == parallel.tau.tau.data);
    for (std::size_t k = 0; k < 2; ++k) {
        CHECK(serial.params.centers[k] == parallel.params.centers[k]);
        CHECK(frobenius_distance(serial.params.sigma[k], parallel.params.sigma[k]) ==
              0.0);
    }
}

TEST_CASE("select_k: infeasible K recorded as failure, sweep continues") {
    const Matrix x = one_blob(12, 63);
    FitConfig cfg = fast_config(64);
    cfg.restarts = 2;
    // K=11 leaves every component with effective weight ~1 < d+1
    const SelectResult sel = select_k(x, {1, 11}, Criterion::Bic,
                                      EmissionFamily::gaussian(), cfg);
    CHECK(sel.best_k == 1);
    CHECK(sel.fits[0].has_value());
    CHECK(!sel.fits[1].has_value());
    CHECK(!sel.errors[1].empty());
}

TEST_CASE("model JSON: lossless round trip") {
    const Matrix x = two_blobs(30, 71);
    FitConfig cfg = fast_config(72);
    cfg.restarts = 2;
    const FitResult res = fit(x, 2, EmissionFamily::gaussian(), cfg);

    const std::string text = model_to_json(res);
    const FitResult back = model_from_json(text);
    CHECK(back.params.k == res.params.k);
    CHECK(back.loglik == res.loglik);  // exact: doubles survive the round trip
    CHECK(back.bic == res.bic);
    CHECK(back.icl == res.icl);
    for (std::size_t k = 0; k < 2; ++k) {
        CHECK(back.params.pi[k] == res.params.pi[k]);
        CHECK(back.params.centers[k] == res.params.centers[k]);
        CHECK(frobenius_distance(back.params.sigma[k], res.params.sigma[k]) == 0.0);
        CHECK(frobenius_distance(back.params.mcm[k], res.params.mcm[k]) == 0.0);
    }
    // and the re-serialization is byte-identical
    CHECK(model_to_json(back) == text);
}

TEST_CASE("model JSON: malformed input raises IoError") {
    CHECK_THROWS_AS(model_from_json("{ not json"), IoError);
    CHECK_THROWS_AS(model_from_json("{\"family\": \"gaussian\"}"), IoError);
}
