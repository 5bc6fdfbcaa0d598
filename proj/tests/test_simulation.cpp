#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>

#include "robmix/errors.hpp"
#include "robmix/simulation.hpp"
#include "testutil.hpp"

using namespace robmix;

TEST_CASE("presets: appendix values digit for digit") {
    CHECK(presets::mu1() == Vec{0, 0, 0, 0, 0});
    CHECK(presets::mu2() == Vec{3, 3, 3, 3, -3});
    CHECK(presets::mu3() == Vec{-3, -3, -3, -3, -3});

    const double s0[5][5] = {{4, 0.86, 0.83, 0.29, 1.35},
                             {0.86, 4, 1.4, 0.97, 1.79},
                             {0.83, 1.4, 4, 0.35, 0.84},
                             {0.29, 0.97, 0.35, 4, 0.86},
                             {1.35, 1.79, 0.84, 0.86, 4}};
    const double s1[5][5] = {{2, 0.43, 0.41, 0.15, 0.68},
                             {0.43, 2, 0.7, 0.49, 0.89},
                             {0.41, 0.7, 2, 0.17, 0.42},
                             {0.15, 0.49, 0.17, 2, 0.43},
                             {0.68, 0.89, 0.42, 0.43, 2}};
    const double s2[5][5] = {{1, 0.46, 0.17, 0.04, 1.06},
                             {0.46, 2, 0.61, 0.18, 1.22},
                             {0.17, 0.61, 3, 0.7, 0.65},
                             {0.04, 0.18, 0.7, 4, 0.16},
                             {1.06, 1.22, 0.65, 0.16, 5}};
    const double s3[5][5] = {{1, 0.6, 0.11, 0.03, 0.26},
                             {0.6, 0.5, 0.09, 0.02, 0.17},
                             {0.11, 0.09, 0.33, 0.03, 0.04},
                             {0.03, 0.02, 0.03, 0.25, 0.01},
                             {0.26, 0.17, 0.04, 0.01, 0.2}};
    const SymMatrix m0 = presets::sigma0(), m1 = presets::sigma1(),
                    m2 = presets::sigma2(), m3 = presets::sigma3();
    for (std::size_t i = 0; i < 5; ++i)
        for (std::size_t j = 0; j < 5; ++j) {
            CHECK(m0.at(i, j) == s0[i][j]);
            CHECK(m1.at(i, j) == s1[i][j]);
            CHECK(m2.at(i, j) == s2[i][j]);
            CHECK(m3.at(i, j) == s3[i][j]);
        }
    CHECK(presets::default_nu == 3);

    const MixtureParams p3 = presets::paper3(EmissionFamily::gaussian());
    CHECK(p3.k == 3);
    CHECK(p3.pi == Vec{1.0 / 3, 1.0 / 3, 1.0 / 3});
}

TEST_CASE("generate_mixture: cluster means within CLT range") {
    const MixtureParams truth = presets::paper3(EmissionFamily::gaussian());
    const Dataset ds = generate_mixture(truth, {200, 200, 200}, 11);
    REQUIRE(ds.x.rows == 600);
    const std::vector<Vec> mus{presets::mu1(), presets::mu2(), presets::mu3()};
    const std::vector<SymMatrix> sigmas{presets::sigma1(), presets::sigma2(),
                                        presets::sigma3()};
    for (int k = 0; k < 3; ++k) {
        Vec mean(5, 0.0);
        int count = 0;
        for (std::size_t i = 0; i < 600; ++i) {
            if (ds.labels[i] != k + 1) continue;
            ++count;
            for (std::size_t j = 0; j < 5; ++j) mean[j] += ds.x.at(i, j);
        }
        CHECK(count == 200);
        for (std::size_t j = 0; j < 5; ++j) {
            // 4-sigma CLT band for the per-coordinate sample mean
            const double band = 4.0 * std::sqrt(sigmas[k].at(j, j) / 200.0);
            CHECK(std::abs(mean[j] / count - mus[k][j]) <= band);
        }
    }
}

TEST_CASE("generate_mixture: student cluster 1 variance near 2 (heavy tails)") {
    const MixtureParams truth = presets::paper3(EmissionFamily::student(3));
    const Dataset ds = generate_mixture(truth, {2000, 1, 1}, 13);
    for (std::size_t j = 0; j < 5; ++j) {
        double s = 0.0, m = 0.0;
        for (std::size_t i = 0; i < 2000; ++i) m += ds.x.at(i, j);
        m /= 2000;
        for (std::size_t i = 0; i < 2000; ++i)
            s += (ds.x.at(i, j) - m) * (ds.x.at(i, j) - m);
        CHECK(std::abs(s / 2000 - 2.0) <= 2.0);  // wide band, no 4th moment
    }
}

TEST_CASE("generate_mixture: nk = (1,1,1) labels are a permutation of 1..3") {
    const MixtureParams truth = presets::paper3(EmissionFamily::gaussian());
    const Dataset ds = generate_mixture(truth, {1, 1, 1}, 17);
    std::vector<int> labels = ds.labels;
    std::sort(labels.begin(), labels.end());
    CHECK(labels == std::vector<int>{1, 2, 3});
}

TEST_CASE("contaminate: delta zero is the identity, counts are exact") {
    const MixtureParams truth = presets::paper3(EmissionFamily::gaussian());
    const Dataset clean = generate_mixture(truth, {40, 50, 60}, 19);
    const Dataset same = contaminate(clean, 'a', 0.0, truth.centers, 23);
    CHECK(same.x.data == clean.x.data);
    CHECK(std::count(same.outliers.begin(), same.outliers.end(), 1) == 0);

    const Dataset tainted = contaminate(clean, 'a', 0.13, truth.centers, 29);
    // per cluster: round(0.13 * nk), ties up
    const int expect[3] = {5, 7, 8};  // 5.2, 6.5 -> 7, 7.8 -> 8
    for (int k = 0; k < 3; ++k) {
        int flagged = 0;
        for (std::size_t i = 0; i < tainted.x.rows; ++i)
            if (tainted.labels[i] == k + 1 && tainted.outliers[i]) ++flagged;
        CHECK(flagged == expect[k]);
    }
    CHECK(tainted.labels == clean.labels);  // labels stay with the source cluster

    // scenario (a) support: every flagged row inside [-20, 20]^d
    for (std::size_t i = 0; i < tainted.x.rows; ++i) {
        if (!tainted.outliers[i]) {
            CHECK(tainted.x.row(i)[0] == clean.x.row(i)[0]);
            continue;
        }
        for (double v : tainted.x.row(i)) {
            CHECK(v >= -20.0);
            CHECK(v <= 20.0);
        }
    }
}

TEST_CASE("contaminate: (c) on a null-centered cluster matches (b) in distribution") {
    // single cluster at the origin: scenario (c) centers its Student draws at
    // mu = 0, so it must match scenario (b) exactly under the same seed
    const MixtureParams truth = presets::variance_study(EmissionFamily::gaussian());
    const Dataset clean = generate_mixture(truth, {500}, 31);
    const Dataset b = contaminate(clean, 'b', 0.2, truth.centers, 37);
    const Dataset c = contaminate(clean, 'c', 0.2, truth.centers, 37);
    CHECK(b.x.data == c.x.data);

    // and with different seeds the two scenarios agree in distribution:
    // two-sample Kolmogorov-Smirnov per coordinate on the flagged rows
    const Dataset c2 = contaminate(clean, 'c', 0.2, truth.centers, 41);
    for (std::size_t j = 0; j < 5; ++j) {
        std::vector<double> xs, ys;
        for (std::size_t i = 0; i < clean.x.rows; ++i) {
            if (b.outliers[i]) xs.push_back(b.x.at(i, j));
            if (c2.outliers[i]) ys.push_back(c2.x.at(i, j));
        }
        std::sort(xs.begin(), xs.end());
        std::sort(ys.begin(), ys.end());
        double d_stat = 0.0;
        std::size_t ix = 0, iy = 0;
        while (ix < xs.size() && iy < ys.size()) {
            if (xs[ix] <= ys[iy]) ++ix;
            else ++iy;
            d_stat = std::max(d_stat,
                              std::abs(static_cast<double>(ix) / xs.size() -
                                       static_cast<double>(iy) / ys.size()));
        }
        // KS critical value at alpha = 0.01
        const double crit = 1.63 * std::sqrt(2.0 / 100.0);
        CHECK(d_stat <= crit);
    }
}

TEST_CASE("generate_scenario: seed determinism") {
    const MixtureParams truth = presets::paper3(EmissionFamily::laplace());
    ScenarioSpec spec;
    spec.scenario = 'd';
    spec.delta = 0.1;
    spec.family = truth.family;
    spec.nk = {30, 30, 30};
    spec.truth = truth;
    const Dataset a = generate_scenario(spec, 99);
    const Dataset b = generate_scenario(spec, 99);
    CHECK(a.x.data == b.x.data);
    CHECK(a.outliers == b.outliers);
    const Dataset c = generate_scenario(spec, 100);
    CHECK(a.x.data != c.x.data);
}

TEST_CASE("csv: round trip with 17 significant digits") {
    const MixtureParams truth = presets::paper3(EmissionFamily::gaussian());
    ScenarioSpec spec;
    spec.scenario = 'a';
    spec.delta = 0.1;
    spec.family = truth.family;
    spec.nk = {10, 10, 10};
    spec.truth = truth;
    const Dataset ds = generate_scenario(spec, 7);

    const std::string text = dataset_to_csv(ds);
    CHECK(text.substr(0, text.find('\n')) == "x1,x2,x3,x4,x5,label,outlier");
    const Dataset back = dataset_from_csv(text);
    CHECK(back.x.data == ds.x.data);  // exact: %.17g round-trips doubles
    CHECK(back.labels == ds.labels);
    CHECK(std::equal(back.outliers.begin(), back.outliers.end(), ds.outliers.begin()));

    const std::string path = (std::filesystem::temp_directory_path() /
                              "robmix_test_roundtrip.csv").string();
    save_csv(ds, path);
    const Dataset loaded = load_csv(path);
    CHECK(loaded.x.data == ds.x.data);
    std::remove(path.c_str());
}

TEST_CASE("csv: malformed inputs raise IoError") {
    CHECK_THROWS_AS(dataset_from_csv(""), IoError);
    CHECK_THROWS_AS(dataset_from_csv("a,b\n1,2\n"), IoError);
    CHECK_THROWS_AS(dataset_from_csv("x1,x2\n1.0\n"), IoError);
    CHECK_THROWS_AS(load_csv("/nonexistent/robmix.csv"), IoError);
}

TEST_CASE("scenario spec validation") {
    const MixtureParams truth = presets::paper3(EmissionFamily::gaussian());
    ScenarioSpec spec;
    spec.scenario = 'f';
    spec.delta = 0.1;
    spec.family = truth.family;
    spec.nk = {5, 5, 5};
    spec.truth = truth;
    CHECK_THROWS_AS(validate(spec), InvalidInputError);
    spec.scenario = 'a';
    spec.delta = 0.6;
    CHECK_THROWS_AS(validate(spec), InvalidInputError);
    spec.delta = 0.1;
    spec.nk = {5, 5};
    CHECK_THROWS_AS(validate(spec), InvalidInputError);
}
