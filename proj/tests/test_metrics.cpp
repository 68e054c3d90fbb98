/**
 * This file is part of concept-lab.
 *
 * Copyright 2026 The concept-lab Authors
 *
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 *     http://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */
#include <doctest.h>

#include <cmath>
#include <functional>
#include <random>
#include <sstream>

#include "clab/data/generators.hpp"
#include "clab/error.hpp"
#include "clab/metrics/curve.hpp"
#include "clab/metrics/metrics.hpp"

using namespace clab;
using namespace clab::metrics;
using nn::Tensor;

namespace {

// All positive/negative pairs: wins count 1, ties 1/2.
double auc_pairs(const std::vector<double>& s, const std::vector<double>& y) {
    double num = 0, pairs = 0;
    for (std::size_t i = 0; i < s.size(); ++i) {
        for (std::size_t j = 0; j < s.size(); ++j) {
            if (y[i] == 1 && y[j] == 0) {
                num += s[i] > s[j] ? 1.0 : s[i] == s[j] ? 0.5 : 0.0;
                pairs += 1;
            }
        }
    }
    return num / pairs;
}

struct Instance {
    std::vector<double> scores, labels;
};

// Small instances with many ties: scores on a coarse grid, both classes present.
Instance random_instance(std::mt19937_64& rng) {
    std::uniform_int_distribution<int> size(2, 50), grid(-6, 6);
    std::bernoulli_distribution coin(std::uniform_real_distribution<double>(0.1, 0.9)(rng));
    Instance in;
    const int n = size(rng);
    for (int i = 0; i < n; ++i) {
        in.scores.push_back(grid(rng) * 0.25);
        in.labels.push_back(coin(rng) ? 1.0 : 0.0);
    }
    in.labels[0] = 1;
    in.labels[1] = 0;
    return in;
}

}  // namespace

TEST_CASE("auc: worked examples") {
    CHECK(auc(std::vector<double>{0.1, 0.4, 0.35, 0.8}, std::vector<double>{0.0, 0.0, 1.0, 1.0}) == 0.75);
    CHECK(auc(std::vector<double>{0.1, 0.2, 0.7, 0.9}, std::vector<double>{0.0, 0.0, 1.0, 1.0}) == 1.0);
    CHECK(auc(std::vector<double>{0.3, 0.3, 0.3, 0.3}, std::vector<double>{1.0, 0.0, 1.0, 0.0}) == 0.5);
    CHECK_THROWS_AS(auc(std::vector<double>{0.1, 0.2}, std::vector<double>{1.0, 1.0}), UndefinedMetric);
    CHECK_THROWS_AS(auc(std::vector<double>{0.1, 0.2}, std::vector<double>{1.0, 0.5}), ConfigError);
}

TEST_CASE("property: auc equals the all-pairs oracle on 10000 instances") {
    std::mt19937_64 rng(2024);
    int mismatches = 0;
    for (int t = 0; t < 10000; ++t) {
        const auto in = random_instance(rng);
        mismatches += auc(in.scores, in.labels) != auc_pairs(in.scores, in.labels);
    }
    CHECK(mismatches == 0);
}

TEST_CASE("property: auc is invariant under strictly increasing maps and flips under negation") {
    const std::vector<std::function<double(double)>> maps{
        [](double v) { return std::exp(v); },
        [](double v) { return v * v * v + v; },
        [](double v) { return std::atan(v); },
        [](double v) { return 3.5 * v - 7; },
        [](double v) { return 1 / (1 + std::exp(-v)); },
    };
    std::mt19937_64 rng(99);
    for (int t = 0; t < 2000; ++t) {
        const auto in = random_instance(rng);
        const double base = auc(in.scores, in.labels);
        for (const auto& f : maps) {
            std::vector<double> mapped;
            for (double s : in.scores) mapped.push_back(f(s));
            CHECK(auc(mapped, in.labels) == base);
        }
        std::vector<double> neg;
        for (double s : in.scores) neg.push_back(-s);
        CHECK(base + auc(neg, in.labels) == 1.0);
    }
}

TEST_CASE("pearson and spearman") {
    CHECK(pearson(std::vector<double>{1.0, 2, 3, 4}, std::vector<double>{3.0, 5, 7, 9}) == doctest::Approx(1.0).epsilon(1e-15));
    CHECK(pearson(std::vector<double>{1.0, 2, 3}, std::vector<double>{-1.0, -2, -3}) == doctest::Approx(-1.0).epsilon(1e-15));
    CHECK(pearson(std::vector<double>{1.0, 2, 3}, std::vector<double>{1.0, 3, 2}) == doctest::Approx(0.5).epsilon(1e-15));
    CHECK_THROWS_AS(pearson(std::vector<double>{1.0, 1, 1}, std::vector<double>{1.0, 2, 3}), UndefinedMetric);
    CHECK(spearman(std::vector<double>{1.0, 2, 3, 4}, std::vector<double>{1.0, 10, 100, 1000}) == doctest::Approx(1.0));
    CHECK(average_ranks(std::vector<double>{5.0, 1, 5, 3}) == std::vector<double>{3.5, 1.0, 3.5, 2.0});
    const auto ms = mean_std(std::vector<double>{1.0, 3.0});
    CHECK(ms.mean == 2.0);
    CHECK(ms.std == 1.0);
}

TEST_CASE("pca: axis-aligned covariance and sign rule") {
    const Tensor x({4, 2}, {2, 0, -2, 0, 0, 1, 0, -1});
    for (auto method : {PcaMethod::eigen, PcaMethod::power}) {
        const auto p = pca(x, 2, method);
        CHECK(p.components(0, 0) == doctest::Approx(1.0));
        CHECK(std::abs(p.components(1, 0)) < 1e-8);
        CHECK(p.variance[0] == doctest::Approx(8.0 / 3));
        CHECK(p.variance[1] == doctest::Approx(2.0 / 3));
    }
}

TEST_CASE("property: pca components orthonormal, projections decorrelated, lossless reconstruction") {
    std::mt19937_64 rng(8);
    std::normal_distribution<double> normal;
    for (int trial = 0; trial < 10; ++trial) {
        const std::size_t d = 2 + std::size_t(trial), n = 60;
        Eigen::MatrixXd mix = Eigen::MatrixXd::NullaryExpr(Eigen::Index(d), Eigen::Index(d), [&] { return normal(rng); });
        Tensor x = Tensor::matrix(n, d);
        for (double& v : x.values()) v = normal(rng);
        x.as_matrix() = (x.as_matrix() * mix).eval();
        const auto p = pca(x, d);
        const Eigen::MatrixXd gram = p.components.transpose() * p.components;
        CHECK((gram - Eigen::MatrixXd::Identity(Eigen::Index(d), Eigen::Index(d))).cwiseAbs().maxCoeff() < 1e-10);
        const auto proj = p.projections.as_matrix();
        const Eigen::MatrixXd cov = proj.transpose() * proj / double(n - 1);
        for (Eigen::Index i = 0; i < cov.rows(); ++i) {
            for (Eigen::Index j = 0; j < cov.cols(); ++j) {
                if (i != j) CHECK(std::abs(cov(i, j)) < 1e-8);
            }
            if (i > 0) CHECK(p.variance[i] <= p.variance[i - 1]);
        }
        const Eigen::MatrixXd back = (proj * p.components.transpose()).rowwise() + p.mean.transpose();
        CHECK((back - x.as_matrix()).cwiseAbs().maxCoeff() < 1e-8);
        for (Eigen::Index c = 0; c < p.components.cols(); ++c) {
            Eigen::Index at = 0;
            p.components.col(c).cwiseAbs().maxCoeff(&at);
            CHECK(p.components(at, c) > 0);
        }
    }
}

TEST_CASE("pca: power iteration agrees with the eigensolver") {
    std::mt19937_64 rng(12);
    std::normal_distribution<double> normal;
    Tensor x = Tensor::matrix(400, 300);
    for (std::size_t r = 0; r < 400; ++r) {
        const double a = normal(rng) * 5, b = normal(rng) * 3;
        for (std::size_t c = 0; c < 300; ++c) x.at(r, c) = a * std::sin(double(c)) + b * std::cos(0.3 * double(c)) + normal(rng);
    }
    const auto power = pca(x, 2, PcaMethod::power);
    const auto exact = pca(x, 2, PcaMethod::eigen);
    for (Eigen::Index c = 0; c < 2; ++c) {
        CHECK(power.components.col(c).dot(exact.components.col(c)) > 1 - 1e-8);
        CHECK(power.variance[c] == doctest::Approx(exact.variance[c]).epsilon(1e-8));
    }
}

TEST_CASE("purity: concepts as their own activations give the identity pattern") {
    std::mt19937_64 rng(3);
    std::bernoulli_distribution coin(0.5);
    std::vector<PurityTrial> trials;
    for (int t = 0; t < 5; ++t) {
        Tensor c = Tensor::matrix(2000, 3);
        for (double& v : c.values()) v = coin(rng) ? 1.0 : 0.0;
        trials.push_back({c, c});
    }
    const auto m = purity_matrix(trials);
    CHECK(m.trials == 5);
    for (std::size_t j = 0; j < 3; ++j) {
        for (std::size_t b = 0; b < 3; ++b) {
            REQUIRE(m.at(j, b).defined);
            if (j == b) {
                CHECK(m.at(j, b).mean == 1.0);
                CHECK(m.at(j, b).std == 0.0);
            } else {
                CHECK(std::abs(m.at(j, b).mean - 0.5) < 0.03);
            }
        }
    }
    std::ostringstream out;
    write_csv(m, out);
    CHECK(out.str().rfind("concept,d0_mean,d0_std,d1_mean,d1_std,d2_mean,d2_std\nc0,1,0,", 0) == 0);
}

TEST_CASE("purity: raw vs folded, degenerate columns") {
    const Tensor concepts({4, 2}, {1, 0, 1, 0, 0, 0, 0, 0});
    const Tensor acts({4, 1}, {0.1, 0.2, 0.8, 0.9});
    const std::vector<PurityTrial> trials{{acts, concepts}};
    const auto raw = purity_matrix(trials);
    CHECK(raw.at(0, 0).mean == 0.0);
    CHECK_FALSE(raw.at(1, 0).defined);
    CHECK(purity_matrix(trials, true).at(0, 0).mean == 1.0);
    std::ostringstream out;
    write_csv(raw, out);
    CHECK(out.str() == "concept,d0_mean,d0_std\nc0,0,0\nc1,,\n");
    CHECK_THROWS_AS(purity_matrix(std::vector<PurityTrial>{}), ConfigError);
}

TEST_CASE("importance: normalization and linear heads") {
    const auto w = normalized_importance(std::vector<double>{0.874, 0.056});
    CHECK(w[0] == doctest::Approx(0.94).epsilon(0.005));
    CHECK(w[1] == doctest::Approx(0.06).epsilon(0.05));
    CHECK(normalized_importance(std::vector<double>{-2.0, 2.0, 2.0}) == std::vector{1.0 / 3, 1.0 / 3, 1.0 / 3});
    CHECK(normalized_importance(std::vector<double>{0.0, 0.0}) == std::vector<double>{0.0, 0.0});

    nn::Network linear = nn::build_network({nn::LayerSpec::dense(3, 1, nn::Activation::sigmoid)}, 1);
    auto& weight = linear.layer(0).parameters()[0].value;
    weight[0] = 1;
    weight[1] = -1;
    weight[2] = 2;
    CHECK(linear_importance(linear) == std::vector<double>{0.25, 0.25, 0.5});
    CHECK(final_layer_weights(linear) == std::vector<double>{1.0, -1.0, 2.0});

    nn::Network deep = nn::build_network(nn::mlp(3, {4}, 1, nn::Activation::relu, nn::Activation::sigmoid), 1);
    CHECK_THROWS_WITH_AS(linear_importance(deep), doctest::Contains("probe"), ConfigError);
    CHECK(final_layer_weights(deep).size() == 4);
}

TEST_CASE("leakage curve: shapes, CSV, independence from the thread count") {
    // 12-feature synthetic stand-in for pixels.
    std::mt19937_64 rng(4);
    std::uniform_real_distribution<double> unit;
    auto make = [&](std::size_t n) {
        data::LabeledDataset ds;
        ds.features = Tensor::matrix(n, 12);
        ds.concepts = Tensor::matrix(n, 0);
        ds.task = Tensor::matrix(n, 1);
        for (std::size_t r = 0; r < n; ++r) {
            double s = 0;
            for (std::size_t c = 0; c < 12; ++c) s += (ds.features.at(r, c) = unit(rng)) * (c % 2 ? 1 : -1);
            ds.task[r] = s > 0 ? 1 : 0;
        }
        return ds;
    };
    const auto train = make(200), test = make(100);
    CurveConfig cfg;
    cfg.m_values = {1, 4};
    cfg.runs = 2;
    cfg.g_hidden = 8;
    cfg.h_hidden = 4;
    cfg.g_train.epochs = cfg.h_train.epochs = cfg.hard_train.epochs = cfg.direct_train.epochs = 5;
    cfg.direct_runs = 1;
    const auto serial = leakage_curve(train, test, cfg);
    cfg.jobs = 3;
    const auto threaded = leakage_curve(train, test, cfg);
    REQUIRE(serial.points.size() == 2);
    CHECK(serial.points[1].m == 4);
    CHECK(serial.points[0].soft_runs == threaded.points[0].soft_runs);
    CHECK(serial.points[1].hard_runs == threaded.points[1].hard_runs);
    CHECK(serial.direct_runs == threaded.direct_runs);
    for (const auto& p : serial.points) {
        CHECK((p.soft.mean >= 0 && p.soft.mean <= 1));
        CHECK((p.hard.mean >= 0 && p.hard.mean <= 1));
    }
    std::ostringstream out;
    write_csv(serial, out);
    CHECK(out.str().rfind("m,soft_mean,soft_std,hard_mean,hard_std\n1,", 0) == 0);
    cfg.m_values.clear();
    CHECK_THROWS_AS(leakage_curve(train, test, cfg), ConfigError);
}
