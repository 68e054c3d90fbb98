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
#include <cstdlib>
#include <numbers>
#include <random>
#include <set>
#include <sstream>

#include "clab/data/generators.hpp"
#include "clab/error.hpp"

using namespace clab;
using namespace clab::data;

namespace {

void put_be32(std::vector<std::uint8_t>& out, std::uint32_t v) {
    for (int s = 24; s >= 0; s -= 8) out.push_back(std::uint8_t(v >> s));
}

std::vector<std::uint8_t> idx_images(std::uint32_t count, std::uint32_t rows, std::uint32_t cols,
                                     std::uint32_t magic = kIdxImagesMagic) {
    std::vector<std::uint8_t> out;
    put_be32(out, magic);
    put_be32(out, count);
    put_be32(out, rows);
    put_be32(out, cols);
    for (std::uint32_t i = 0; i < count * rows * cols; ++i) out.push_back(std::uint8_t(i % 256));
    return out;
}

std::vector<std::uint8_t> idx_labels(const std::vector<std::uint8_t>& labels,
                                     std::uint32_t magic = kIdxLabelsMagic) {
    std::vector<std::uint8_t> out;
    put_be32(out, magic);
    put_be32(out, std::uint32_t(labels.size()));
    out.insert(out.end(), labels.begin(), labels.end());
    return out;
}

// Fake MNIST: 4x4 images whose pixels encode the row index, labels cycling or random.
RawImages fake_raw(std::size_t n, std::uint64_t seed) {
    RawImages raw;
    raw.rows = raw.cols = 4;
    std::mt19937_64 rng(seed);
    std::uniform_int_distribution<int> digit(0, 9), px(0, 255);
    for (std::size_t i = 0; i < n; ++i) {
        raw.labels.push_back(std::uint8_t(digit(rng)));
        for (int p = 0; p < 16; ++p) raw.pixels.push_back(std::uint8_t(px(rng)));
    }
    return raw;
}

bool same(const LabeledDataset& a, const LabeledDataset& b) {
    return a.features == b.features && a.concepts == b.concepts && a.task == b.task && a.source == b.source;
}

const char* mnist_dir() {
    const char* dir = std::getenv("LAB_MNIST_DIR");
    return dir && *dir ? dir : nullptr;
}

}  // namespace

TEST_CASE("idx: well-formed pair parses") {
    const auto raw = parse_idx(idx_images(3, 2, 2), idx_labels({7, 0, 9}));
    CHECK(raw.size() == 3);
    CHECK(raw.rows == 2);
    CHECK(raw.cols == 2);
    CHECK(raw.labels == std::vector<std::uint8_t>{7, 0, 9});
    CHECK(raw.image(1)[0] == 4);
}

TEST_CASE("idx: zero-image file is an empty set") {
    const auto raw = parse_idx(idx_images(0, 28, 28), idx_labels({}));
    CHECK(raw.size() == 0);
    CHECK(raw.pixels.empty());
}

TEST_CASE("idx: images file passed as labels is a magic mismatch") {
    try {
        parse_idx(idx_images(1, 2, 2), idx_labels({1}, kIdxImagesMagic));
        FAIL("no error");
    } catch (const ParseError& e) {
        CHECK(e.offset() == 0);
        CHECK(std::string(e.what()).find("magic") != std::string::npos);
    }
    CHECK_THROWS_AS(parse_idx(idx_images(1, 2, 2, kIdxLabelsMagic), idx_labels({1})), ParseError);
}

TEST_CASE("idx: truncation, count mismatch and bad labels report offsets") {
    auto images = idx_images(3, 2, 2);
    images.resize(images.size() - 1);
    try {
        parse_idx(images, idx_labels({1, 2, 3}));
        FAIL("no error");
    } catch (const ParseError& e) {
        CHECK(e.offset() == images.size());
    }

    try {
        parse_idx(idx_images(3, 2, 2), idx_labels({1, 2}));
        FAIL("no error");
    } catch (const ParseError& e) {
        CHECK(e.offset() == 4);
    }

    auto labels = idx_labels({1, 2, 3});
    labels.pop_back();
    try {
        parse_idx(idx_images(3, 2, 2), labels);
        FAIL("no error");
    } catch (const ParseError& e) {
        CHECK(e.offset() == labels.size());
    }

    try {
        parse_idx(idx_images(3, 2, 2), idx_labels({1, 12, 3}));
        FAIL("no error");
    } catch (const ParseError& e) {
        CHECK(e.offset() == 9);
    }

    const std::vector<std::uint8_t> stub{0, 0, 8};
    CHECK_THROWS_AS(parse_idx(stub, idx_labels({})), ParseError);
}

TEST_CASE("idx: missing files") {
    CHECK_THROWS_AS(load_idx("/nonexistent/a", "/nonexistent/b"), IoError);
    try {
        load_mnist("/nonexistent");
        FAIL("no error");
    } catch (const IoError& e) {
        CHECK(std::string(e.what()).find("LAB_MNIST_DIR") != std::string::npos);
    }
}

TEST_CASE("mnist: canonical files" * doctest::skip(mnist_dir() == nullptr)) {
    const auto mnist = load_mnist(mnist_dir());
    CHECK(mnist.train.size() == 60000);
    CHECK(mnist.test.size() == 10000);
    CHECK(mnist.train.rows == 28);
    CHECK(mnist.train.cols == 28);

    const auto parity = make_parity_dataset(mnist.train, 1);
    std::size_t even = 0;
    for (std::size_t i = 0; i < parity.size(); ++i) {
        CHECK(parity.source[i] != 4);
        CHECK(parity.source[i] != 5);
        even += parity.task[i] == 1.0;
    }
    CHECK(2 * even == parity.size());
    for (double c : parity.concepts.values()) CHECK(c == 0.0);

    const auto d0167 = make_0167_dataset(mnist.test, 500, 3, "test");
    CHECK(d0167.size() == 2000);
}

TEST_CASE("parity dataset: no 4s or 5s, balanced, zero concepts, pixels in [0,1]") {
    const auto raw = fake_raw(2000, 5);
    const auto ds = make_parity_dataset(raw, 9);
    std::size_t even = 0;
    for (std::size_t i = 0; i < ds.size(); ++i) {
        REQUIRE(ds.source[i] != 4);
        REQUIRE(ds.source[i] != 5);
        CHECK(ds.task[i] == (ds.source[i] % 2 == 0 ? 1.0 : 0.0));
        even += ds.task[i] == 1.0;
    }
    CHECK(ds.size() > 0);
    CHECK(2 * even == ds.size());
    CHECK(ds.concept_count() == 2);
    for (double c : ds.concepts.values()) CHECK(c == 0.0);
    for (double v : ds.features.values()) CHECK((v >= 0.0 && v <= 1.0));
    CHECK(same(ds, make_parity_dataset(raw, 9)));
    CHECK_THROWS_AS(make_parity_dataset(RawImages{}, 1), ConfigError);
}

TEST_CASE("0167 dataset: sizes, balance, determinism, missing digits") {
    const auto raw = fake_raw(4000, 6);
    const auto ds = make_0167_dataset(raw, 100, 2);
    CHECK(ds.size() == 400);
    std::size_t positives = 0;
    for (std::size_t i = 0; i < ds.size(); ++i) positives += ds.task[i] == 1.0;
    CHECK(positives == 200);
    CHECK(ds.concept_count() == 0);
    CHECK(same(ds, make_0167_dataset(raw, 100, 2)));
    CHECK_FALSE(same(ds, make_0167_dataset(raw, 100, 3)));

    RawImages few = raw;
    for (auto& l : few.labels) {
        if (l == 6) l = 8;
    }
    try {
        make_0167_dataset(few, 100, 2);
        FAIL("no error");
    } catch (const ConfigError& e) {
        CHECK(std::string(e.what()).find("digit 6") != std::string::npos);
    }
}

TEST_CASE("lt4 dataset: digits 1..6, task digit < 4, concepts is-1/2/3") {
    const auto raw = fake_raw(3000, 7);
    const auto ds = make_lt4_dataset(raw, 1);
    for (std::size_t i = 0; i < ds.size(); ++i) {
        const int d = ds.source[i];
        REQUIRE((d >= 1 && d <= 6));
        CHECK(ds.task[i] == (d < 4 ? 1.0 : 0.0));
        for (int j = 0; j < 3; ++j) CHECK(ds.concepts.at(i, std::size_t(j)) == (d == j + 1 ? 1.0 : 0.0));
    }
    const auto capped = make_lt4_dataset(raw, 1, "train", 10);
    CHECK(capped.size() == 60);
    CHECK(same(capped, make_lt4_dataset(raw, 1, "train", 10)));
}

TEST_CASE("hyperplane concepts: interior offsets, both labels on train, train-fit planes on test") {
    const auto raw = fake_raw(3000, 8);
    const auto train = make_0167_dataset(raw, 50, 1);
    const auto test = make_0167_dataset(raw, 50, 2, "test");
    const auto fit = gen_hyperplane_concepts(train, 16, 4);
    REQUIRE(fit.planes.size() == 16);
    CHECK(fit.dataset.concept_count() == 16);
    for (std::size_t j = 0; j < 16; ++j) {
        const auto& h = fit.planes[j];
        CHECK(h.s_min < h.offset);
        CHECK(h.offset <= h.s_max);
        for (double a : h.coeffs) CHECK((a >= 0.0 && a < 1.0));
        double ones = 0;
        for (std::size_t r = 0; r < train.size(); ++r) ones += fit.dataset.concepts.at(r, j);
        CHECK(ones > 0);
        CHECK(ones < double(train.size()));
    }
    // Test concepts depend only on the fitted planes, not on test statistics.
    const auto applied = apply_hyperplane_concepts(test, fit.planes);
    const auto again = gen_hyperplane_concepts(train, 16, 4);
    CHECK(applied.concepts == apply_hyperplane_concepts(test, again.planes).concepts);
    CHECK(same(fit.dataset, again.dataset));
    for (std::size_t r = 0; r < test.size(); ++r) {
        double s = 0;
        for (std::size_t k = 0; k < test.feature_dim(); ++k) s += fit.planes[3].coeffs[k] * test.features.at(r, k);
        CHECK(applied.concepts.at(r, 3) == (s < fit.planes[3].offset ? 1.0 : 0.0));
    }
    CHECK(same(gen_hyperplane_concepts(train, 0, 4).dataset, train));
}

TEST_CASE("xyz: feature map examples") {
    const auto zero = xyz_features(0, 0, 0);
    const std::array<double, 7> want0{0, 1, 0, 1, 0, 1, 0};
    for (int i = 0; i < 7; ++i) CHECK(zero[i] == doctest::Approx(want0[i]).epsilon(1e-15));

    const double h = std::numbers::pi / 2;
    const auto f = xyz_features(h, -h, h);
    const std::array<double, 7> want{h + 1, h, -h - 1, -h, h + 1, h, 3 * std::numbers::pi * std::numbers::pi / 4};
    for (int i = 0; i < 7; ++i) CHECK(std::abs(f[i] - want[i]) < 1e-12);
}

TEST_CASE("xyz: labels recomputable from concepts, sizes, spread, determinism") {
    const auto split = gen_xyz_dataset(2000, 1000, 3);
    CHECK(split.train.size() == 2000);
    CHECK(split.test.size() == 1000);
    double sq = 0;
    for (const auto* ds : {&split.train, &split.test}) {
        for (std::size_t i = 0; i < ds->size(); ++i) {
            const double sum = ds->concepts.at(i, 0) + ds->concepts.at(i, 1) + ds->concepts.at(i, 2);
            CHECK(ds->task[i] == (sum > 1 ? 1.0 : 0.0));
            CHECK(ds->features.at(i, 6) >= 0.0);
        }
    }
    for (std::size_t i = 0; i < 2000; ++i) sq += split.train.features.at(i, 6);
    // E[x^2 + y^2 + z^2] = 3 * 4
    CHECK(sq / 2000 == doctest::Approx(12.0).epsilon(0.08));
    const auto again = gen_xyz_dataset(2000, 1000, 3);
    CHECK(same(split.train, again.train));
    CHECK(same(split.test, again.test));
}

TEST_CASE("xyz: Bayes predictor on (x+, y+) by enumeration") {
    // The 8 sign patterns are equiprobable; z+ is a fair coin given (x+, y+).
    double correct = 0, pos_over_neg = 0, pairs = 0;
    std::vector<std::pair<double, int>> scored;
    for (int m = 0; m < 8; ++m) {
        const int x = m & 1, y = (m >> 1) & 1, z = (m >> 2) & 1;
        const int label = x + y + z > 1;
        const double score = (x + y) / 2.0;  // P(label | x+, y+)
        correct += (score >= 0.5) == bool(label);
        scored.emplace_back(score, label);
    }
    for (const auto& [sp, lp] : scored) {
        for (const auto& [sn, ln] : scored) {
            if (lp == 1 && ln == 0) {
                pos_over_neg += sp > sn ? 1.0 : sp == sn ? 0.5 : 0.0;
                pairs += 1;
            }
        }
    }
    CHECK(correct / 8 == 0.75);
    CHECK(pos_over_neg / pairs == 0.875);
}

TEST_CASE("tricluster: one-hot concepts, 300 per concept, positive rate, stratified split") {
    const auto split = gen_tricluster_dataset(11);
    CHECK(split.train.size() == 675);
    CHECK(split.test.size() == 225);
    std::array<int, 3> train_counts{}, test_counts{};
    double positives = 0;
    for (auto [ds, counts] : {std::pair{&split.train, &train_counts}, std::pair{&split.test, &test_counts}}) {
        for (std::size_t i = 0; i < ds->size(); ++i) {
            const auto c = ds->concepts.row(i);
            CHECK(c[0] + c[1] + c[2] == 1.0);
            (*counts)[std::size_t(ds->source[i])] += 1;
            CHECK(c[std::size_t(ds->source[i])] == 1.0);
            positives += ds->task[i];
            CHECK(ds->task[i] ==
                  (TriclusterGeometry::positive(ds->features.at(i, 0), ds->features.at(i, 1)) ? 1.0 : 0.0));
        }
    }
    CHECK(train_counts == std::array<int, 3>{225, 225, 225});
    CHECK(test_counts == std::array<int, 3>{75, 75, 75});
    const double rate = positives / 900;
    CHECK(rate >= 0.57);
    CHECK(rate <= 0.63);
    for (std::uint64_t seed = 0; seed < 20; ++seed) {
        const auto s = gen_tricluster_dataset(seed);
        double p = 0;
        for (double v : s.train.task.values()) p += v;
        for (double v : s.test.task.values()) p += v;
        CHECK((p / 900 >= 0.57 && p / 900 <= 0.63));
    }
    CHECK(same(split.train, gen_tricluster_dataset(11).train));
}

TEST_CASE("fruit: sell rates, v2 concepts are an exclusive cover of the label") {
    const auto v1 = gen_fruit_dataset(1000, FruitConcepts::v1, 21);
    const auto v2 = gen_fruit_dataset(1000, FruitConcepts::v2, 21);
    CHECK(v1.features == v2.features);
    CHECK(v1.task == v2.task);
    CHECK_FALSE(v1.concepts == v2.concepts);
    double grapefruit = 0, grapefruit_sold = 0, apple = 0, apple_sold = 0;
    for (std::size_t i = 0; i < v1.size(); ++i) {
        if (v1.concepts.at(i, 0) == 1.0) {
            grapefruit += 1;
            grapefruit_sold += v1.task[i];
        } else {
            apple += 1;
            apple_sold += v1.task[i];
        }
        CHECK(v1.concepts.at(i, 0) + v1.concepts.at(i, 1) == 1.0);
        const double c1 = v2.concepts.at(i, 0), c2 = v2.concepts.at(i, 1);
        CHECK(c1 * c2 == 0.0);
        CHECK(v2.task[i] == std::max(c1, c2));
    }
    CHECK(grapefruit == 500);
    CHECK(grapefruit_sold / grapefruit == doctest::Approx(0.5).epsilon(0.1));
    CHECK(apple_sold / apple == doctest::Approx(0.5).epsilon(0.1));
}

TEST_CASE("csv export: header and round-trip values") {
    auto ds = gen_fruit_dataset(3, FruitConcepts::v2, 1);
    ds.features.at(0, 0) = 0.1;
    std::ostringstream out;
    write_csv(ds, out);
    std::istringstream in(out.str());
    std::string line;
    std::getline(in, line);
    CHECK(line == "f0,f1,c0,c1,y");
    std::getline(in, line);
    CHECK(line.rfind("0.1,", 0) == 0);
    std::string tail = out.str();
    CHECK(std::count(tail.begin(), tail.end(), '\n') == 4);
    CHECK(std::stod(format_double(ds.features.at(1, 1))) == ds.features.at(1, 1));
}

TEST_CASE("dataset validation") {
    LabeledDataset ds;
    ds.features = nn::Tensor({2, 1});
    ds.concepts = nn::Tensor({2, 1}, {0, 0.5});
    ds.task = nn::Tensor({2, 1});
    CHECK_THROWS_AS(ds.validate(), ConfigError);
    ds.concepts = nn::Tensor({3, 1});
    CHECK_THROWS_AS(ds.validate(), ConfigError);
}
