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
#include "clab/data/generators.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>

#include "clab/error.hpp"

namespace clab::data {

namespace {

LabeledDataset from_digits(const RawImages& raw, const std::vector<std::size_t>& rows, std::size_t k) {
    LabeledDataset ds;
    const std::size_t px = raw.pixels_per_image();
    ds.features = nn::Tensor({rows.size(), px});
    ds.concepts = nn::Tensor({rows.size(), k});
    ds.task = nn::Tensor({rows.size(), 1});
    ds.source.reserve(rows.size());
    for (std::size_t i = 0; i < rows.size(); ++i) {
        const auto img = raw.image(rows[i]);
        auto out = ds.features.row(i);
        for (std::size_t p = 0; p < px; ++p) out[p] = img[p] / 255.0;
        ds.source.push_back(raw.labels[rows[i]]);
    }
    return ds;
}

std::vector<std::vector<std::size_t>> rows_by_digit(const RawImages& raw) {
    std::vector<std::vector<std::size_t>> by(10);
    for (std::size_t i = 0; i < raw.size(); ++i) by[raw.labels[i]].push_back(i);
    return by;
}

// Seeded pick of `count` entries without replacement, returned in ascending order.
std::vector<std::size_t> pick(std::vector<std::size_t> pool, std::size_t count, std::mt19937_64& rng) {
    std::shuffle(pool.begin(), pool.end(), rng);
    pool.resize(std::min(count, pool.size()));
    std::sort(pool.begin(), pool.end());
    return pool;
}

void stamp(LabeledDataset& ds, const char* generator, std::uint64_t seed, std::string split) {
    ds.generator = generator;
    ds.seed = seed;
    ds.split = std::move(split);
    ds.validate();
}

}  // namespace

LabeledDataset make_parity_dataset(const RawImages& raw, std::uint64_t seed, std::string split) {
    if (raw.size() == 0) throw ConfigError("parity dataset: no images");
    std::vector<std::size_t> even, odd;
    for (std::size_t i = 0; i < raw.size(); ++i) {
        const int d = raw.labels[i];
        if (d == 4 || d == 5) continue;
        (d % 2 == 0 ? even : odd).push_back(i);
    }
    std::mt19937_64 rng(seed);
    const std::size_t keep = std::min(even.size(), odd.size());
    even = pick(std::move(even), keep, rng);
    odd = pick(std::move(odd), keep, rng);
    std::vector<std::size_t> rows;
    std::merge(even.begin(), even.end(), odd.begin(), odd.end(), std::back_inserter(rows));

    LabeledDataset ds = from_digits(raw, rows, 2);
    for (std::size_t i = 0; i < rows.size(); ++i) ds.task[i] = ds.source[i] % 2 == 0 ? 1.0 : 0.0;
    stamp(ds, "mnist-parity", seed, std::move(split));
    return ds;
}

LabeledDataset make_0167_dataset(const RawImages& raw, std::size_t per_class, std::uint64_t seed,
                                 std::string split) {
    const auto by = rows_by_digit(raw);
    std::mt19937_64 rng(seed);
    std::vector<std::size_t> rows;
    for (int digit : {0, 1, 6, 7}) {
        if (by[digit].size() < per_class) {
            throw ConfigError("0167 dataset: digit " + std::to_string(digit) + " has " +
                              std::to_string(by[digit].size()) + " images, need " +
                              std::to_string(per_class));
        }
        const auto chosen = pick(by[digit], per_class, rng);
        rows.insert(rows.end(), chosen.begin(), chosen.end());
    }
    std::sort(rows.begin(), rows.end());
    LabeledDataset ds = from_digits(raw, rows, 0);
    for (std::size_t i = 0; i < rows.size(); ++i) ds.task[i] = ds.source[i] % 2 == 0 ? 1.0 : 0.0;
    stamp(ds, "mnist-0167", seed, std::move(split));
    return ds;
}

LabeledDataset make_lt4_dataset(const RawImages& raw, std::uint64_t seed, std::string split,
                                std::size_t per_digit) {
    if (raw.size() == 0) throw ConfigError("lt4 dataset: no images");
    const auto by = rows_by_digit(raw);
    std::mt19937_64 rng(seed);
    std::vector<std::size_t> rows;
    for (int digit = 1; digit <= 6; ++digit) {
        const auto chosen = per_digit ? pick(by[digit], per_digit, rng) : by[digit];
        rows.insert(rows.end(), chosen.begin(), chosen.end());
    }
    std::sort(rows.begin(), rows.end());
    LabeledDataset ds = from_digits(raw, rows, 3);
    for (std::size_t i = 0; i < rows.size(); ++i) {
        const int d = ds.source[i];
        ds.task[i] = d < 4 ? 1.0 : 0.0;
        if (d <= 3) ds.concepts.at(i, std::size_t(d - 1)) = 1.0;
    }
    stamp(ds, "mnist-lt4", seed, std::move(split));
    return ds;
}

bool Hyperplane::below(std::span<const double> x) const {
    double s = 0.0;
    for (std::size_t j = 0; j < coeffs.size(); ++j) s += coeffs[j] * x[j];
    return s < offset;
}

HyperplaneConcepts gen_hyperplane_concepts(const LabeledDataset& train, std::size_t m, std::uint64_t seed) {
    HyperplaneConcepts out{train, {}};
    if (m == 0) return out;
    if (train.size() == 0) throw ConfigError("hyperplane concepts: empty training set");
    const std::size_t d = train.feature_dim();
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    const auto x = train.features.as_matrix();
    for (std::size_t j = 0; j < m; ++j) {
        Hyperplane h;
        h.coeffs.resize(d);
        for (double& a : h.coeffs) a = unit(rng);
        const Eigen::VectorXd s = x * Eigen::Map<const Eigen::VectorXd>(h.coeffs.data(), Eigen::Index(d));
        h.s_min = s.minCoeff();
        h.s_max = s.maxCoeff();
        if (!(h.s_max > h.s_min)) throw ConfigError("hyperplane concepts: training rows are collinear");
        std::uniform_real_distribution<double> between(h.s_min, h.s_max);
        do {
            h.offset = between(rng);
        } while (h.offset <= h.s_min);
        out.planes.push_back(std::move(h));
    }
    out.dataset = apply_hyperplane_concepts(train, out.planes);
    return out;
}

LabeledDataset apply_hyperplane_concepts(const LabeledDataset& ds, std::span<const Hyperplane> planes) {
    LabeledDataset out = ds;
    out.concepts = nn::Tensor({ds.size(), planes.size()});
    for (std::size_t r = 0; r < ds.size(); ++r) {
        const auto row = ds.features.row(r);
        for (std::size_t j = 0; j < planes.size(); ++j) {
            if (planes[j].coeffs.size() != row.size()) {
                throw ConfigError("hyperplane has " + std::to_string(planes[j].coeffs.size()) +
                                  " coefficients for " + std::to_string(row.size()) + " features");
            }
            out.concepts.at(r, j) = planes[j].below(row) ? 1.0 : 0.0;
        }
    }
    return out;
}

std::array<double, 7> xyz_features(double x, double y, double z) {
    auto alpha = [](double w) { return std::cos(w) + w; };
    auto beta = [](double w) { return std::sin(w) + w; };
    return {beta(x), alpha(x), beta(y), alpha(y), beta(z), alpha(z), x * x + y * y + z * z};
}

DatasetSplit gen_xyz_dataset(std::size_t n_train, std::size_t n_test, std::uint64_t seed) {
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> normal(0.0, 2.0);
    auto make = [&](std::size_t n, const char* split) {
        LabeledDataset ds;
        ds.features = nn::Tensor({n, 7});
        ds.concepts = nn::Tensor({n, 3});
        ds.task = nn::Tensor({n, 1});
        for (std::size_t i = 0; i < n; ++i) {
            const double x = normal(rng), y = normal(rng), z = normal(rng);
            const auto f = xyz_features(x, y, z);
            std::copy(f.begin(), f.end(), ds.features.row(i).begin());
            const double c[3] = {x > 0 ? 1.0 : 0.0, y > 0 ? 1.0 : 0.0, z > 0 ? 1.0 : 0.0};
            std::copy(c, c + 3, ds.concepts.row(i).begin());
            ds.task[i] = c[0] + c[1] + c[2] > 1 ? 1.0 : 0.0;
        }
        stamp(ds, "xyz", seed, split);
        return ds;
    };
    DatasetSplit out;
    out.train = make(n_train, "train");
    out.test = make(n_test, "test");
    return out;
}

bool TriclusterGeometry::positive(double x1, double x2) {
    return std::sin(1.6 * x1) + 0.8 * x2 - 0.05 > 0;
}

DatasetSplit gen_tricluster_dataset(std::uint64_t seed, const TriclusterGeometry& geo) {
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> noise(0.0, geo.spread);
    const std::size_t per = geo.per_concept, n = 3 * per;
    if (per < 4) throw ConfigError("tricluster: need at least 4 rows per concept");

    LabeledDataset all;
    all.features = nn::Tensor({n, 2});
    all.concepts = nn::Tensor({n, 3});
    all.task = nn::Tensor({n, 1});
    all.source.resize(n);
    for (int attempt = 0;; ++attempt) {
        if (attempt == 1000) throw ConfigError("tricluster: positive rate never reached the target band");
        std::size_t positives = 0;
        for (std::size_t i = 0; i < n; ++i) {
            const std::size_t c = i / per;
            const double x1 = geo.centers[c][0] + noise(rng), x2 = geo.centers[c][1] + noise(rng);
            all.features.at(i, 0) = x1;
            all.features.at(i, 1) = x2;
            const bool pos = TriclusterGeometry::positive(x1, x2);
            all.task[i] = pos ? 1.0 : 0.0;
            positives += pos;
        }
        const double rate = double(positives) / double(n);
        if (rate >= geo.min_positive && rate <= geo.max_positive) break;
    }
    for (std::size_t i = 0; i < n; ++i) {
        all.concepts.at(i, i / per) = 1.0;
        all.source[i] = int(i / per);
    }

    std::vector<std::size_t> train_rows, test_rows;
    const std::size_t n_train = (per * 3) / 4;
    for (std::size_t c = 0; c < 3; ++c) {
        std::vector<std::size_t> rows(per);
        std::iota(rows.begin(), rows.end(), c * per);
        std::shuffle(rows.begin(), rows.end(), rng);
        train_rows.insert(train_rows.end(), rows.begin(), rows.begin() + std::ptrdiff_t(n_train));
        test_rows.insert(test_rows.end(), rows.begin() + std::ptrdiff_t(n_train), rows.end());
    }
    std::shuffle(train_rows.begin(), train_rows.end(), rng);
    std::shuffle(test_rows.begin(), test_rows.end(), rng);
    DatasetSplit out{subset(all, train_rows), subset(all, test_rows)};
    stamp(out.train, "tricluster", seed, "train");
    stamp(out.test, "tricluster", seed, "test");
    return out;
}

LabeledDataset gen_fruit_dataset(std::size_t n, FruitConcepts version, std::uint64_t seed) {
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    LabeledDataset ds;
    ds.features = nn::Tensor({n, 2});
    ds.concepts = nn::Tensor({n, 2});
    ds.task = nn::Tensor({n, 1});
    ds.source.resize(n);
    for (std::size_t i = 0; i < n; ++i) {
        // Exact 50/50 split: even rows grapefruit, odd rows apples.
        const bool grapefruit = i % 2 == 0;
        const double weight = unit(rng), acidity = unit(rng);
        ds.features.at(i, 0) = weight;
        ds.features.at(i, 1) = acidity;
        const bool sells = grapefruit ? acidity > 0.5 : weight < 0.5;
        ds.task[i] = sells ? 1.0 : 0.0;
        ds.source[i] = grapefruit ? 0 : 1;
        if (version == FruitConcepts::v1) {
            ds.concepts.at(i, grapefruit ? 0 : 1) = 1.0;
        } else if (sells) {
            ds.concepts.at(i, grapefruit ? 0 : 1) = 1.0;
        }
    }
    stamp(ds, version == FruitConcepts::v1 ? "fruit-v1" : "fruit-v2", seed, "train");
    return ds;
}

}  // namespace clab::data
