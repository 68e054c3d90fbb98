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
#pragma once

#include <array>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "clab/data/dataset.hpp"
#include "clab/data/idx.hpp"

namespace clab::data {

// Every generator is a pure function of its arguments and seed.

/// Digits 4 and 5 dropped, odd/even balanced by seeded downsampling of the majority.
/// Concepts [is-4, is-5] (identically zero), task = digit is even.
LabeledDataset make_parity_dataset(const RawImages& raw, std::uint64_t seed, std::string split = "train");

/// `per_class` images each of digits 0, 1, 6, 7 drawn without replacement; task = even.
/// No concepts yet. Throws ConfigError naming a digit that has too few images.
LabeledDataset make_0167_dataset(const RawImages& raw, std::size_t per_class, std::uint64_t seed,
                                 std::string split = "train");

/// Digits 1..6 only; task = digit < 4; concepts [is-1, is-2, is-3].
/// `per_digit` > 0 keeps at most that many seeded picks of each digit.
LabeledDataset make_lt4_dataset(const RawImages& raw, std::uint64_t seed, std::string split = "train",
                                std::size_t per_digit = 0);

/// Random hyperplane a.x = b; concept is 1 below it.
struct Hyperplane {
    std::vector<double> coeffs;
    double offset = 0.0;
    double s_min = 0.0;
    double s_max = 0.0;

    bool below(std::span<const double> x) const;
};

struct HyperplaneConcepts {
    LabeledDataset dataset;
    std::vector<Hyperplane> planes;
};

/// m hyperplanes fit on `train`: a ~ U(0,1)^d, b ~ U(min a.x, max a.x) redrawn while b == min,
/// so each concept takes both values on train. Replaces the concept matrix.
HyperplaneConcepts gen_hyperplane_concepts(const LabeledDataset& train, std::size_t m, std::uint64_t seed);

/// Concepts of `ds` from already fitted planes (used for the test split).
LabeledDataset apply_hyperplane_concepts(const LabeledDataset& ds, std::span<const Hyperplane> planes);

/// (beta(x), alpha(x), beta(y), alpha(y), beta(z), alpha(z), x^2+y^2+z^2)
/// with alpha(w) = cos w + w and beta(w) = sin w + w.
std::array<double, 7> xyz_features(double x, double y, double z);

/// x, y, z ~ N(0, std 2); concepts = positivity of x, y, z; label = more than one positive.
DatasetSplit gen_xyz_dataset(std::size_t n_train, std::size_t n_test, std::uint64_t seed);

/// Tri-cluster layout: centres and spread of the three concept clusters and the task boundary.
struct TriclusterGeometry {
    std::array<std::array<double, 2>, 3> centers{{{0.0, 0.0}, {2.5, 0.0}, {1.25, 2.2}}};
    double spread = 0.9;
    std::size_t per_concept = 300;
    double min_positive = 0.57;
    double max_positive = 0.63;

    /// sin(1.6 x1) + 0.8 x2 - 0.05 > 0
    static bool positive(double x1, double x2);
};

/// Two features, three one-hot concepts (one per cluster), nonlinear task; redrawn until the
/// positive rate falls in [min_positive, max_positive]. 75/25 split stratified by concept.
DatasetSplit gen_tricluster_dataset(std::uint64_t seed, const TriclusterGeometry& geometry = {});

enum class FruitConcepts { v1, v2 };

/// Grapefruit and apples (50/50) with (weight, acidity) ~ U(0,1)^2. Grapefruit sells when
/// acidity > 0.5, apples when weight < 0.5. v1 concepts: [is-grapefruit, is-apple];
/// v2: [is-acidic-grapefruit, is-small-apple]. Features do not depend on the version.
LabeledDataset gen_fruit_dataset(std::size_t n, FruitConcepts version, std::uint64_t seed);

}  // namespace clab::data
