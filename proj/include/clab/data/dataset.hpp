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

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <span>
#include <string>
#include <vector>

#include "clab/nn/tensor.hpp"

namespace clab::data {

/**
 * Features, binary concepts and a binary task label for N rows.
 *
 * `source` keeps the originating class of each row (MNIST digit, cluster,
 * fruit) or -1 when there is none.
 */
struct LabeledDataset {
    nn::Tensor features;  ///< N x d
    nn::Tensor concepts;  ///< N x k, entries 0/1
    nn::Tensor task;      ///< N x 1, entries 0/1
    std::vector<int> source;
    std::string generator;
    std::uint64_t seed = 0;
    std::string split;

    std::size_t size() const noexcept { return task.rows(); }
    std::size_t feature_dim() const noexcept { return features.row_size(); }
    std::size_t concept_count() const noexcept { return concepts.rows() ? concepts.row_size() : 0; }

    /// Throws ConfigError when row counts disagree or labels are not binary.
    void validate() const;
};

/// Train/test pair produced by generators that split internally.
struct DatasetSplit {
    LabeledDataset train;
    LabeledDataset test;
};

/// Rows of `ds` in the given order; metadata carried over.
LabeledDataset subset(const LabeledDataset& ds, std::span<const std::size_t> rows);

/// CSV with header f0..f{d-1}, c0..c{k-1}, y; values in shortest round-trip form.
void write_csv(const LabeledDataset& ds, std::ostream& out);
void write_csv(const LabeledDataset& ds, const std::filesystem::path& path);

/// Shortest decimal text that parses back to exactly `v`.
std::string format_double(double v);

}  // namespace clab::data
