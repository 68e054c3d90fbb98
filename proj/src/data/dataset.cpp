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
#include "clab/data/dataset.hpp"

#include <charconv>
#include <fstream>
#include <ostream>

#include "clab/error.hpp"

namespace clab::data {

namespace {

void check_binary(const nn::Tensor& t, const char* what) {
    for (double v : t.values()) {
        if (v != 0.0 && v != 1.0) throw ConfigError(std::string("dataset: non-binary ") + what + " entry");
    }
}

}  // namespace

void LabeledDataset::validate() const {
    const std::size_t n = task.rows();
    if (task.rank() != 2 || task.row_size() != 1) throw ConfigError("dataset: task must be N x 1");
    if (features.rows() != n || concepts.rows() != n) {
        throw ConfigError("dataset: row counts differ (features " + std::to_string(features.rows()) +
                          ", concepts " + std::to_string(concepts.rows()) + ", task " +
                          std::to_string(n) + ")");
    }
    if (!source.empty() && source.size() != n) throw ConfigError("dataset: source length differs");
    check_binary(concepts, "concept");
    check_binary(task, "task");
}

LabeledDataset subset(const LabeledDataset& ds, std::span<const std::size_t> rows) {
    LabeledDataset out;
    out.features = nn::gather_rows(ds.features, rows);
    out.concepts = nn::gather_rows(ds.concepts, rows);
    out.task = nn::gather_rows(ds.task, rows);
    if (!ds.source.empty()) {
        out.source.reserve(rows.size());
        for (std::size_t r : rows) out.source.push_back(ds.source.at(r));
    }
    out.generator = ds.generator;
    out.seed = ds.seed;
    out.split = ds.split;
    return out;
}

std::string format_double(double v) {
    char buf[32];
    const auto res = std::to_chars(buf, buf + sizeof buf, v);
    return {buf, res.ptr};
}

void write_csv(const LabeledDataset& ds, std::ostream& out) {
    const std::size_t d = ds.feature_dim(), k = ds.concept_count();
    for (std::size_t j = 0; j < d; ++j) out << 'f' << j << ',';
    for (std::size_t j = 0; j < k; ++j) out << 'c' << j << ',';
    out << "y\n";
    for (std::size_t r = 0; r < ds.size(); ++r) {
        for (double v : ds.features.row(r)) out << format_double(v) << ',';
        for (std::size_t j = 0; j < k; ++j) out << format_double(ds.concepts.at(r, j)) << ',';
        out << format_double(ds.task[r]) << '\n';
    }
}

void write_csv(const LabeledDataset& ds, const std::filesystem::path& path) {
    std::ofstream out(path);
    if (!out) throw IoError("cannot write " + path.string());
    write_csv(ds, out);
    if (!out) throw IoError("write failed: " + path.string());
}

}  // namespace clab::data
