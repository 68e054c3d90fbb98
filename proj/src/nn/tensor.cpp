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
#include "clab/nn/tensor.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <functional>
#include <numeric>

#include "clab/error.hpp"

namespace clab::nn {

std::size_t shape_volume(const Tensor::Shape& shape) noexcept {
    if (shape.empty()) return 0;
    return std::accumulate(shape.begin(), shape.end(), std::size_t{1}, std::multiplies<>());
}

std::string shape_string(const Tensor::Shape& shape) {
    std::string out = "[";
    for (std::size_t i = 0; i < shape.size(); ++i) {
        if (i) out += "x";
        out += std::to_string(shape[i]);
    }
    return out + "]";
}

Tensor::Tensor(Shape shape, double fill)
    : shape_(std::move(shape)), data_(shape_volume(shape_), fill) {}

Tensor::Tensor(Shape shape, std::vector<double> data)
    : shape_(std::move(shape)), data_(data.begin(), data.end()) {
    if (shape_volume(shape_) != data_.size()) {
        throw ConfigError("tensor shape " + shape_string(shape_) + " does not match " +
                          std::to_string(data_.size()) + " values");
    }
}

std::size_t Tensor::row_size() const noexcept {
    if (shape_.empty() || shape_[0] == 0) {
        std::size_t n = 1;
        for (std::size_t i = 1; i < shape_.size(); ++i) n *= shape_[i];
        return shape_.empty() ? 0 : n;
    }
    return data_.size() / shape_[0];
}

Tensor Tensor::reshaped(Shape shape) const& {
    Tensor copy = *this;
    return std::move(copy).reshaped(std::move(shape));
}

Tensor Tensor::reshaped(Shape shape) && {
    if (shape_volume(shape) != data_.size()) {
        throw ConfigError("cannot reshape " + shape_string(shape_) + " to " + shape_string(shape));
    }
    shape_ = std::move(shape);
    return std::move(*this);
}

void Tensor::fill(double value) { std::fill(data_.begin(), data_.end(), value); }

bool Tensor::all_finite() const noexcept {
    return std::all_of(data_.begin(), data_.end(), [](double v) { return std::isfinite(v); });
}

Tensor gather_rows(const Tensor& source, std::span<const std::size_t> rows) {
    Tensor::Shape shape = source.shape();
    if (shape.empty()) throw ConfigError("gather_rows on a rank-0 tensor");
    shape[0] = rows.size();
    Tensor out(shape);
    const std::size_t width = source.row_size();
    for (std::size_t i = 0; i < rows.size(); ++i) {
        if (rows[i] >= source.rows()) throw ConfigError("gather_rows: row index out of range");
        std::copy_n(source.values().data() + rows[i] * width, width, out.values().data() + i * width);
    }
    return out;
}

Tensor select_columns(const Tensor& source, std::span<const std::size_t> cols) {
    if (source.rank() != 2) throw ConfigError("select_columns expects a rank-2 tensor");
    Tensor out = Tensor::matrix(source.rows(), cols.size());
    for (std::size_t r = 0; r < source.rows(); ++r) {
        for (std::size_t j = 0; j < cols.size(); ++j) {
            if (cols[j] >= source.dim(1)) throw ConfigError("select_columns: column out of range");
            out.at(r, j) = source.at(r, cols[j]);
        }
    }
    return out;
}

Tensor column(std::span<const double> values) {
    return Tensor({values.size(), 1}, std::vector<double>(values.begin(), values.end()));
}

std::uint64_t checksum(std::span<const double> values, std::uint64_t seed) {
    std::uint64_t hash = seed;
    for (double v : values) {
        unsigned char bytes[sizeof(double)];
        std::memcpy(bytes, &v, sizeof(double));
        for (unsigned char b : bytes) {
            hash ^= b;
            hash *= 0x100000001b3ULL;
        }
    }
    return hash;
}

}  // namespace clab::nn
