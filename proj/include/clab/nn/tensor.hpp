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

#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Core>

namespace clab::nn {

using RowMatrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using MatrixMap = Eigen::Map<RowMatrix>;
using ConstMatrixMap = Eigen::Map<const RowMatrix>;

/**
 * Dense row-major array of doubles with an explicit shape.
 *
 * The first dimension is the batch (row) dimension; everything after it is
 * treated as one flattened row when a matrix view is requested.
 */
class Tensor {
public:
    using Shape = std::vector<std::size_t>;

    Tensor() = default;
    explicit Tensor(Shape shape, double fill = 0.0);
    Tensor(Shape shape, std::vector<double> data);

    static Tensor matrix(std::size_t rows, std::size_t cols, double fill = 0.0) {
        return Tensor({rows, cols}, fill);
    }

    const Shape& shape() const noexcept { return shape_; }
    std::size_t rank() const noexcept { return shape_.size(); }
    std::size_t dim(std::size_t axis) const { return shape_.at(axis); }
    std::size_t size() const noexcept { return data_.size(); }
    bool empty() const noexcept { return data_.empty(); }

    /// Leading dimension; 0 for a rank-0 tensor.
    std::size_t rows() const noexcept { return shape_.empty() ? 0 : shape_[0]; }
    /// Number of elements per row.
    std::size_t row_size() const noexcept;

    std::span<double> values() noexcept { return data_; }
    std::span<const double> values() const noexcept { return data_; }

    double& operator[](std::size_t i) { return data_[i]; }
    double operator[](std::size_t i) const { return data_[i]; }

    double& at(std::size_t r, std::size_t c) { return data_[r * row_size() + c]; }
    double at(std::size_t r, std::size_t c) const { return data_[r * row_size() + c]; }

    std::span<double> row(std::size_t r) { return {data_.data() + r * row_size(), row_size()}; }
    std::span<const double> row(std::size_t r) const {
        return {data_.data() + r * row_size(), row_size()};
    }

    /// rows() x row_size() view over the storage.
    MatrixMap as_matrix() { return {data_.data(), Eigen::Index(rows()), Eigen::Index(row_size())}; }
    ConstMatrixMap as_matrix() const {
        return {data_.data(), Eigen::Index(rows()), Eigen::Index(row_size())};
    }

    Tensor reshaped(Shape shape) const&;
    Tensor reshaped(Shape shape) &&;

    void fill(double value);
    bool all_finite() const noexcept;

    friend bool operator==(const Tensor&, const Tensor&) = default;

private:
    // Packet-aligned so vectorized reductions sum in the same order on every run.
    Shape shape_;
    std::vector<double, Eigen::aligned_allocator<double>> data_;
};

std::size_t shape_volume(const Tensor::Shape& shape) noexcept;
std::string shape_string(const Tensor::Shape& shape);

/// Copies the listed rows (in order) into a new tensor with the same trailing shape.
Tensor gather_rows(const Tensor& source, std::span<const std::size_t> rows);

/// Copies the listed columns of a rank-2 tensor.
Tensor select_columns(const Tensor& source, std::span<const std::size_t> cols);

/// Column vector (N x 1) from a plain vector.
Tensor column(std::span<const double> values);

/// FNV-1a over the raw bytes of every value; used for determinism and freeze checks.
std::uint64_t checksum(std::span<const double> values, std::uint64_t seed = 0xcbf29ce484222325ULL);

}  // namespace clab::nn
