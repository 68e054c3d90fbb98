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
#include <span>
#include <vector>

namespace clab::data {

/// Images and digit labels as stored in an IDX pair.
struct RawImages {
    std::size_t rows = 28;
    std::size_t cols = 28;
    std::vector<std::uint8_t> pixels;  ///< count x rows x cols, row-major
    std::vector<std::uint8_t> labels;  ///< 0..9

    std::size_t size() const noexcept { return labels.size(); }
    std::size_t pixels_per_image() const noexcept { return rows * cols; }
    std::span<const std::uint8_t> image(std::size_t i) const {
        return {pixels.data() + i * pixels_per_image(), pixels_per_image()};
    }
};

inline constexpr std::uint32_t kIdxImagesMagic = 0x00000803;
inline constexpr std::uint32_t kIdxLabelsMagic = 0x00000801;

/// Parses in-memory IDX buffers. Throws ParseError (with byte offset) on a wrong magic,
/// a truncated payload, out-of-range labels or differing counts.
RawImages parse_idx(std::span<const std::uint8_t> images, std::span<const std::uint8_t> labels);

/// Reads and parses an IDX image/label file pair. Missing files raise IoError.
RawImages load_idx(const std::filesystem::path& images_path, const std::filesystem::path& labels_path);

struct MnistSplits {
    RawImages train;
    RawImages test;
};

/// Loads the four canonical MNIST files from `dir`. The IoError for missing files
/// explains where to get them.
MnistSplits load_mnist(const std::filesystem::path& dir);

}  // namespace clab::data
