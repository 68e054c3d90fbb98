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
#include "clab/data/idx.hpp"

#include <cstdio>
#include <fstream>
#include <iterator>
#include <string>

#include "clab/error.hpp"

namespace clab::data {

namespace {

std::uint32_t read_be32(std::span<const std::uint8_t> bytes, std::size_t offset) {
    if (bytes.size() < offset + 4) throw ParseError("idx: header truncated", bytes.size());
    return (std::uint32_t(bytes[offset]) << 24) | (std::uint32_t(bytes[offset + 1]) << 16) |
           (std::uint32_t(bytes[offset + 2]) << 8) | std::uint32_t(bytes[offset + 3]);
}

void expect_magic(std::span<const std::uint8_t> bytes, std::uint32_t magic, const char* what) {
    const std::uint32_t got = read_be32(bytes, 0);
    if (got != magic) {
        char buf[96];
        std::snprintf(buf, sizeof buf, "idx %s: magic 0x%08x, expected 0x%08x", what, got, magic);
        throw ParseError(buf, 0);
    }
}

std::vector<std::uint8_t> read_file(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open " + path.string());
    return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

}  // namespace

RawImages parse_idx(std::span<const std::uint8_t> images, std::span<const std::uint8_t> labels) {
    expect_magic(images, kIdxImagesMagic, "images");
    expect_magic(labels, kIdxLabelsMagic, "labels");

    RawImages out;
    const std::size_t count = read_be32(images, 4);
    out.rows = read_be32(images, 8);
    out.cols = read_be32(images, 12);
    const std::size_t label_count = read_be32(labels, 4);
    if (label_count != count) {
        throw ParseError("idx labels: count " + std::to_string(label_count) + " differs from " +
                             std::to_string(count) + " images",
                         4);
    }

    const std::size_t image_bytes = count * out.rows * out.cols;
    if (images.size() < 16 + image_bytes) {
        throw ParseError("idx images: payload truncated, need " + std::to_string(16 + image_bytes) +
                             " bytes",
                         images.size());
    }
    if (labels.size() < 8 + count) {
        throw ParseError("idx labels: payload truncated, need " + std::to_string(8 + count) + " bytes",
                         labels.size());
    }
    out.pixels.assign(images.begin() + 16, images.begin() + std::ptrdiff_t(16 + image_bytes));
    out.labels.assign(labels.begin() + 8, labels.begin() + std::ptrdiff_t(8 + count));
    for (std::size_t i = 0; i < count; ++i) {
        if (out.labels[i] > 9) {
            throw ParseError("idx labels: label " + std::to_string(out.labels[i]) + " out of range",
                             8 + i);
        }
    }
    return out;
}

RawImages load_idx(const std::filesystem::path& images_path, const std::filesystem::path& labels_path) {
    const auto images = read_file(images_path);
    const auto labels = read_file(labels_path);
    return parse_idx(images, labels);
}

MnistSplits load_mnist(const std::filesystem::path& dir) {
    const char* names[] = {"train-images-idx3-ubyte", "train-labels-idx1-ubyte",
                           "t10k-images-idx3-ubyte", "t10k-labels-idx1-ubyte"};
    for (const char* n : names) {
        if (!std::filesystem::exists(dir / n)) {
            throw IoError("MNIST file " + (dir / n).string() +
                          " not found. Download the four IDX files (train-images-idx3-ubyte, "
                          "train-labels-idx1-ubyte, t10k-images-idx3-ubyte, t10k-labels-idx1-ubyte), "
                          "gunzip them into one directory and point LAB_MNIST_DIR at it");
        }
    }
    return {load_idx(dir / names[0], dir / names[1]), load_idx(dir / names[2], dir / names[3])};
}

}  // namespace clab::data
