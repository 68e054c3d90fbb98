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
#include <memory>
#include <optional>
#include <vector>

#include "clab/nn/layer.hpp"

namespace clab::nn {

/// Caches of one training forward pass, one entry per layer.
struct Trace {
    std::vector<LayerCache> caches;
};

/**
 * Sequential stack of layers.
 *
 * Copying a network deep-copies all layers, parameters and buffers.
 */
class Network {
public:
    Network() = default;
    /// Layers with default (zero/unit) parameters; validates adjacent dimensions.
    explicit Network(std::vector<LayerSpec> specs);

    Network(const Network& other);
    Network& operator=(const Network& other);
    Network(Network&&) noexcept = default;
    Network& operator=(Network&&) noexcept = default;
    ~Network() = default;

    const std::vector<LayerSpec>& specs() const noexcept { return specs_; }
    std::size_t size() const noexcept { return layers_.size(); }
    Layer& layer(std::size_t i) { return *layers_.at(i); }
    const Layer& layer(std::size_t i) const { return *layers_.at(i); }

    std::size_t param_count() const;

    /// Eval-mode pass returning every layer's output (last one is the prediction).
    /// Throws NumericError naming the first layer that produced a non-finite value.
    std::vector<Tensor> forward(const Tensor& batch) const;

    /// Eval-mode pass through layers [begin, end), processed in row chunks.
    Tensor run_layers(const Tensor& batch, std::size_t begin, std::size_t end,
                      std::size_t chunk = 512) const;
    Tensor predict(const Tensor& batch) const { return run_layers(batch, 0, size()); }

    /// Training-mode pass (batch statistics, running-stat updates).
    Tensor forward_train(const Tensor& batch, Trace& trace);
    /// Accumulates parameter gradients; returns the gradient w.r.t. the network input.
    Tensor backward(const Trace& trace, const Tensor& grad_output);

    void zero_grad();
    std::vector<Parameter*> parameters();
    std::vector<const Parameter*> parameters() const;
    /// Parameters followed by buffers, in layer order; the persisted model state.
    std::vector<Tensor*> state();
    std::vector<const Tensor*> state() const;

    /// FNV-1a over every parameter and buffer value.
    std::uint64_t checksum() const;
    void fill_parameters(double value);

    std::optional<std::size_t> slot_index() const;
    /// Replaces the CwSlot placeholder with a concrete layer.
    void fill_slot(std::unique_ptr<Layer> layer);

private:
    std::vector<LayerSpec> specs_;
    std::vector<std::unique_ptr<Layer>> layers_;
};

/// Builds and initializes a network: Glorot-uniform weights, zero biases, seeded.
Network build_network(std::vector<LayerSpec> specs, std::uint64_t seed);

}  // namespace clab::nn
