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

#include <any>
#include <memory>
#include <span>
#include <string>
#include <vector>

#include "clab/nn/layer_spec.hpp"
#include "clab/nn/tensor.hpp"

namespace clab::nn {

struct Parameter {
    std::string name;
    Tensor value;
    Tensor grad;
};

/// Per-call scratch produced by a training forward pass and consumed by backward.
struct LayerCache {
    Tensor input;
    Tensor output;
    Tensor aux;
    std::vector<double> stats;
    std::vector<std::size_t> index;
    std::any extra;
};

/**
 * Base class of all layers.
 *
 * `infer` is const and reentrant. `forward_train` may update running
 * statistics and fills a cache that `backward` consumes; `backward`
 * accumulates into the parameter gradients and returns the input gradient.
 * Each layer applies its own output activation.
 */
class Layer {
public:
    explicit Layer(Activation act = Activation::identity) : activation_(act) {}
    virtual ~Layer() = default;

    virtual std::string describe() const = 0;
    /// Throws ConfigError when `input` cannot feed this layer.
    virtual Tensor::Shape output_shape(const Tensor::Shape& input) const = 0;
    virtual Tensor infer(const Tensor& input) const = 0;
    virtual Tensor forward_train(const Tensor& input, LayerCache& cache) = 0;
    virtual Tensor backward(const Tensor& grad_output, const LayerCache& cache) = 0;
    virtual std::unique_ptr<Layer> clone() const = 0;

    Activation activation() const noexcept { return activation_; }

    std::span<Parameter> parameters() noexcept { return params_; }
    std::span<const Parameter> parameters() const noexcept { return params_; }
    /// Non-trainable state (running statistics, rotations) that is persisted with the model.
    std::span<Tensor> buffers() noexcept { return buffers_; }
    std::span<const Tensor> buffers() const noexcept { return buffers_; }

protected:
    Activation activation_;
    std::vector<Parameter> params_;
    std::vector<Tensor> buffers_;
};

double sigmoid(double z) noexcept;
void apply_activation(Activation act, Tensor& values) noexcept;
/// grad <- grad * act'(.) expressed through the activation's output.
void activation_backward(Activation act, const Tensor& output, Tensor& grad) noexcept;

/// Layer for one spec; CwSlot yields an identity placeholder.
std::unique_ptr<Layer> make_layer(const LayerSpec& spec);

}  // namespace clab::nn
