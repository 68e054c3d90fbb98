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
#include <functional>
#include <random>
#include <span>
#include <variant>
#include <vector>

#include "clab/nn/network.hpp"

namespace clab::nn {

enum class LossKind { bce, mse };

struct LossValue {
    double value = 0.0;
    Tensor grad;  ///< d(value)/d(prediction)
};

/// Mean binary cross-entropy / squared error over every element of `pred`.
LossValue compute_loss(LossKind kind, const Tensor& pred, const Tensor& target);
/// Same as compute_loss restricted to `columns` (mean over rows x selected columns);
/// unselected columns get zero gradient.
LossValue compute_loss(LossKind kind, const Tensor& pred, const Tensor& target,
                       std::span<const std::size_t> columns);

struct Adam {
    double lr = 1e-3;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double eps = 1e-8;
};

struct Sgd {
    double lr = 1e-2;
};

using OptimizerConfig = std::variant<Adam, Sgd>;

struct TrainConfig {
    std::size_t epochs = 1;
    std::size_t batch_size = 32;
    std::uint64_t seed = 0;
    LossKind loss = LossKind::bce;
    OptimizerConfig optimizer = Adam{};

    /// Throws ConfigError on lr <= 0 or batch_size == 0.
    void validate() const;
};

/// Stateful first-order optimizer over a fixed parameter list.
class Optimizer {
public:
    Optimizer(OptimizerConfig config, std::vector<Parameter*> params);
    void step();
    void zero_grad();

private:
    OptimizerConfig config_;
    std::vector<Parameter*> params_;
    std::vector<std::vector<double>> m_, v_;
    std::uint64_t t_ = 0;
};

/// Seeded per-epoch shuffling of row indices into mini-batches.
class BatchSchedule {
public:
    BatchSchedule(std::size_t rows, std::size_t batch_size, std::uint64_t seed);
    /// Reshuffles and returns the batches of the next epoch.
    std::vector<std::vector<std::size_t>> next_epoch();

private:
    std::vector<std::size_t> order_;
    std::size_t batch_size_;
    std::mt19937_64 rng_;
};

/**
 * Mini-batch training of `net` on (inputs, targets).
 *
 * Returns the mean training loss of each epoch. Deterministic for a given
 * seed. Throws NumericError with epoch/batch indices on a non-finite loss.
 */
std::vector<double> train(Network& net, const Tensor& inputs, const Tensor& targets,
                          const TrainConfig& cfg);

/// Callbacks run between optimizer steps; \`step\` counts batches across epochs.
struct TrainHooks {
    std::function<void(std::size_t epoch, std::size_t step)> after_batch;
    std::function<void(std::size_t epoch, double mean_loss)> after_epoch;
};

std::vector<double> train(Network& net, const Tensor& inputs, const Tensor& targets,
                          const TrainConfig& cfg, const TrainHooks& hooks);

struct GradientCheckOptions {
    double eps = 1e-5;
    LossKind loss = LossKind::bce;
    /// Parameters checked when the network has more entries than this; otherwise all.
    std::size_t max_samples = 300;
    std::uint64_t seed = 0;
};

/**
 * Largest relative error between backprop gradients and central differences,
 * |analytic - fd| / max(|analytic|, |fd|, 1e-8), over all (or sampled) parameters.
 * Uses training-mode forward passes.
 */
double gradient_check(Network& net, const Tensor& batch, const Tensor& targets,
                      const GradientCheckOptions& opts = {});

/// Fraction of rows where (pred >= 0.5) equals the binary target.
double binary_accuracy(const Tensor& pred, const Tensor& target);

}  // namespace clab::nn
