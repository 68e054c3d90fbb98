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

#include <filesystem>
#include <map>
#include <vector>

#include "clab/data/dataset.hpp"
#include "clab/nn/network.hpp"
#include "clab/nn/train.hpp"

namespace clab::cbm {

enum class Mode { independent, sequential, joint };

const char* to_string(Mode m);
Mode mode_from_string(const std::string& s);

/**
 * Concept bottleneck h(g(x)).
 *
 * `aligned` maps bottleneck dimensions to concept columns of the dataset;
 * dimensions missing from it are latent and only exist in joint training.
 * Independent and sequential modes train g with `g_train` and h with `h_train`;
 * joint mode runs one loop with `g_train` settings over both networks.
 */
struct CbmConfig {
    std::vector<nn::LayerSpec> g_spec;
    std::vector<nn::LayerSpec> h_spec;
    std::size_t bottleneck = 0;
    std::map<std::size_t, std::size_t> aligned;
    Mode mode = Mode::joint;
    double lambda = 0.1;
    nn::TrainConfig g_train;
    nn::TrainConfig h_train;
    std::uint64_t g_seed = 0;  ///< initialization of g
    std::uint64_t h_seed = 1;  ///< initialization of h

    /// Checks the invariants against a dataset with `concepts` columns.
    void validate(std::size_t concepts) const;
};

struct EpochLoss {
    double task = 0.0;
    double concept_loss = 0.0;
};

struct TrainedCbm {
    nn::Network g;
    nn::Network h;
    CbmConfig config;
    /// Joint: one entry per epoch. Other modes: g epochs (concept loss only) then h epochs (task loss only).
    std::vector<EpochLoss> history;
};

/// Loss terms of the joint objective on a batch, in training mode.
struct JointLoss {
    double total = 0.0;
    double task = 0.0;
    double concept_loss = 0.0;
};

/// N x B concept targets: column b holds concept aligned[b], unaligned columns stay zero.
nn::Tensor bottleneck_targets(const data::LabeledDataset& ds, const CbmConfig& cfg);

/// Bottleneck dimensions that carry concept supervision, ascending.
std::vector<std::size_t> aligned_dims(const CbmConfig& cfg);

/// L_task(h(g(x)), y) + lambda * L_concept, where L_concept sums the per-dim BCE over aligned dims.
/// Both terms are means over the batch rows.
JointLoss joint_objective(TrainedCbm& cbm, const data::LabeledDataset& batch);

/// Builds g and h from their seeds and trains them in the configured mode.
TrainedCbm train_cbm(const data::LabeledDataset& train, const CbmConfig& cfg);

/// Soft bottleneck representation g(X), N x B.
nn::Tensor concept_activations(const TrainedCbm& cbm, const nn::Tensor& x);

enum class Hardening { threshold, argmax };

/// Threshold: 1 where value >= 0.5. Argmax: one-hot of the row maximum (first on ties).
nn::Tensor harden(const nn::Tensor& soft, Hardening scheme);

struct TaskInput {
    enum class Kind { soft, hard } kind = Kind::soft;
    Hardening scheme = Hardening::threshold;
};

/// h applied to g(X), optionally hardened first; N x 1 probabilities.
nn::Tensor predict_task(const TrainedCbm& cbm, const nn::Tensor& x, TaskInput use = {});

/// h applied to given concept values (ground truth or hardened), N x 1.
nn::Tensor predict_from_concepts(const TrainedCbm& cbm, const nn::Tensor& concepts);

/// xyz presets. M1: B=3, all aligned. M2: B=2, x and y aligned. M3: B=3, x and y aligned, dim 2 latent.
/// g = 7 -> 8 relu -> B sigmoid, h = B -> 4 relu -> 1 sigmoid, Adam 1e-3, 350 epochs, joint with lambda.
CbmConfig xyz_preset(int model, double lambda = 0.1, std::uint64_t seed = 0);

/// Writes <stem>.bin (g state then h state) and <stem>.json (configuration).
void save_cbm(const TrainedCbm& cbm, const std::filesystem::path& stem);
TrainedCbm load_cbm(const std::filesystem::path& stem);

void to_json(nlohmann::json& j, const CbmConfig& cfg);
void from_json(const nlohmann::json& j, CbmConfig& cfg);

}  // namespace clab::cbm
