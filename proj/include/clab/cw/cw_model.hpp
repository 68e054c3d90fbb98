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
#include <iosfwd>
#include <map>
#include <vector>

#include <Eigen/Core>

#include "clab/cw/cw_layer.hpp"
#include "clab/data/dataset.hpp"
#include "clab/nn/train.hpp"

namespace clab::cw {

struct CwConfig {
    std::size_t channels = 8;
    /// concept column -> CW axis; concepts left out stay unsupervised.
    std::map<std::size_t, std::size_t> assignment{{0, 0}, {1, 1}};
    /// false swaps the CW layer for plain batch norm (the baseline model).
    bool whitening = true;
    nn::TrainConfig train{20, 64, 0, nn::LossKind::bce, nn::Adam{1e-3}};
    std::uint64_t init_seed = 0;
    std::size_t rotation_every = 30;  ///< batches between rotation rounds
    std::size_t rotation_steps = 10;
    double eta = 0.05;
    std::size_t concept_batch = 64;  ///< positives sampled per concept and round
    std::size_t check_rows = 1000;   ///< training rows scored after every epoch
    std::size_t image_side = 28;

    void validate(std::size_t concept_count) const;
};

/// Five 3x3 convs (8, 16, 32, 16, C filters, padding 1) with batch norm after each,
/// 2x2 pooling after the 2nd, 4th and 5th blocks, global average pooling and a
/// single-output head. The last batch norm is the CW slot.
std::vector<nn::LayerSpec> cw_cnn_specs(std::size_t channels, bool whitening);

/// One row of the per-epoch check history.
struct CheckRow {
    std::size_t epoch = 0;
    double corr_offdiag_mean = 0.0;
    std::vector<double> axis_auc;  ///< assigned concepts, in assignment order
    double cos_within = 0.0;
    double cos_between = 0.0;
};

struct AlignmentChecks {
    Eigen::MatrixXd corr;     ///< C x C over summaries; zero-variance pairs read 0
    std::vector<double> axis_auc;
    Eigen::MatrixXd cosine;   ///< k x k, mean unit summary of concept j dotted with that of l
    double corr_offdiag_mean = 0.0;
    double cos_within = 0.0;  ///< mean of the cosine diagonal
    double cos_between = 0.0; ///< mean of its off-diagonal
};

struct CwModel {
    nn::Network net;
    std::size_t slot = 0;
    CwConfig config;
    std::vector<double> loss_history;
    std::vector<CheckRow> history;

    /// nullptr for the batch-norm baseline.
    const CwLayer* cw_layer() const;
    CwLayer* cw_layer();
    /// Whitening snapshot; throws ConfigError on the baseline.
    CwLayerState state() const;
};

/// N x 784 (or N x side^2) rows as N x 1 x side x side images.
nn::Tensor as_images(const nn::Tensor& rows, std::size_t side);

CwModel build_cw_model(const CwConfig& cfg);

/// Task training with rotation rounds every `rotation_every` batches and a check row per epoch.
CwModel train_cw_model(const data::LabeledDataset& train, const CwConfig& cfg);

/// Slot outputs (N x C x H x W) in eval mode.
nn::Tensor slot_maps(const CwModel& model, const data::LabeledDataset& ds);
/// Spatial max of every channel, N x C.
nn::Tensor summaries(const nn::Tensor& maps);

/// The three checks over N x C summaries and N x k concept labels.
AlignmentChecks alignment_checks(const nn::Tensor& summary, const nn::Tensor& concepts,
                                 const std::map<std::size_t, std::size_t>& assignment);
AlignmentChecks cw_alignment_checks(const CwModel& model, const data::LabeledDataset& ds);

/// Header: epoch,corr_offdiag_mean,auc_c1,...,cos_within,cos_between (concepts numbered from 1).
void write_history_csv(const CwModel& model, std::ostream& out);

struct ProbeConfig {
    nn::TrainConfig train{15, 64, 0, nn::LossKind::bce, nn::Adam{1e-3}};
    std::uint64_t init_seed = 0;
};

/// conv 1->16 -> conv 16->32 (relu, unpadded) -> single sigmoid output, for side x side maps.
std::vector<nn::LayerSpec> probe_specs(std::size_t side);

/// Held-out accuracy of a probe trained on N x 1 x H x W maps.
double probe_accuracy(const nn::Tensor& train_maps, const nn::Tensor& train_labels,
                      const nn::Tensor& test_maps, const nn::Tensor& test_labels, const ProbeConfig& cfg);

/// Probe on the full map of one slot axis predicting one concept.
double purity_probe(const CwModel& model, std::size_t axis, std::size_t concept_index,
                    const data::LabeledDataset& train, const data::LabeledDataset& test,
                    const ProbeConfig& cfg);

struct HeadImportance {
    std::vector<double> weights;     ///< |w| per axis
    std::vector<double> normalized;  ///< |w| / sum |w|
    /// Assigned axes only, renormalized; equal shares are the reference for c1, c2.
    std::vector<double> assigned_share;
};

HeadImportance head_importance(const nn::Network& net, const std::map<std::size_t, std::size_t>& assignment);
HeadImportance head_importance(const CwModel& model);

}  // namespace clab::cw
