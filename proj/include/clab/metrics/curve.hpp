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

#include <iosfwd>
#include <vector>

#include "clab/data/dataset.hpp"
#include "clab/metrics/metrics.hpp"
#include "clab/nn/train.hpp"

namespace clab::metrics {

/// Soft vs hard accuracy sweep over the number of random hyperplane concepts.
struct CurveConfig {
    std::vector<std::size_t> m_values{1, 2, 4, 8, 16, 32};
    std::size_t runs = 10;
    std::size_t g_hidden = 64;  ///< g = d -> g_hidden relu -> m sigmoid
    std::size_t h_hidden = 16;  ///< h = m -> h_hidden relu -> 1 sigmoid, same for the hard model
    nn::TrainConfig g_train{30, 64, 0, nn::LossKind::bce, nn::Adam{1e-3}};
    nn::TrainConfig h_train{100, 64, 0, nn::LossKind::bce, nn::Adam{3e-3}};
    nn::TrainConfig hard_train{100, 64, 0, nn::LossKind::bce, nn::Adam{3e-3}};
    /// Pixels -> task reference: d -> g_hidden relu -> h_hidden relu -> 1 sigmoid.
    nn::TrainConfig direct_train{30, 64, 0, nn::LossKind::bce, nn::Adam{1e-3}};
    std::size_t direct_runs = 3;
    std::uint64_t seed = 0;
    std::size_t jobs = 1;
};

struct CurvePoint {
    std::size_t m = 0;
    MeanStd soft;
    MeanStd hard;
    std::vector<double> soft_runs;
    std::vector<double> hard_runs;
};

struct LeakageCurve {
    std::vector<CurvePoint> points;
    MeanStd direct;
    std::vector<double> direct_runs;
};

/**
 * For every m and run: fresh hyperplane concepts fit on `train`, a sequential CBM
 * scored on `test` through its soft outputs, and a hard model trained on the
 * binary concept labels. Seeds of the training routines are replaced by
 * per-run streams derived from cfg.seed. Runs fan out over cfg.jobs threads;
 * results do not depend on the thread count.
 */
LeakageCurve leakage_curve(const data::LabeledDataset& train, const data::LabeledDataset& test, const CurveConfig& cfg);

/// Header: m,soft_mean,soft_std,hard_mean,hard_std
void write_csv(const LeakageCurve& curve, std::ostream& out);

}  // namespace clab::metrics
