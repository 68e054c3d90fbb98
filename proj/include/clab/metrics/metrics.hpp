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
#include <span>
#include <string>
#include <vector>

#include <Eigen/Core>

#include "clab/nn/network.hpp"

namespace clab::metrics {

/**
 * Area under the ROC curve as the Mann-Whitney statistic: P(s+ > s-) + P(s+ = s-)/2.
 *
 * Computed from average ranks in O(n log n). Labels must be 0/1; a single
 * class throws UndefinedMetric.
 */
double auc(std::span<const double> scores, std::span<const double> labels);

/// Product-moment correlation. Throws UndefinedMetric when either side has zero variance.
double pearson(std::span<const double> x, std::span<const double> y);

/// Pearson correlation of average ranks.
double spearman(std::span<const double> x, std::span<const double> y);

/// Ranks starting at 1, ties share their average rank.
std::vector<double> average_ranks(std::span<const double> values);

struct MeanStd {
    double mean = 0.0;
    double std = 0.0;  ///< population (divide by n)
};
MeanStd mean_std(std::span<const double> values);

// Purity ------------------------------------------------------------------

/// One trained model: soft activations (N x B) next to ground-truth concepts (N x k).
struct PurityTrial {
    nn::Tensor activations;
    nn::Tensor concepts;
};

struct PurityCell {
    bool defined = false;  ///< false when a concept column was single-class in some trial
    double mean = 0.0;
    double std = 0.0;
    std::vector<double> values;  ///< one AUC per trial
};

/// k x B grid of AUC(activation b, concept j) over trials.
struct PurityMatrix {
    std::size_t concepts = 0;
    std::size_t dims = 0;
    std::size_t trials = 0;
    bool folded = false;
    std::vector<std::string> concept_names;
    std::vector<std::string> dim_names;
    std::vector<PurityCell> cells;  ///< row-major, concepts x dims

    const PurityCell& at(std::size_t concept_index, std::size_t dim) const { return cells.at(concept_index * dims + dim); }
};

/// Raw AUCs by default; `folded` reports max(AUC, 1 - AUC) per trial instead.
PurityMatrix purity_matrix(std::span<const PurityTrial> trials, bool folded = false);

/// Header: concept,<dim>_mean,<dim>_std,... One row per concept; undefined cells are empty.
void write_csv(const PurityMatrix& m, std::ostream& out);

// PCA ---------------------------------------------------------------------

struct Pca {
    Eigen::VectorXd mean;        ///< d
    Eigen::MatrixXd components;  ///< d x n, orthonormal columns
    Eigen::VectorXd variance;    ///< n, descending
    nn::Tensor projections;      ///< N x n
};

enum class PcaMethod { automatic, eigen, power };

/**
 * Principal components of the centered sample covariance (divided by N - 1).
 *
 * Each component is signed so that its largest-magnitude loading is positive.
 * `automatic` uses a full eigendecomposition up to 256 features and power
 * iteration with deflation (tolerance 1e-9) above that.
 */
Pca pca(const nn::Tensor& x, std::size_t n_components, PcaMethod method = PcaMethod::automatic);

/// Projects new rows onto fitted components, N x n.
nn::Tensor project(const Pca& p, const nn::Tensor& x);

// Importance ----------------------------------------------------------------

/// |w_i| / sum |w|; all-zero weights give all-zero importances.
std::vector<double> normalized_importance(std::span<const double> weights);

/**
 * Normalized |weight| per input of a network that is linear in its inputs: exactly
 * one Dense layer with a single output (any output activation). Anything deeper
 * throws ConfigError; such models need probe-based importance instead.
 */
std::vector<double> linear_importance(const nn::Network& h);

/// Raw weights of the last Dense layer (single output) of a network.
std::vector<double> final_layer_weights(const nn::Network& net);

}  // namespace clab::metrics
