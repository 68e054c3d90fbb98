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

#include <map>
#include <span>

#include <Eigen/Core>

#include "clab/nn/layer.hpp"

namespace clab::cw {

inline constexpr double kCwEpsilon = 1e-5;
inline constexpr double kCwMomentum = 0.9;

/// Snapshot of a CW layer: running mean, ZCA whitening of the running covariance,
/// rotation and the concept -> axis assignment it was trained with.
struct CwLayerState {
    Eigen::VectorXd running_mean;
    Eigen::MatrixXd whitening;
    Eigen::MatrixXd rotation;
    std::map<std::size_t, std::size_t> assignment;
};

/// (cov + eps I)^(-1/2) through the symmetric eigendecomposition.
Eigen::MatrixXd zca_whitening(const Eigen::MatrixXd& cov, double eps = kCwEpsilon);

/// max |Q^T Q - I|.
double orthogonality_error(const Eigen::MatrixXd& q);

/// Spatial maximum of one channel map.
double dim_summary(std::span<const double> map);

struct RotationStep {
    bool applied = false;
    double eta = 0.0;       ///< step size actually used
    double objective = 0.0; ///< sum over concepts of the mean summary along the assigned axis, before the step
};

/**
 * Concept whitening over N x C x H x W maps.
 *
 * Every spatial position's channel vector v becomes Q^T W (v - mean). Training
 * passes whiten with batch statistics and back-propagate through the inverse
 * square root; they also fold the batch mean and unbiased covariance into the
 * running statistics (momentum 0.9). Inference whitens with the running ones.
 * Q is a buffer moved only by update_rotation.
 */
class CwLayer final : public nn::Layer {
public:
    explicit CwLayer(std::size_t channels, nn::Activation act = nn::Activation::identity);

    std::string describe() const override;
    nn::Tensor::Shape output_shape(const nn::Tensor::Shape& input) const override;
    nn::Tensor infer(const nn::Tensor& input) const override;
    nn::Tensor forward_train(const nn::Tensor& input, nn::LayerCache& cache) override;
    nn::Tensor backward(const nn::Tensor& grad_output, const nn::LayerCache& cache) override;
    std::unique_ptr<nn::Layer> clone() const override;

    std::size_t channels() const noexcept { return channels_; }

    Eigen::VectorXd running_mean() const;
    Eigen::MatrixXd running_cov() const;
    void set_running_stats(const Eigen::VectorXd& mean, const Eigen::MatrixXd& cov);
    Eigen::MatrixXd rotation() const;
    /// Throws ConfigError unless q is C x C and orthogonal to 1e-6.
    void set_rotation(const Eigen::MatrixXd& q);
    CwLayerState state(const std::map<std::size_t, std::size_t>& assignment = {}) const;

    /// Whitened maps before the rotation (running statistics), same layout as the input.
    nn::Tensor whiten(const nn::Tensor& input) const;

    /**
     * One Cayley step raising the summed spatial-max activation of each concept's
     * examples along its axis. `concept_maps[j]` holds layer inputs of positive
     * examples of the concept assigned to `axes[j]`. A failed solve halves eta and
     * retries once, then skips the step with a warning.
     */
    RotationStep update_rotation(std::span<const nn::Tensor> concept_maps, std::span<const std::size_t> axes,
                                 double eta);

private:
    using RowMajor = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

    RowMajor to_rows(const nn::Tensor& maps) const;
    nn::Tensor from_rows(const RowMajor& rows, const nn::Tensor::Shape& shape) const;

    std::size_t channels_;
    bool warned_singular_ = false;
};

}  // namespace clab::cw
