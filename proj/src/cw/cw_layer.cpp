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
#include "clab/cw/cw_layer.hpp"

#include <algorithm>
#include <cmath>

#include <Eigen/Eigenvalues>
#include <Eigen/LU>
#include <spdlog/spdlog.h>

#include "clab/error.hpp"

namespace clab::cw {

namespace {

enum Buffer { kMean = 0, kCov = 1, kRotation = 2 };

// Batch quantities kept between forward_train and backward.
struct WhiteningCache {
    Eigen::MatrixXd centered;  // M x C
    Eigen::MatrixXd whitened;  // M x C, before rotation
    Eigen::MatrixXd basis;     // eigenvectors of the regularized covariance
    Eigen::VectorXd values;    // its eigenvalues
    Eigen::MatrixXd w;
};

Eigen::MatrixXd map_square(const nn::Tensor& t) {
    const auto m = t.as_matrix();
    return m;
}

}  // namespace

Eigen::MatrixXd zca_whitening(const Eigen::MatrixXd& cov, double eps) {
    const Eigen::MatrixXd reg = cov + eps * Eigen::MatrixXd::Identity(cov.rows(), cov.cols());
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> solver(reg);
    const Eigen::VectorXd inv_sqrt = solver.eigenvalues().cwiseMax(eps).cwiseSqrt().cwiseInverse();
    return solver.eigenvectors() * inv_sqrt.asDiagonal() * solver.eigenvectors().transpose();
}

double orthogonality_error(const Eigen::MatrixXd& q) {
    return (q.transpose() * q - Eigen::MatrixXd::Identity(q.cols(), q.cols())).cwiseAbs().maxCoeff();
}

double dim_summary(std::span<const double> map) {
    if (map.empty()) throw ConfigError("dim_summary: empty map");
    return *std::max_element(map.begin(), map.end());
}

CwLayer::CwLayer(std::size_t channels, nn::Activation act) : Layer(act), channels_(channels) {
    if (channels == 0) throw ConfigError("CwLayer needs at least one channel");
    const Eigen::MatrixXd eye = Eigen::MatrixXd::Identity(Eigen::Index(channels), Eigen::Index(channels));
    buffers_.emplace_back(nn::Tensor::Shape{1, channels}, 0.0);
    buffers_.emplace_back(nn::Tensor::Shape{channels, channels}, 0.0);
    buffers_.emplace_back(nn::Tensor::Shape{channels, channels}, 0.0);
    buffers_[kCov].as_matrix() = eye;
    buffers_[kRotation].as_matrix() = eye;
}

std::string CwLayer::describe() const {
    std::string act = activation_ == nn::Activation::identity ? "" : ", " + nn::to_string(activation_);
    return "ConceptWhitening{" + std::to_string(channels_) + act + "}";
}

nn::Tensor::Shape CwLayer::output_shape(const nn::Tensor::Shape& in) const {
    if (in.size() != 4 || in[1] != channels_) {
        throw ConfigError(describe() + " expects N x " + std::to_string(channels_) + " x H x W maps, got " +
                          nn::shape_string(in));
    }
    return in;
}

CwLayer::RowMajor CwLayer::to_rows(const nn::Tensor& maps) const {
    const std::size_t n = maps.dim(0), spatial = maps.dim(2) * maps.dim(3), c = channels_;
    RowMajor rows(Eigen::Index(n * spatial), Eigen::Index(c));
    for (std::size_t b = 0; b < n; ++b) {
        for (std::size_t ch = 0; ch < c; ++ch) {
            const double* src = maps.values().data() + (b * c + ch) * spatial;
            for (std::size_t s = 0; s < spatial; ++s) rows(Eigen::Index(b * spatial + s), Eigen::Index(ch)) = src[s];
        }
    }
    return rows;
}

nn::Tensor CwLayer::from_rows(const RowMajor& rows, const nn::Tensor::Shape& shape) const {
    nn::Tensor out(shape);
    const std::size_t n = shape[0], spatial = shape[2] * shape[3], c = channels_;
    for (std::size_t b = 0; b < n; ++b) {
        for (std::size_t ch = 0; ch < c; ++ch) {
            double* dst = out.values().data() + (b * c + ch) * spatial;
            for (std::size_t s = 0; s < spatial; ++s) dst[s] = rows(Eigen::Index(b * spatial + s), Eigen::Index(ch));
        }
    }
    return out;
}

Eigen::VectorXd CwLayer::running_mean() const { return buffers_[kMean].as_matrix().row(0).transpose(); }
Eigen::MatrixXd CwLayer::running_cov() const { return map_square(buffers_[kCov]); }
Eigen::MatrixXd CwLayer::rotation() const { return map_square(buffers_[kRotation]); }

void CwLayer::set_running_stats(const Eigen::VectorXd& mean, const Eigen::MatrixXd& cov) {
    const auto c = Eigen::Index(channels_);
    if (mean.size() != c || cov.rows() != c || cov.cols() != c) throw ConfigError("CwLayer: statistics shape");
    buffers_[kMean].as_matrix().row(0) = mean.transpose();
    buffers_[kCov].as_matrix() = cov;
}

void CwLayer::set_rotation(const Eigen::MatrixXd& q) {
    const auto c = Eigen::Index(channels_);
    if (q.rows() != c || q.cols() != c) throw ConfigError("CwLayer: rotation must be C x C");
    if (orthogonality_error(q) >= 1e-6) throw ConfigError("CwLayer: rotation is not orthogonal");
    buffers_[kRotation].as_matrix() = q;
}

CwLayerState CwLayer::state(const std::map<std::size_t, std::size_t>& assignment) const {
    return {running_mean(), zca_whitening(running_cov()), rotation(), assignment};
}

nn::Tensor CwLayer::whiten(const nn::Tensor& input) const {
    output_shape(input.shape());
    const RowMajor rows = to_rows(input);
    const Eigen::MatrixXd w = zca_whitening(running_cov());
    const RowMajor z = (rows.rowwise() - running_mean().transpose()) * w;
    return from_rows(z, input.shape());
}

nn::Tensor CwLayer::infer(const nn::Tensor& input) const {
    output_shape(input.shape());
    const RowMajor rows = to_rows(input);
    const Eigen::MatrixXd wq = zca_whitening(running_cov()) * rotation();
    const RowMajor out_rows = (rows.rowwise() - running_mean().transpose()) * wq;
    nn::Tensor out = from_rows(out_rows, input.shape());
    nn::apply_activation(activation_, out);
    return out;
}

nn::Tensor CwLayer::forward_train(const nn::Tensor& input, nn::LayerCache& cache) {
    output_shape(input.shape());
    const RowMajor rows = to_rows(input);
    const double m = double(rows.rows());
    if (rows.rows() < 2) throw ConfigError(describe() + " needs at least two positions per batch");

    WhiteningCache wc;
    const Eigen::VectorXd mean = rows.colwise().mean().transpose();
    wc.centered = rows.rowwise() - mean.transpose();
    const Eigen::MatrixXd cov = wc.centered.transpose() * wc.centered / m;
    const auto c = Eigen::Index(channels_);
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> solver(cov + kCwEpsilon * Eigen::MatrixXd::Identity(c, c));
    wc.basis = solver.eigenvectors();
    wc.values = solver.eigenvalues().cwiseMax(kCwEpsilon);
    if (!warned_singular_ && solver.eigenvalues().minCoeff() < 2 * kCwEpsilon) {
        spdlog::warn("{}: batch covariance is (near) singular; regularized with {} * I", describe(), kCwEpsilon);
        warned_singular_ = true;
    }
    wc.w = wc.basis * wc.values.cwiseSqrt().cwiseInverse().asDiagonal() * wc.basis.transpose();
    wc.whitened = wc.centered * wc.w;

    auto rm = buffers_[kMean].as_matrix();
    auto rc = buffers_[kCov].as_matrix();
    rm.row(0) = kCwMomentum * rm.row(0) + (1 - kCwMomentum) * mean.transpose();
    rc = kCwMomentum * rc + (1 - kCwMomentum) * (cov * (m / (m - 1)));

    const RowMajor out_rows = wc.whitened * rotation();
    nn::Tensor out = from_rows(out_rows, input.shape());
    nn::apply_activation(activation_, out);
    cache.output = out;
    cache.extra = std::move(wc);
    return out;
}

nn::Tensor CwLayer::backward(const nn::Tensor& grad_output, const nn::LayerCache& cache) {
    nn::Tensor g = grad_output;
    nn::activation_backward(activation_, cache.output, g);
    const auto& wc = std::any_cast<const WhiteningCache&>(cache.extra);
    const double m = double(wc.centered.rows());

    // out = Z Q, Z = Xc W(S), S = Xc^T Xc / m + eps I
    const Eigen::MatrixXd gz = to_rows(g) * rotation().transpose();
    Eigen::MatrixXd gx = gz * wc.w;
    const Eigen::MatrixXd gw = wc.centered.transpose() * gz;
    const Eigen::MatrixXd sym = 0.5 * (gw + gw.transpose());

    // Derivative of S^(-1/2) in its eigenbasis: divided differences of f(l) = l^(-1/2).
    const Eigen::Index c = wc.values.size();
    Eigen::MatrixXd k(c, c);
    for (Eigen::Index i = 0; i < c; ++i) {
        for (Eigen::Index j = 0; j < c; ++j) {
            const double li = wc.values[i], lj = wc.values[j];
            if (std::abs(li - lj) <= 1e-12 * std::max(li, lj)) {
                const double l = 0.5 * (li + lj);
                k(i, j) = -0.5 / (l * std::sqrt(l));
            } else {
                k(i, j) = (1 / std::sqrt(li) - 1 / std::sqrt(lj)) / (li - lj);
            }
        }
    }
    const Eigen::MatrixXd gs =
        wc.basis * (wc.basis.transpose() * sym * wc.basis).cwiseProduct(k) * wc.basis.transpose();
    gx += (2.0 / m) * wc.centered * gs;
    // Centering: subtract the column means of the gradient.
    gx.rowwise() -= gx.colwise().mean();
    return from_rows(gx, g.shape());
}

std::unique_ptr<nn::Layer> CwLayer::clone() const { return std::make_unique<CwLayer>(*this); }

RotationStep CwLayer::update_rotation(std::span<const nn::Tensor> concept_maps, std::span<const std::size_t> axes,
                                      double eta) {
    if (concept_maps.size() != axes.size()) throw ConfigError("update_rotation: one example batch per axis");
    const auto c = Eigen::Index(channels_);
    const Eigen::MatrixXd q = rotation();
    Eigen::MatrixXd grad = Eigen::MatrixXd::Zero(c, c);
    RotationStep step;
    for (std::size_t j = 0; j < axes.size(); ++j) {
        const auto axis = Eigen::Index(axes[j]);
        if (axis >= c) throw ConfigError("update_rotation: axis outside the layer");
        const nn::Tensor& maps = concept_maps[j];
        if (maps.rows() == 0) throw ConfigError("update_rotation: concept without examples");
        const RowMajor z = to_rows(whiten(maps));
        const Eigen::VectorXd along = z * q.col(axis);
        const std::size_t spatial = maps.dim(2) * maps.dim(3);
        Eigen::VectorXd mean_z = Eigen::VectorXd::Zero(c);
        double objective = 0;
        for (std::size_t b = 0; b < maps.rows(); ++b) {
            Eigen::Index best = Eigen::Index(b * spatial);
            for (std::size_t s = 1; s < spatial; ++s) {
                const auto at = Eigen::Index(b * spatial + s);
                if (along[at] > along[best]) best = at;
            }
            mean_z += z.row(best).transpose();
            objective += along[best];
        }
        mean_z /= double(maps.rows());
        step.objective += objective / double(maps.rows());
        grad.col(axis) -= mean_z;
    }

    // Cayley transform of the skew-symmetric Riemannian gradient.
    const Eigen::MatrixXd a = grad * q.transpose() - q * grad.transpose();
    const Eigen::MatrixXd eye = Eigen::MatrixXd::Identity(c, c);
    for (int attempt = 0; attempt < 2; ++attempt) {
        const double tau = attempt == 0 ? eta : eta / 2;
        const Eigen::PartialPivLU<Eigen::MatrixXd> lu(eye + 0.5 * tau * a);
        const Eigen::MatrixXd next = lu.solve((eye - 0.5 * tau * a) * q);
        if (next.allFinite() && orthogonality_error(next) < 1e-6) {
            buffers_[kRotation].as_matrix() = next;
            step.applied = true;
            step.eta = tau;
            return step;
        }
    }
    spdlog::warn("{}: Cayley solve did not converge, rotation step skipped", describe());
    return step;
}

}  // namespace clab::cw
