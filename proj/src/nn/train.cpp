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
#include "clab/nn/train.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "clab/error.hpp"

namespace clab::nn {

namespace {

constexpr double kTiny = 1e-300;

void check_same_shape(const Tensor& pred, const Tensor& target) {
    if (pred.rows() != target.rows() || pred.size() != target.size()) {
        throw ConfigError("loss: prediction " + shape_string(pred.shape()) + " vs target " +
                          shape_string(target.shape()));
    }
}

}  // namespace

LossValue compute_loss(LossKind kind, const Tensor& pred, const Tensor& target) {
    std::vector<std::size_t> all(pred.row_size());
    std::iota(all.begin(), all.end(), 0);
    return compute_loss(kind, pred, target, all);
}

LossValue compute_loss(LossKind kind, const Tensor& pred, const Tensor& target,
                       std::span<const std::size_t> columns) {
    check_same_shape(pred, target);
    LossValue out{0.0, Tensor(pred.shape())};
    const std::size_t width = pred.row_size();
    const double count = double(pred.rows() * columns.size());
    if (count == 0) return out;
    for (std::size_t r = 0; r < pred.rows(); ++r) {
        for (std::size_t c : columns) {
            const std::size_t i = r * width + c;
            const double p = pred[i], y = target[i];
            if (kind == LossKind::bce) {
                out.value -= y * std::log(std::max(p, kTiny)) + (1 - y) * std::log(std::max(1 - p, kTiny));
                out.grad[i] = (p - y) / std::max(p * (1 - p), kTiny) / count;
            } else {
                const double d = p - y;
                out.value += d * d;
                out.grad[i] = 2 * d / count;
            }
        }
    }
    out.value /= count;
    return out;
}

void TrainConfig::validate() const {
    if (batch_size == 0) throw ConfigError("batch_size must be >= 1");
    const double lr = std::visit([](const auto& o) { return o.lr; }, optimizer);
    if (!(lr > 0)) throw ConfigError("learning rate must be > 0");
}

Optimizer::Optimizer(OptimizerConfig config, std::vector<Parameter*> params)
    : config_(config), params_(std::move(params)) {
    if (std::holds_alternative<Adam>(config_)) {
        for (auto* p : params_) {
            m_.emplace_back(p->value.size(), 0.0);
            v_.emplace_back(p->value.size(), 0.0);
        }
    }
}

void Optimizer::zero_grad() {
    for (auto* p : params_) p->grad.fill(0.0);
}

void Optimizer::step() {
    ++t_;
    if (const auto* sgd = std::get_if<Sgd>(&config_)) {
        for (auto* p : params_) {
            auto w = p->value.values();
            auto g = p->grad.values();
            for (std::size_t i = 0; i < w.size(); ++i) w[i] -= sgd->lr * g[i];
        }
        return;
    }
    const auto& adam = std::get<Adam>(config_);
    const double c1 = 1.0 - std::pow(adam.beta1, double(t_));
    const double c2 = 1.0 - std::pow(adam.beta2, double(t_));
    for (std::size_t k = 0; k < params_.size(); ++k) {
        auto w = params_[k]->value.values();
        auto g = params_[k]->grad.values();
        auto& m = m_[k];
        auto& v = v_[k];
        for (std::size_t i = 0; i < w.size(); ++i) {
            m[i] = adam.beta1 * m[i] + (1 - adam.beta1) * g[i];
            v[i] = adam.beta2 * v[i] + (1 - adam.beta2) * g[i] * g[i];
            w[i] -= adam.lr * (m[i] / c1) / (std::sqrt(v[i] / c2) + adam.eps);
        }
    }
}

BatchSchedule::BatchSchedule(std::size_t rows, std::size_t batch_size, std::uint64_t seed)
    : order_(rows), batch_size_(batch_size), rng_(seed) {
    if (batch_size == 0) throw ConfigError("batch_size must be >= 1");
    std::iota(order_.begin(), order_.end(), 0);
}

std::vector<std::vector<std::size_t>> BatchSchedule::next_epoch() {
    std::shuffle(order_.begin(), order_.end(), rng_);
    std::vector<std::vector<std::size_t>> batches;
    for (std::size_t start = 0; start < order_.size(); start += batch_size_) {
        const std::size_t stop = std::min(order_.size(), start + batch_size_);
        batches.emplace_back(order_.begin() + std::ptrdiff_t(start), order_.begin() + std::ptrdiff_t(stop));
    }
    return batches;
}

std::vector<double> train(Network& net, const Tensor& inputs, const Tensor& targets,
                          const TrainConfig& cfg) {
    return train(net, inputs, targets, cfg, TrainHooks{});
}

std::vector<double> train(Network& net, const Tensor& inputs, const Tensor& targets,
                          const TrainConfig& cfg, const TrainHooks& hooks) {
    cfg.validate();
    if (inputs.rows() != targets.rows()) {
        throw ConfigError("train: " + std::to_string(inputs.rows()) + " input rows vs " +
                          std::to_string(targets.rows()) + " target rows");
    }
    if (cfg.loss == LossKind::bce) {
        for (double y : targets.values()) {
            if (y < 0 || y > 1) throw ConfigError("train: BCE targets must lie in [0, 1]");
        }
    }
    std::vector<double> history;
    if (cfg.epochs == 0 || inputs.rows() == 0) return history;

    Optimizer opt(cfg.optimizer, net.parameters());
    BatchSchedule schedule(inputs.rows(), cfg.batch_size, cfg.seed);
    Trace trace;
    std::size_t step = 0;
    for (std::size_t epoch = 0; epoch < cfg.epochs; ++epoch) {
        const auto batches = schedule.next_epoch();
        double total = 0.0;
        for (std::size_t b = 0; b < batches.size(); ++b) {
            const Tensor x = gather_rows(inputs, batches[b]);
            const Tensor y = gather_rows(targets, batches[b]);
            Tensor pred;
            try {
                pred = net.forward_train(x, trace);
            } catch (const NumericError& e) {
                throw NumericError(std::string(e.what()) + " at epoch " + std::to_string(epoch) +
                                   ", batch " + std::to_string(b));
            }
            LossValue loss = compute_loss(cfg.loss, pred, y);
            if (!std::isfinite(loss.value)) {
                throw NumericError("non-finite loss at epoch " + std::to_string(epoch) + ", batch " +
                                   std::to_string(b));
            }
            total += loss.value * double(batches[b].size());
            opt.zero_grad();
            net.backward(trace, loss.grad);
            opt.step();
            if (hooks.after_batch) hooks.after_batch(epoch, step);
            ++step;
        }
        history.push_back(total / double(inputs.rows()));
        if (hooks.after_epoch) hooks.after_epoch(epoch, history.back());
    }
    return history;
}

double gradient_check(Network& net, const Tensor& batch, const Tensor& targets,
                      const GradientCheckOptions& opts) {
    Trace trace;
    net.zero_grad();
    const Tensor pred = net.forward_train(batch, trace);
    net.backward(trace, compute_loss(opts.loss, pred, targets).grad);

    auto loss_at = [&]() {
        Trace scratch;
        return compute_loss(opts.loss, net.forward_train(batch, scratch), targets).value;
    };

    struct Entry {
        Parameter* param;
        std::size_t index;
    };
    std::vector<Entry> entries;
    for (auto* p : net.parameters()) {
        for (std::size_t i = 0; i < p->value.size(); ++i) entries.push_back({p, i});
    }
    if (entries.size() > opts.max_samples) {
        std::mt19937_64 rng(opts.seed);
        std::shuffle(entries.begin(), entries.end(), rng);
        entries.resize(opts.max_samples);
    }

    double worst = 0.0;
    for (const auto& e : entries) {
        double& w = e.param->value[e.index];
        const double saved = w;
        w = saved + opts.eps;
        const double up = loss_at();
        w = saved - opts.eps;
        const double down = loss_at();
        w = saved;
        const double fd = (up - down) / (2 * opts.eps);
        const double analytic = e.param->grad[e.index];
        const double denom = std::max({std::abs(analytic), std::abs(fd), 1e-8});
        worst = std::max(worst, std::abs(analytic - fd) / denom);
    }
    return worst;
}

double binary_accuracy(const Tensor& pred, const Tensor& target) {
    if (pred.size() != target.size()) throw ConfigError("binary_accuracy: size mismatch");
    if (pred.size() == 0) return 0.0;
    std::size_t hits = 0;
    for (std::size_t i = 0; i < pred.size(); ++i) {
        hits += ((pred[i] >= 0.5) == (target[i] >= 0.5)) ? 1 : 0;
    }
    return double(hits) / double(pred.size());
}

}  // namespace clab::nn
