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
#include "clab/nn/network.hpp"

#include <algorithm>
#include <cmath>
#include <random>

#include "clab/error.hpp"

namespace clab::nn {

namespace {

// What flows between layers during validation.
struct Flow {
    enum class Kind { unknown, flat, image } kind = Kind::unknown;
    std::size_t width = 0;
};

std::string flow_string(const Flow& f) {
    switch (f.kind) {
        case Flow::Kind::flat: return "rows of width " + std::to_string(f.width);
        case Flow::Kind::image: return std::to_string(f.width) + "-channel maps";
        default: return "anything";
    }
}

void validate(const std::vector<LayerSpec>& specs) {
    Flow flow;
    std::size_t slots = 0;
    for (std::size_t i = 0; i < specs.size(); ++i) {
        const auto& spec = specs[i];
        Flow need;
        Flow produce;
        if (auto* d = std::get_if<DenseSpec>(&spec.kind)) {
            // Dense after a spatial layer flattens; its width is checked at run time.
            need = flow.kind == Flow::Kind::image ? flow : Flow{Flow::Kind::flat, d->in};
            produce = {Flow::Kind::flat, d->out};
        } else if (auto* c = std::get_if<Conv2dSpec>(&spec.kind)) {
            need = {Flow::Kind::image, c->in_channels};
            produce = {Flow::Kind::image, c->filters};
        } else if (auto* b = std::get_if<BatchNormSpec>(&spec.kind)) {
            need = {Flow::Kind::unknown, b->channels};
            produce = {flow.kind, b->channels};
        } else if (std::holds_alternative<MaxPoolSpec>(spec.kind)) {
            need = {Flow::Kind::image, flow.width};
            produce = flow;
            produce.kind = Flow::Kind::image;
        } else if (std::holds_alternative<GlobalAvgPoolSpec>(spec.kind)) {
            need = {Flow::Kind::image, flow.width};
            produce = {Flow::Kind::flat, flow.width};
        } else if (auto* s = std::get_if<CwSlotSpec>(&spec.kind)) {
            if (++slots > 1) throw ConfigError("a network may hold at most one CwSlot (layer " + std::to_string(i) + ")");
            need = {Flow::Kind::image, s->channels};
            produce = {Flow::Kind::image, s->channels};
        }
        const bool kind_ok = flow.kind == Flow::Kind::unknown || need.kind == Flow::Kind::unknown ||
                             flow.kind == need.kind;
        const bool width_ok = flow.kind == Flow::Kind::unknown || need.width == flow.width;
        if (i > 0 && (!kind_ok || !width_ok)) {
            throw ConfigError("layer " + std::to_string(i - 1) + " (" + specs[i - 1].describe() +
                              ") produces " + flow_string(flow) + " but layer " + std::to_string(i) +
                              " (" + spec.describe() + ") expects " + flow_string(need));
        }
        flow = produce;
    }
}

void check_finite(const Tensor& t, std::size_t layer, const Layer& l) {
    if (!t.all_finite()) {
        throw NumericError("non-finite activation at layer " + std::to_string(layer) + " (" +
                           l.describe() + ")");
    }
}

}  // namespace

Network::Network(std::vector<LayerSpec> specs) : specs_(std::move(specs)) {
    validate(specs_);
    layers_.reserve(specs_.size());
    for (const auto& s : specs_) layers_.push_back(make_layer(s));
}

Network::Network(const Network& other) : specs_(other.specs_) {
    layers_.reserve(other.layers_.size());
    for (const auto& l : other.layers_) layers_.push_back(l->clone());
}

Network& Network::operator=(const Network& other) {
    if (this != &other) {
        Network copy(other);
        *this = std::move(copy);
    }
    return *this;
}

std::size_t Network::param_count() const {
    std::size_t n = 0;
    for (const auto& l : layers_) {
        for (const auto& p : l->parameters()) n += p.value.size();
    }
    return n;
}

std::vector<Tensor> Network::forward(const Tensor& batch) const {
    std::vector<Tensor> out;
    out.reserve(layers_.size());
    const Tensor* current = &batch;
    for (std::size_t i = 0; i < layers_.size(); ++i) {
        out.push_back(layers_[i]->infer(*current));
        check_finite(out.back(), i, *layers_[i]);
        current = &out.back();
    }
    return out;
}

Tensor Network::run_layers(const Tensor& batch, std::size_t begin, std::size_t end,
                           std::size_t chunk) const {
    if (begin > end || end > layers_.size()) throw ConfigError("run_layers: bad layer range");
    if (begin == end) return batch;
    auto run_chunk = [&](const Tensor& x) {
        Tensor cur = x;
        for (std::size_t i = begin; i < end; ++i) {
            cur = layers_[i]->infer(cur);
            check_finite(cur, i, *layers_[i]);
        }
        return cur;
    };
    if (batch.rows() <= chunk) return run_chunk(batch);

    Tensor result;
    std::vector<std::size_t> rows;
    for (std::size_t start = 0; start < batch.rows(); start += chunk) {
        const std::size_t stop = std::min(batch.rows(), start + chunk);
        rows.resize(stop - start);
        for (std::size_t r = start; r < stop; ++r) rows[r - start] = r;
        Tensor part = run_chunk(gather_rows(batch, rows));
        if (start == 0) {
            Tensor::Shape shape = part.shape();
            shape[0] = batch.rows();
            result = Tensor(shape);
        }
        std::copy(part.values().begin(), part.values().end(),
                  result.values().begin() + std::ptrdiff_t(start * part.row_size()));
    }
    return result;
}

Tensor Network::forward_train(const Tensor& batch, Trace& trace) {
    trace.caches.assign(layers_.size(), LayerCache{});
    Tensor current = batch;
    for (std::size_t i = 0; i < layers_.size(); ++i) {
        current = layers_[i]->forward_train(current, trace.caches[i]);
        check_finite(current, i, *layers_[i]);
    }
    return current;
}

Tensor Network::backward(const Trace& trace, const Tensor& grad_output) {
    if (trace.caches.size() != layers_.size()) throw ConfigError("backward: trace does not match network");
    Tensor grad = grad_output;
    for (std::size_t i = layers_.size(); i-- > 0;) grad = layers_[i]->backward(grad, trace.caches[i]);
    return grad;
}

void Network::zero_grad() {
    for (auto& l : layers_) {
        for (auto& p : l->parameters()) p.grad.fill(0.0);
    }
}

std::vector<Parameter*> Network::parameters() {
    std::vector<Parameter*> out;
    for (auto& l : layers_) {
        for (auto& p : l->parameters()) out.push_back(&p);
    }
    return out;
}

std::vector<const Parameter*> Network::parameters() const {
    std::vector<const Parameter*> out;
    for (const auto& l : layers_) {
        for (const auto& p : l->parameters()) out.push_back(&p);
    }
    return out;
}

std::vector<Tensor*> Network::state() {
    std::vector<Tensor*> out;
    for (auto& l : layers_) {
        for (auto& p : l->parameters()) out.push_back(&p.value);
        for (auto& b : l->buffers()) out.push_back(&b);
    }
    return out;
}

std::vector<const Tensor*> Network::state() const {
    std::vector<const Tensor*> out;
    for (const auto& l : layers_) {
        for (const auto& p : l->parameters()) out.push_back(&p.value);
        for (const auto& b : l->buffers()) out.push_back(&b);
    }
    return out;
}

std::uint64_t Network::checksum() const {
    std::uint64_t hash = 0xcbf29ce484222325ULL;
    for (const Tensor* t : state()) hash = nn::checksum(t->values(), hash);
    return hash;
}

void Network::fill_parameters(double value) {
    for (auto* p : parameters()) p->value.fill(value);
}

std::optional<std::size_t> Network::slot_index() const {
    for (std::size_t i = 0; i < specs_.size(); ++i) {
        if (std::holds_alternative<CwSlotSpec>(specs_[i].kind)) return i;
    }
    return std::nullopt;
}

void Network::fill_slot(std::unique_ptr<Layer> layer) {
    const auto at = slot_index();
    if (!at) throw ConfigError("network has no CwSlot to fill");
    layers_[*at] = std::move(layer);
}

Network build_network(std::vector<LayerSpec> specs, std::uint64_t seed) {
    Network net(std::move(specs));
    std::mt19937_64 rng(seed);
    for (std::size_t i = 0; i < net.size(); ++i) {
        const auto& spec = net.specs()[i];
        std::size_t fan_in = 0, fan_out = 0;
        if (auto* d = std::get_if<DenseSpec>(&spec.kind)) {
            fan_in = d->in;
            fan_out = d->out;
        } else if (auto* c = std::get_if<Conv2dSpec>(&spec.kind)) {
            fan_in = c->in_channels * c->kernel * c->kernel;
            fan_out = c->filters * c->kernel * c->kernel;
        } else {
            continue;
        }
        const double limit = std::sqrt(6.0 / double(fan_in + fan_out));
        std::uniform_real_distribution<double> dist(-limit, limit);
        auto params = net.layer(i).parameters();
        for (double& w : params[0].value.values()) w = dist(rng);
        params[1].value.fill(0.0);
    }
    return net;
}

}  // namespace clab::nn
