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
#include <cmath>

#include "clab/error.hpp"
#include "clab/nn/layer.hpp"

namespace clab::nn {

double sigmoid(double z) noexcept {
    if (z >= 0) return 1.0 / (1.0 + std::exp(-z));
    const double e = std::exp(z);
    return e / (1.0 + e);
}

void apply_activation(Activation act, Tensor& values) noexcept {
    switch (act) {
        case Activation::identity:
            return;
        case Activation::relu:
            for (double& v : values.values()) v = v > 0 ? v : 0.0;
            return;
        case Activation::sigmoid:
            for (double& v : values.values()) v = sigmoid(v);
            return;
    }
}

void activation_backward(Activation act, const Tensor& output, Tensor& grad) noexcept {
    auto out = output.values();
    auto g = grad.values();
    switch (act) {
        case Activation::identity:
            return;
        case Activation::relu:
            for (std::size_t i = 0; i < g.size(); ++i) {
                if (!(out[i] > 0)) g[i] = 0.0;
            }
            return;
        case Activation::sigmoid:
            for (std::size_t i = 0; i < g.size(); ++i) g[i] *= out[i] * (1.0 - out[i]);
            return;
    }
}

namespace {

std::string act_suffix(Activation act) {
    return act == Activation::identity ? "" : ", " + to_string(act);
}

Tensor::Shape require_image(const Tensor::Shape& in, std::size_t channels, const std::string& who) {
    if (in.size() != 4) {
        throw ConfigError(who + " expects an NxCxHxW input, got " + shape_string(in));
    }
    if (channels != 0 && in[1] != channels) {
        throw ConfigError(who + " expects " + std::to_string(channels) + " channels, got " +
                          shape_string(in));
    }
    return in;
}

// ---------------------------------------------------------------------------

class DenseLayer final : public Layer {
public:
    DenseLayer(DenseSpec spec, Activation act) : Layer(act), spec_(spec) {
        params_.push_back({"weight", Tensor({spec.in, spec.out}), Tensor({spec.in, spec.out})});
        params_.push_back({"bias", Tensor({1, spec.out}), Tensor({1, spec.out})});
    }

    std::string describe() const override {
        return "Dense{" + std::to_string(spec_.in) + "->" + std::to_string(spec_.out) +
               act_suffix(activation_) + "}";
    }

    Tensor::Shape output_shape(const Tensor::Shape& in) const override {
        if (in.size() < 2 || shape_volume(in) / std::max<std::size_t>(in[0], 1) != spec_.in) {
            throw ConfigError(describe() + " expects rows of width " + std::to_string(spec_.in) +
                              ", got " + shape_string(in));
        }
        return {in[0], spec_.out};
    }

    Tensor infer(const Tensor& input) const override {
        Tensor out(output_shape(input.shape()));
        if (input.rows() == 0) return out;
        auto w = params_[0].value.as_matrix();
        auto b = params_[1].value.as_matrix();
        auto o = out.as_matrix();
        o.noalias() = input.as_matrix() * w;
        o.rowwise() += b.row(0);
        apply_activation(activation_, out);
        return out;
    }

    Tensor forward_train(const Tensor& input, LayerCache& cache) override {
        cache.input = input;
        cache.output = infer(input);
        return cache.output;
    }

    Tensor backward(const Tensor& grad_output, const LayerCache& cache) override {
        Tensor g = grad_output;
        activation_backward(activation_, cache.output, g);
        auto gm = g.as_matrix();
        params_[0].grad.as_matrix().noalias() += cache.input.as_matrix().transpose() * gm;
        params_[1].grad.as_matrix().row(0) += gm.colwise().sum();
        Tensor grad_in(cache.input.shape());
        grad_in.as_matrix().noalias() = gm * params_[0].value.as_matrix().transpose();
        return grad_in;
    }

    std::unique_ptr<Layer> clone() const override { return std::make_unique<DenseLayer>(*this); }

private:
    DenseSpec spec_;
};

// ---------------------------------------------------------------------------

class Conv2dLayer final : public Layer {
public:
    Conv2dLayer(Conv2dSpec spec, Activation act) : Layer(act), spec_(spec) {
        if (spec.kernel == 0 || spec.stride == 0) throw ConfigError("Conv2d kernel/stride must be >= 1");
        const std::size_t k = patch_size();
        params_.push_back({"weight", Tensor({spec.filters, k}), Tensor({spec.filters, k})});
        params_.push_back({"bias", Tensor({1, spec.filters}), Tensor({1, spec.filters})});
    }

    std::string describe() const override {
        std::string pad = spec_.padding ? ", pad " + std::to_string(spec_.padding) : "";
        return "Conv2d{" + std::to_string(spec_.in_channels) + "->" + std::to_string(spec_.filters) +
               ", k" + std::to_string(spec_.kernel) + pad + act_suffix(activation_) + "}";
    }

    Tensor::Shape output_shape(const Tensor::Shape& in) const override {
        require_image(in, spec_.in_channels, describe());
        const std::size_t h = in[2] + 2 * spec_.padding;
        const std::size_t w = in[3] + 2 * spec_.padding;
        if (h < spec_.kernel || w < spec_.kernel) {
            throw ConfigError(describe() + ": input map " + shape_string(in) + " smaller than kernel");
        }
        return {in[0], spec_.filters, (h - spec_.kernel) / spec_.stride + 1,
                (w - spec_.kernel) / spec_.stride + 1};
    }

    Tensor infer(const Tensor& input) const override {
        Tensor cols;
        return run(input, cols);
    }

    Tensor forward_train(const Tensor& input, LayerCache& cache) override {
        cache.input = input;
        cache.output = run(input, cache.aux);
        return cache.output;
    }

    Tensor backward(const Tensor& grad_output, const LayerCache& cache) override {
        Tensor g = grad_output;
        activation_backward(activation_, cache.output, g);
        const auto& in = cache.input.shape();
        const std::size_t n = in[0], f = spec_.filters;
        const std::size_t plane = g.dim(2) * g.dim(3);
        RowMatrix gm(f, n * plane);
        for (std::size_t b = 0; b < n; ++b) {
            for (std::size_t c = 0; c < f; ++c) {
                const double* src = g.values().data() + (b * f + c) * plane;
                std::copy_n(src, plane, gm.data() + c * n * plane + b * plane);
            }
        }
        auto cols = cache.aux.as_matrix();
        params_[0].grad.as_matrix().noalias() += gm * cols.transpose();
        params_[1].grad.as_matrix().row(0) += gm.rowwise().sum().transpose();
        RowMatrix dcols = params_[0].value.as_matrix().transpose() * gm;
        Tensor grad_in(in);
        col2im(dcols, in, g.dim(2), g.dim(3), grad_in);
        return grad_in;
    }

    std::unique_ptr<Layer> clone() const override { return std::make_unique<Conv2dLayer>(*this); }

private:
    std::size_t patch_size() const { return spec_.in_channels * spec_.kernel * spec_.kernel; }

    Tensor run(const Tensor& input, Tensor& cols) const {
        Tensor::Shape out_shape = output_shape(input.shape());
        const std::size_t n = out_shape[0], f = spec_.filters;
        const std::size_t oh = out_shape[2], ow = out_shape[3], plane = oh * ow;
        cols = Tensor({patch_size(), n * plane});
        im2col(input, oh, ow, cols);
        RowMatrix om = params_[0].value.as_matrix() * cols.as_matrix();
        Tensor out(out_shape);
        const auto bias = params_[1].value.values();
        for (std::size_t b = 0; b < n; ++b) {
            for (std::size_t c = 0; c < f; ++c) {
                const double* src = om.data() + c * n * plane + b * plane;
                double* dst = out.values().data() + (b * f + c) * plane;
                for (std::size_t p = 0; p < plane; ++p) dst[p] = src[p] + bias[c];
            }
        }
        apply_activation(activation_, out);
        return out;
    }

    void im2col(const Tensor& input, std::size_t oh, std::size_t ow, Tensor& cols) const {
        const auto& s = input.shape();
        const std::size_t n = s[0], ch = s[1], h = s[2], w = s[3];
        const std::size_t k = spec_.kernel, plane = oh * ow, width = n * plane;
        const long pad = long(spec_.padding);
        double* dst = cols.values().data();
        const double* src = input.values().data();
        for (std::size_t c = 0; c < ch; ++c) {
            for (std::size_t ki = 0; ki < k; ++ki) {
                for (std::size_t kj = 0; kj < k; ++kj) {
                    double* row = dst + ((c * k + ki) * k + kj) * width;
                    for (std::size_t b = 0; b < n; ++b) {
                        const double* img = src + (b * ch + c) * h * w;
                        for (std::size_t oy = 0; oy < oh; ++oy) {
                            const long iy = long(oy * spec_.stride + ki) - pad;
                            double* out = row + b * plane + oy * ow;
                            if (iy < 0 || iy >= long(h)) {
                                std::fill_n(out, ow, 0.0);
                                continue;
                            }
                            for (std::size_t ox = 0; ox < ow; ++ox) {
                                const long ix = long(ox * spec_.stride + kj) - pad;
                                out[ox] = (ix < 0 || ix >= long(w)) ? 0.0 : img[iy * long(w) + ix];
                            }
                        }
                    }
                }
            }
        }
    }

    void col2im(const RowMatrix& dcols, const Tensor::Shape& s, std::size_t oh, std::size_t ow,
                Tensor& grad_in) const {
        const std::size_t n = s[0], ch = s[1], h = s[2], w = s[3];
        const std::size_t k = spec_.kernel, plane = oh * ow, width = n * plane;
        const long pad = long(spec_.padding);
        double* dst = grad_in.values().data();
        for (std::size_t c = 0; c < ch; ++c) {
            for (std::size_t ki = 0; ki < k; ++ki) {
                for (std::size_t kj = 0; kj < k; ++kj) {
                    const double* row = dcols.data() + ((c * k + ki) * k + kj) * width;
                    for (std::size_t b = 0; b < n; ++b) {
                        double* img = dst + (b * ch + c) * h * w;
                        for (std::size_t oy = 0; oy < oh; ++oy) {
                            const long iy = long(oy * spec_.stride + ki) - pad;
                            if (iy < 0 || iy >= long(h)) continue;
                            const double* src = row + b * plane + oy * ow;
                            for (std::size_t ox = 0; ox < ow; ++ox) {
                                const long ix = long(ox * spec_.stride + kj) - pad;
                                if (ix >= 0 && ix < long(w)) img[iy * long(w) + ix] += src[ox];
                            }
                        }
                    }
                }
            }
        }
    }

    Conv2dSpec spec_;
};

// ---------------------------------------------------------------------------

constexpr double kBatchNormMomentum = 0.9;
constexpr double kBatchNormEpsilon = 1e-5;

class BatchNormLayer final : public Layer {
public:
    BatchNormLayer(BatchNormSpec spec, Activation act) : Layer(act), spec_(spec) {
        params_.push_back({"gamma", Tensor({1, spec.channels}, 1.0), Tensor({1, spec.channels})});
        params_.push_back({"beta", Tensor({1, spec.channels}), Tensor({1, spec.channels})});
        buffers_.emplace_back(Tensor::Shape{1, spec.channels}, 0.0);  // running mean
        buffers_.emplace_back(Tensor::Shape{1, spec.channels}, 1.0);  // running variance
    }

    std::string describe() const override {
        return "BatchNorm{" + std::to_string(spec_.channels) + act_suffix(activation_) + "}";
    }

    Tensor::Shape output_shape(const Tensor::Shape& in) const override {
        if ((in.size() != 2 && in.size() != 4) || in[1] != spec_.channels) {
            throw ConfigError(describe() + " expects NxC or NxCxHxW with C=" +
                              std::to_string(spec_.channels) + ", got " + shape_string(in));
        }
        return in;
    }

    Tensor infer(const Tensor& input) const override {
        output_shape(input.shape());
        Tensor out(input.shape());
        const std::size_t c_count = spec_.channels, spatial = spatial_size(input);
        const auto mean = buffers_[0].values();
        const auto var = buffers_[1].values();
        const auto gamma = params_[0].value.values();
        const auto beta = params_[1].value.values();
        for (std::size_t b = 0; b < input.rows(); ++b) {
            for (std::size_t c = 0; c < c_count; ++c) {
                const double scale = gamma[c] / std::sqrt(var[c] + kBatchNormEpsilon);
                const std::size_t base = (b * c_count + c) * spatial;
                for (std::size_t s = 0; s < spatial; ++s) {
                    out[base + s] = (input[base + s] - mean[c]) * scale + beta[c];
                }
            }
        }
        apply_activation(activation_, out);
        return out;
    }

    Tensor forward_train(const Tensor& input, LayerCache& cache) override {
        output_shape(input.shape());
        const std::size_t c_count = spec_.channels, spatial = spatial_size(input);
        const std::size_t n = input.rows();
        const double m = double(n * spatial);
        if (n * spatial < 2) throw ConfigError(describe() + " needs at least two values per channel");
        std::vector<double> mean(c_count, 0.0), var(c_count, 0.0);
        for (std::size_t b = 0; b < n; ++b) {
            for (std::size_t c = 0; c < c_count; ++c) {
                const std::size_t base = (b * c_count + c) * spatial;
                for (std::size_t s = 0; s < spatial; ++s) mean[c] += input[base + s];
            }
        }
        for (double& v : mean) v /= m;
        for (std::size_t b = 0; b < n; ++b) {
            for (std::size_t c = 0; c < c_count; ++c) {
                const std::size_t base = (b * c_count + c) * spatial;
                for (std::size_t s = 0; s < spatial; ++s) {
                    const double d = input[base + s] - mean[c];
                    var[c] += d * d;
                }
            }
        }
        for (double& v : var) v /= m;

        cache.stats.assign(c_count, 0.0);
        for (std::size_t c = 0; c < c_count; ++c) cache.stats[c] = 1.0 / std::sqrt(var[c] + kBatchNormEpsilon);

        auto running_mean = buffers_[0].values();
        auto running_var = buffers_[1].values();
        for (std::size_t c = 0; c < c_count; ++c) {
            running_mean[c] = kBatchNormMomentum * running_mean[c] + (1 - kBatchNormMomentum) * mean[c];
            running_var[c] = kBatchNormMomentum * running_var[c] +
                             (1 - kBatchNormMomentum) * var[c] * m / (m - 1);
        }

        cache.aux = Tensor(input.shape());
        Tensor out(input.shape());
        const auto gamma = params_[0].value.values();
        const auto beta = params_[1].value.values();
        for (std::size_t b = 0; b < n; ++b) {
            for (std::size_t c = 0; c < c_count; ++c) {
                const std::size_t base = (b * c_count + c) * spatial;
                for (std::size_t s = 0; s < spatial; ++s) {
                    const double xhat = (input[base + s] - mean[c]) * cache.stats[c];
                    cache.aux[base + s] = xhat;
                    out[base + s] = gamma[c] * xhat + beta[c];
                }
            }
        }
        apply_activation(activation_, out);
        cache.output = out;
        return out;
    }

    Tensor backward(const Tensor& grad_output, const LayerCache& cache) override {
        Tensor g = grad_output;
        activation_backward(activation_, cache.output, g);
        const Tensor& xhat = cache.aux;
        const std::size_t c_count = spec_.channels, spatial = spatial_size(g), n = g.rows();
        const double m = double(n * spatial);
        std::vector<double> sum_g(c_count, 0.0), sum_gx(c_count, 0.0);
        for (std::size_t b = 0; b < n; ++b) {
            for (std::size_t c = 0; c < c_count; ++c) {
                const std::size_t base = (b * c_count + c) * spatial;
                for (std::size_t s = 0; s < spatial; ++s) {
                    sum_g[c] += g[base + s];
                    sum_gx[c] += g[base + s] * xhat[base + s];
                }
            }
        }
        auto dgamma = params_[0].grad.values();
        auto dbeta = params_[1].grad.values();
        const auto gamma = params_[0].value.values();
        for (std::size_t c = 0; c < c_count; ++c) {
            dgamma[c] += sum_gx[c];
            dbeta[c] += sum_g[c];
        }
        Tensor grad_in(g.shape());
        for (std::size_t b = 0; b < n; ++b) {
            for (std::size_t c = 0; c < c_count; ++c) {
                const double k = gamma[c] * cache.stats[c] / m;
                const std::size_t base = (b * c_count + c) * spatial;
                for (std::size_t s = 0; s < spatial; ++s) {
                    grad_in[base + s] = k * (m * g[base + s] - sum_g[c] - xhat[base + s] * sum_gx[c]);
                }
            }
        }
        return grad_in;
    }

    std::unique_ptr<Layer> clone() const override { return std::make_unique<BatchNormLayer>(*this); }

private:
    std::size_t spatial_size(const Tensor& t) const {
        return t.rows() == 0 ? 0 : t.size() / (t.rows() * spec_.channels);
    }

    BatchNormSpec spec_;
};

// ---------------------------------------------------------------------------

class MaxPoolLayer final : public Layer {
public:
    explicit MaxPoolLayer(MaxPoolSpec spec) : spec_(spec) {
        if (spec.size == 0 || spec.stride == 0) throw ConfigError("MaxPool size/stride must be >= 1");
    }

    std::string describe() const override {
        return "MaxPool{" + std::to_string(spec_.size) + ", stride " + std::to_string(spec_.stride) + "}";
    }

    Tensor::Shape output_shape(const Tensor::Shape& in) const override {
        require_image(in, 0, describe());
        if (in[2] < spec_.size || in[3] < spec_.size) {
            throw ConfigError(describe() + ": input map " + shape_string(in) + " smaller than window");
        }
        return {in[0], in[1], (in[2] - spec_.size) / spec_.stride + 1,
                (in[3] - spec_.size) / spec_.stride + 1};
    }

    Tensor infer(const Tensor& input) const override {
        std::vector<std::size_t> index;
        return run(input, index);
    }

    Tensor forward_train(const Tensor& input, LayerCache& cache) override {
        cache.input = Tensor(input.shape());  // only the shape is needed for backward
        cache.output = run(input, cache.index);
        return cache.output;
    }

    Tensor backward(const Tensor& grad_output, const LayerCache& cache) override {
        Tensor grad_in(cache.input.shape());
        for (std::size_t i = 0; i < grad_output.size(); ++i) grad_in[cache.index[i]] += grad_output[i];
        return grad_in;
    }

    std::unique_ptr<Layer> clone() const override { return std::make_unique<MaxPoolLayer>(*this); }

private:
    // Ties resolve to the first element in row-major window order.
    Tensor run(const Tensor& input, std::vector<std::size_t>& index) const {
        Tensor out(output_shape(input.shape()));
        const auto& s = input.shape();
        const std::size_t planes = s[0] * s[1], h = s[2], w = s[3];
        const std::size_t oh = out.dim(2), ow = out.dim(3);
        index.assign(out.size(), 0);
        std::size_t o = 0;
        for (std::size_t p = 0; p < planes; ++p) {
            const std::size_t base = p * h * w;
            for (std::size_t oy = 0; oy < oh; ++oy) {
                for (std::size_t ox = 0; ox < ow; ++ox, ++o) {
                    std::size_t best = base + oy * spec_.stride * w + ox * spec_.stride;
                    for (std::size_t dy = 0; dy < spec_.size; ++dy) {
                        for (std::size_t dx = 0; dx < spec_.size; ++dx) {
                            const std::size_t at = base + (oy * spec_.stride + dy) * w + ox * spec_.stride + dx;
                            if (input[at] > input[best]) best = at;
                        }
                    }
                    out[o] = input[best];
                    index[o] = best;
                }
            }
        }
        return out;
    }

    MaxPoolSpec spec_;
};

// ---------------------------------------------------------------------------

class GlobalAvgPoolLayer final : public Layer {
public:
    std::string describe() const override { return "GlobalAvgPool"; }

    Tensor::Shape output_shape(const Tensor::Shape& in) const override {
        require_image(in, 0, describe());
        return {in[0], in[1]};
    }

    Tensor infer(const Tensor& input) const override {
        Tensor out(output_shape(input.shape()));
        const std::size_t plane = input.dim(2) * input.dim(3);
        for (std::size_t i = 0; i < out.size(); ++i) {
            double sum = 0;
            for (std::size_t p = 0; p < plane; ++p) sum += input[i * plane + p];
            out[i] = sum / double(plane);
        }
        return out;
    }

    Tensor forward_train(const Tensor& input, LayerCache& cache) override {
        cache.input = Tensor(input.shape());
        return infer(input);
    }

    Tensor backward(const Tensor& grad_output, const LayerCache& cache) override {
        Tensor grad_in(cache.input.shape());
        const std::size_t plane = grad_in.dim(2) * grad_in.dim(3);
        for (std::size_t i = 0; i < grad_output.size(); ++i) {
            const double g = grad_output[i] / double(plane);
            for (std::size_t p = 0; p < plane; ++p) grad_in[i * plane + p] = g;
        }
        return grad_in;
    }

    std::unique_ptr<Layer> clone() const override { return std::make_unique<GlobalAvgPoolLayer>(*this); }
};

// ---------------------------------------------------------------------------

class EmptySlotLayer final : public Layer {
public:
    EmptySlotLayer(CwSlotSpec spec, Activation act) : Layer(act), spec_(spec) {}

    std::string describe() const override {
        return "CwSlot{" + std::to_string(spec_.channels) + act_suffix(activation_) + ", empty}";
    }

    Tensor::Shape output_shape(const Tensor::Shape& in) const override {
        return require_image(in, spec_.channels, describe());
    }

    Tensor infer(const Tensor& input) const override {
        output_shape(input.shape());
        Tensor out = input;
        apply_activation(activation_, out);
        return out;
    }

    Tensor forward_train(const Tensor& input, LayerCache& cache) override {
        cache.output = infer(input);
        return cache.output;
    }

    Tensor backward(const Tensor& grad_output, const LayerCache& cache) override {
        Tensor g = grad_output;
        activation_backward(activation_, cache.output, g);
        return g;
    }

    std::unique_ptr<Layer> clone() const override { return std::make_unique<EmptySlotLayer>(*this); }

private:
    CwSlotSpec spec_;
};

}  // namespace

std::unique_ptr<Layer> make_layer(const LayerSpec& spec) {
    struct Visitor {
        Activation act;
        std::unique_ptr<Layer> operator()(const DenseSpec& s) const {
            return std::make_unique<DenseLayer>(s, act);
        }
        std::unique_ptr<Layer> operator()(const Conv2dSpec& s) const {
            return std::make_unique<Conv2dLayer>(s, act);
        }
        std::unique_ptr<Layer> operator()(const BatchNormSpec& s) const {
            return std::make_unique<BatchNormLayer>(s, act);
        }
        std::unique_ptr<Layer> operator()(const MaxPoolSpec& s) const {
            return std::make_unique<MaxPoolLayer>(s);
        }
        std::unique_ptr<Layer> operator()(const GlobalAvgPoolSpec&) const {
            return std::make_unique<GlobalAvgPoolLayer>();
        }
        std::unique_ptr<Layer> operator()(const CwSlotSpec& s) const {
            return std::make_unique<EmptySlotLayer>(s, act);
        }
    };
    return std::visit(Visitor{spec.activation}, spec.kind);
}

}  // namespace clab::nn
