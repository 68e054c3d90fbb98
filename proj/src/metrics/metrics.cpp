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
#include "clab/metrics/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <ostream>

#include <Eigen/Eigenvalues>

#include "clab/data/dataset.hpp"
#include "clab/error.hpp"

namespace clab::metrics {

std::vector<double> average_ranks(std::span<const double> values) {
    const std::size_t n = values.size();
    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return values[a] < values[b]; });
    std::vector<double> ranks(n);
    for (std::size_t i = 0; i < n;) {
        std::size_t j = i;
        while (j + 1 < n && values[order[j + 1]] == values[order[i]]) ++j;
        const double r = (double(i) + double(j)) / 2.0 + 1.0;
        for (std::size_t t = i; t <= j; ++t) ranks[order[t]] = r;
        i = j + 1;
    }
    return ranks;
}

double auc(std::span<const double> scores, std::span<const double> labels) {
    if (scores.size() != labels.size()) throw ConfigError("auc: scores and labels differ in length");
    double pos = 0, rank_sum = 0;
    for (double y : labels) {
        if (y != 0.0 && y != 1.0) throw ConfigError("auc: labels must be 0 or 1");
        pos += y;
    }
    const double neg = double(labels.size()) - pos;
    if (pos == 0 || neg == 0) throw UndefinedMetric("auc: labels contain a single class");
    for (double s : scores) {
        if (std::isnan(s)) throw NumericError("auc: NaN score");
    }
    const auto ranks = average_ranks(scores);
    for (std::size_t i = 0; i < ranks.size(); ++i) rank_sum += labels[i] * ranks[i];
    return (rank_sum - pos * (pos + 1) / 2) / (pos * neg);
}

double pearson(std::span<const double> x, std::span<const double> y) {
    if (x.size() != y.size()) throw ConfigError("pearson: lengths differ");
    const std::size_t n = x.size();
    if (n < 2) throw UndefinedMetric("pearson: need at least two points");
    const double mx = std::accumulate(x.begin(), x.end(), 0.0) / double(n);
    const double my = std::accumulate(y.begin(), y.end(), 0.0) / double(n);
    double sxy = 0, sxx = 0, syy = 0;
    for (std::size_t i = 0; i < n; ++i) {
        sxy += (x[i] - mx) * (y[i] - my);
        sxx += (x[i] - mx) * (x[i] - mx);
        syy += (y[i] - my) * (y[i] - my);
    }
    if (sxx == 0 || syy == 0) throw UndefinedMetric("pearson: zero variance");
    return std::clamp(sxy / std::sqrt(sxx * syy), -1.0, 1.0);
}

double spearman(std::span<const double> x, std::span<const double> y) {
    const auto rx = average_ranks(x), ry = average_ranks(y);
    return pearson(rx, ry);
}

MeanStd mean_std(std::span<const double> values) {
    MeanStd out;
    if (values.empty()) return out;
    out.mean = std::accumulate(values.begin(), values.end(), 0.0) / double(values.size());
    double ss = 0;
    for (double v : values) ss += (v - out.mean) * (v - out.mean);
    out.std = std::sqrt(ss / double(values.size()));
    return out;
}

PurityMatrix purity_matrix(std::span<const PurityTrial> trials, bool folded) {
    if (trials.empty()) throw ConfigError("purity_matrix: no trials");
    PurityMatrix m;
    m.concepts = trials[0].concepts.row_size();
    m.dims = trials[0].activations.row_size();
    m.trials = trials.size();
    m.folded = folded;
    for (std::size_t j = 0; j < m.concepts; ++j) m.concept_names.push_back("c" + std::to_string(j));
    for (std::size_t b = 0; b < m.dims; ++b) m.dim_names.push_back("d" + std::to_string(b));
    m.cells.assign(m.concepts * m.dims, PurityCell{true, 0.0, 0.0, {}});
    for (const auto& t : trials) {
        if (t.concepts.row_size() != m.concepts || t.activations.row_size() != m.dims ||
            t.concepts.rows() != t.activations.rows()) {
            throw ConfigError("purity_matrix: trial shapes differ");
        }
        for (std::size_t j = 0; j < m.concepts; ++j) {
            const nn::Tensor labels = nn::select_columns(t.concepts, std::vector<std::size_t>{j});
            for (std::size_t b = 0; b < m.dims; ++b) {
                auto& cell = m.cells[j * m.dims + b];
                if (!cell.defined) continue;
                const nn::Tensor scores = nn::select_columns(t.activations, std::vector<std::size_t>{b});
                try {
                    double a = auc(scores.values(), labels.values());
                    cell.values.push_back(folded ? std::max(a, 1 - a) : a);
                } catch (const UndefinedMetric&) {
                    cell.defined = false;
                    cell.values.clear();
                }
            }
        }
    }
    for (auto& cell : m.cells) {
        if (!cell.defined) continue;
        const auto ms = mean_std(cell.values);
        cell.mean = ms.mean;
        cell.std = ms.std;
    }
    return m;
}

void write_csv(const PurityMatrix& m, std::ostream& out) {
    out << "concept";
    for (const auto& d : m.dim_names) out << ',' << d << "_mean," << d << "_std";
    out << '\n';
    for (std::size_t j = 0; j < m.concepts; ++j) {
        out << m.concept_names[j];
        for (std::size_t b = 0; b < m.dims; ++b) {
            const auto& c = m.at(j, b);
            if (c.defined) {
                out << ',' << data::format_double(c.mean) << ',' << data::format_double(c.std);
            } else {
                out << ",,";
            }
        }
        out << '\n';
    }
}

namespace {

void fix_sign(Eigen::Ref<Eigen::VectorXd> v) {
    Eigen::Index at = 0;
    v.cwiseAbs().maxCoeff(&at);
    if (v[at] < 0) v = -v;
}

}  // namespace

Pca pca(const nn::Tensor& x, std::size_t n_components, PcaMethod method) {
    const std::size_t n = x.rows(), d = x.row_size();
    if (n < 2) throw ConfigError("pca: need at least two rows");
    if (n_components == 0 || n_components > d) throw ConfigError("pca: n_components must be in [1, d]");
    const auto xm = x.as_matrix();
    Pca out;
    out.mean = xm.colwise().mean().transpose();
    const Eigen::MatrixXd centered = xm.rowwise() - out.mean.transpose();
    Eigen::MatrixXd cov = Eigen::MatrixXd::Zero(Eigen::Index(d), Eigen::Index(d));
    cov.selfadjointView<Eigen::Lower>().rankUpdate(centered.transpose(), 1.0 / double(n - 1));
    cov = cov.selfadjointView<Eigen::Lower>();

    out.components.resize(Eigen::Index(d), Eigen::Index(n_components));
    out.variance.resize(Eigen::Index(n_components));
    if (method == PcaMethod::automatic) method = d > 256 ? PcaMethod::power : PcaMethod::eigen;
    if (method == PcaMethod::eigen) {
        Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> solver(cov);
        for (std::size_t c = 0; c < n_components; ++c) {
            const Eigen::Index src = Eigen::Index(d - 1 - c);  // ascending order from the solver
            out.components.col(Eigen::Index(c)) = solver.eigenvectors().col(src);
            out.variance[Eigen::Index(c)] = std::max(0.0, solver.eigenvalues()[src]);
        }
    } else {
        Eigen::MatrixXd deflated = cov;
        for (std::size_t c = 0; c < n_components; ++c) {
            // Deterministic start with weight on every axis.
            Eigen::VectorXd v = Eigen::VectorXd::LinSpaced(Eigen::Index(d), 1.0, 2.0).normalized();
            double lambda = 0;
            for (int it = 0; it < 100000; ++it) {
                Eigen::VectorXd next = deflated * v;
                const double norm = next.norm();
                if (norm == 0) break;
                next /= norm;
                const double change = std::min((next - v).norm(), (next + v).norm());
                v = next;
                lambda = norm;
                if (change < 1e-9) break;
            }
            lambda = v.dot(deflated * v);
            out.components.col(Eigen::Index(c)) = v;
            out.variance[Eigen::Index(c)] = std::max(0.0, lambda);
            deflated -= lambda * v * v.transpose();
        }
    }
    for (Eigen::Index c = 0; c < out.components.cols(); ++c) fix_sign(out.components.col(c));
    out.projections = project(out, x);
    return out;
}

nn::Tensor project(const Pca& p, const nn::Tensor& x) {
    if (x.row_size() != std::size_t(p.mean.size())) throw ConfigError("pca: feature width differs from the fit");
    const Eigen::MatrixXd proj = (x.as_matrix().rowwise() - p.mean.transpose()) * p.components;
    nn::Tensor out = nn::Tensor::matrix(x.rows(), std::size_t(p.components.cols()));
    out.as_matrix() = proj;
    return out;
}

std::vector<double> normalized_importance(std::span<const double> weights) {
    double total = 0;
    for (double w : weights) total += std::abs(w);
    std::vector<double> out(weights.size(), 0.0);
    if (total == 0) return out;
    for (std::size_t i = 0; i < weights.size(); ++i) out[i] = std::abs(weights[i]) / total;
    return out;
}

namespace {

std::vector<double> dense_column(const nn::Layer& layer) {
    const auto& w = layer.parameters()[0].value;
    if (w.row_size() != 1) throw ConfigError("importance: the inspected layer must have a single output");
    return {w.values().begin(), w.values().end()};
}

}  // namespace

std::vector<double> linear_importance(const nn::Network& h) {
    std::size_t dense = 0, at = 0;
    for (std::size_t i = 0; i < h.size(); ++i) {
        if (std::holds_alternative<nn::DenseSpec>(h.specs()[i].kind)) {
            ++dense;
            at = i;
        } else if (!h.layer(i).parameters().empty()) {
            ++dense;
        }
    }
    if (dense != 1) {
        throw ConfigError("linear_importance: h is not linear in its inputs (" + std::to_string(dense) +
                          " parameterized layers); use a probe-based importance for nonlinear models");
    }
    return normalized_importance(dense_column(h.layer(at)));
}

std::vector<double> final_layer_weights(const nn::Network& net) {
    for (std::size_t i = net.size(); i-- > 0;) {
        if (std::holds_alternative<nn::DenseSpec>(net.specs()[i].kind)) return dense_column(net.layer(i));
    }
    throw ConfigError("final_layer_weights: network has no Dense layer");
}

}  // namespace clab::metrics
