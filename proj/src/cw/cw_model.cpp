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
#include "clab/cw/cw_model.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <ostream>
#include <random>
#include <set>

#include <fmt/ranges.h>
#include <spdlog/spdlog.h>

#include "clab/error.hpp"
#include "clab/metrics/metrics.hpp"
#include "clab/seed.hpp"

namespace clab::cw {

using nn::Activation;
using nn::LayerSpec;
using nn::Tensor;

namespace {

constexpr std::uint64_t kRotationStream = 0x524f54;  // "ROT"
constexpr std::uint64_t kCheckStream = 0x43484b;     // "CHK"

std::vector<std::size_t> positives(const Tensor& concepts, std::size_t j) {
    std::vector<std::size_t> rows;
    for (std::size_t r = 0; r < concepts.rows(); ++r) {
        if (concepts.at(r, j) > 0.5) rows.push_back(r);
    }
    return rows;
}

Tensor channel_maps(const Tensor& maps, std::size_t channel) {
    const std::size_t n = maps.dim(0), c = maps.dim(1), plane = maps.dim(2) * maps.dim(3);
    Tensor out({n, 1, maps.dim(2), maps.dim(3)});
    for (std::size_t i = 0; i < n; ++i) {
        const double* src = maps.values().data() + (i * c + channel) * plane;
        std::copy(src, src + plane, out.values().data() + i * plane);
    }
    return out;
}

Tensor concept_column(const Tensor& concepts, std::size_t j) {
    std::vector<double> col(concepts.rows());
    for (std::size_t r = 0; r < col.size(); ++r) col[r] = concepts.at(r, j);
    return nn::column(col);
}

CheckRow to_row(std::size_t epoch, const AlignmentChecks& checks) {
    return {epoch, checks.corr_offdiag_mean, checks.axis_auc, checks.cos_within, checks.cos_between};
}

}  // namespace

void CwConfig::validate(std::size_t concept_count) const {
    train.validate();
    if (channels < 2) throw ConfigError("cw: need at least 2 channels");
    if (rotation_every == 0) throw ConfigError("cw: rotation_every must be positive");
    if (!(eta > 0.0)) throw ConfigError("cw: eta must be positive");
    if (image_side < 8) throw ConfigError("cw: images must be at least 8x8");
    std::set<std::size_t> axes;
    for (const auto& [concept_index, axis] : assignment) {
        if (concept_index >= concept_count) {
            throw ConfigError("cw: assigned concept " + std::to_string(concept_index) + " not in dataset");
        }
        if (axis >= channels) throw ConfigError("cw: axis " + std::to_string(axis) + " out of range");
        if (!axes.insert(axis).second) throw ConfigError("cw: axis " + std::to_string(axis) + " assigned twice");
    }
}

std::vector<LayerSpec> cw_cnn_specs(std::size_t channels, bool whitening) {
    const auto block = [](std::size_t in, std::size_t out) {
        return std::vector<LayerSpec>{LayerSpec::conv(in, out, Activation::identity, 1),
                                      LayerSpec::batch_norm(out, Activation::relu)};
    };
    std::vector<LayerSpec> specs;
    const auto append = [&](std::vector<LayerSpec> more) { specs.insert(specs.end(), more.begin(), more.end()); };
    append(block(1, 8));
    append(block(8, 16));
    specs.push_back(LayerSpec::max_pool());
    append(block(16, 32));
    append(block(32, 16));
    specs.push_back(LayerSpec::max_pool());
    specs.push_back(LayerSpec::conv(16, channels, Activation::identity, 1));
    // Summaries are read straight off the slot, so it carries no activation.
    specs.push_back(whitening ? LayerSpec::cw_slot(channels) : LayerSpec::batch_norm(channels));
    specs.push_back(LayerSpec::max_pool());
    specs.push_back(LayerSpec::global_avg_pool());
    specs.push_back(LayerSpec::dense(channels, 1, Activation::sigmoid));
    return specs;
}

const CwLayer* CwModel::cw_layer() const { return dynamic_cast<const CwLayer*>(&net.layer(slot)); }
CwLayer* CwModel::cw_layer() { return dynamic_cast<CwLayer*>(&net.layer(slot)); }

CwLayerState CwModel::state() const {
    const CwLayer* layer = cw_layer();
    if (!layer) throw ConfigError("cw: baseline model has no whitening state");
    return layer->state(config.assignment);
}

Tensor as_images(const Tensor& rows, std::size_t side) {
    if (rows.row_size() != side * side) {
        throw ConfigError("cw: rows of width " + std::to_string(rows.row_size()) + " are not " +
                          std::to_string(side) + "x" + std::to_string(side) + " images");
    }
    return rows.reshaped({rows.rows(), 1, side, side});
}

CwModel build_cw_model(const CwConfig& cfg) {
    CwModel model;
    model.config = cfg;
    auto specs = cw_cnn_specs(cfg.channels, cfg.whitening);
    model.slot = specs.size() - 4;
    model.net = nn::build_network(std::move(specs), cfg.init_seed);
    if (cfg.whitening) model.net.fill_slot(std::make_unique<CwLayer>(cfg.channels));
    return model;
}

CwModel train_cw_model(const data::LabeledDataset& train, const CwConfig& cfg) {
    train.validate();
    cfg.validate(train.concept_count());
    CwModel model = build_cw_model(cfg);
    const Tensor images = as_images(train.features, cfg.image_side);

    std::vector<std::size_t> axes;
    std::vector<std::vector<std::size_t>> pools;
    for (const auto& [concept_index, axis] : cfg.assignment) {
        axes.push_back(axis);
        pools.push_back(positives(train.concepts, concept_index));
        if (cfg.whitening && pools.back().empty()) {
            throw ConfigError("cw: concept " + std::to_string(concept_index) + " has no positive examples");
        }
    }

    std::vector<std::size_t> check_rows(train.size());
    std::iota(check_rows.begin(), check_rows.end(), 0);
    std::mt19937_64 check_rng(derive_seed(cfg.train.seed, {kCheckStream}));
    std::shuffle(check_rows.begin(), check_rows.end(), check_rng);
    check_rows.resize(std::min(cfg.check_rows, check_rows.size()));
    std::sort(check_rows.begin(), check_rows.end());
    const data::LabeledDataset check_ds = data::subset(train, check_rows);

    std::mt19937_64 rotation_rng(derive_seed(cfg.train.seed, {kRotationStream}));
    const auto rotate = [&] {
        CwLayer* layer = model.cw_layer();
        std::vector<Tensor> maps;
        for (const auto& pool : pools) {
            std::vector<std::size_t> pick(cfg.concept_batch);
            std::uniform_int_distribution<std::size_t> any(0, pool.size() - 1);
            for (auto& r : pick) r = pool[any(rotation_rng)];
            maps.push_back(model.net.run_layers(nn::gather_rows(images, pick), 0, model.slot));
        }
        for (std::size_t s = 0; s < cfg.rotation_steps; ++s) layer->update_rotation(maps, axes, cfg.eta);
    };

    nn::TrainHooks hooks;
    if (cfg.whitening && cfg.rotation_steps > 0 && !axes.empty()) {
        hooks.after_batch = [&](std::size_t, std::size_t step) {
            if ((step + 1) % cfg.rotation_every == 0) rotate();
        };
    }
    hooks.after_epoch = [&](std::size_t epoch, double loss) {
        const auto row = to_row(epoch + 1, cw_alignment_checks(model, check_ds));
        spdlog::debug("cw epoch {} loss {:.4f} corr {:.3f} auc [{:.3f}] within {:.3f} between {:.3f}", epoch + 1,
                      loss, row.corr_offdiag_mean, fmt::join(row.axis_auc, ", "), row.cos_within, row.cos_between);
        model.history.push_back(row);
    };
    model.loss_history = nn::train(model.net, images, train.task, cfg.train, hooks);
    return model;
}

Tensor slot_maps(const CwModel& model, const data::LabeledDataset& ds) {
    return model.net.run_layers(as_images(ds.features, model.config.image_side), 0, model.slot + 1);
}

Tensor summaries(const Tensor& maps) {
    if (maps.rank() != 4) throw ConfigError("summaries: expected N x C x H x W maps");
    const std::size_t n = maps.dim(0), c = maps.dim(1), plane = maps.dim(2) * maps.dim(3);
    Tensor out = Tensor::matrix(n, c);
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t ch = 0; ch < c; ++ch) {
            out.at(i, ch) = dim_summary(maps.values().subspan((i * c + ch) * plane, plane));
        }
    }
    return out;
}

AlignmentChecks alignment_checks(const Tensor& summary, const Tensor& concepts,
                                 const std::map<std::size_t, std::size_t>& assignment) {
    const std::size_t n = summary.rows(), c = summary.row_size(), k = concepts.row_size();
    if (concepts.rows() != n) throw ConfigError("alignment checks: row counts differ");
    constexpr double nan = std::numeric_limits<double>::quiet_NaN();
    AlignmentChecks out;

    std::vector<std::vector<double>> cols(c, std::vector<double>(n));
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t ch = 0; ch < c; ++ch) cols[ch][i] = summary.at(i, ch);
    }
    out.corr = Eigen::MatrixXd::Identity(Eigen::Index(c), Eigen::Index(c));
    double off = 0.0;
    for (std::size_t a = 0; a < c; ++a) {
        for (std::size_t b = a + 1; b < c; ++b) {
            double r = 0.0;
            try {
                r = metrics::pearson(cols[a], cols[b]);
            } catch (const UndefinedMetric&) {
            }
            out.corr(Eigen::Index(a), Eigen::Index(b)) = out.corr(Eigen::Index(b), Eigen::Index(a)) = r;
            off += 2.0 * std::abs(r);
        }
    }
    out.corr_offdiag_mean = c > 1 ? off / double(c * (c - 1)) : 0.0;

    for (const auto& [concept_index, axis] : assignment) {
        std::vector<double> labels(n);
        for (std::size_t i = 0; i < n; ++i) labels[i] = concepts.at(i, concept_index);
        try {
            out.axis_auc.push_back(metrics::auc(cols.at(axis), labels));
        } catch (const UndefinedMetric&) {
            out.axis_auc.push_back(nan);
        }
    }

    std::vector<Eigen::VectorXd> centroid(k, Eigen::VectorXd::Zero(Eigen::Index(c)));
    for (std::size_t j = 0; j < k; ++j) {
        std::size_t used = 0;
        for (std::size_t i = 0; i < n; ++i) {
            if (concepts.at(i, j) <= 0.5) continue;
            Eigen::Map<const Eigen::VectorXd> v(summary.row(i).data(), Eigen::Index(c));
            const double norm = v.norm();
            if (norm == 0.0) continue;
            centroid[j] += v / norm;
            ++used;
        }
        centroid[j] = used ? Eigen::VectorXd(centroid[j] / double(used))
                           : Eigen::VectorXd::Constant(Eigen::Index(c), nan);
    }
    out.cosine.resize(Eigen::Index(k), Eigen::Index(k));
    double within = 0.0, between = 0.0;
    for (std::size_t a = 0; a < k; ++a) {
        for (std::size_t b = 0; b < k; ++b) {
            const double v = centroid[a].dot(centroid[b]);
            out.cosine(Eigen::Index(a), Eigen::Index(b)) = v;
            (a == b ? within : between) += v;
        }
    }
    out.cos_within = k ? within / double(k) : nan;
    out.cos_between = k > 1 ? between / double(k * (k - 1)) : nan;
    return out;
}

AlignmentChecks cw_alignment_checks(const CwModel& model, const data::LabeledDataset& ds) {
    return alignment_checks(summaries(slot_maps(model, ds)), ds.concepts, model.config.assignment);
}

void write_history_csv(const CwModel& model, std::ostream& out) {
    out << "epoch,corr_offdiag_mean";
    for (const auto& entry : model.config.assignment) out << ",auc_c" << entry.first + 1;
    out << ",cos_within,cos_between\n";
    for (const auto& row : model.history) {
        out << row.epoch << ',' << data::format_double(row.corr_offdiag_mean);
        for (double a : row.axis_auc) out << ',' << (std::isnan(a) ? std::string() : data::format_double(a));
        out << ',' << data::format_double(row.cos_within) << ',' << data::format_double(row.cos_between) << '\n';
    }
}

std::vector<LayerSpec> probe_specs(std::size_t side) {
    if (side < 5) throw ConfigError("probe: maps must be at least 5x5");
    const std::size_t inner = side - 4;
    return {LayerSpec::conv(1, 16, Activation::relu), LayerSpec::conv(16, 32, Activation::relu),
            LayerSpec::dense(32 * inner * inner, 1, Activation::sigmoid)};
}

double probe_accuracy(const Tensor& train_maps, const Tensor& train_labels, const Tensor& test_maps,
                      const Tensor& test_labels, const ProbeConfig& cfg) {
    if (train_maps.rank() != 4 || train_maps.dim(1) != 1 || train_maps.dim(2) != train_maps.dim(3)) {
        throw ConfigError("probe: expected N x 1 x H x H maps, got " + nn::shape_string(train_maps.shape()));
    }
    nn::Network probe = nn::build_network(probe_specs(train_maps.dim(2)), cfg.init_seed);
    nn::train(probe, train_maps, train_labels, cfg.train);
    return nn::binary_accuracy(probe.predict(test_maps), test_labels);
}

double purity_probe(const CwModel& model, std::size_t axis, std::size_t concept_index,
                    const data::LabeledDataset& train, const data::LabeledDataset& test, const ProbeConfig& cfg) {
    if (axis >= model.config.channels) throw ConfigError("probe: axis out of range");
    if (concept_index >= train.concept_count()) throw ConfigError("probe: concept out of range");
    return probe_accuracy(channel_maps(slot_maps(model, train), axis),
                          concept_column(train.concepts, concept_index),
                          channel_maps(slot_maps(model, test), axis), concept_column(test.concepts, concept_index),
                          cfg);
}

HeadImportance head_importance(const nn::Network& net, const std::map<std::size_t, std::size_t>& assignment) {
    HeadImportance out;
    for (double w : metrics::final_layer_weights(net)) out.weights.push_back(std::abs(w));
    out.normalized = metrics::normalized_importance(out.weights);
    std::vector<double> assigned;
    for (const auto& entry : assignment) assigned.push_back(out.weights.at(entry.second));
    out.assigned_share = metrics::normalized_importance(assigned);
    return out;
}

HeadImportance head_importance(const CwModel& model) { return head_importance(model.net, model.config.assignment); }

}  // namespace clab::cw
