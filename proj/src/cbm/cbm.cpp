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
#include "clab/cbm/cbm.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <set>

#include "clab/error.hpp"
#include "clab/nn/serialize.hpp"

namespace clab::cbm {

namespace {

std::optional<std::size_t> first_dense_in(const std::vector<nn::LayerSpec>& specs) {
    for (const auto& s : specs) {
        if (auto* d = std::get_if<nn::DenseSpec>(&s.kind)) return d->in;
    }
    return std::nullopt;
}

std::optional<std::size_t> last_dense_out(const std::vector<nn::LayerSpec>& specs) {
    for (auto it = specs.rbegin(); it != specs.rend(); ++it) {
        if (auto* d = std::get_if<nn::DenseSpec>(&it->kind)) return d->out;
    }
    return std::nullopt;
}

}  // namespace

const char* to_string(Mode m) {
    switch (m) {
        case Mode::independent: return "independent";
        case Mode::sequential: return "sequential";
        default: return "joint";
    }
}

Mode mode_from_string(const std::string& s) {
    if (s == "independent") return Mode::independent;
    if (s == "sequential") return Mode::sequential;
    if (s == "joint") return Mode::joint;
    throw ConfigError("unknown training mode '" + s + "' (independent, sequential, joint)");
}

void CbmConfig::validate(std::size_t concepts) const {
    if (g_spec.empty() || h_spec.empty()) throw ConfigError("cbm: g and h need at least one layer");
    if (bottleneck == 0) throw ConfigError("cbm: bottleneck width must be >= 1");
    if (last_dense_out(g_spec) != bottleneck) {
        throw ConfigError("cbm: g must end in a Dense layer of width " + std::to_string(bottleneck));
    }
    if (first_dense_in(h_spec) != bottleneck) {
        throw ConfigError("cbm: h must start from a Dense layer of width " + std::to_string(bottleneck));
    }
    std::set<std::size_t> used;
    for (auto [dim, c] : aligned) {
        if (dim >= bottleneck) throw ConfigError("cbm: aligned dim " + std::to_string(dim) + " outside the bottleneck");
        if (c >= concepts) {
            throw ConfigError("cbm: aligned concept " + std::to_string(c) + " but the dataset has " +
                              std::to_string(concepts) + " concepts");
        }
        if (!used.insert(c).second) throw ConfigError("cbm: concept " + std::to_string(c) + " aligned twice");
    }
    if (mode == Mode::joint) {
        if (!(lambda > 0)) throw ConfigError("cbm: joint training needs lambda > 0");
    } else if (aligned.size() != bottleneck) {
        throw ConfigError(std::string("cbm: ") + to_string(mode) + " training needs every bottleneck dim aligned; " +
                          std::to_string(bottleneck - aligned.size()) + " latent dim(s) require joint training");
    }
    g_train.validate();
    h_train.validate();
}

std::vector<std::size_t> aligned_dims(const CbmConfig& cfg) {
    std::vector<std::size_t> dims;
    for (const auto& kv : cfg.aligned) dims.push_back(kv.first);
    return dims;
}

nn::Tensor bottleneck_targets(const data::LabeledDataset& ds, const CbmConfig& cfg) {
    nn::Tensor t({ds.size(), cfg.bottleneck});
    for (std::size_t r = 0; r < ds.size(); ++r) {
        for (auto [dim, c] : cfg.aligned) t.at(r, dim) = ds.concepts.at(r, c);
    }
    return t;
}

JointLoss joint_objective(TrainedCbm& cbm, const data::LabeledDataset& batch) {
    nn::Trace tg, th;
    const nn::Tensor c = cbm.g.forward_train(batch.features, tg);
    const nn::Tensor y = cbm.h.forward_train(c, th);
    JointLoss out;
    out.task = nn::compute_loss(cbm.config.h_train.loss, y, batch.task).value;
    const auto dims = aligned_dims(cbm.config);
    out.concept_loss = double(dims.size()) *
                       nn::compute_loss(cbm.config.g_train.loss, c, bottleneck_targets(batch, cbm.config), dims).value;
    out.total = out.task + cbm.config.lambda * out.concept_loss;
    return out;
}

namespace {

void train_joint(TrainedCbm& cbm, const data::LabeledDataset& ds) {
    const auto& cfg = cbm.config;
    const auto& tc = cfg.g_train;
    cbm.history.clear();
    if (tc.epochs == 0 || ds.size() == 0) return;
    const nn::Tensor targets = bottleneck_targets(ds, cfg);
    const auto dims = aligned_dims(cfg);

    auto params = cbm.g.parameters();
    for (auto* p : cbm.h.parameters()) params.push_back(p);
    nn::Optimizer opt(tc.optimizer, params);
    nn::BatchSchedule schedule(ds.size(), tc.batch_size, tc.seed);
    nn::Trace tg, th;
    for (std::size_t epoch = 0; epoch < tc.epochs; ++epoch) {
        EpochLoss sum;
        const auto batches = schedule.next_epoch();
        for (std::size_t b = 0; b < batches.size(); ++b) {
            const auto& rows = batches[b];
            const nn::Tensor x = nn::gather_rows(ds.features, rows);
            const nn::Tensor y = nn::gather_rows(ds.task, rows);
            const nn::Tensor t = nn::gather_rows(targets, rows);
            nn::Tensor c, pred;
            try {
                c = cbm.g.forward_train(x, tg);
                pred = cbm.h.forward_train(c, th);
            } catch (const NumericError& e) {
                throw NumericError(std::string(e.what()) + " at epoch " + std::to_string(epoch) + ", batch " +
                                   std::to_string(b));
            }
            const auto task = nn::compute_loss(cfg.h_train.loss, pred, y);
            // compute_loss averages over rows and dims; scale back to a per-dim sum.
            const double per_dim = double(dims.size());
            const auto concept_loss = nn::compute_loss(tc.loss, c, t, dims);
            const double total = task.value + cfg.lambda * per_dim * concept_loss.value;
            if (!std::isfinite(total)) {
                throw NumericError("non-finite joint loss at epoch " + std::to_string(epoch) + ", batch " +
                                   std::to_string(b));
            }
            sum.task += task.value * double(rows.size());
            sum.concept_loss += per_dim * concept_loss.value * double(rows.size());

            opt.zero_grad();
            nn::Tensor grad_c = cbm.h.backward(th, task.grad);
            auto gc = grad_c.values();
            const auto lc = concept_loss.grad.values();
            for (std::size_t i = 0; i < gc.size(); ++i) gc[i] += cfg.lambda * per_dim * lc[i];
            cbm.g.backward(tg, grad_c);
            opt.step();
        }
        cbm.history.push_back({sum.task / double(ds.size()), sum.concept_loss / double(ds.size())});
    }
}

}  // namespace

TrainedCbm train_cbm(const data::LabeledDataset& train, const CbmConfig& cfg) {
    cfg.validate(train.concept_count());
    TrainedCbm cbm{nn::build_network(cfg.g_spec, cfg.g_seed), nn::build_network(cfg.h_spec, cfg.h_seed), cfg, {}};
    if (cfg.mode == Mode::joint) {
        train_joint(cbm, train);
        return cbm;
    }
    const nn::Tensor targets = bottleneck_targets(train, cfg);
    for (double l : nn::train(cbm.g, train.features, targets, cfg.g_train)) cbm.history.push_back({0.0, l});
    // Independent: h sees ground truth. Sequential: h sees g's soft outputs, g stays frozen.
    const nn::Tensor h_inputs = cfg.mode == Mode::independent ? targets : cbm.g.predict(train.features);
    for (double l : nn::train(cbm.h, h_inputs, train.task, cfg.h_train)) cbm.history.push_back({l, 0.0});
    return cbm;
}

nn::Tensor concept_activations(const TrainedCbm& cbm, const nn::Tensor& x) { return cbm.g.predict(x); }

nn::Tensor harden(const nn::Tensor& soft, Hardening scheme) {
    nn::Tensor out(soft.shape());
    if (scheme == Hardening::threshold) {
        for (std::size_t i = 0; i < soft.size(); ++i) out[i] = soft[i] >= 0.5 ? 1.0 : 0.0;
        return out;
    }
    for (std::size_t r = 0; r < soft.rows(); ++r) {
        const auto row = soft.row(r);
        if (row.empty()) continue;
        const auto best = std::max_element(row.begin(), row.end()) - row.begin();
        out.at(r, std::size_t(best)) = 1.0;
    }
    return out;
}

nn::Tensor predict_from_concepts(const TrainedCbm& cbm, const nn::Tensor& concepts) { return cbm.h.predict(concepts); }

nn::Tensor predict_task(const TrainedCbm& cbm, const nn::Tensor& x, TaskInput use) {
    nn::Tensor c = concept_activations(cbm, x);
    if (use.kind == TaskInput::Kind::hard) c = harden(c, use.scheme);
    return cbm.h.predict(c);
}

CbmConfig xyz_preset(int model, double lambda, std::uint64_t seed) {
    using nn::Activation;
    using nn::LayerSpec;
    CbmConfig cfg;
    switch (model) {
        case 1:
            cfg.bottleneck = 3;
            cfg.aligned = {{0, 0}, {1, 1}, {2, 2}};
            break;
        case 2:
            cfg.bottleneck = 2;
            cfg.aligned = {{0, 0}, {1, 1}};
            break;
        case 3:
            cfg.bottleneck = 3;
            cfg.aligned = {{0, 0}, {1, 1}};
            break;
        default: throw ConfigError("xyz preset must be 1, 2 or 3, got " + std::to_string(model));
    }
    cfg.g_spec = {LayerSpec::dense(7, 8, Activation::relu), LayerSpec::dense(8, cfg.bottleneck, Activation::sigmoid)};
    cfg.h_spec = {LayerSpec::dense(cfg.bottleneck, 4, Activation::relu), LayerSpec::dense(4, 1, Activation::sigmoid)};
    cfg.mode = Mode::joint;
    cfg.lambda = lambda;
    cfg.g_train = nn::TrainConfig{350, 32, seed, nn::LossKind::bce, nn::Adam{1e-3}};
    cfg.h_train = cfg.g_train;
    cfg.g_seed = seed * 2 + 1;
    cfg.h_seed = seed * 2 + 2;
    return cfg;
}

void to_json(nlohmann::json& j, const CbmConfig& cfg) {
    nlohmann::json aligned = nlohmann::json::array();
    for (auto [dim, c] : cfg.aligned) aligned.push_back({dim, c});
    j = {{"g_spec", cfg.g_spec},   {"h_spec", cfg.h_spec},   {"bottleneck", cfg.bottleneck},
         {"aligned", aligned},     {"mode", to_string(cfg.mode)}, {"lambda", cfg.lambda},
         {"g_train", cfg.g_train}, {"h_train", cfg.h_train}, {"g_seed", cfg.g_seed},
         {"h_seed", cfg.h_seed}};
}

void from_json(const nlohmann::json& j, CbmConfig& cfg) {
    cfg.g_spec = j.at("g_spec").get<std::vector<nn::LayerSpec>>();
    cfg.h_spec = j.at("h_spec").get<std::vector<nn::LayerSpec>>();
    cfg.bottleneck = j.at("bottleneck").get<std::size_t>();
    cfg.aligned.clear();
    for (const auto& pair : j.at("aligned")) cfg.aligned[pair.at(0).get<std::size_t>()] = pair.at(1).get<std::size_t>();
    cfg.mode = mode_from_string(j.at("mode").get<std::string>());
    cfg.lambda = j.at("lambda").get<double>();
    cfg.g_train = j.at("g_train").get<nn::TrainConfig>();
    cfg.h_train = j.at("h_train").get<nn::TrainConfig>();
    cfg.g_seed = j.at("g_seed").get<std::uint64_t>();
    cfg.h_seed = j.at("h_seed").get<std::uint64_t>();
}

void save_cbm(const TrainedCbm& cbm, const std::filesystem::path& stem) {
    auto bin = stem;
    bin += ".bin";
    auto side = stem;
    side += ".json";
    std::ofstream out(bin, std::ios::binary);
    if (!out) throw IoError("cannot write " + bin.string());
    nn::save_state(cbm.g, out);
    nn::save_state(cbm.h, out);
    std::ofstream js(side);
    if (!js) throw IoError("cannot write " + side.string());
    js << nlohmann::json(cbm.config).dump(2) << '\n';
    if (!out || !js) throw IoError("write failed for " + stem.string());
}

TrainedCbm load_cbm(const std::filesystem::path& stem) {
    auto bin = stem;
    bin += ".bin";
    auto side = stem;
    side += ".json";
    std::ifstream js(side);
    if (!js) throw IoError("cannot open " + side.string());
    nlohmann::json j;
    try {
        js >> j;
    } catch (const nlohmann::json::exception& e) {
        throw ConfigError(side.string() + ": " + e.what());
    }
    TrainedCbm cbm;
    cbm.config = j.get<CbmConfig>();
    cbm.g = nn::Network(cbm.config.g_spec);
    cbm.h = nn::Network(cbm.config.h_spec);
    std::ifstream in(bin, std::ios::binary);
    if (!in) throw IoError("cannot open " + bin.string());
    nn::load_state(cbm.g, in);
    nn::load_state(cbm.h, in);
    return cbm;
}

}  // namespace clab::cbm
