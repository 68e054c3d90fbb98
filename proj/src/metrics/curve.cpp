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
#include "clab/metrics/curve.hpp"

#include <ostream>

#include "clab/cbm/cbm.hpp"
#include "clab/data/generators.hpp"
#include "clab/error.hpp"
#include "clab/parallel.hpp"
#include "clab/seed.hpp"

namespace clab::metrics {

namespace {

using nn::Activation;
using nn::LayerSpec;

nn::TrainConfig reseeded(nn::TrainConfig cfg, std::uint64_t seed) {
    cfg.seed = seed;
    return cfg;
}

std::pair<double, double> one_run(const data::LabeledDataset& train, const data::LabeledDataset& test,
                                  const CurveConfig& cfg, std::size_t m, std::uint64_t seed) {
    const auto fit = data::gen_hyperplane_concepts(train, m, derive_seed(seed, {0}));
    const auto test_c = data::apply_hyperplane_concepts(test, fit.planes);
    const std::size_t d = train.feature_dim();

    cbm::CbmConfig c;
    c.g_spec = {LayerSpec::dense(d, cfg.g_hidden, Activation::relu), LayerSpec::dense(cfg.g_hidden, m, Activation::sigmoid)};
    c.h_spec = {LayerSpec::dense(m, cfg.h_hidden, Activation::relu), LayerSpec::dense(cfg.h_hidden, 1, Activation::sigmoid)};
    c.bottleneck = m;
    for (std::size_t j = 0; j < m; ++j) c.aligned[j] = j;
    c.mode = cbm::Mode::sequential;
    c.g_train = reseeded(cfg.g_train, derive_seed(seed, {1}));
    c.h_train = reseeded(cfg.h_train, derive_seed(seed, {2}));
    c.g_seed = derive_seed(seed, {3});
    c.h_seed = derive_seed(seed, {4});
    const auto model = cbm::train_cbm(fit.dataset, c);
    const double soft = nn::binary_accuracy(cbm::predict_task(model, test_c.features), test_c.task);

    nn::Network hard = nn::build_network(c.h_spec, derive_seed(seed, {5}));
    nn::train(hard, fit.dataset.concepts, fit.dataset.task, reseeded(cfg.hard_train, derive_seed(seed, {6})));
    const double hard_acc = nn::binary_accuracy(hard.predict(test_c.concepts), test_c.task);
    return {soft, hard_acc};
}

}  // namespace

LeakageCurve leakage_curve(const data::LabeledDataset& train, const data::LabeledDataset& test, const CurveConfig& cfg) {
    if (cfg.m_values.empty()) throw ConfigError("leakage_curve: m_values is empty");
    if (cfg.runs == 0) throw ConfigError("leakage_curve: runs must be >= 1");
    const std::size_t runs = cfg.runs, points = cfg.m_values.size();
    std::vector<std::pair<double, double>> results(points * runs);
    std::vector<double> direct(cfg.direct_runs);
    const std::size_t d = train.feature_dim();

    parallel_for(results.size() + direct.size(), cfg.jobs, [&](std::size_t i) {
        if (i < results.size()) {
            const std::size_t m = cfg.m_values[i / runs];
            results[i] = one_run(train, test, cfg, m, derive_seed(cfg.seed, {m, i % runs}));
            return;
        }
        const std::size_t r = i - results.size();
        const std::uint64_t s = derive_seed(cfg.seed, {0xd1ec7, r});
        nn::Network net = nn::build_network({LayerSpec::dense(d, cfg.g_hidden, Activation::relu),
                                             LayerSpec::dense(cfg.g_hidden, cfg.h_hidden, Activation::relu),
                                             LayerSpec::dense(cfg.h_hidden, 1, Activation::sigmoid)},
                                            derive_seed(s, {0}));
        nn::train(net, train.features, train.task, reseeded(cfg.direct_train, derive_seed(s, {1})));
        direct[r] = nn::binary_accuracy(net.predict(test.features), test.task);
    });

    LeakageCurve curve;
    for (std::size_t p = 0; p < points; ++p) {
        CurvePoint pt;
        pt.m = cfg.m_values[p];
        for (std::size_t r = 0; r < runs; ++r) {
            pt.soft_runs.push_back(results[p * runs + r].first);
            pt.hard_runs.push_back(results[p * runs + r].second);
        }
        pt.soft = mean_std(pt.soft_runs);
        pt.hard = mean_std(pt.hard_runs);
        curve.points.push_back(std::move(pt));
    }
    curve.direct_runs = direct;
    curve.direct = mean_std(direct);
    return curve;
}

void write_csv(const LeakageCurve& curve, std::ostream& out) {
    out << "m,soft_mean,soft_std,hard_mean,hard_std\n";
    for (const auto& p : curve.points) {
        out << p.m << ',' << data::format_double(p.soft.mean) << ',' << data::format_double(p.soft.std) << ','
            << data::format_double(p.hard.mean) << ',' << data::format_double(p.hard.std) << '\n';
    }
}

}  // namespace clab::metrics
