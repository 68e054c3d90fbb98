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
#include <algorithm>
#include <cmath>
#include <random>
#include <set>
#include <sstream>

#include <spdlog/spdlog.h>

#include "clab/cbm/cbm.hpp"
#include "clab/cw/cw_model.hpp"
#include "clab/data/generators.hpp"
#include "clab/metrics/curve.hpp"
#include "clab/metrics/metrics.hpp"
#include "clab/parallel.hpp"
#include "clab/seed.hpp"
#include "demos.hpp"

namespace clab::lab::detail {

using nlohmann::json;
using nn::Activation;
using nn::Tensor;

namespace {

std::vector<double> column_values(const Tensor& t, std::size_t c) {
    std::vector<double> out(t.rows());
    for (std::size_t r = 0; r < t.rows(); ++r) out[r] = t.at(r, c);
    return out;
}

// Keeps `cap` rows, half from each task class, in dataset order.
data::LabeledDataset balanced_cap(const data::LabeledDataset& ds, std::size_t cap, std::uint64_t seed) {
    if (cap == 0 || cap >= ds.size()) return ds;
    std::vector<std::size_t> pos, neg;
    for (std::size_t r = 0; r < ds.size(); ++r) (ds.task[r] > 0.5 ? pos : neg).push_back(r);
    std::mt19937_64 rng(seed);
    std::shuffle(pos.begin(), pos.end(), rng);
    std::shuffle(neg.begin(), neg.end(), rng);
    pos.resize(std::min(pos.size(), cap / 2));
    neg.resize(std::min(neg.size(), cap - cap / 2));
    std::vector<std::size_t> rows(pos);
    rows.insert(rows.end(), neg.begin(), neg.end());
    std::sort(rows.begin(), rows.end());
    return data::subset(ds, rows);
}

}  // namespace

// Sequential CBM on parity with two concepts that never fire, plus the PCA view.
DemoOutput run_mnist_parity(const ExperimentConfig& cfg, const std::filesystem::path& out) {
    const auto& raw = mnist();
    const std::size_t hidden = cfg.integer("hidden", 128);
    // Every concept target is 0, so BCE keeps pushing g's logits down forever. A handful of large-batch
    // steps leave the activations at a readable scale; longer schedules squash them towards 1e-15.
    const std::size_t g_epochs = cfg.integer("g_epochs", 1);
    const std::size_t g_batch = cfg.integer("g_batch", 8192);
    const std::size_t h_epochs = cfg.integer("h_epochs", 10);
    const double lr = cfg.real("lr", 1e-3);
    const std::size_t train_rows = cfg.integer("train_rows", 0);
    const std::size_t plot_rows = cfg.integer("plot_rows", 2000);

    DemoOutput result;
    result.trials.resize(cfg.trials);
    std::vector<json> datasets(cfg.trials);
    parallel_for(cfg.trials, cfg.jobs, [&](std::size_t t) {
        const std::uint64_t seed = cfg.trial_seed(t);
        const auto train = balanced_cap(data::make_parity_dataset(raw.train, derive_seed(seed, {1}), "train"),
                                        train_rows, derive_seed(seed, {2}));
        const auto test = data::make_parity_dataset(raw.test, derive_seed(seed, {3}), "test");
        datasets[t] = {dataset_entry(train), dataset_entry(test)};

        cbm::CbmConfig c;
        c.g_spec = nn::mlp(train.feature_dim(), {hidden, hidden}, 2, Activation::relu, Activation::sigmoid);
        c.h_spec = nn::mlp(2, {hidden, hidden}, 1, Activation::relu, Activation::sigmoid);
        c.bottleneck = 2;
        c.aligned = {{0, 0}, {1, 1}};
        c.mode = cbm::Mode::sequential;
        c.g_train = {g_epochs, g_batch, derive_seed(seed, {4}), nn::LossKind::bce, nn::Adam{lr}};
        c.h_train = {h_epochs, 64, derive_seed(seed, {5}), nn::LossKind::bce, nn::Adam{lr}};
        c.g_seed = derive_seed(seed, {6});
        c.h_seed = derive_seed(seed, {7});
        const auto model = cbm::train_cbm(train, c);

        Metrics m;
        m["soft_acc"] = accuracy(cbm::predict_task(model, test.features), test.task);
        nn::Network hard = nn::build_network(c.h_spec, derive_seed(seed, {8}));
        nn::train(hard, train.concepts, train.task, c.h_train);
        m["hard_acc"] = accuracy(hard.predict(test.concepts), test.task);

        const auto p = metrics::pca(train.features, 2);
        const Tensor proj_test = metrics::project(p, test.features);
        const std::size_t pc1[] = {0};
        nn::Network top1 = nn::build_network(nn::mlp(1, {16}, 1, Activation::relu, Activation::sigmoid),
                                             derive_seed(seed, {9}));
        nn::train(top1, nn::select_columns(p.projections, pc1), train.task,
                  {10, 64, derive_seed(seed, {10}), nn::LossKind::bce, nn::Adam{1e-2}});
        m["pc1_acc"] = accuracy(top1.predict(nn::select_columns(proj_test, pc1)), test.task);
        nn::Network top2 = nn::build_network(nn::mlp(2, {16}, 1, Activation::relu, Activation::sigmoid),
                                             derive_seed(seed, {11}));
        nn::train(top2, p.projections, train.task, {10, 64, derive_seed(seed, {12}), nn::LossKind::bce, nn::Adam{1e-2}});
        m["pc2_acc"] = accuracy(top2.predict(proj_test), test.task);

        const Tensor act = cbm::concept_activations(model, test.features);
        const auto pc1_values = column_values(proj_test, 0);
        m["pearson_is4_pc1"] = metrics::pearson(column_values(act, 0), pc1_values);
        m["pearson_is5_pc1"] = metrics::pearson(column_values(act, 1), pc1_values);
        result.trials[t] = m;
        spdlog::info("mnist-parity trial {}: soft {:.4f} hard {:.4f} pc1 {:.4f} pc1+2 {:.4f} r(is4) {:.3f}", t,
                     m["soft_acc"], m["hard_acc"], m["pc1_acc"], m["pc2_acc"], m["pearson_is4_pc1"]);

        if (t == 0) {
            std::ostringstream csv;
            csv << "pc1,pc2,act_is4,act_is5,digit,y\n";
            for (std::size_t r = 0; r < std::min(plot_rows, test.size()); ++r) {
                csv << fmt_num(proj_test.at(r, 0)) << ',' << fmt_num(proj_test.at(r, 1)) << ','
                    << fmt_num(act.at(r, 0)) << ',' << fmt_num(act.at(r, 1)) << ',' << test.source[r] << ','
                    << test.task[r] << '\n';
            }
            write_file(out / "parity_pca_scatter.csv", csv.str());
        }
    });

    const auto soft = column_of(result.trials, "soft_acc");
    double passes = 0, hard_dev = 0, best_r = 0;
    for (const auto& m : result.trials) {
        passes += m.at("soft_acc") >= 0.60 ? 1.0 : 0.0;
        hard_dev = std::max(hard_dev, std::abs(m.at("hard_acc") - 0.5));
        best_r = std::max(best_r, std::abs(m.at("pearson_is4_pc1")));
    }
    result.metrics = {{"parity_soft_pass_fraction", passes / double(cfg.trials)},
                      {"parity_soft_acc_mean", mean_of(result.trials, "soft_acc")},
                      {"parity_hard_acc_mean", mean_of(result.trials, "hard_acc")},
                      {"parity_hard_acc_max_dev", hard_dev},
                      {"pca_top1_acc_mean", mean_of(result.trials, "pc1_acc")},
                      {"pca_top2_acc_mean", mean_of(result.trials, "pc2_acc")},
                      {"pearson_is4_pc1_best_abs", best_r}};
    result.extra = {{"expected_hard_baseline", 0.5}, {"reference_soft_acc", 0.69}, {"reference_pc1_acc", 0.86},
                    {"reference_pearson_is4", -0.72}};
    for (auto& d : datasets)
        for (auto& e : d) result.datasets.push_back(e);
    return result;
}

// Soft vs hard accuracy as random hyperplane concepts are added (digits 0, 1, 6, 7).
DemoOutput run_random_concepts(const ExperimentConfig& cfg, const std::filesystem::path& out) {
    const auto& raw = mnist();
    const std::size_t per_class = cfg.integer("per_class", 500);
    metrics::CurveConfig base;
    base.m_values = cfg.integers("m_values", base.m_values);
    base.runs = cfg.integer("runs", base.runs);
    base.g_train.epochs = cfg.integer("g_epochs", base.g_train.epochs);
    base.h_train.epochs = cfg.integer("h_epochs", base.h_train.epochs);
    base.hard_train.epochs = cfg.integer("hard_epochs", base.hard_train.epochs);
    base.direct_train.epochs = cfg.integer("direct_epochs", base.direct_train.epochs);
    base.direct_runs = cfg.integer("direct_runs", base.direct_runs);
    // A single curve gets all the threads; several curves get one each.
    base.jobs = cfg.trials == 1 ? cfg.jobs : 1;

    DemoOutput result;
    result.trials.resize(cfg.trials);
    std::vector<json> datasets(cfg.trials);
    parallel_for(cfg.trials, cfg.trials == 1 ? 1 : cfg.jobs, [&](std::size_t t) {
        const std::uint64_t seed = cfg.trial_seed(t);
        const auto train = data::make_0167_dataset(raw.train, per_class, derive_seed(seed, {1}), "train");
        const auto test = data::make_0167_dataset(raw.test, per_class, derive_seed(seed, {2}), "test");
        datasets[t] = {dataset_entry(train), dataset_entry(test)};
        metrics::CurveConfig cc = base;
        cc.seed = derive_seed(seed, {3});
        const auto curve = metrics::leakage_curve(train, test, cc);

        std::ostringstream csv;
        metrics::write_csv(curve, csv);
        write_file(out / (t == 0 ? std::string("random_concepts_curve.csv")
                                 : "random_concepts_curve_t" + std::to_string(t) + ".csv"),
                   csv.str());

        Metrics m;
        double gap = 1.0;
        std::vector<double> ms, hard;
        for (const auto& p : curve.points) {
            gap = std::min(gap, p.soft.mean - p.hard.mean);
            ms.push_back(double(p.m));
            hard.push_back(p.hard.mean);
            m["soft_m" + std::to_string(p.m)] = p.soft.mean;
            m["hard_m" + std::to_string(p.m)] = p.hard.mean;
        }
        m["soft_minus_hard_min"] = gap;
        m["direct_acc"] = curve.direct.mean;
        m["hard_spearman"] = ms.size() > 1 ? metrics::spearman(ms, hard) : std::nan("");
        result.trials[t] = m;
        spdlog::info("random-concepts trial {}: min soft-hard {:.4f} direct {:.4f} spearman {:.3f}", t, gap,
                     curve.direct.mean, m["hard_spearman"]);
    });

    const auto gaps = column_of(result.trials, "soft_minus_hard_min");
    const auto rhos = column_of(result.trials, "hard_spearman");
    result.metrics = {{"soft_minus_hard_min", *std::min_element(gaps.begin(), gaps.end())},
                      {"direct_acc_mean", mean_of(result.trials, "direct_acc")},
                      {"hard_spearman_min", *std::min_element(rhos.begin(), rhos.end())}};
    result.extra = {{"m_values", base.m_values}, {"runs_per_m", base.runs}, {"reference_direct_acc", 0.99}};
    for (auto& d : datasets)
        for (auto& e : d) result.datasets.push_back(e);
    return result;
}

// CW versus batch norm on digits 1-6, alignment checks, and purity probes on the best CW trial.
DemoOutput run_cw_audit(const ExperimentConfig& cfg, const std::filesystem::path& out) {
    const auto& raw = mnist();
    cw::CwConfig base;
    base.train.epochs = cfg.integer("epochs", 6);
    base.channels = cfg.integer("channels", base.channels);
    base.rotation_every = cfg.integer("rotation_every", base.rotation_every);
    base.rotation_steps = cfg.integer("rotation_steps", base.rotation_steps);
    base.eta = cfg.real("eta", base.eta);
    const std::size_t per_digit = cfg.integer("per_digit", 500);
    const std::size_t test_per_digit = cfg.integer("test_per_digit", 300);
    const std::size_t probe_rows = cfg.integer("probe_rows", 0);
    cw::ProbeConfig probe;
    probe.train.epochs = cfg.integer("probe_epochs", probe.train.epochs);

    struct Trial {
        data::LabeledDataset train, test;
        cw::CwModel model;
        cw::AlignmentChecks cw_checks, bn_checks;
    };
    std::vector<Trial> runs(cfg.trials);
    DemoOutput result;
    result.trials.resize(cfg.trials);
    parallel_for(cfg.trials, cfg.jobs, [&](std::size_t t) {
        const std::uint64_t seed = cfg.trial_seed(t);
        Trial& run = runs[t];
        run.train = data::make_lt4_dataset(raw.train, derive_seed(seed, {1}), "train", per_digit);
        run.test = data::make_lt4_dataset(raw.test, derive_seed(seed, {2}), "test", test_per_digit);
        cw::CwConfig c = base;
        c.train.seed = derive_seed(seed, {3});
        c.init_seed = derive_seed(seed, {4});
        run.model = cw::train_cw_model(run.train, c);
        c.whitening = false;
        const cw::CwModel baseline = cw::train_cw_model(run.train, c);
        run.cw_checks = cw::cw_alignment_checks(run.model, run.test);
        run.bn_checks = cw::cw_alignment_checks(baseline, run.test);

        std::ostringstream hist;
        cw::write_history_csv(run.model, hist);
        write_file(out / ("cw_history_t" + std::to_string(t) + ".csv"), hist.str());
        hist.str("");
        cw::write_history_csv(baseline, hist);
        write_file(out / ("bn_history_t" + std::to_string(t) + ".csv"), hist.str());

        const auto head = cw::head_importance(run.model);
        Metrics m;
        m["cw_corr"] = run.cw_checks.corr_offdiag_mean;
        m["bn_corr"] = run.bn_checks.corr_offdiag_mean;
        m["auc_c1"] = run.cw_checks.axis_auc.at(0);
        m["auc_c2"] = run.cw_checks.axis_auc.at(1);
        m["min_axis_auc"] = std::min(m["auc_c1"], m["auc_c2"]);
        m["bn_auc_c1"] = run.bn_checks.axis_auc.at(0);
        m["bn_auc_c2"] = run.bn_checks.axis_auc.at(1);
        m["cos_within"] = run.cw_checks.cos_within;
        m["cos_between"] = run.cw_checks.cos_between;
        m["bn_cos_within"] = run.bn_checks.cos_within;
        m["bn_cos_between"] = run.bn_checks.cos_between;
        m["cw_test_acc"] = accuracy(run.model.net.predict(cw::as_images(run.test.features, c.image_side)), run.test.task);
        m["bn_test_acc"] = accuracy(baseline.net.predict(cw::as_images(run.test.features, c.image_side)), run.test.task);
        m["head_share_c1"] = head.assigned_share.at(0);
        m["head_share_c2"] = head.assigned_share.at(1);
        result.trials[t] = m;
        spdlog::info("cw-audit trial {}: corr cw {:.3f} bn {:.3f}, auc {:.3f}/{:.3f}, acc {:.4f}", t, m["cw_corr"],
                     m["bn_corr"], m["auc_c1"], m["auc_c2"], m["cw_test_acc"]);
    });

    std::size_t best = 0;
    for (std::size_t t = 1; t < cfg.trials; ++t) {
        if (result.trials[t].at("min_axis_auc") > result.trials[best].at("min_axis_auc")) best = t;
    }
    Trial& chosen = runs[best];
    const auto& assignment = base.assignment;
    std::vector<std::pair<std::size_t, std::size_t>> probes;  // (axis, concept)
    for (const auto& entry : assignment)
        for (std::size_t j = 0; j < chosen.train.concept_count(); ++j) probes.emplace_back(entry.second, j);
    data::LabeledDataset probe_train = chosen.train;
    if (probe_rows && probe_rows < probe_train.size()) {
        std::vector<std::size_t> rows(probe_train.size());
        for (std::size_t i = 0; i < rows.size(); ++i) rows[i] = i;
        std::mt19937_64 rng(derive_seed(cfg.trial_seed(best), {5}));
        std::shuffle(rows.begin(), rows.end(), rng);
        rows.resize(probe_rows);
        std::sort(rows.begin(), rows.end());
        probe_train = data::subset(probe_train, rows);
    }
    std::vector<double> probe_acc(probes.size());
    parallel_for(probes.size(), cfg.jobs, [&](std::size_t i) {
        cw::ProbeConfig pc = probe;
        pc.train.seed = derive_seed(cfg.trial_seed(best), {6, i});
        pc.init_seed = derive_seed(cfg.trial_seed(best), {7, i});
        probe_acc[i] = cw::purity_probe(chosen.model, probes[i].first, probes[i].second, probe_train, chosen.test, pc);
        spdlog::info("cw-audit probe axis {} -> c{}: {:.4f}", probes[i].first, probes[i].second + 1, probe_acc[i]);
    });

    std::set<std::size_t> assigned_concepts;
    for (const auto& entry : assignment) assigned_concepts.insert(entry.first);
    double unassigned_best = 0.0;
    std::ostringstream probe_csv;
    probe_csv << "axis,concept,assigned,accuracy\n";
    for (std::size_t i = 0; i < probes.size(); ++i) {
        const bool assigned = assigned_concepts.count(probes[i].second) != 0;
        if (!assigned) unassigned_best = std::max(unassigned_best, probe_acc[i]);
        probe_csv << probes[i].first << ",c" << probes[i].second + 1 << ',' << (assigned ? 1 : 0) << ','
                  << fmt_num(probe_acc[i]) << '\n';
    }
    write_file(out / "cw_probes.csv", probe_csv.str());

    std::ostringstream checks_csv;
    checks_csv << "trial,model,corr_offdiag_mean,auc_c1,auc_c2,cos_within,cos_between\n";
    for (std::size_t t = 0; t < cfg.trials; ++t) {
        const auto& m = result.trials[t];
        checks_csv << t << ",cw," << fmt_num(m.at("cw_corr")) << ',' << fmt_num(m.at("auc_c1")) << ','
                   << fmt_num(m.at("auc_c2")) << ',' << fmt_num(m.at("cos_within")) << ','
                   << fmt_num(m.at("cos_between")) << '\n';
        checks_csv << t << ",bn," << fmt_num(m.at("bn_corr")) << ',' << fmt_num(m.at("bn_auc_c1")) << ','
                   << fmt_num(m.at("bn_auc_c2")) << ',' << fmt_num(m.at("bn_cos_within")) << ','
                   << fmt_num(m.at("bn_cos_between")) << '\n';
    }
    write_file(out / "cw_checks.csv", checks_csv.str());

    const auto head = cw::head_importance(chosen.model);
    std::ostringstream head_csv;
    head_csv << "axis,abs_weight,normalized\n";
    for (std::size_t a = 0; a < head.weights.size(); ++a)
        head_csv << a << ',' << fmt_num(head.weights[a]) << ',' << fmt_num(head.normalized[a]) << '\n';
    write_file(out / "cw_head_importance.csv", head_csv.str());

    std::ostringstream cos_csv;
    cos_csv << "concept";
    const auto& cosine = chosen.cw_checks.cosine;
    for (Eigen::Index j = 0; j < cosine.cols(); ++j) cos_csv << ",c" << j + 1;
    cos_csv << '\n';
    for (Eigen::Index i = 0; i < cosine.rows(); ++i) {
        cos_csv << 'c' << i + 1;
        for (Eigen::Index j = 0; j < cosine.cols(); ++j) cos_csv << ',' << fmt_num(cosine(i, j));
        cos_csv << '\n';
    }
    write_file(out / "cw_cosine_best.csv", cos_csv.str());

    double max_abs_corr = 0.0;
    const auto& corr = chosen.cw_checks.corr;
    for (Eigen::Index i = 0; i < corr.rows(); ++i)
        for (Eigen::Index j = 0; j < corr.cols(); ++j)
            if (i != j) max_abs_corr = std::max(max_abs_corr, std::abs(corr(i, j)));

    result.metrics = {{"corr_reduction", mean_of(result.trials, "bn_corr") - mean_of(result.trials, "cw_corr")},
                      {"cw_corr_mean", mean_of(result.trials, "cw_corr")},
                      {"bn_corr_mean", mean_of(result.trials, "bn_corr")},
                      {"best_trial", double(best)},
                      {"best_min_axis_auc", result.trials[best].at("min_axis_auc")},
                      {"best_max_abs_corr", max_abs_corr},
                      {"probe_unassigned_best", unassigned_best}};
    result.extra = {{"probes", json::array()},
                    {"head_share", head.assigned_share},
                    {"reference_head_weights", {0.874, 0.056}},
                    {"reference_probe_acc", 0.95}};
    for (std::size_t i = 0; i < probes.size(); ++i) {
        result.extra["probes"].push_back(
            {{"axis", probes[i].first}, {"concept", "c" + std::to_string(probes[i].second + 1)}, {"accuracy", probe_acc[i]}});
    }
    for (const auto& run : runs) {
        result.datasets.push_back(dataset_entry(run.train));
        result.datasets.push_back(dataset_entry(run.test));
    }
    return result;
}

}  // namespace clab::lab::detail
