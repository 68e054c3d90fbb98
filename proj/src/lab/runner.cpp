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
#include "clab/lab/runner.hpp"

#include <chrono>
#include <cmath>
#include <cstdlib>
#include <fstream>
#include <mutex>
#include <set>
#include <sstream>

#include <spdlog/spdlog.h>

#include "clab/data/dataset.hpp"
#include "clab/error.hpp"
#include "clab/metrics/metrics.hpp"
#include "clab/nn/train.hpp"
#include "clab/version.hpp"
#include "demos.hpp"

namespace clab::lab {

using nlohmann::json;

namespace {

Check ge(int c, std::string name, std::string metric, double t) { return {c, std::move(name), std::move(metric), Comparison::ge, t, 0.0}; }
Check gt(int c, std::string name, std::string metric, double t) { return {c, std::move(name), std::move(metric), Comparison::gt, t, 0.0}; }
Check le(int c, std::string name, std::string metric, double t) { return {c, std::move(name), std::move(metric), Comparison::le, t, 0.0}; }
Check within(int c, std::string name, std::string metric, double t, double tol) {
    return {c, std::move(name), std::move(metric), Comparison::within, t, tol};
}

}  // namespace

std::vector<Check> demo_checks(const ExperimentConfig& cfg) {
    const std::string& d = cfg.demo;
    if (d == "mnist-parity") {
        return {ge(1, "enough seeds", "trials", 5),
                ge(1, "soft pipeline >= 0.60 in 4 of 5 seeds", "parity_soft_pass_fraction", 0.8),
                le(1, "hard baseline at chance", "parity_hard_acc_max_dev", 0.02),
                ge(2, "classifier on PC1", "pca_top1_acc_mean", 0.80),
                ge(2, "is-4 activation tracks PC1 (best seed)", "pearson_is4_pc1_best_abs", 0.6)};
    }
    if (d == "random-concepts") {
        return {ge(6, "soft >= hard at every m", "soft_minus_hard_min", 0.0),
                ge(6, "pixel reference", "direct_acc_mean", 0.97),
                gt(6, "hard accuracy rises with m", "hard_spearman_min", 0.8)};
    }
    if (d == "xyz-purity") {
        return {within(3, "oracle AUC", "oracle_auc_mean", 0.875, 0.02),
                within(3, "oracle accuracy", "oracle_acc_mean", 0.75, 0.02),
                le(3, "hard baseline AUC near oracle", "hard_auc_gap", 0.03),
                le(3, "hard baseline accuracy near oracle", "hard_acc_gap", 0.03),
                gt(4, "M2 downstream AUC", "m2_task_auc_mean", 0.98),
                gt(4, "M2 beats the oracle", "m2_task_auc_minus_oracle", 0.0),
                ge(5, "enough trials", "trials", 5),
                ge(5, "M1 diagonal", "m1_diag_min", 0.99),
                ge(5, "M1 off-diagonal leakage", "m1_offdiag_min", 0.60),
                within(5, "M2 z+ on dim 1", "m2_z_dim1", 0.75, 0.07),
                within(5, "M2 z+ on dim 2", "m2_z_dim2", 0.75, 0.07),
                ge(5, "M3 latent z+ instability", "m3_latent_z_std", 0.15)};
    }
    if (d == "demo1") {
        return {ge(7, "enough seeds", "trials", 5),
                ge(7, "features beat soft concepts", "gap_direct_soft", 0.02),
                ge(7, "soft concepts beat true concepts", "gap_soft_true", 0.02),
                gt(7, "true concepts above chance", "acc_true_concepts_mean", 0.60),
                ge(7, "identity head beats sigmoid head", "gap_identity_sigmoid", 0.02)};
    }
    if (d == "cw-audit") {
        return {ge(8, "enough seeds", "trials", 5),
                gt(8, "CW decorrelates summaries", "corr_reduction", 0.0),
                gt(8, "both axes aligned (best seed)", "best_min_axis_auc", 0.9),
                ge(8, "unassigned c3 from an assigned axis", "probe_unassigned_best", 0.90)};
    }
    if (d == "fruit-refine") {
        return {le(9, "v1 concepts near chance", "v1_acc_mean", 0.55),
                ge(9, "v2 concepts predictive", "v2_acc_mean", 0.95)};
    }
    override_schema(d);  // throws for unknown names
    return {};
}

std::filesystem::path mnist_dir() {
    const char* env = std::getenv("LAB_MNIST_DIR");
    if (!env || !*env) {
        throw IoError(
            "LAB_MNIST_DIR is not set. Download train-images-idx3-ubyte, train-labels-idx1-ubyte, "
            "t10k-images-idx3-ubyte and t10k-labels-idx1-ubyte (for example from "
            "https://ossci-datasets.s3.amazonaws.com/mnist/), gunzip them into one directory and "
            "export LAB_MNIST_DIR=<that directory>");
    }
    return env;
}

namespace detail {

const data::MnistSplits& mnist() {
    static std::once_flag once;
    static data::MnistSplits splits;
    std::call_once(once, [] {
        splits = data::load_mnist(mnist_dir());
        spdlog::info("loaded MNIST: {} train / {} test images", splits.train.size(), splits.test.size());
    });
    return splits;
}

json dataset_entry(const data::LabeledDataset& ds) {
    return {{"generator", ds.generator}, {"seed", ds.seed}, {"split", ds.split}, {"rows", ds.size()}};
}

double accuracy(const nn::Tensor& prob, const nn::Tensor& target) { return nn::binary_accuracy(prob, target); }

std::vector<double> column_of(const std::vector<Metrics>& trials, const std::string& key) {
    std::vector<double> out;
    for (const auto& t : trials) out.push_back(t.at(key));
    return out;
}

double mean_of(const std::vector<Metrics>& trials, const std::string& key) {
    return metrics::mean_std(column_of(trials, key)).mean;
}

void write_file(const std::filesystem::path& path, const std::string& text) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw IoError("cannot write " + path.string());
    out << text;
}

std::string fmt_num(double v) { return std::isnan(v) ? std::string() : data::format_double(v); }

}  // namespace detail

namespace {

detail::DemoOutput dispatch(const ExperimentConfig& cfg) {
    const auto& d = cfg.demo;
    const auto& out = cfg.out_dir;
    if (d == "mnist-parity") return detail::run_mnist_parity(cfg, out);
    if (d == "random-concepts") return detail::run_random_concepts(cfg, out);
    if (d == "cw-audit") return detail::run_cw_audit(cfg, out);
    if (d == "demo1") return detail::run_demo1(cfg, out);
    if (d == "xyz-purity") return detail::run_xyz_purity(cfg, out);
    if (d == "fruit-refine") return detail::run_fruit_refine(cfg, out);
    override_schema(d);
    return {};
}

std::string trials_csv(const ExperimentConfig& cfg, const std::vector<detail::Metrics>& trials) {
    std::set<std::string> keys;
    for (const auto& t : trials)
        for (const auto& kv : t) keys.insert(kv.first);
    std::ostringstream out;
    out << "trial,seed";
    for (const auto& k : keys) out << ',' << k;
    out << '\n';
    for (std::size_t i = 0; i < trials.size(); ++i) {
        out << i << ',' << cfg.trial_seed(i);
        for (const auto& k : keys) {
            const auto it = trials[i].find(k);
            out << ',' << (it == trials[i].end() ? std::string() : detail::fmt_num(it->second));
        }
        out << '\n';
    }
    return out.str();
}

}  // namespace

RunReport run_experiment(const ExperimentConfig& cfg) {
    cfg.validate();
    std::filesystem::create_directories(cfg.out_dir);
    const auto start = std::chrono::steady_clock::now();
    spdlog::info("{}: {} trial(s), config {}, output {}", cfg.demo, cfg.trials, cfg.hash(), cfg.out_dir.string());

    detail::DemoOutput out = dispatch(cfg);

    RunReport report;
    report.demo = cfg.demo;
    report.config_hash = cfg.hash();
    report.config_text = cfg.canonical();
    report.provenance = {{"version", kVersion},
                         {"modules",
                          {{"nn-core", kVersion},
                           {"data-forge", kVersion},
                           {"cbm-engine", kVersion},
                           {"leakage-metrics", kVersion},
                           {"cw-engine", kVersion},
                           {"lab-runner", kVersion}}},
                         {"datasets", out.datasets},
                         {"jobs", cfg.jobs}};
    std::set<std::string> keys;
    for (std::size_t i = 0; i < out.trials.size(); ++i) {
        json metrics = json::object();
        for (const auto& [k, v] : out.trials[i]) {
            metrics[k] = std::isfinite(v) ? json(v) : json(nullptr);
            keys.insert(k);
        }
        report.trials.push_back({{"trial", i}, {"seed", cfg.trial_seed(i)}, {"metrics", metrics}});
    }
    for (const auto& k : keys) {
        std::vector<double> values;
        for (const auto& t : out.trials) {
            const auto it = t.find(k);
            if (it != t.end() && std::isfinite(it->second)) values.push_back(it->second);
        }
        if (values.empty()) continue;
        const auto ms = metrics::mean_std(values);
        report.aggregates[k] = {{"mean", ms.mean}, {"std", ms.std}, {"n", values.size()}};
    }
    report.metrics = std::move(out.metrics);
    report.metrics["trials"] = double(cfg.trials);
    report.extra = std::move(out.extra);
    report.checks = demo_checks(cfg);
    report.verdicts = evaluate(report.checks, report.metrics);
    report.wall_clock_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();

    detail::write_file(cfg.out_dir / "trials.csv", trials_csv(cfg, out.trials));
    write_report(report, cfg.out_dir);
    spdlog::info("{} finished in {:.1f}s", cfg.demo, report.wall_clock_seconds);
    return report;
}

RunReport verify_experiment(const ExperimentConfig& cfg) {
    cfg.validate();
    RunReport report = read_report(cfg.out_dir);
    if (report.config_hash != cfg.hash()) {
        throw IoError("report in " + cfg.out_dir.string() + " was produced by config " + report.config_hash +
                      ", not " + cfg.hash());
    }
    if (report.demo != cfg.demo) throw IoError("report demo '" + report.demo + "' does not match the config");
    // Thresholds come from the current code; the stored check list is informational.
    report.checks = demo_checks(cfg);
    report.verdicts = evaluate(report.checks, report.metrics);
    return report;
}

}  // namespace clab::lab
