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
// Acceptance run: one PASS/FAIL line per criterion, each followed by its individual checks.
//
//   acceptance --group properties|synthetic|parity|random|cw|all [--out DIR]
//
// Exit codes: 0 all selected criteria pass, 1 some fail, 77 MNIST needed but LAB_MNIST_DIR unset.

#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <functional>
#include <iostream>
#include <map>
#include <random>
#include <set>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <Eigen/Core>
#include <Eigen/QR>
#include <fmt/format.h>
#include <spdlog/spdlog.h>

#include "clab/cbm/cbm.hpp"
#include "clab/cw/cw_layer.hpp"
#include "clab/data/generators.hpp"
#include "clab/data/idx.hpp"
#include "clab/error.hpp"
#include "clab/lab/config.hpp"
#include "clab/lab/report.hpp"
#include "clab/lab/runner.hpp"
#include "clab/metrics/metrics.hpp"
#include "clab/nn/train.hpp"
#include "clab/runtime.hpp"

using namespace clab;
using nn::Activation;
using nn::LayerSpec;
using nn::Tensor;

namespace {

constexpr int kSkip = 77;

const std::map<int, std::string> kTitles{
    {1, "parity leakage through a sequential CBM"},
    {2, "soft concepts encode the first principal component"},
    {3, "Bayes oracle and hard baseline on x/y/z"},
    {4, "M2 beats the oracle through leakage"},
    {5, "purity tables"},
    {6, "random-concept curves"},
    {7, "demo1 accuracy orderings"},
    {8, "concept whitening audit"},
    {9, "fruit concept refinement"},
    {10, "property suites"},
};

struct Line {
    std::string text;
    bool pass;
};

struct Outcome {
    bool pass = true;
    std::vector<Line> details;
};

void print(int criterion, const Outcome& o) {
    std::cout << fmt::format("criterion {:2d} {} {}\n", criterion, o.pass ? "PASS" : "FAIL", kTitles.at(criterion));
    for (const auto& d : o.details) std::cout << "    " << (d.pass ? "ok   " : "FAIL ") << d.text << '\n';
    std::cout.flush();
}

// ---------------------------------------------------------------------------------------------
// Criterion 10 oracles. Each one is computed here, independently of the library code under test.

Tensor normal_tensor(Tensor::Shape shape, std::mt19937_64& rng, double scale = 1.0) {
    Tensor t(std::move(shape));
    std::normal_distribution<double> d(0.0, scale);
    for (double& v : t.values()) v = d(rng);
    return t;
}

Tensor coin_tensor(std::size_t rows, std::size_t cols, std::mt19937_64& rng) {
    Tensor t = Tensor::matrix(rows, cols);
    std::bernoulli_distribution coin(0.5);
    for (double& v : t.values()) v = coin(rng) ? 1.0 : 0.0;
    return t;
}

double pair_auc(const std::vector<double>& s, const std::vector<double>& y) {
    double wins = 0, pairs = 0;
    for (std::size_t i = 0; i < s.size(); ++i)
        for (std::size_t j = 0; j < s.size(); ++j)
            if (y[i] == 1 && y[j] == 0) {
                wins += s[i] > s[j] ? 1.0 : s[i] == s[j] ? 0.5 : 0.0;
                pairs += 1;
            }
    return wins / pairs;
}

struct Instance {
    std::vector<double> s, y;
};

Instance tied_instance(std::mt19937_64& rng) {
    std::uniform_int_distribution<int> n(2, 60), grid(-8, 8);
    std::bernoulli_distribution coin(std::uniform_real_distribution<double>(0.1, 0.9)(rng));
    Instance in;
    for (int i = n(rng); i > 0; --i) {
        in.s.push_back(grid(rng) * 0.125);
        in.y.push_back(coin(rng) ? 1.0 : 0.0);
    }
    in.y[0] = 1;
    in.y[1] = 0;
    return in;
}

Line auc_oracle() {
    std::mt19937_64 rng(10);
    int bad = 0;
    for (int t = 0; t < 10000; ++t) {
        const auto in = tied_instance(rng);
        bad += metrics::auc(in.s, in.y) != pair_auc(in.s, in.y);
    }
    return {fmt::format("AUC equals the all-pairs count on 10000 random instances ({} mismatches)", bad), bad == 0};
}

Line auc_monotone() {
    std::mt19937_64 rng(11);
    const std::vector<std::function<double(double)>> maps{[](double v) { return std::exp(v); },
                                                          [](double v) { return v * v * v + v; },
                                                          [](double v) { return 1 / (1 + std::exp(-3 * v)); }};
    int bad = 0;
    for (int t = 0; t < 2000; ++t) {
        const auto in = tied_instance(rng);
        const double base = metrics::auc(in.s, in.y);
        for (const auto& f : maps) {
            std::vector<double> mapped(in.s.size());
            std::transform(in.s.begin(), in.s.end(), mapped.begin(), f);
            bad += metrics::auc(mapped, in.y) != base;
        }
    }
    return {fmt::format("AUC unchanged by 3 strictly increasing maps on 2000 instances ({} changes)", bad), bad == 0};
}

// Central differences over every parameter, with the loss taken from a fresh training-mode pass.
double central_difference_error(nn::Network& net, const Tensor& x, const Tensor& y, nn::LossKind loss) {
    nn::Trace trace;
    net.zero_grad();
    const Tensor pred = net.forward_train(x, trace);
    net.backward(trace, nn::compute_loss(loss, pred, y).grad);
    const auto loss_at = [&] {
        nn::Trace scratch;
        return nn::compute_loss(loss, net.forward_train(x, scratch), y).value;
    };
    const double h = 1e-6;
    double worst = 0;
    for (auto* p : net.parameters()) {
        for (std::size_t i = 0; i < p->value.size(); ++i) {
            const double saved = p->value[i];
            p->value[i] = saved + h;
            const double up = loss_at();
            p->value[i] = saved - h;
            const double down = loss_at();
            p->value[i] = saved;
            const double fd = (up - down) / (2 * h), an = p->grad[i];
            worst = std::max(worst, std::abs(an - fd) / std::max({std::abs(an), std::abs(fd), 1e-8}));
        }
    }
    return worst;
}

Line gradients() {
    std::mt19937_64 rng(12);
    std::normal_distribution<double> jitter(0.0, 0.1);
    const auto jittered = [&](std::vector<LayerSpec> specs) {
        nn::Network net = nn::build_network(std::move(specs), rng());
        for (auto* p : net.parameters())
            for (double& v : p->value.values()) v += jitter(rng);
        return net;
    };
    struct Case {
        std::string name;
        std::function<nn::Network()> build;
        Tensor x;
        nn::LossKind loss;
    };
    std::vector<Case> cases;
    for (const Activation a : {Activation::identity, Activation::relu, Activation::sigmoid}) {
        cases.push_back({"dense " + nn::to_string(a),
                         [=, &jittered] {
                             return jittered({LayerSpec::dense(3, 4, a), LayerSpec::dense(4, 2, Activation::sigmoid)});
                         },
                         normal_tensor({5, 3}, rng), nn::LossKind::bce});
    }
    for (const std::size_t pad : {std::size_t{0}, std::size_t{1}}) {
        cases.push_back({fmt::format("conv pad {} + max pool + global average pool", pad),
                         [=, &jittered] {
                             return jittered({LayerSpec::conv(2, 3, Activation::relu, pad), LayerSpec::max_pool(),
                                              LayerSpec::global_avg_pool(), LayerSpec::dense(3, 2, Activation::sigmoid)});
                         },
                         normal_tensor({3, 2, 6, 6}, rng), nn::LossKind::bce});
    }
    cases.push_back({"batch norm (dense and spatial)",
                     [&] {
                         return jittered({LayerSpec::conv(1, 3, Activation::sigmoid, 1),
                                          LayerSpec::batch_norm(3, Activation::relu), LayerSpec::global_avg_pool(),
                                          LayerSpec::dense(3, 3, Activation::sigmoid), LayerSpec::batch_norm(3),
                                          LayerSpec::dense(3, 2, Activation::sigmoid)});
                     },
                     normal_tensor({4, 1, 5, 5}, rng), nn::LossKind::mse});
    cases.push_back({"concept whitening slot",
                     [&] {
                         nn::Network net = jittered({LayerSpec::conv(2, 3, Activation::sigmoid, 1), LayerSpec::cw_slot(3),
                                                     LayerSpec::max_pool(), LayerSpec::global_avg_pool(),
                                                     LayerSpec::dense(3, 2, Activation::sigmoid)});
                         auto layer = std::make_unique<cw::CwLayer>(3);
                         std::normal_distribution<double> d;
                         Eigen::MatrixXd m = Eigen::MatrixXd::NullaryExpr(3, 3, [&] { return d(rng); });
                         layer->set_rotation(Eigen::HouseholderQR<Eigen::MatrixXd>(m).householderQ());
                         net.fill_slot(std::move(layer));
                         return net;
                     },
                     normal_tensor({4, 2, 4, 4}, rng), nn::LossKind::bce});

    double worst = 0;
    std::string worst_name;
    for (auto& c : cases) {
        nn::Network net = c.build();
        const double err = central_difference_error(net, c.x, coin_tensor(c.x.rows(), 2, rng), c.loss);
        if (err >= worst) {
            worst = err;
            worst_name = c.name;
        }
    }
    return {fmt::format("gradient check on {} layer stacks, worst relative error {:.2e} ({})", cases.size(), worst,
                        worst_name),
            worst < 1e-4};
}

// Channel vectors at every spatial position, one row each.
Eigen::MatrixXd channel_rows(const Tensor& maps) {
    const std::size_t n = maps.dim(0), c = maps.dim(1), s = maps.dim(2) * maps.dim(3);
    Eigen::MatrixXd rows(Eigen::Index(n * s), Eigen::Index(c));
    for (std::size_t b = 0; b < n; ++b)
        for (std::size_t ch = 0; ch < c; ++ch)
            for (std::size_t p = 0; p < s; ++p) rows(Eigen::Index(b * s + p), Eigen::Index(ch)) = maps[(b * c + ch) * s + p];
    return rows;
}

Line whitening() {
    std::mt19937_64 rng(13);
    const std::size_t n = 64, c = 4, side = 4, s = side * side;
    Tensor x = normal_tensor({n, c, side, side}, rng);
    Eigen::MatrixXd mix = Eigen::MatrixXd::Random(4, 4) + 2 * Eigen::MatrixXd::Identity(4, 4);
    Eigen::MatrixXd rows = channel_rows(x) * mix.transpose();
    for (std::size_t b = 0; b < n; ++b)
        for (std::size_t ch = 0; ch < c; ++ch)
            for (std::size_t p = 0; p < s; ++p) x[(b * c + ch) * s + p] = rows(Eigen::Index(b * s + p), Eigen::Index(ch)) + double(ch);
    cw::CwLayer layer(c);
    nn::LayerCache cache;
    for (int i = 0; i < 200; ++i) layer.forward_train(x, cache);
    const Eigen::MatrixXd out = channel_rows(layer.infer(x));
    const Eigen::MatrixXd centered = out.rowwise() - out.colwise().mean();
    const Eigen::MatrixXd cov = centered.transpose() * centered / double(out.rows() - 1);
    const double err = (cov - Eigen::MatrixXd::Identity(Eigen::Index(c), Eigen::Index(c))).cwiseAbs().maxCoeff();
    return {fmt::format("whitened channel covariance within {:.2e} of I (want < 1e-2)", err), err < 1e-2};
}

Line orthogonality() {
    std::mt19937_64 rng(14);
    const std::size_t c = 6;
    cw::CwLayer layer(c);
    std::uniform_real_distribution<double> eta(0.001, 0.5);
    std::uniform_int_distribution<std::size_t> axis(0, c - 1);
    double worst = 0;
    for (int t = 0; t < 300; ++t) {
        const std::vector<Tensor> maps{normal_tensor({4, c, 3, 3}, rng, 3.0), normal_tensor({2, c, 3, 3}, rng, 3.0)};
        const std::vector<std::size_t> axes{axis(rng), axis(rng)};
        layer.update_rotation(maps, axes, eta(rng));
        const Eigen::MatrixXd q = layer.rotation();
        worst = std::max(worst, (q.transpose() * q - Eigen::MatrixXd::Identity(q.rows(), q.cols())).cwiseAbs().maxCoeff());
    }
    return {fmt::format("max |QtQ - I| over 300 Cayley updates = {:.2e} (want < 1e-6)", worst), worst < 1e-6};
}

double bce(double p, double y) { return -std::log(std::max(y == 1.0 ? p : 1 - p, 1e-300)); }

Line joint_decomposition() {
    std::mt19937_64 rng(15);
    double worst = 0;
    for (int t = 0; t < 20; ++t) {
        const auto ds = data::gen_xyz_dataset(40, 1, rng()).train;
        const cbm::CbmConfig cfg =
            cbm::xyz_preset(1 + t % 3, std::uniform_real_distribution<double>(0.001, 10)(rng), rng());
        cbm::TrainedCbm model{nn::build_network(cfg.g_spec, rng()), nn::build_network(cfg.h_spec, rng()), cfg, {}};
        const auto loss = cbm::joint_objective(model, ds);
        const Tensor c = model.g.forward(ds.features).back();
        const Tensor y = model.h.forward(c).back();
        double task = 0, concept_loss = 0;
        for (std::size_t r = 0; r < ds.size(); ++r) {
            task += bce(y[r], ds.task[r]);
            for (auto [dim, col] : cfg.aligned) concept_loss += bce(c.at(r, dim), ds.concepts.at(r, col));
        }
        task /= double(ds.size());
        concept_loss /= double(ds.size());
        worst = std::max({worst, std::abs(loss.task - task), std::abs(loss.concept_loss - concept_loss),
                          std::abs(loss.total - (task + cfg.lambda * concept_loss))});
    }
    return {fmt::format("joint objective = task + lambda * concept on 20 random nets, max error {:.2e} (want < 1e-10)",
                        worst),
            worst < 1e-10};
}

Line sequential_freeze() {
    const auto ds = data::gen_xyz_dataset(200, 1, 16).train;
    cbm::CbmConfig cfg = cbm::xyz_preset(1, 0.1, 16);
    cfg.mode = cbm::Mode::sequential;
    cfg.g_train.epochs = 5;
    cfg.h_train.epochs = 0;
    const auto before = cbm::train_cbm(ds, cfg);
    cfg.h_train.epochs = 20;
    const auto after = cbm::train_cbm(ds, cfg);
    // Compare raw values as well as checksums.
    bool same = before.g.checksum() == after.g.checksum();
    const auto pa = const_cast<nn::Network&>(before.g).parameters();
    const auto pb = const_cast<nn::Network&>(after.g).parameters();
    for (std::size_t i = 0; i < pa.size(); ++i) same = same && pa[i]->value == pb[i]->value;
    const bool h_moved = before.h.checksum() != after.h.checksum();
    return {fmt::format("g parameters identical before and after 20 epochs of h training ({}), h changed ({})",
                        same ? "yes" : "no", h_moved ? "yes" : "no"),
            same && h_moved};
}

bool same_data(const data::LabeledDataset& a, const data::LabeledDataset& b) {
    return a.features == b.features && a.concepts == b.concepts && a.task == b.task;
}

Line regeneration(const data::MnistSplits* mnist) {
    int checked = 0, bad = 0;
    const auto expect = [&](bool same_ok, bool different_ok) {
        ++checked;
        bad += !(same_ok && different_ok);
    };
    {
        const auto a = data::gen_xyz_dataset(300, 100, 1), b = data::gen_xyz_dataset(300, 100, 1),
                   c = data::gen_xyz_dataset(300, 100, 2);
        expect(same_data(a.train, b.train) && same_data(a.test, b.test), !same_data(a.train, c.train));
    }
    {
        const auto a = data::gen_tricluster_dataset(1), b = data::gen_tricluster_dataset(1),
                   c = data::gen_tricluster_dataset(2);
        expect(same_data(a.train, b.train) && same_data(a.test, b.test), !same_data(a.train, c.train));
    }
    for (const auto v : {data::FruitConcepts::v1, data::FruitConcepts::v2}) {
        expect(same_data(data::gen_fruit_dataset(300, v, 1), data::gen_fruit_dataset(300, v, 1)),
               !same_data(data::gen_fruit_dataset(300, v, 1), data::gen_fruit_dataset(300, v, 2)));
    }
    {
        const auto base = data::gen_xyz_dataset(300, 0, 3).train;
        const auto a = data::gen_hyperplane_concepts(base, 4, 1), b = data::gen_hyperplane_concepts(base, 4, 1),
                   c = data::gen_hyperplane_concepts(base, 4, 2);
        expect(same_data(a.dataset, b.dataset), !same_data(a.dataset, c.dataset));
    }
    if (mnist) {
        expect(same_data(data::make_parity_dataset(mnist->test, 1), data::make_parity_dataset(mnist->test, 1)),
               !same_data(data::make_parity_dataset(mnist->test, 1), data::make_parity_dataset(mnist->test, 2)));
        expect(same_data(data::make_0167_dataset(mnist->test, 200, 1), data::make_0167_dataset(mnist->test, 200, 1)),
               !same_data(data::make_0167_dataset(mnist->test, 200, 1), data::make_0167_dataset(mnist->test, 200, 2)));
        expect(same_data(data::make_lt4_dataset(mnist->test, 1, "test", 300), data::make_lt4_dataset(mnist->test, 1, "test", 300)),
               !same_data(data::make_lt4_dataset(mnist->test, 1, "test", 300), data::make_lt4_dataset(mnist->test, 2, "test", 300)));
    }
    return {fmt::format("{} generators bit-identical for equal seeds and different for different seeds ({} failed{})",
                        checked, bad, mnist ? "" : "; MNIST generators skipped, LAB_MNIST_DIR unset"),
            bad == 0};
}

Outcome properties() {
    std::unique_ptr<data::MnistSplits> mnist;
    if (const char* dir = std::getenv("LAB_MNIST_DIR")) mnist = std::make_unique<data::MnistSplits>(data::load_mnist(dir));
    Outcome o;
    const std::vector<std::function<Line()>> suites{auc_oracle,          auc_monotone,      gradients,
                                                    whitening,           orthogonality,     joint_decomposition,
                                                    sequential_freeze,   [&] { return regeneration(mnist.get()); }};
    for (const auto& suite : suites) {
        Line line;
        try {
            line = suite();
        } catch (const std::exception& e) {
            line = {std::string("threw: ") + e.what(), false};
        }
        o.pass = o.pass && line.pass;
        o.details.push_back(std::move(line));
    }
    return o;
}

// ---------------------------------------------------------------------------------------------
// Demo-backed criteria: run the demo with its defaults and group verdicts by criterion.

std::map<int, Outcome> run_demo(const std::string& demo, const std::filesystem::path& out) {
    lab::ExperimentConfig cfg;
    cfg.demo = demo;
    cfg.trials = lab::default_trials(demo);
    cfg.out_dir = out / demo;
    std::map<int, Outcome> result;
    try {
        const auto report = lab::run_experiment(cfg);
        for (const auto& v : report.verdicts) {
            auto& o = result[v.check.criterion];
            o.pass = o.pass && v.pass;
            std::string text = v.describe();
            // describe() leads with "criterion NN PASS|FAIL "; the outcome prints that already.
            const auto at = text.find(v.pass ? "PASS " : "FAIL ");
            if (at != std::string::npos) text = text.substr(at + 5);
            o.details.push_back({text, v.pass});
        }
        for (auto& [k, o] : result)
            o.details.push_back({fmt::format("{} trial(s), {:.1f}s, report {}", report.trials.size(),
                                             report.wall_clock_seconds, (cfg.out_dir / "report.json").string()),
                                 true});
    } catch (const std::exception& e) {
        for (const auto& check : lab::demo_checks(cfg)) result[check.criterion] = {false, {{e.what(), false}}};
    }
    return result;
}

bool mnist_available() { return std::getenv("LAB_MNIST_DIR") != nullptr; }

}  // namespace

int main(int argc, char** argv) {
    tune_allocator();
    CLI::App app{"Acceptance criteria for concept-lab"};
    std::string group = "all";
    std::string out = (std::filesystem::temp_directory_path() / "clab-acceptance").string();
    app.add_option("--group", group, "properties, synthetic, parity, random, cw or all")
        ->check(CLI::IsMember({"properties", "synthetic", "parity", "random", "cw", "all"}));
    app.add_option("--out", out, "directory for demo outputs");
    CLI11_PARSE(app, argc, argv);
    spdlog::set_level(spdlog::level::warn);

    const bool all = group == "all";
    const std::map<std::string, std::vector<std::string>> demos{
        {"parity", {"mnist-parity"}},
        {"synthetic", {"xyz-purity", "demo1", "fruit-refine"}},
        {"random", {"random-concepts"}},
        {"cw", {"cw-audit"}},
    };
    const std::set<std::string> needs_mnist{"parity", "random", "cw"};

    std::map<int, Outcome> outcomes;
    bool skipped = false;
    for (const auto& [name, list] : demos) {
        if (!all && group != name) continue;
        if (needs_mnist.count(name) && !mnist_available()) {
            std::cout << "group " << name << ": LAB_MNIST_DIR is not set, skipping\n";
            skipped = true;
            continue;
        }
        for (const auto& demo : list) {
            for (auto& [k, o] : run_demo(demo, out)) outcomes[k] = std::move(o);
        }
    }
    if (all || group == "properties") outcomes[10] = properties();

    if (outcomes.empty()) return skipped ? kSkip : 1;
    bool pass = true;
    for (const auto& [k, o] : outcomes) {
        print(k, o);
        pass = pass && o.pass;
    }
    return pass ? 0 : 1;
}
