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
#include <doctest.h>

#include <filesystem>
#include <fstream>
#include <sstream>

#include "clab/error.hpp"
#include "clab/lab/config.hpp"
#include "clab/lab/report.hpp"
#include "clab/lab/runner.hpp"

using namespace clab;
using namespace clab::lab;
namespace fs = std::filesystem;

namespace {

ExperimentConfig parse(const std::string& text) {
    std::istringstream in(text);
    return parse_config(in);
}

fs::path scratch(const std::string& name) {
    const fs::path dir = fs::temp_directory_path() / ("clab_test_lab_" + name);
    fs::remove_all(dir);
    return dir;
}

std::string slurp(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    std::ostringstream s;
    s << in.rdbuf();
    return s.str();
}

}  // namespace

TEST_CASE("config parsing and defaults") {
    const auto cfg = parse(
        "[experiment]\n"
        "demo = xyz-purity\n"
        "seed = 7   # master seed\n"
        "trials = 3\n"
        "[overrides]\n"
        "lambda = 0.01\n"
        "lambdas = 0.1, 1\n");
    CHECK(cfg.demo == "xyz-purity");
    CHECK(cfg.trials == 3);
    CHECK(cfg.real("lambda", 0.1) == 0.01);
    CHECK(cfg.reals("lambdas", {}) == std::vector<double>{0.1, 1.0});
    CHECK(cfg.integer("epochs", 350) == 350);
    CHECK(cfg.trial_seed(0) != cfg.trial_seed(1));

    const auto listed = parse("[experiment]\ndemo = demo1\nseeds = 4, 5\n");
    CHECK(listed.trials == 2);
    CHECK(listed.trial_seed(1) == 5);
}

TEST_CASE("config errors") {
    CHECK_THROWS_AS(parse("[experiment]\ndemo = nope\n"), ConfigError);
    CHECK_THROWS_AS(parse("[experiment]\ndemo = demo1\ntrials = 0\n"), ConfigError);
    CHECK_THROWS_AS(parse("[experiment]\ndemo = demo1\nseeds = 1, 2\ntrials = 3\n"), ConfigError);
    CHECK_THROWS_AS(parse("[experiment]\ndemo = demo1\n[overrides]\nlambda = 0.1\n"), ConfigError);
    CHECK_THROWS_AS(parse("[experiment]\ndemo = demo1\n[overrides]\nepochs = many\n"), ConfigError);
    CHECK_THROWS_AS(parse("[experiment]\ndemo = demo1\ncolour = red\n"), ConfigError);
    CHECK_THROWS_AS(parse("[experiment\ndemo = demo1\n"), ConfigError);
    CHECK_THROWS_AS(parse("[overrides]\nepochs = 3\n"), ConfigError);
}

TEST_CASE("config hash ignores key order, whitespace, jobs and out_dir") {
    const auto a = parse("[experiment]\ndemo = demo1\nseed = 1\ntrials = 2\n[overrides]\nepochs = 5\nhidden = 8\n");
    const auto b = parse("[overrides]\nhidden=8\nepochs =   5\n[experiment]\ntrials = 2\njobs = 4\nout_dir = x\nseed = 1\ndemo = demo1\n");
    CHECK(a.canonical() == b.canonical());
    CHECK(a.hash() == b.hash());
    CHECK(a.hash().size() == 16);
    const auto c = parse("[experiment]\ndemo = demo1\nseed = 2\ntrials = 2\n[overrides]\nepochs = 5\nhidden = 8\n");
    CHECK(a.hash() != c.hash());
}

TEST_CASE("fnv1a reference values") {
    CHECK(fnv1a_hex("") == "cbf29ce484222325");
    CHECK(fnv1a_hex("a") == "af63dc4c8601ec8c");
    CHECK(fnv1a_hex("foobar") == "85944171f73967e8");
}

TEST_CASE("check evaluation") {
    const std::vector<Check> checks{{1, "ge", "a", Comparison::ge, 0.5, 0},
                                    {1, "gt", "a", Comparison::gt, 0.5, 0},
                                    {2, "le", "b", Comparison::le, 0.02, 0},
                                    {3, "within", "c", Comparison::within, 0.75, 0.07},
                                    {4, "missing", "zzz", Comparison::ge, 0, 0}};
    const auto v = evaluate(checks, {{"a", 0.5}, {"b", 0.02}, {"c", 0.68}});
    CHECK(v[0].pass);
    CHECK_FALSE(v[1].pass);
    CHECK(v[2].pass);
    CHECK(v[3].pass);
    CHECK_FALSE(v[4].pass);
    CHECK_FALSE(v[4].measured.has_value());
    CHECK_FALSE(all_pass(v));
    CHECK_FALSE(all_pass({}));
    CHECK(evaluate(checks, {{"c", 0.83}})[3].pass == false);
}

TEST_CASE("report round trip, tampering and empty metrics") {
    const fs::path dir = scratch("report");
    RunReport r;
    r.demo = "fruit-refine";
    r.config_hash = "0123456789abcdef";
    r.config_text = "experiment.demo = fruit-refine\n";
    r.metrics = {{"v1_acc_mean", 0.5}, {"v2_acc_mean", 1.0}};
    r.checks = {{9, "v1", "v1_acc_mean", Comparison::le, 0.55, 0}};
    r.verdicts = evaluate(r.checks, r.metrics);
    write_report(r, dir);
    const RunReport back = read_report(dir);
    CHECK(back.metrics == r.metrics);
    CHECK(back.verdicts.size() == 1);
    CHECK(back.verdicts[0].pass);

    std::string text = slurp(dir / "report.json");
    const auto at = text.find("0.5");
    REQUIRE(at != std::string::npos);
    text.replace(at, 3, "0.4");
    std::ofstream(dir / "report.json", std::ios::binary) << text;
    CHECK_THROWS_AS(read_report(dir), IoError);
    CHECK_THROWS_AS(read_report(dir / "missing"), IoError);

    RunReport empty = r;
    empty.metrics.clear();
    empty.verdicts = evaluate(empty.checks, empty.metrics);
    write_report(empty, dir);
    const RunReport e = read_report(dir);
    CHECK_FALSE(all_pass(e.verdicts));
    fs::remove_all(dir);
}

TEST_CASE("fruit demo end to end: verify, determinism, hash mismatch") {
    const fs::path dir = scratch("fruit");
    ExperimentConfig cfg;
    cfg.demo = "fruit-refine";
    cfg.seeds = {3};
    cfg.trials = 2;
    cfg.out_dir = dir;
    cfg.overrides = {{"epochs", "40"}, {"n_train", "400"}, {"n_test", "400"}};
    const RunReport first = run_experiment(cfg);
    CHECK(all_pass(first.verdicts));
    CHECK(first.metrics.at("v2_acc_mean") >= 0.95);
    const std::string csv = slurp(dir / "fruit_accuracy.csv");
    const std::string trials = slurp(dir / "trials.csv");

    const RunReport checked = verify_experiment(cfg);
    CHECK(all_pass(checked.verdicts));
    CHECK(checked.verdicts.size() == first.verdicts.size());

    run_experiment(cfg);
    CHECK(slurp(dir / "fruit_accuracy.csv") == csv);
    CHECK(slurp(dir / "trials.csv") == trials);

    ExperimentConfig other = cfg;
    other.seeds = {4};
    CHECK_THROWS_AS(verify_experiment(other), IoError);

    const auto json_text = slurp(dir / "report.json");
    CHECK(json_text.find("\"provenance\"") != std::string::npos);
    CHECK(json_text.find("fruit-v1") != std::string::npos);
    fs::remove_all(dir);
}

TEST_CASE("every demo has checks and a schema") {
    for (const char* name : kDemoNames) {
        ExperimentConfig cfg;
        cfg.demo = name;
        CHECK_FALSE(demo_checks(cfg).empty());
        CHECK_FALSE(override_schema(name).empty());
    }
    ExperimentConfig bad;
    bad.demo = "nope";
    CHECK_THROWS_AS(demo_checks(bad), ConfigError);
}
