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
#include <iostream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <spdlog/spdlog.h>

#include "clab/error.hpp"
#include "clab/lab/config.hpp"
#include "clab/lab/runner.hpp"
#include "clab/runtime.hpp"

using namespace clab;

namespace {

constexpr int kExitPass = 0;
constexpr int kExitFail = 1;
constexpr int kExitError = 2;

int report_verdicts(const lab::RunReport& report) {
    lab::print_verdicts(report.verdicts, std::cout);
    const bool ok = lab::all_pass(report.verdicts);
    std::cout << report.demo << ": " << (ok ? "all acceptance checks passed" : "acceptance checks FAILED") << '\n';
    return ok ? kExitPass : kExitFail;
}

}  // namespace

int main(int argc, char** argv) {
    tune_allocator();
    CLI::App app{"concept-lab: leakage experiments for concept bottleneck and concept whitening models"};
    app.require_subcommand(1);
    bool verbose = false, quiet = false;
    app.add_flag("-v,--verbose", verbose, "debug logging");
    app.add_flag("-q,--quiet", quiet, "warnings and errors only");

    std::string config_path;
    std::size_t run_jobs = 0;
    auto* run = app.add_subcommand("run", "run the experiment described by a config file");
    run->add_option("config", config_path, "experiment config (INI)")->required();
    run->add_option("--jobs", run_jobs, "override the config's worker count");

    std::string demo_name, out_dir = "lab-out";
    std::uint64_t seed = 0;
    std::size_t trials = 0, jobs = 1;
    std::vector<std::string> sets;
    auto* demo = app.add_subcommand("demo", "run a named demo with default settings");
    demo->add_option("name", demo_name, "mnist-parity, demo1, random-concepts, xyz-purity, cw-audit or fruit-refine")
        ->required();
    demo->add_option("--seed", seed, "master seed")->capture_default_str();
    demo->add_option("--trials", trials, "number of trials (default: what the checks need)");
    demo->add_option("--out", out_dir, "output directory")->capture_default_str();
    demo->add_option("--jobs", jobs, "concurrent trials")->capture_default_str();
    demo->add_option("--set", sets, "override as key=value (repeatable)");

    auto* verify = app.add_subcommand("verify", "re-check a finished run against the acceptance thresholds");
    verify->add_option("config", config_path, "experiment config (INI)")->required();

    auto* list = app.add_subcommand("list", "list demos and their override keys");

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::CallForAllHelp& e) {
        return app.exit(e);
    } catch (const CLI::CallForVersion& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return kExitError;
    }
    spdlog::set_level(verbose ? spdlog::level::debug : quiet ? spdlog::level::warn : spdlog::level::info);

    try {
        if (*list) {
            for (const char* name : lab::kDemoNames) {
                std::cout << name << '\n';
                for (const auto& key : lab::override_schema(name)) std::cout << "  " << key.name << ": " << key.help << '\n';
            }
            return kExitPass;
        }
        if (*run) {
            lab::ExperimentConfig cfg = lab::load_config(config_path);
            if (run_jobs) cfg.jobs = run_jobs;
            return report_verdicts(lab::run_experiment(cfg));
        }
        if (*demo) {
            lab::ExperimentConfig cfg;
            cfg.demo = demo_name;
            cfg.seeds = {seed};
            lab::override_schema(demo_name);
            cfg.trials = trials ? trials : lab::default_trials(demo_name);
            cfg.jobs = jobs;
            cfg.out_dir = out_dir;
            for (const auto& s : sets) {
                const auto eq = s.find('=');
                if (eq == std::string::npos) throw ConfigError("--set expects key=value, got '" + s + "'");
                cfg.overrides[s.substr(0, eq)] = s.substr(eq + 1);
            }
            cfg.validate();
            return report_verdicts(lab::run_experiment(cfg));
        }
        if (*verify) {
            const lab::ExperimentConfig cfg = lab::load_config(config_path);
            return report_verdicts(lab::verify_experiment(cfg));
        }
    } catch (const ConfigError& e) {
        spdlog::error("configuration error: {}", e.what());
        return kExitError;
    } catch (const IoError& e) {
        spdlog::error("{}", e.what());
        return kExitError;
    } catch (const ParseError& e) {
        spdlog::error("{}", e.what());
        return kExitError;
    } catch (const std::exception& e) {
        spdlog::error("{}", e.what());
        return kExitError;
    }
    return kExitError;
}
