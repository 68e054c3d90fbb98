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
#pragma once

#include <filesystem>
#include <vector>

#include "clab/lab/config.hpp"
#include "clab/lab/report.hpp"

namespace clab::lab {

/// Acceptance thresholds a demo is judged by.
std::vector<Check> demo_checks(const ExperimentConfig& cfg);

/// LAB_MNIST_DIR, or IoError explaining where to get the files.
std::filesystem::path mnist_dir();

/**
 * Runs every trial of the configured demo, writes its CSV tables and report.json
 * into cfg.out_dir and returns the report with verdicts filled in.
 */
RunReport run_experiment(const ExperimentConfig& cfg);

/// Re-reads cfg.out_dir/report.json, checks integrity and the config hash, and
/// re-evaluates the stored metrics without training anything.
RunReport verify_experiment(const ExperimentConfig& cfg);

}  // namespace clab::lab
