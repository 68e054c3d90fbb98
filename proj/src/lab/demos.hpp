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
#include <map>
#include <string>
#include <vector>

#include <json.hpp>

#include "clab/data/dataset.hpp"
#include "clab/data/idx.hpp"
#include "clab/lab/config.hpp"
#include "clab/nn/tensor.hpp"

namespace clab::lab::detail {

using Metrics = std::map<std::string, double>;

struct DemoOutput {
    std::vector<Metrics> trials;  ///< one entry per trial, same keys in each
    Metrics metrics;              ///< scalars the checks read
    nlohmann::json extra = nlohmann::json::object();
    nlohmann::json datasets = nlohmann::json::array();  ///< {generator, seed, split, rows}
};

DemoOutput run_mnist_parity(const ExperimentConfig& cfg, const std::filesystem::path& out);
DemoOutput run_random_concepts(const ExperimentConfig& cfg, const std::filesystem::path& out);
DemoOutput run_cw_audit(const ExperimentConfig& cfg, const std::filesystem::path& out);
DemoOutput run_demo1(const ExperimentConfig& cfg, const std::filesystem::path& out);
DemoOutput run_xyz_purity(const ExperimentConfig& cfg, const std::filesystem::path& out);
DemoOutput run_fruit_refine(const ExperimentConfig& cfg, const std::filesystem::path& out);

const data::MnistSplits& mnist();

nlohmann::json dataset_entry(const data::LabeledDataset& ds);
double accuracy(const nn::Tensor& prob, const nn::Tensor& target);
double mean_of(const std::vector<Metrics>& trials, const std::string& key);
std::vector<double> column_of(const std::vector<Metrics>& trials, const std::string& key);
void write_file(const std::filesystem::path& path, const std::string& text);
std::string fmt_num(double v);

}  // namespace clab::lab::detail
