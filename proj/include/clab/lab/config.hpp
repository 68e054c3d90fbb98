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

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <map>
#include <string>
#include <vector>

namespace clab::lab {

inline constexpr const char* kDemoNames[] = {"mnist-parity", "demo1",      "random-concepts",
                                             "xyz-purity",   "cw-audit",   "fruit-refine"};

bool is_known_demo(const std::string& name);

/// Trials a demo needs for its acceptance checks (1 for random-concepts, 5 otherwise).
std::size_t default_trials(const std::string& demo);

enum class ValueKind { integer, real, boolean, integer_list, real_list };

struct OverrideKey {
    std::string name;
    ValueKind kind;
    std::string help;
};

/// Override keys accepted by a demo; throws ConfigError for an unknown demo.
const std::vector<OverrideKey>& override_schema(const std::string& demo);

/**
 * One experiment: a demo, its trial seeds and per-demo overrides.
 *
 * Text form (sections and `key = value` lines, `#` or `;` comments):
 *
 *     [experiment]
 *     demo = xyz-purity
 *     seed = 7          # with trials = T: trial i runs on derive_seed(7, {i})
 *     trials = 5
 *     out_dir = runs/xyz
 *     [overrides]
 *     lambda = 0.1
 *
 * `seeds = 3, 4, 5` lists trial seeds explicitly instead of `seed`.
 */
struct ExperimentConfig {
    std::string demo;
    std::vector<std::uint64_t> seeds{0};
    bool explicit_seeds = false;
    std::size_t trials = 1;
    std::size_t jobs = 1;
    std::map<std::string, std::string> overrides;
    std::filesystem::path out_dir = "lab-out";

    std::uint64_t trial_seed(std::size_t trial) const;

    /// Throws ConfigError on an unknown demo, trials == 0, a seed list that disagrees
    /// with `trials`, or an override key or value outside the demo's schema.
    void validate() const;

    /// Sorted `key = value` lines over everything that affects results (not jobs or out_dir).
    std::string canonical() const;
    /// FNV-1a of canonical(), 16 hex digits.
    std::string hash() const;

    bool has(const std::string& key) const { return overrides.count(key) != 0; }
    double real(const std::string& key, double fallback) const;
    std::size_t integer(const std::string& key, std::size_t fallback) const;
    bool boolean(const std::string& key, bool fallback) const;
    std::vector<std::size_t> integers(const std::string& key, std::vector<std::size_t> fallback) const;
    std::vector<double> reals(const std::string& key, std::vector<double> fallback) const;
};

ExperimentConfig parse_config(std::istream& in);
/// Relative out_dir values resolve against the config file's directory.
ExperimentConfig load_config(const std::filesystem::path& path);

/// FNV-1a 64 as 16 lowercase hex digits.
std::string fnv1a_hex(const std::string& bytes);

}  // namespace clab::lab
