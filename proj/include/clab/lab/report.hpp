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
#include <iosfwd>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

namespace clab::lab {

enum class Comparison { ge, gt, le, lt, within };

/// One acceptance threshold over a named scalar metric.
struct Check {
    int criterion = 0;
    std::string name;
    std::string metric;
    Comparison op = Comparison::ge;
    double threshold = 0.0;
    double tolerance = 0.0;  ///< used by `within`: |value - threshold| <= tolerance
};

struct Verdict {
    Check check;
    std::optional<double> measured;  ///< empty when the metric is missing
    bool pass = false;

    std::string describe() const;
};

std::string to_string(Comparison op);
Comparison comparison_from_string(const std::string& s);

/// Missing or NaN metrics fail.
std::vector<Verdict> evaluate(const std::vector<Check>& checks, const std::map<std::string, double>& metrics);
bool all_pass(const std::vector<Verdict>& verdicts);

/**
 * Everything a run leaves behind besides its CSV tables.
 *
 * `trials` and `extra` are free-form JSON owned by the demo; `metrics` are the
 * scalars the checks read. The integrity field is FNV-1a over the serialized
 * report without it, so edits after the run are detected by verify.
 */
struct RunReport {
    std::string demo;
    std::string config_hash;
    std::string config_text;
    nlohmann::json provenance = nlohmann::json::object();
    nlohmann::json trials = nlohmann::json::array();
    nlohmann::json aggregates = nlohmann::json::object();
    nlohmann::json extra = nlohmann::json::object();
    std::map<std::string, double> metrics;
    std::vector<Check> checks;
    std::vector<Verdict> verdicts;
    double wall_clock_seconds = 0.0;

    nlohmann::json to_json() const;
    static RunReport from_json(const nlohmann::json& j);
};

/// Integrity hash of a serialized report (the "integrity" member is ignored).
std::string integrity_hash(const nlohmann::json& report);

/// Writes report.json (with integrity hash) into `dir`.
void write_report(const RunReport& report, const std::filesystem::path& dir);
/// Reads `dir`/report.json; IoError when it is missing, unreadable or fails the integrity check.
RunReport read_report(const std::filesystem::path& dir);

/// One line per verdict.
void print_verdicts(const std::vector<Verdict>& verdicts, std::ostream& out);

}  // namespace clab::lab
