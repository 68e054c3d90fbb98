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
#include "clab/lab/report.hpp"

#include <cmath>
#include <fstream>
#include <ostream>

#include <fmt/format.h>

#include "clab/error.hpp"
#include "clab/lab/config.hpp"

namespace clab::lab {

using nlohmann::json;

std::string to_string(Comparison op) {
    switch (op) {
        case Comparison::ge: return ">=";
        case Comparison::gt: return ">";
        case Comparison::le: return "<=";
        case Comparison::lt: return "<";
        case Comparison::within: return "within";
    }
    return "?";
}

Comparison comparison_from_string(const std::string& s) {
    for (auto op : {Comparison::ge, Comparison::gt, Comparison::le, Comparison::lt, Comparison::within}) {
        if (to_string(op) == s) return op;
    }
    throw IoError("report: unknown comparison '" + s + "'");
}

std::string Verdict::describe() const {
    std::string target = check.op == Comparison::within
                             ? fmt::format("{} +- {}", check.threshold, check.tolerance)
                             : fmt::format("{} {}", to_string(check.op), check.threshold);
    std::string value = measured ? fmt::format("{:.4f}", *measured) : std::string("missing");
    return fmt::format("criterion {:>2} {:<4} {}: {} = {} (want {})", check.criterion, pass ? "PASS" : "FAIL",
                       check.name, check.metric, value, target);
}

std::vector<Verdict> evaluate(const std::vector<Check>& checks, const std::map<std::string, double>& metrics) {
    std::vector<Verdict> out;
    for (const auto& c : checks) {
        Verdict v{c, std::nullopt, false};
        const auto it = metrics.find(c.metric);
        if (it != metrics.end() && !std::isnan(it->second)) {
            const double x = it->second;
            v.measured = x;
            switch (c.op) {
                case Comparison::ge: v.pass = x >= c.threshold; break;
                case Comparison::gt: v.pass = x > c.threshold; break;
                case Comparison::le: v.pass = x <= c.threshold; break;
                case Comparison::lt: v.pass = x < c.threshold; break;
                case Comparison::within: v.pass = std::abs(x - c.threshold) <= c.tolerance; break;
            }
        }
        out.push_back(std::move(v));
    }
    return out;
}

bool all_pass(const std::vector<Verdict>& verdicts) {
    if (verdicts.empty()) return false;
    for (const auto& v : verdicts) {
        if (!v.pass) return false;
    }
    return true;
}

namespace {

json check_json(const Check& c) {
    return {{"criterion", c.criterion}, {"name", c.name},           {"metric", c.metric},
            {"op", to_string(c.op)},   {"threshold", c.threshold}, {"tolerance", c.tolerance}};
}

Check check_from(const json& j) {
    return {j.at("criterion").get<int>(),           j.at("name").get<std::string>(),
            j.at("metric").get<std::string>(),      comparison_from_string(j.at("op").get<std::string>()),
            j.at("threshold").get<double>(),        j.at("tolerance").get<double>()};
}

// NaN is not representable in JSON; such metrics are stored as null.
json metric_value(double v) { return std::isfinite(v) ? json(v) : json(nullptr); }

}  // namespace

json RunReport::to_json() const {
    json j;
    j["demo"] = demo;
    j["config_hash"] = config_hash;
    j["config"] = config_text;
    j["provenance"] = provenance;
    j["trials"] = trials;
    j["aggregates"] = aggregates;
    j["extra"] = extra;
    j["metrics"] = json::object();
    for (const auto& [k, v] : metrics) j["metrics"][k] = metric_value(v);
    j["checks"] = json::array();
    for (const auto& c : checks) j["checks"].push_back(check_json(c));
    j["verdicts"] = json::array();
    for (const auto& v : verdicts) {
        j["verdicts"].push_back({{"criterion", v.check.criterion},
                                 {"name", v.check.name},
                                 {"measured", v.measured ? metric_value(*v.measured) : json(nullptr)},
                                 {"pass", v.pass}});
    }
    j["pass"] = all_pass(verdicts);
    j["wall_clock_seconds"] = wall_clock_seconds;
    return j;
}

RunReport RunReport::from_json(const json& j) {
    RunReport r;
    try {
        r.demo = j.at("demo").get<std::string>();
        r.config_hash = j.at("config_hash").get<std::string>();
        r.config_text = j.at("config").get<std::string>();
        r.provenance = j.at("provenance");
        r.trials = j.at("trials");
        r.aggregates = j.at("aggregates");
        r.extra = j.value("extra", json::object());
        for (const auto& [k, v] : j.at("metrics").items()) {
            r.metrics[k] = v.is_number() ? v.get<double>() : std::nan("");
        }
        for (const auto& c : j.at("checks")) r.checks.push_back(check_from(c));
        r.wall_clock_seconds = j.at("wall_clock_seconds").get<double>();
    } catch (const json::exception& e) {
        throw IoError(std::string("report: malformed field: ") + e.what());
    }
    r.verdicts = evaluate(r.checks, r.metrics);
    return r;
}

std::string integrity_hash(const json& report) {
    json copy = report;
    copy.erase("integrity");
    return fnv1a_hex(copy.dump());
}

void write_report(const RunReport& report, const std::filesystem::path& dir) {
    std::filesystem::create_directories(dir);
    json j = report.to_json();
    j["integrity"] = integrity_hash(j);
    std::ofstream out(dir / "report.json");
    if (!out) throw IoError("cannot write " + (dir / "report.json").string());
    out << j.dump(2) << '\n';
}

RunReport read_report(const std::filesystem::path& dir) {
    const auto path = dir / "report.json";
    std::ifstream in(path);
    if (!in) throw IoError("no report at " + path.string() + "; run the experiment first");
    json j;
    try {
        j = json::parse(in);
    } catch (const json::parse_error& e) {
        throw IoError("report " + path.string() + " is not valid JSON: " + e.what());
    }
    if (!j.is_object() || !j.contains("integrity") || !j["integrity"].is_string()) {
        throw IoError("report " + path.string() + " has no integrity hash");
    }
    if (j["integrity"].get<std::string>() != integrity_hash(j)) {
        throw IoError("report " + path.string() + " failed its integrity check (edited after the run?)");
    }
    return RunReport::from_json(j);
}

void print_verdicts(const std::vector<Verdict>& verdicts, std::ostream& out) {
    if (verdicts.empty()) out << "no acceptance checks evaluated: FAIL\n";
    for (const auto& v : verdicts) out << v.describe() << '\n';
}

}  // namespace clab::lab
