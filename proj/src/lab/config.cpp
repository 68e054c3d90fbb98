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
#include "clab/lab/config.hpp"

#include <algorithm>
#include <charconv>
#include <fstream>
#include <sstream>

#include <boost/property_tree/ini_parser.hpp>
#include <boost/property_tree/ptree.hpp>

#include "clab/error.hpp"
#include "clab/seed.hpp"

namespace clab::lab {

namespace {

using K = ValueKind;

const std::map<std::string, std::vector<OverrideKey>>& schemas() {
    static const std::map<std::string, std::vector<OverrideKey>> table{
        {"mnist-parity",
         {{"g_epochs", K::integer, "epochs of the image -> concept network"},
          {"g_batch", K::integer, "batch size of the image -> concept network"},
          {"h_epochs", K::integer, "epochs of the concept -> task network"},
          {"hidden", K::integer, "width of both hidden layers"},
          {"lr", K::real, "Adam learning rate"},
          {"train_rows", K::integer, "cap on training rows after balancing (0 = all)"},
          {"plot_rows", K::integer, "rows written to the PCA scatter CSV"}}},
        {"demo1",
         {{"epochs", K::integer, "epochs of the direct, true-concept and h networks"},
          {"g_epochs", K::integer, "epochs of the concept networks g"},
          {"hidden", K::integer, "width of the three hidden layers"},
          {"lr", K::real, "Adam learning rate"}}},
        {"random-concepts",
         {{"m_values", K::integer_list, "numbers of random concepts"},
          {"runs", K::integer, "runs per m"},
          {"per_class", K::integer, "images per digit and split"},
          {"g_epochs", K::integer, "epochs of the pixel -> concept network"},
          {"h_epochs", K::integer, "epochs of the soft concept -> task network"},
          {"hard_epochs", K::integer, "epochs of the hard concept -> task network"},
          {"direct_epochs", K::integer, "epochs of the pixel -> task reference"},
          {"direct_runs", K::integer, "runs of the pixel -> task reference"}}},
        {"xyz-purity",
         {{"lambda", K::real, "concept loss weight of the purity models"},
          {"lambdas", K::real_list, "lambda sweep"},
          {"sweep_trials", K::integer, "trials that also run the lambda sweep"},
          {"epochs", K::integer, "joint training epochs"},
          {"n_train", K::integer, "training points"},
          {"n_test", K::integer, "test points"},
          {"oracle_draws", K::integer, "fresh points scored by the Bayes oracle"}}},
        {"cw-audit",
         {{"epochs", K::integer, "training epochs of each CNN"},
          {"per_digit", K::integer, "training images per digit (0 = all)"},
          {"test_per_digit", K::integer, "test images per digit (0 = all)"},
          {"channels", K::integer, "filters of the last conv layer"},
          {"rotation_every", K::integer, "batches between rotation rounds"},
          {"rotation_steps", K::integer, "Cayley steps per round"},
          {"eta", K::real, "Cayley step size"},
          {"probe_epochs", K::integer, "epochs of each purity probe"},
          {"probe_rows", K::integer, "training rows per purity probe (0 = all)"}}},
        {"fruit-refine",
         {{"n_train", K::integer, "training rows"},
          {"n_test", K::integer, "test rows"},
          {"epochs", K::integer, "epochs of the concept -> task network"},
          {"hidden", K::integer, "hidden width"}}},
    };
    return table;
}

std::string trim(const std::string& s) {
    const auto b = s.find_first_not_of(" \t\r\n");
    if (b == std::string::npos) return {};
    const auto e = s.find_last_not_of(" \t\r\n");
    return s.substr(b, e - b + 1);
}

std::vector<std::string> split_list(const std::string& s) {
    std::vector<std::string> out;
    std::stringstream ss(s);
    std::string item;
    while (std::getline(ss, item, ',')) {
        item = trim(item);
        if (!item.empty()) out.push_back(item);
    }
    return out;
}

template <class T>
bool parse_number(const std::string& text, T& out) {
    const char* end = text.data() + text.size();
    auto [ptr, ec] = std::from_chars(text.data(), end, out);
    return ec == std::errc() && ptr == end;
}

std::uint64_t parse_u64(const std::string& key, const std::string& text) {
    std::uint64_t v = 0;
    if (!parse_number(trim(text), v)) throw ConfigError("'" + key + "' expects a non-negative integer, got '" + text + "'");
    return v;
}

double parse_real(const std::string& key, const std::string& text) {
    double v = 0;
    if (!parse_number(trim(text), v)) throw ConfigError("'" + key + "' expects a number, got '" + text + "'");
    return v;
}

bool parse_bool(const std::string& key, const std::string& text) {
    const std::string t = trim(text);
    if (t == "true" || t == "1" || t == "yes" || t == "on") return true;
    if (t == "false" || t == "0" || t == "no" || t == "off") return false;
    throw ConfigError("'" + key + "' expects true or false, got '" + text + "'");
}

void check_value(const OverrideKey& key, const std::string& value) {
    switch (key.kind) {
        case K::integer: parse_u64(key.name, value); break;
        case K::real: parse_real(key.name, value); break;
        case K::boolean: parse_bool(key.name, value); break;
        case K::integer_list:
            if (split_list(value).empty()) throw ConfigError("'" + key.name + "' expects a list");
            for (const auto& v : split_list(value)) parse_u64(key.name, v);
            break;
        case K::real_list:
            if (split_list(value).empty()) throw ConfigError("'" + key.name + "' expects a list");
            for (const auto& v : split_list(value)) parse_real(key.name, v);
            break;
    }
}

}  // namespace

bool is_known_demo(const std::string& name) { return schemas().count(name) != 0; }

std::size_t default_trials(const std::string& demo) { return demo == "random-concepts" ? 1 : 5; }

const std::vector<OverrideKey>& override_schema(const std::string& demo) {
    const auto it = schemas().find(demo);
    if (it == schemas().end()) {
        std::string names;
        for (const char* n : kDemoNames) names += std::string(names.empty() ? "" : ", ") + n;
        throw ConfigError("unknown demo '" + demo + "' (expected one of " + names + ")");
    }
    return it->second;
}

std::uint64_t ExperimentConfig::trial_seed(std::size_t trial) const {
    if (explicit_seeds) return seeds.at(trial);
    return derive_seed(seeds.at(0), {trial});
}

void ExperimentConfig::validate() const {
    const auto& schema = override_schema(demo);
    if (trials == 0) throw ConfigError("trials must be at least 1");
    if (jobs == 0) throw ConfigError("jobs must be at least 1");
    if (seeds.empty()) throw ConfigError("no seed given");
    if (explicit_seeds && seeds.size() != trials) {
        throw ConfigError("seeds lists " + std::to_string(seeds.size()) + " values but trials = " +
                          std::to_string(trials));
    }
    for (const auto& [key, value] : overrides) {
        const auto it = std::find_if(schema.begin(), schema.end(), [&](const OverrideKey& k) { return k.name == key; });
        if (it == schema.end()) {
            std::string allowed;
            for (const auto& k : schema) allowed += (allowed.empty() ? "" : ", ") + k.name;
            throw ConfigError("unknown override '" + key + "' for demo " + demo + " (allowed: " + allowed + ")");
        }
        check_value(*it, value);
    }
}

std::string ExperimentConfig::canonical() const {
    std::map<std::string, std::string> lines;
    lines["experiment.demo"] = demo;
    lines["experiment.trials"] = std::to_string(trials);
    std::string seed_text;
    if (explicit_seeds) {
        for (auto s : seeds) seed_text += (seed_text.empty() ? "" : ",") + std::to_string(s);
        lines["experiment.seeds"] = seed_text;
    } else {
        lines["experiment.seed"] = std::to_string(seeds.at(0));
    }
    for (const auto& [key, value] : overrides) {
        std::string norm;
        for (const auto& item : split_list(value)) norm += (norm.empty() ? "" : ",") + item;
        lines["overrides." + key] = norm;
    }
    std::string out;
    for (const auto& [key, value] : lines) out += key + " = " + value + "\n";
    return out;
}

std::string ExperimentConfig::hash() const { return fnv1a_hex(canonical()); }

double ExperimentConfig::real(const std::string& key, double fallback) const {
    const auto it = overrides.find(key);
    return it == overrides.end() ? fallback : parse_real(key, it->second);
}

std::size_t ExperimentConfig::integer(const std::string& key, std::size_t fallback) const {
    const auto it = overrides.find(key);
    return it == overrides.end() ? fallback : std::size_t(parse_u64(key, it->second));
}

bool ExperimentConfig::boolean(const std::string& key, bool fallback) const {
    const auto it = overrides.find(key);
    return it == overrides.end() ? fallback : parse_bool(key, it->second);
}

std::vector<std::size_t> ExperimentConfig::integers(const std::string& key, std::vector<std::size_t> fallback) const {
    const auto it = overrides.find(key);
    if (it == overrides.end()) return fallback;
    std::vector<std::size_t> out;
    for (const auto& v : split_list(it->second)) out.push_back(std::size_t(parse_u64(key, v)));
    return out;
}

std::vector<double> ExperimentConfig::reals(const std::string& key, std::vector<double> fallback) const {
    const auto it = overrides.find(key);
    if (it == overrides.end()) return fallback;
    std::vector<double> out;
    for (const auto& v : split_list(it->second)) out.push_back(parse_real(key, v));
    return out;
}

ExperimentConfig parse_config(std::istream& in) {
    namespace pt = boost::property_tree;
    pt::ptree tree;
    try {
        pt::read_ini(in, tree);
    } catch (const pt::ini_parser_error& e) {
        throw ConfigError("config: " + e.message() + " on line " + std::to_string(e.line()));
    }
    ExperimentConfig cfg;
    for (const auto& [section, body] : tree) {
        if (section == "experiment") {
            for (const auto& [key, node] : body) {
                // read_ini keeps inline comments; drop them here.
                std::string value = node.get_value<std::string>();
                value = trim(value.substr(0, value.find_first_of("#;")));
                if (key == "demo") {
                    cfg.demo = value;
                } else if (key == "seed") {
                    cfg.seeds = {parse_u64(key, value)};
                } else if (key == "seeds") {
                    cfg.seeds.clear();
                    for (const auto& s : split_list(value)) cfg.seeds.push_back(parse_u64(key, s));
                    cfg.explicit_seeds = true;
                } else if (key == "trials") {
                    cfg.trials = parse_u64(key, value);
                } else if (key == "jobs") {
                    cfg.jobs = parse_u64(key, value);
                } else if (key == "out_dir") {
                    cfg.out_dir = value;
                } else {
                    throw ConfigError("config: unknown key '" + key + "' in [experiment]");
                }
            }
        } else if (section == "overrides") {
            for (const auto& [key, node] : body) {
                std::string value = node.get_value<std::string>();
                cfg.overrides[key] = trim(value.substr(0, value.find_first_of("#;")));
            }
        } else {
            throw ConfigError("config: unknown section [" + section + "]");
        }
    }
    if (cfg.demo.empty()) throw ConfigError("config: [experiment] demo is missing");
    if (cfg.explicit_seeds && !tree.get_child("experiment").count("trials")) cfg.trials = cfg.seeds.size();
    cfg.validate();
    return cfg;
}

ExperimentConfig load_config(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open config " + path.string());
    ExperimentConfig cfg = parse_config(in);
    if (cfg.out_dir.is_relative()) cfg.out_dir = path.parent_path() / cfg.out_dir;
    return cfg;
}

std::string fnv1a_hex(const std::string& bytes) {
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (unsigned char c : bytes) {
        h ^= c;
        h *= 0x100000001b3ULL;
    }
    static const char* digits = "0123456789abcdef";
    std::string out(16, '0');
    for (int i = 15; i >= 0; --i, h >>= 4) out[std::size_t(i)] = digits[h & 0xf];
    return out;
}

}  // namespace clab::lab
