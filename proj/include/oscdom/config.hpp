#pragma once

#include <cctype>
#include <cstdint>
#include <fstream>
#include <map>
#include <sstream>
#include <string>

#include "oscdom/czo.hpp"
#include "oscdom/errors.hpp"
#include "oscdom/sparse_engine.hpp"

namespace oscdom {

/// One experiment: operator, corpus, grid and engine settings, output
/// location. A fixed seed makes every artifact byte-identical across runs.
struct ExperimentConfig {
    std::string operator_label = "hilbert";
    std::string corpus = "default";
    int dim = 1;
    std::int64_t grid_n = 4096;
    std::uint64_t seed = 42;
    std::string out_dir = "out";
    EngineConfig engine;
    ProbeConfig probe;
};

namespace detail {

inline std::string trim(const std::string& s) {
    std::size_t a = 0, b = s.size();
    while (a < b && std::isspace(static_cast<unsigned char>(s[a]))) ++a;
    while (b > a && std::isspace(static_cast<unsigned char>(s[b - 1]))) --b;
    return s.substr(a, b - a);
}

}  // namespace detail

/// Minimal TOML subset: [section] headers, `key = value` lines with string,
/// integer, float or boolean values, and # comments. This covers the whole
/// documented schema; anything else is a ConfigError.
inline std::map<std::string, std::string> parse_toml_subset(std::istream& in) {
    std::map<std::string, std::string> kv;
    std::string line, section;
    int lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        bool in_string = false;
        for (std::size_t i = 0; i < line.size(); ++i) {
            if (line[i] == '"') in_string = !in_string;
            if (line[i] == '#' && !in_string) {
                line = line.substr(0, i);
                break;
            }
        }
        line = detail::trim(line);
        if (line.empty()) continue;
        if (line.front() == '[') {
            if (line.back() != ']')
                throw ConfigError("line " + std::to_string(lineno) + ": bad section");
            section = detail::trim(line.substr(1, line.size() - 2));
            continue;
        }
        const auto eq = line.find('=');
        if (eq == std::string::npos)
            throw ConfigError("line " + std::to_string(lineno) + ": expected key = value");
        std::string key = detail::trim(line.substr(0, eq));
        std::string value = detail::trim(line.substr(eq + 1));
        if (key.empty() || value.empty())
            throw ConfigError("line " + std::to_string(lineno) + ": empty key or value");
        if (value.front() == '"') {
            if (value.size() < 2 || value.back() != '"')
                throw ConfigError("line " + std::to_string(lineno) + ": unterminated string");
            value = value.substr(1, value.size() - 2);
        }
        kv[section.empty() ? key : section + "." + key] = value;
    }
    return kv;
}

inline ExperimentConfig config_from_map(const std::map<std::string, std::string>& kv) {
    ExperimentConfig cfg;
    auto get_int = [&](const std::string& key, auto& slot) {
        auto it = kv.find(key);
        if (it == kv.end()) return;
        try {
            slot = static_cast<std::remove_reference_t<decltype(slot)>>(
                std::stoll(it->second));
        } catch (...) {
            throw ConfigError("field '" + key + "' is not an integer: " + it->second);
        }
    };
    auto get_double = [&](const std::string& key, double& slot) {
        auto it = kv.find(key);
        if (it == kv.end()) return;
        try {
            slot = std::stod(it->second);
        } catch (...) {
            throw ConfigError("field '" + key + "' is not a number: " + it->second);
        }
    };
    auto get_string = [&](const std::string& key, std::string& slot) {
        auto it = kv.find(key);
        if (it != kv.end()) slot = it->second;
    };

    get_string("operator", cfg.operator_label);
    get_string("corpus", cfg.corpus);
    get_int("n", cfg.dim);
    get_int("grid", cfg.grid_n);
    get_int("seed", cfg.seed);
    get_string("out", cfg.out_dir);

    get_double("engine.lambda", cfg.engine.lambda);
    get_double("engine.dilation", cfg.engine.dilation);
    get_double("engine.eta_target", cfg.engine.target_eta);
    get_int("engine.max_depth", cfg.engine.max_depth);
    get_double("engine.stopping_slack", cfg.engine.stopping_slack);
    get_int("engine.rings", cfg.engine.rings);
    get_double("engine.tail_tol_rel", cfg.engine.tail_tol_rel);

    get_double("probe.box_factor", cfg.probe.box_factor);
    get_double("probe.obs_fraction", cfg.probe.obs_fraction);
    get_int("probe.cells_1d", cfg.probe.cells_1d);
    get_int("probe.cells_2d", cfg.probe.cells_2d);
    {
        auto it = kv.find("probe.radii");
        if (it != kv.end()) {
            cfg.probe.radii.clear();
            std::stringstream ss(it->second);
            std::string tok;
            while (std::getline(ss, tok, ','))
                cfg.probe.radii.push_back(std::stod(detail::trim(tok)));
            if (cfg.probe.radii.empty())
                throw ConfigError("probe.radii must list at least one radius");
        }
    }

    if (cfg.dim < 1 || cfg.dim > 2) throw ConfigError("n must be 1 or 2");
    if (cfg.grid_n < 16) throw ConfigError("grid must be >= 16");
    return cfg;
}

inline ExperimentConfig load_config(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open config file " + path);
    return config_from_map(parse_toml_subset(in));
}

}  // namespace oscdom
