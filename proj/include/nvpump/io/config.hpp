// Copyright 2026 The nvpump Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

// config.hpp: flat YAML run configuration.
//
// Every key is optional and defaults to the published parameter set. Unknown
// keys, type mismatches and constraint violations raise ConfigError naming
// the key and its line.

#pragma once

#include <yaml-cpp/yaml.h>

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <filesystem>
#include <fstream>
#include <functional>
#include <map>
#include <optional>
#include <sstream>
#include <stdexcept>
#include <string>
#include <type_traits>
#include <vector>

#include "nvpump/experiments.hpp"
#include "nvpump/model.hpp"
#include "nvpump/types.hpp"

namespace nvpump::io {

class ConfigError : public std::runtime_error {
public:
    ConfigError(std::string key, std::optional<int> line, const std::string& what)
        : std::runtime_error(format(key, line, what)), key_(std::move(key)), line_(line) {}

    const std::string& key() const noexcept { return key_; }
    std::optional<int> line() const noexcept { return line_; }

private:
    static std::string format(const std::string& key, std::optional<int> line, const std::string& what) {
        std::string s = key.empty() ? std::string("config") : key;
        if (line) s += " (line " + std::to_string(*line) + ")";
        return s + ": " + what;
    }

    std::string key_;
    std::optional<int> line_;
};

enum class Command { simulate, ness, sweep_gamma, sweep_toff, sweep_entropy, ledger };

inline const std::vector<std::pair<Command, std::string>>& command_names() {
    static const std::vector<std::pair<Command, std::string>> names{
        {Command::simulate, "simulate"},        {Command::ness, "ness"},
        {Command::sweep_gamma, "sweep-gamma"},  {Command::sweep_toff, "sweep-toff"},
        {Command::sweep_entropy, "sweep-entropy"}, {Command::ledger, "ledger"},
    };
    return names;
}

inline std::string to_string(Command c) {
    for (const auto& [cmd, name] : command_names())
        if (cmd == c) return name;
    return "unknown";
}

inline std::optional<Command> parse_command(const std::string& name) {
    for (const auto& [cmd, n] : command_names())
        if (n == name) return cmd;
    return std::nullopt;
}

struct RunConfig {
    ModelParams model{};
    Command command = Command::simulate;
    std::string output_dir = "out";
    bool plot = false;
    bool log_gamma_axis = false;

    // Protocol.
    double t_off_us = 10.0;
    std::optional<double> t_end_us;
    std::size_t sample_count = 1001;
    double ness_tol = 1e-8;
    double convergence_tol = 1e-9;
    double ledger_tol = 1e-8;
    std::optional<std::vector<double>> initial_state;  // 8 populations; empty = uniform on G

    // Sweeps.
    double gamma_min = 0.0;
    double gamma_max = 5.0;
    std::size_t gamma_points = 101;
    double toff_max_us = 10.0;
    std::size_t toff_points = 100;
    double toff_ledger_tol = 1e-7;  // per-run ledger tolerance in sweep-toff
    std::vector<double> decomposition_gamma_p{0.5, 1.0, 2.0};

    unsigned threads = 0;
    bool strict_convergence = false;

    ProtocolConfig protocol(double gamma_p) const {
        ProtocolConfig p;
        p.gamma_p = gamma_p;
        p.t_off = t_off_us;
        p.t_end = t_end_us;
        p.sample_count = sample_count;
        p.b_z = model.b_z;
        p.ness_tol = ness_tol;
        p.convergence_tol = convergence_tol;
        p.ledger.rel_tol = ledger_tol;
        if (initial_state) {
            Vector8d v;
            for (int i = 0; i < kLevels; ++i) v[i] = (*initial_state)[static_cast<std::size_t>(i)];
            p.initial_state = PopulationVector(v);
        }
        return p;
    }

    ProtocolConfig protocol() const { return protocol(model.gamma_p); }

    std::vector<double> gamma_grid() const { return linspace(gamma_min, gamma_max, gamma_points); }

    // (0, toff_max] with toff_points points: toff_max * k / toff_points.
    std::vector<double> toff_grid() const {
        std::vector<double> g(toff_points);
        for (std::size_t k = 0; k < toff_points; ++k)
            g[k] = toff_max_us * static_cast<double>(k + 1) / static_cast<double>(toff_points);
        return g;
    }

    SweepOptions sweep_options() const { return SweepOptions{threads}; }
};

namespace detail {

enum class Constraint { none, finite, non_negative, positive };

struct Field {
    std::string key;
    Constraint constraint;
    std::function<void(RunConfig&, const YAML::Node&)> read;
    std::function<void(const RunConfig&, YAML::Emitter&)> write;
    std::function<std::optional<double>(const RunConfig&)> number;  // for constraint checks
};

template <class T>
Field scalar(std::string key, Constraint c, T RunConfig::*member) {
    return Field{
        key, c, [member](RunConfig& cfg, const YAML::Node& n) { cfg.*member = n.as<T>(); },
        [member](const RunConfig& cfg, YAML::Emitter& e) { e << cfg.*member; },
        [member](const RunConfig& cfg) -> std::optional<double> {
            if constexpr (std::is_arithmetic_v<T> && !std::is_same_v<T, bool>)
                return static_cast<double>(cfg.*member);
            else
                return std::nullopt;
        }};
}

inline Field model_scalar(std::string key, Constraint c, double ModelParams::*member) {
    return Field{key, c, [member](RunConfig& cfg, const YAML::Node& n) { cfg.model.*member = n.as<double>(); },
                 [member](const RunConfig& cfg, YAML::Emitter& e) { e << cfg.model.*member; },
                 [member](const RunConfig& cfg) -> std::optional<double> { return cfg.model.*member; }};
}

// Accessor-based field for nested model parameters.
inline Field model_ref(std::string key, Constraint c, std::function<double&(ModelParams&)> ref) {
    return Field{key, c, [ref](RunConfig& cfg, const YAML::Node& n) { ref(cfg.model) = n.as<double>(); },
                 [ref](const RunConfig& cfg, YAML::Emitter& e) {
                     ModelParams copy = cfg.model;
                     e << ref(copy);
                 },
                 [ref](const RunConfig& cfg) -> std::optional<double> {
                     ModelParams copy = cfg.model;
                     return ref(copy);
                 }};
}

inline const std::vector<Field>& fields() {
    using C = Constraint;
    static const std::vector<Field> table = [] {
        std::vector<Field> f;
        // Model.
        f.push_back(model_scalar("d_g_mhz", C::non_negative, &ModelParams::d_g));
        f.push_back(model_scalar("d_e_mhz", C::non_negative, &ModelParams::d_e));
        f.push_back(model_scalar("delta_eg_mhz", C::non_negative, &ModelParams::delta_eg));
        f.push_back(model_scalar("delta_ig_mhz", C::non_negative, &ModelParams::delta_ig));
        f.push_back(model_scalar("d_i_mhz", C::non_negative, &ModelParams::d_i));
        f.push_back(model_scalar("gyro_mhz_per_tesla", C::non_negative, &ModelParams::gyro));
        f.push_back(model_scalar("b_z_tesla", C::finite, &ModelParams::b_z));
        f.push_back(model_scalar("gamma_mhz", C::non_negative, &ModelParams::gamma));
        f.push_back(model_scalar("gamma_p", C::non_negative, &ModelParams::gamma_p));
        f.push_back(model_ref("gamma_42_mhz", C::non_negative, [](ModelParams& m) -> double& { return m.gamma_nsc.g42; }));
        f.push_back(model_ref("gamma_43_mhz", C::non_negative, [](ModelParams& m) -> double& { return m.gamma_nsc.g43; }));
        f.push_back(model_ref("gamma_51_mhz", C::non_negative, [](ModelParams& m) -> double& { return m.gamma_nsc.g51; }));
        f.push_back(model_ref("gamma_61_mhz", C::non_negative, [](ModelParams& m) -> double& { return m.gamma_nsc.g61; }));
        f.push_back(model_ref("kappa_ei_4_mhz", C::non_negative, [](ModelParams& m) -> double& { return m.kappa_ei[0]; }));
        f.push_back(model_ref("kappa_ei_5_mhz", C::non_negative, [](ModelParams& m) -> double& { return m.kappa_ei[1]; }));
        f.push_back(model_ref("kappa_ei_6_mhz", C::non_negative, [](ModelParams& m) -> double& { return m.kappa_ei[2]; }));
        f.push_back(model_scalar("kappa_i_mhz", C::non_negative, &ModelParams::kappa_i));
        f.push_back(model_ref("kappa_ig_1_mhz", C::non_negative, [](ModelParams& m) -> double& { return m.kappa_ig[0]; }));
        f.push_back(model_ref("kappa_ig_2_mhz", C::non_negative, [](ModelParams& m) -> double& { return m.kappa_ig[1]; }));
        f.push_back(model_ref("kappa_ig_3_mhz", C::non_negative, [](ModelParams& m) -> double& { return m.kappa_ig[2]; }));
        f.push_back(Field{
            "excited_zeeman", C::none,
            [](RunConfig& cfg, const YAML::Node& n) {
                const auto v = n.as<std::string>();
                if (v == "physical_sz")
                    cfg.model.excited_zeeman = ExcitedZeeman::physical_sz;
                else if (v == "literal_sz2")
                    cfg.model.excited_zeeman = ExcitedZeeman::literal_sz2;
                else
                    throw std::invalid_argument("expected physical_sz or literal_sz2, got '" + v + "'");
            },
            [](const RunConfig& cfg, YAML::Emitter& e) { e << std::string(to_string(cfg.model.excited_zeeman)); },
            [](const RunConfig&) { return std::optional<double>{}; }});

        // Run.
        f.push_back(Field{
            "command", C::none,
            [](RunConfig& cfg, const YAML::Node& n) {
                const auto v = n.as<std::string>();
                const auto c = parse_command(v);
                if (!c) throw std::invalid_argument("unknown command '" + v + "'");
                cfg.command = *c;
            },
            [](const RunConfig& cfg, YAML::Emitter& e) { e << to_string(cfg.command); },
            [](const RunConfig&) { return std::optional<double>{}; }});
        f.push_back(scalar("output_dir", C::none, &RunConfig::output_dir));
        f.push_back(scalar("plot", C::none, &RunConfig::plot));
        f.push_back(scalar("log_gamma_axis", C::none, &RunConfig::log_gamma_axis));
        f.push_back(scalar("t_off_us", C::positive, &RunConfig::t_off_us));
        f.push_back(Field{
            "t_end_us", C::none,
            [](RunConfig& cfg, const YAML::Node& n) {
                if (n.IsNull())
                    cfg.t_end_us.reset();
                else
                    cfg.t_end_us = n.as<double>();
            },
            [](const RunConfig& cfg, YAML::Emitter& e) {
                if (cfg.t_end_us)
                    e << *cfg.t_end_us;
                else
                    e << YAML::Null;
            },
            [](const RunConfig& cfg) { return cfg.t_end_us; }});
        f.push_back(scalar("sample_count", C::none, &RunConfig::sample_count));
        f.push_back(scalar("ness_tol", C::positive, &RunConfig::ness_tol));
        f.push_back(scalar("convergence_tol", C::positive, &RunConfig::convergence_tol));
        f.push_back(scalar("ledger_tol", C::positive, &RunConfig::ledger_tol));
        f.push_back(Field{
            "initial_state", C::none,
            [](RunConfig& cfg, const YAML::Node& n) {
                if (n.IsScalar()) {
                    if (n.as<std::string>() != "uniform_g")
                        throw std::invalid_argument("expected 'uniform_g' or a list of 8 populations");
                    cfg.initial_state.reset();
                    return;
                }
                auto v = n.as<std::vector<double>>();
                if (v.size() != static_cast<std::size_t>(kLevels))
                    throw std::invalid_argument("expected 8 populations, got " + std::to_string(v.size()));
                cfg.initial_state = std::move(v);
            },
            [](const RunConfig& cfg, YAML::Emitter& e) {
                if (cfg.initial_state)
                    e << YAML::Flow << *cfg.initial_state;
                else
                    e << "uniform_g";
            },
            [](const RunConfig&) { return std::optional<double>{}; }});
        f.push_back(scalar("gamma_min", C::non_negative, &RunConfig::gamma_min));
        f.push_back(scalar("gamma_max", C::non_negative, &RunConfig::gamma_max));
        f.push_back(scalar("gamma_points", C::none, &RunConfig::gamma_points));
        f.push_back(scalar("toff_max_us", C::positive, &RunConfig::toff_max_us));
        f.push_back(scalar("toff_points", C::none, &RunConfig::toff_points));
        f.push_back(scalar("toff_ledger_tol", C::positive, &RunConfig::toff_ledger_tol));
        f.push_back(Field{
            "decomposition_gamma_p", C::none,
            [](RunConfig& cfg, const YAML::Node& n) { cfg.decomposition_gamma_p = n.as<std::vector<double>>(); },
            [](const RunConfig& cfg, YAML::Emitter& e) { e << YAML::Flow << cfg.decomposition_gamma_p; },
            [](const RunConfig&) { return std::optional<double>{}; }});
        f.push_back(scalar("threads", C::none, &RunConfig::threads));
        f.push_back(scalar("strict_convergence", C::none, &RunConfig::strict_convergence));
        return f;
    }();
    return table;
}

inline const Field* find_field(const std::string& key) {
    for (const auto& f : fields())
        if (f.key == key) return &f;
    return nullptr;
}

inline void check_constraint(const Field& f, const RunConfig& cfg, std::optional<int> line) {
    const auto v = f.number(cfg);
    if (!v) return;
    switch (f.constraint) {
        case Constraint::none: return;
        case Constraint::finite:
            if (!std::isfinite(*v)) throw ConfigError(f.key, line, "must be finite");
            return;
        case Constraint::non_negative:
            if (!std::isfinite(*v) || *v < 0.0) throw ConfigError(f.key, line, "must be >= 0");
            return;
        case Constraint::positive:
            if (!std::isfinite(*v) || *v <= 0.0) throw ConfigError(f.key, line, "must be > 0");
            return;
    }
}

}  // namespace detail

// Cross-field checks. `lines` maps keys to source lines when known.
inline void validate(const RunConfig& cfg, const std::map<std::string, int>& lines = {}) {
    auto line_of = [&](const std::string& key) -> std::optional<int> {
        auto it = lines.find(key);
        return it == lines.end() ? std::nullopt : std::optional<int>(it->second);
    };
    for (const auto& f : detail::fields()) detail::check_constraint(f, cfg, line_of(f.key));

    if (cfg.t_end_us && !(*cfg.t_end_us > cfg.t_off_us))
        throw ConfigError("t_end_us", line_of("t_end_us"), "must exceed t_off_us");
    if (cfg.sample_count < 2) throw ConfigError("sample_count", line_of("sample_count"), "must be >= 2");
    if (cfg.gamma_points < 2) throw ConfigError("gamma_points", line_of("gamma_points"), "must be >= 2");
    if (!(cfg.gamma_max > cfg.gamma_min))
        throw ConfigError("gamma_max", line_of("gamma_max"), "must exceed gamma_min");
    if (cfg.toff_points < 1) throw ConfigError("toff_points", line_of("toff_points"), "must be >= 1");
    if (cfg.output_dir.empty()) throw ConfigError("output_dir", line_of("output_dir"), "must not be empty");
    for (double g : cfg.decomposition_gamma_p)
        if (!std::isfinite(g) || g < 0.0)
            throw ConfigError("decomposition_gamma_p", line_of("decomposition_gamma_p"), "entries must be >= 0");
    if (cfg.initial_state) {
        double sum = 0.0;
        for (double p : *cfg.initial_state) {
            if (!std::isfinite(p) || p < 0.0)
                throw ConfigError("initial_state", line_of("initial_state"), "populations must be >= 0");
            sum += p;
        }
        if (std::abs(sum - 1.0) > 1e-10)
            throw ConfigError("initial_state", line_of("initial_state"), "populations must sum to 1");
    }
}

inline RunConfig parse_config_node(const YAML::Node& root) {
    RunConfig cfg;
    if (!root || root.IsNull()) return cfg;
    if (!root.IsMap()) throw ConfigError("", root.Mark().line + 1, "top level must be a key-value mapping");

    std::map<std::string, int> lines;
    for (const auto& kv : root) {
        const int line = kv.first.Mark().line + 1;
        const auto key = kv.first.as<std::string>();
        const detail::Field* field = detail::find_field(key);
        if (!field) throw ConfigError(key, line, "unknown key");
        if (lines.count(key)) throw ConfigError(key, line, "duplicate key");
        lines[key] = line;
        try {
            field->read(cfg, kv.second);
        } catch (const YAML::BadConversion&) {
            throw ConfigError(key, line, "type mismatch");
        } catch (const std::invalid_argument& e) {
            throw ConfigError(key, line, e.what());
        }
    }
    validate(cfg, lines);
    return cfg;
}

inline RunConfig parse_config_string(const std::string& text) {
    YAML::Node root;
    try {
        root = YAML::Load(text);
    } catch (const YAML::ParserException& e) {
        throw ConfigError("", e.mark.line + 1, "malformed YAML: " + e.msg);
    }
    return parse_config_node(root);
}

inline RunConfig parse_config(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("", std::nullopt, "cannot open config file " + path.string());
    std::stringstream buf;
    buf << in.rdbuf();
    return parse_config_string(buf.str());
}

// Fully resolved configuration, every key present. Doubles are written with
// 17 significant digits so parse_config_string(to_yaml(c)) reproduces c.
inline std::string to_yaml(const RunConfig& cfg) {
    YAML::Emitter e;
    e.SetDoublePrecision(17);
    e << YAML::BeginMap;
    for (const auto& f : detail::fields()) {
        e << YAML::Key << f.key << YAML::Value;
        f.write(cfg, e);
    }
    e << YAML::EndMap;
    return std::string(e.c_str()) + "\n";
}

inline void write_resolved_config(const RunConfig& cfg, const std::filesystem::path& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("cannot write " + path.string());
    out << to_yaml(cfg);
}

}  // namespace nvpump::io
