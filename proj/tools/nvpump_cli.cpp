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

// nvpump: run one experiment from a config file and write its tables.

#include <CLI11.hpp>

#include <exception>
#include <iostream>
#include <optional>
#include <string>

#include "nvpump/errors.hpp"
#include "nvpump/io/app.hpp"
#include "nvpump/io/config.hpp"

int main(int argc, char** argv) {
    CLI::App app{"Optical pumping simulator for the NV-center electronic spin"};

    std::string config_path;
    std::string command_name;
    std::string out_dir;
    bool plot = false;
    bool seedless = false;

    std::string commands;
    for (const auto& [c, name] : nvpump::io::command_names()) commands += (commands.empty() ? "" : ", ") + name;

    app.add_option("--config", config_path, "YAML config file (omitted: all defaults)")->check(CLI::ExistingFile);
    app.add_option("--command", command_name, "Experiment to run, overrides the config: " + commands);
    app.add_option("--out", out_dir, "Output directory, overrides output_dir");
    app.add_flag("--plot", plot, "Also write SVG plots");
    app.add_flag("--seedless", seedless, "Accepted for compatibility; every run is deterministic");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int rc = app.exit(e);
        return rc == 0 ? nvpump::io::kExitOk : nvpump::io::kExitConfigError;
    }

    try {
        nvpump::io::RunConfig cfg =
            config_path.empty() ? nvpump::io::parse_config_string("") : nvpump::io::parse_config(config_path);
        if (!command_name.empty()) {
            const auto c = nvpump::io::parse_command(command_name);
            if (!c) throw nvpump::io::ConfigError("command", std::nullopt, "unknown command '" + command_name + "'");
            cfg.command = *c;
        }
        if (!out_dir.empty()) cfg.output_dir = out_dir;
        if (plot) cfg.plot = true;

        const auto outcome = nvpump::io::run(cfg, std::cout);
        for (const auto& f : outcome.files) std::cout << "wrote " << f.string() << '\n';
        return outcome.exit_code;
    } catch (const nvpump::io::ConfigError& e) {
        std::cerr << "config error: " << e.what() << '\n';
        return nvpump::io::kExitConfigError;
    } catch (const nvpump::InvalidParameter& e) {
        std::cerr << "config error: " << e.what() << '\n';
        return nvpump::io::kExitConfigError;
    } catch (const nvpump::NumericalFailure& e) {
        std::cerr << "numerical failure: " << e.what() << '\n';
        return nvpump::io::kExitNumerical;
    } catch (const nvpump::ConvergenceError& e) {
        std::cerr << "numerical failure: " << e.what() << '\n';
        return nvpump::io::kExitNumerical;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 1;
    }
}
