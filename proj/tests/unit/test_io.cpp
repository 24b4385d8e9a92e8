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

#include <gtest/gtest.h>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

#include "nvpump/io/app.hpp"
#include "nvpump/io/config.hpp"
#include "nvpump/io/csv.hpp"
#include "nvpump/io/svg.hpp"

using namespace nvpump;
using namespace nvpump::io;

namespace {

std::string slurp(const std::filesystem::path& p) {
    std::ifstream in(p, std::ios::binary);
    std::stringstream s;
    s << in.rdbuf();
    return s.str();
}

std::filesystem::path scratch_dir(const std::string& name) {
    auto dir = std::filesystem::temp_directory_path() / ("nvpump_test_" + name);
    std::filesystem::remove_all(dir);
    std::filesystem::create_directories(dir);
    return dir;
}

// Expects parse_config_string(text) to fail naming `key`, optionally on `line`.
void expect_config_error(const std::string& text, const std::string& key, std::optional<int> line = std::nullopt) {
    try {
        parse_config_string(text);
        ADD_FAILURE() << "accepted: " << text;
    } catch (const ConfigError& e) {
        EXPECT_EQ(e.key(), key) << e.what();
        if (line) {
            EXPECT_EQ(e.line(), line) << e.what();
        }
        EXPECT_NE(std::string(e.what()).find(key), std::string::npos);
    }
}

}  // namespace

TEST(Config, EmptyGivesDefaults) {
    const RunConfig cfg = parse_config_string("command: simulate\n");
    EXPECT_EQ(cfg.command, Command::simulate);
    EXPECT_EQ(cfg.model.gamma_p, 1.0);
    EXPECT_EQ(cfg.t_off_us, 10.0);
    EXPECT_EQ(cfg.model.gamma, 77.0);
    EXPECT_EQ(cfg.model.kappa_i, 1000.0);
    EXPECT_EQ(cfg.model.delta_eg, 4.7e8);
    EXPECT_EQ(cfg.model.kappa_ei[0], 0.0);
    EXPECT_EQ(cfg.gamma_points, 101u);
    EXPECT_EQ(cfg.toff_points, 100u);
    const RunConfig blank = parse_config_string("");
    EXPECT_EQ(to_yaml(blank), to_yaml(cfg));
}

TEST(Config, Overrides) {
    const RunConfig cfg = parse_config_string("kappa_i_mhz: 500\nb_z_tesla: 0.01\ncommand: sweep-gamma\n"
                                              "excited_zeeman: literal_sz2\ninitial_state: [0, 0, 0, 0, 0, 0, 1, 0]\n");
    EXPECT_EQ(cfg.model.kappa_i, 500.0);
    EXPECT_EQ(cfg.model.b_z, 0.01);
    EXPECT_EQ(cfg.command, Command::sweep_gamma);
    EXPECT_EQ(cfg.model.excited_zeeman, ExcitedZeeman::literal_sz2);
    ASSERT_TRUE(cfg.protocol().initial_state.has_value());
    EXPECT_EQ((*cfg.protocol().initial_state)[Level(7)], 1.0);
    EXPECT_EQ(cfg.protocol().b_z, 0.01);
}

TEST(Config, RejectsNegativeGamma) { expect_config_error("command: simulate\ngamma_mhz: -1\n", "gamma_mhz", 2); }

TEST(Config, RejectsUnknownKey) { expect_config_error("gamma_p: 1\nfoo: 3\n", "foo", 2); }

TEST(Config, RejectsTypeMismatch) {
    expect_config_error("t_off_us: ten\n", "t_off_us", 1);
    expect_config_error("plot: maybe\n", "plot", 1);
    expect_config_error("gamma_points: -4\n", "gamma_points", 1);
}

TEST(Config, RejectsConstraintViolations) {
    expect_config_error("t_off_us: 0\n", "t_off_us", 1);
    expect_config_error("t_off_us: 5\nt_end_us: 4\n", "t_end_us", 2);
    expect_config_error("gamma_min: 3\ngamma_max: 1\n", "gamma_max", 2);
    expect_config_error("command: dance\n", "command", 1);
    expect_config_error("initial_state: [1, 0]\n", "initial_state", 1);
    expect_config_error("initial_state: [0.5, 0, 0, 0, 0, 0, 0, 0]\n", "initial_state", 1);
    expect_config_error("kappa_ei_5_mhz: -2\n", "kappa_ei_5_mhz", 1);
}

TEST(Config, RejectsDuplicatesAndNonMaps) {
    expect_config_error("gamma_p: 1\ngamma_p: 2\n", "gamma_p", 2);
    EXPECT_THROW(parse_config_string("- 1\n- 2\n"), ConfigError);
    EXPECT_THROW(parse_config_string("gamma_p: [1\n"), ConfigError);
}

TEST(Config, ResolvedRoundTrip) {
    const RunConfig cfg = parse_config_string("gamma_p: 0.123456789012345678\nb_z_tesla: 0.0031\n"
                                              "decomposition_gamma_p: [0.25, 3]\nt_end_us: 40\nplot: true\n");
    const std::string yaml = to_yaml(cfg);
    const RunConfig again = parse_config_string(yaml);
    EXPECT_EQ(to_yaml(again), yaml);
    EXPECT_EQ(again.model.gamma_p, cfg.model.gamma_p);
    EXPECT_EQ(again.model.b_z, cfg.model.b_z);
    EXPECT_EQ(again.decomposition_gamma_p, cfg.decomposition_gamma_p);
    EXPECT_EQ(again.t_end_us, cfg.t_end_us);
    EXPECT_TRUE(again.plot);
}

TEST(Config, Grids) {
    RunConfig cfg;
    const auto g = cfg.gamma_grid();
    EXPECT_EQ(g.size(), 101u);
    EXPECT_EQ(g.back(), 5.0);
    const auto t = cfg.toff_grid();
    EXPECT_EQ(t.size(), 100u);
    EXPECT_EQ(t.front(), 0.1);
    EXPECT_EQ(t.back(), 10.0);
}

TEST(Csv, HeaderUnitsAndDigits) {
    CsvTable t;
    t.schema = {{"t_us", ""}, {"U", "MHz"}};
    t.add_row({0.1, 1.0 / 3.0});
    const std::string s = format_csv(t);
    EXPECT_EQ(s, "t_us,U [MHz]\n0.10000000000000001,0.33333333333333331\n");
    EXPECT_EQ(s.find('\r'), std::string::npos);
    EXPECT_THROW(t.add_row({1.0}), std::invalid_argument);
}

TEST(Csv, NumbersRoundTrip) {
    for (double x : {1e-300, 4.7e8 * 77.0, -0.0, 2.0 / 3.0, 1.0e11 + 0.1}) EXPECT_EQ(std::stod(format_number(x)), x);
}

TEST(Csv, EmitIsDeterministic) {
    const auto dir = scratch_dir("csv");
    CsvTable t;
    t.schema = {{"a", ""}, {"b", "nats"}};
    for (int i = 0; i < 10; ++i) t.add_row({i * 0.1, std::log(1.0 + i)});
    emit_csv(t, dir / "x.csv");
    emit_csv(t, dir / "y.csv");
    EXPECT_EQ(slurp(dir / "x.csv"), slurp(dir / "y.csv"));
    EXPECT_EQ(slurp(dir / "x.csv"), format_csv(t));
}

TEST(Svg, SelfContainedWithLogAxis) {
    CsvTable t;
    t.schema = {{"gamma_p", ""}, {"S", "nats"}};
    for (double g : {0.0, 0.1, 1.0, 5.0}) t.add_row({g, std::log(1.0 + g)});
    const std::string svg = render_svg(t, "gamma_p", {"S"}, {"Entropy <test>", "Gamma_p", "nats", true});
    EXPECT_NE(svg.find("<svg"), std::string::npos);
    EXPECT_NE(svg.find("</svg>"), std::string::npos);
    EXPECT_NE(svg.find("&lt;test&gt;"), std::string::npos);
    EXPECT_EQ(svg.find("href"), std::string::npos);
    EXPECT_EQ(svg.find("<image"), std::string::npos);
    EXPECT_EQ(svg, render_svg(t, "gamma_p", {"S"}, {"Entropy <test>", "Gamma_p", "nats", true}));
}

TEST(App, SweepEntropyRunsAreByteIdentical) {
    const auto dir = scratch_dir("app");
    RunConfig cfg = parse_config_string("command: sweep-entropy\ngamma_points: 11\nplot: true\n");
    cfg.output_dir = (dir / "a").string();
    std::ostringstream log;
    const auto a = run(cfg, log);
    cfg.output_dir = (dir / "b").string();
    const auto b = run(cfg, log);
    EXPECT_EQ(a.exit_code, kExitOk);
    EXPECT_EQ(slurp(dir / "a" / "entropy_vs_gamma.csv"), slurp(dir / "b" / "entropy_vs_gamma.csv"));
    EXPECT_TRUE(std::filesystem::exists(dir / "a" / "entropy_vs_gamma.svg"));
    const RunConfig resolved = parse_config(dir / "a" / "resolved_config.yaml");
    EXPECT_EQ(resolved.gamma_points, 11u);
    EXPECT_EQ(resolved.command, Command::sweep_entropy);
}

TEST(App, SimulateTableSchema) {
    const auto dir = scratch_dir("sim");
    RunConfig cfg = parse_config_string("command: simulate\nsample_count: 31\n");
    cfg.output_dir = dir.string();
    std::ostringstream log;
    run(cfg, log);
    std::ifstream in(dir / "simulate.csv");
    std::string header;
    std::getline(in, header);
    EXPECT_EQ(header.rfind("t_us,p1,p2,p3,p4,p5,p6,p7,p8,U [MHz],Wdot [MHz/us],Qdot_sc [MHz/us],Qdot_isc [MHz/us],"
                           "Qdot_nsc [MHz/us],Qdot_total [MHz/us],fluorescence [1/us],S [nats],Sdot_W [nats/us],"
                           "Sdot_Q [nats/us],W_cum [MHz],Q_cum [MHz],SW_cum [nats],SQ_cum [nats],laser_on",
                           0),
              0u);
    int rows = 0;
    for (std::string line; std::getline(in, line);) ++rows;
    EXPECT_EQ(rows, 31);
}

TEST(App, StrictConvergenceEscalates) {
    const auto dir = scratch_dir("strict");
    RunConfig cfg = parse_config_string("command: simulate\nsample_count: 11\nt_end_us: 11\nstrict_convergence: true\n");
    cfg.output_dir = dir.string();
    std::ostringstream log;
    const auto out = run(cfg, log);
    EXPECT_EQ(out.exit_code, kExitConvergence);
    EXPECT_FALSE(out.warnings.empty());
    cfg.strict_convergence = false;
    EXPECT_EQ(run(cfg, log).exit_code, kExitOk);
}
