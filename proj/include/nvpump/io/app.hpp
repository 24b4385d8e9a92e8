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

// app.hpp: command dispatch behind the nvpump command-line tool.

#pragma once

#include <cmath>
#include <filesystem>
#include <fstream>
#include <limits>
#include <ostream>
#include <string>
#include <vector>

#include "nvpump/experiments.hpp"
#include "nvpump/io/config.hpp"
#include "nvpump/io/csv.hpp"
#include "nvpump/io/svg.hpp"
#include "nvpump/thermo.hpp"

namespace nvpump::io {

enum ExitCode : int {
    kExitOk = 0,
    kExitConfigError = 2,
    kExitConvergence = 3,
    kExitNumerical = 4,
};

// ------------------------------------------------------------------- tables

inline CsvTable simulate_table(const ProtocolResult& r) {
    CsvTable t;
    t.schema = {{"t_us", ""},
                {"p1", ""}, {"p2", ""}, {"p3", ""}, {"p4", ""}, {"p5", ""}, {"p6", ""}, {"p7", ""}, {"p8", ""},
                {"U", "MHz"},
                {"Wdot", "MHz/us"},
                {"Qdot_sc", "MHz/us"},
                {"Qdot_isc", "MHz/us"},
                {"Qdot_nsc", "MHz/us"},
                {"Qdot_total", "MHz/us"},
                {"fluorescence", "1/us"},
                {"S", "nats"},
                {"Sdot_W", "nats/us"},
                {"Sdot_Q", "nats/us"},
                {"W_cum", "MHz"},
                {"Q_cum", "MHz"},
                {"SW_cum", "nats"},
                {"SQ_cum", "nats"},
                {"laser_on", ""},
                {"Qdot_total_abs", "MHz/us"}};
    for (std::size_t i = 0; i < r.ledger.samples.size(); ++i) {
        const auto& s = r.ledger.samples[i];
        const auto& c = r.ledger.cumulative[i];
        std::vector<double> row{s.t};
        for (double p : r.trajectory.states[i].values()) row.push_back(p);
        row.insert(row.end(), {s.u, s.wdot, s.qdot_sc, s.qdot_isc, s.qdot_nsc, s.qdot_total, s.fluorescence, s.s,
                               s.sdot_w, s.sdot_q, c.work, c.heat(), c.s_work, c.s_heat, s.laser_on ? 1.0 : 0.0,
                               std::abs(s.qdot_total)});
        t.add_row(std::move(row));
    }
    return t;
}

inline CsvTable simulate_summary_table(const ProtocolConfig& cfg, const ProtocolResult& r) {
    CsvTable t;
    t.schema = {{"gamma_p", ""},
                {"t_off_us", ""},
                {"t_end_us", ""},
                {"polarization", ""},
                {"ness1_reached_at_us", ""},
                {"rho1_residual", ""},
                {"rho2_residual", ""},
                {"W_phase1", "MHz"},
                {"Q_phase1", "MHz"},
                {"W_total", "MHz"},
                {"Q_total", "MHz"},
                {"Q_sc_total", "MHz"},
                {"dU", "MHz"},
                {"S_W", "nats"},
                {"S_Q", "nats"},
                {"dS", "nats"},
                {"first_law_residual", ""},
                {"entropy_residual", ""}};
    const auto& tot = r.ledger.totals;
    t.add_row({cfg.gamma_p, cfg.t_off, cfg.resolved_t_end(), r.polarization,
               r.ness1_reached_at.value_or(std::numeric_limits<double>::quiet_NaN()), r.rho1_residual,
               r.rho2_residual, r.phase1.work, r.phase1.heat, tot.work, tot.heat, tot.heat_sc, tot.delta_u,
               tot.s_work, tot.s_heat, tot.delta_s, tot.first_law_residual(), tot.entropy_residual()});
    return t;
}

inline CsvTable ness_table(const Ness1Sweep& sweep) {
    CsvTable t;
    t.schema = {{"gamma_p", ""}, {"p1", ""}, {"p2", ""}, {"p3", ""}, {"p4", ""}, {"p5", ""}, {"p6", ""},
                {"p7", ""},      {"p8", ""}, {"P_G", ""}, {"P_E", ""}, {"P_I", ""}};
    for (const auto& row : sweep.rows) {
        std::vector<double> r{row.gamma_p};
        for (double p : row.p.values()) r.push_back(p);
        r.insert(r.end(), {row.p.ground(), row.p.excited(), row.p.intersystem()});
        t.add_row(std::move(r));
    }
    return t;
}

inline CsvTable polarization_table(const PolarizationSweep& sweep) {
    CsvTable t;
    t.schema = {{"gamma_p", ""}, {"polarization", ""}};
    for (const auto& row : sweep.rows) t.add_row({row.gamma_p, row.polarization});
    return t;
}

inline CsvTable toff_table(const ToffSweep& sweep) {
    CsvTable t;
    t.schema = {{"t_off_us", ""}, {"polarization", ""}, {"W_toff", "MHz"}, {"ness_residual", ""}};
    for (const auto& row : sweep.rows) t.add_row({row.t_off, row.polarization, row.work, row.ness_residual});
    return t;
}

inline CsvTable entropy_table(const EntropySweep& sweep) {
    CsvTable t;
    t.schema = {{"gamma_p", ""}, {"S_rho1", "nats"}, {"S_rho2", "nats"}, {"polarization", ""}};
    for (const auto& row : sweep.rows) t.add_row({row.gamma_p, row.s1, row.s2, row.polarization});
    return t;
}

inline CsvTable decomposition_table(const std::vector<EntropyDecomposition>& runs) {
    CsvTable t;
    t.schema = {{"gamma_p", ""}, {"t_us", ""}, {"dS", "nats"}, {"S_W", "nats"}, {"S_Q", "nats"}};
    for (const auto& d : runs)
        for (std::size_t i = 0; i < d.times.size(); ++i)
            t.add_row({d.gamma_p, d.times[i], d.delta_s[i], d.s_work[i], d.s_heat[i]});
    return t;
}

inline CsvTable ledger_totals_table(const std::vector<EntropyDecomposition>& runs) {
    CsvTable t;
    t.schema = {{"gamma_p", ""},   {"W", "MHz"},      {"Q", "MHz"},     {"Q_sc", "MHz"},
                {"Q_isc", "MHz"},  {"Q_nsc", "MHz"},  {"dU", "MHz"},    {"S_W", "nats"},
                {"S_Q", "nats"},   {"dS", "nats"},    {"first_law_residual", ""},
                {"entropy_residual", ""}, {"max_closure_residual", ""}};
    for (const auto& d : runs) {
        const auto& x = d.totals;
        t.add_row({d.gamma_p, x.work, x.heat, x.heat_sc, x.heat_isc, x.heat_nsc, x.delta_u, x.s_work, x.s_heat,
                   x.delta_s, x.first_law_residual(), x.entropy_residual(), d.max_closure_residual});
    }
    return t;
}

// ---------------------------------------------------------------- dispatch

struct RunOutcome {
    int exit_code = kExitOk;
    std::vector<std::filesystem::path> files;
    std::vector<std::string> warnings;
};

namespace detail {

inline void log_flag(std::ostream& log, const char* what, bool ok) {
    log << "  " << what << ": " << (ok ? "yes" : "NO") << '\n';
}

}  // namespace detail

// Runs cfg.command, writing CSV (and SVG with cfg.plot) under cfg.output_dir
// plus resolved_config.yaml. Library exceptions propagate to the caller.
inline RunOutcome run(const RunConfig& cfg, std::ostream& log) {
    namespace fs = std::filesystem;
    const fs::path dir(cfg.output_dir);
    fs::create_directories(dir);

    RunOutcome out;
    auto write_csv = [&](const CsvTable& table, const std::string& name) {
        emit_csv(table, dir / name);
        out.files.push_back(dir / name);
    };
    auto write_svg = [&](const CsvTable& table, const std::string& x, const std::vector<std::string>& ys,
                         SvgPlotSpec spec, const std::string& name) {
        if (!cfg.plot) return;
        emit_svg_plot(table, x, ys, spec, dir / name);
        out.files.push_back(dir / name);
    };

    write_resolved_config(cfg, dir / "resolved_config.yaml");
    out.files.push_back(dir / "resolved_config.yaml");

    const SweepOptions sweep_opts = cfg.sweep_options();
    const auto gamma_label = std::string("Gamma_p");

    switch (cfg.command) {
        case Command::simulate: {
            const ProtocolConfig pc = cfg.protocol();
            const ProtocolResult r = run_protocol(pc, cfg.model);
            const CsvTable table = simulate_table(r);
            write_csv(table, "simulate.csv");
            write_csv(simulate_summary_table(pc, r), "simulate_summary.csv");
            write_svg(table, "t_us", {"p1", "p2", "p3", "p4", "p5", "p6", "p7", "p8"},
                      {"Populations during the two-step protocol", "t [us]", "population"}, "simulate_populations.svg");
            write_svg(table, "t_us", {"Wdot", "Qdot_total_abs", "Qdot_sc"},
                      {"Power and heat currents", "t [us]", "MHz/us"}, "simulate_fluxes.svg");
            write_svg(table, "t_us", {"W_cum", "Q_cum"}, {"Work and heat", "t [us]", "MHz"}, "simulate_energy.svg");
            log << "simulate: Gamma_p=" << pc.gamma_p << " polarization=" << format_number(r.polarization) << '\n';
            out.warnings = r.warnings;
            break;
        }
        case Command::ness: {
            const Ness1Sweep sweep = sweep_ness1(cfg.gamma_grid(), cfg.model, sweep_opts);
            const CsvTable table = ness_table(sweep);
            write_csv(table, "ness1.csv");
            write_svg(table, "gamma_p", {"p1", "p4", "P_I", "P_G", "P_E"},
                      {"Laser-on steady state", gamma_label, "population", cfg.log_gamma_axis}, "ness1.svg");
            log << "ness:\n";
            detail::log_flag(log, "P1 decreasing", sweep.p1_decreasing);
            detail::log_flag(log, "P4 increasing", sweep.p4_increasing);
            detail::log_flag(log, "P_I increasing", sweep.pi_increasing);
            log << "  saturation Gamma_p: "
                << (sweep.saturation_gamma ? format_number(*sweep.saturation_gamma) : std::string("not reached"))
                << '\n';
            break;
        }
        case Command::sweep_gamma: {
            const PolarizationSweep sweep = sweep_polarization_vs_gamma(cfg.gamma_grid(), cfg.model, sweep_opts);
            const CsvTable table = polarization_table(sweep);
            write_csv(table, "polarization_vs_gamma.csv");
            write_svg(table, "gamma_p", {"polarization"},
                      {"Polarization vs laser power", gamma_label, "P1(rho2)", cfg.log_gamma_axis},
                      "polarization_vs_gamma.svg");
            log << "sweep-gamma:\n";
            detail::log_flag(log, "polarization decreasing", sweep.decreasing);
            break;
        }
        case Command::sweep_toff: {
            ProtocolConfig base = cfg.protocol();
            base.ledger.rel_tol = cfg.toff_ledger_tol;
            const ToffSweep sweep = sweep_polarization_vs_toff(cfg.toff_grid(), cfg.model.gamma_p, cfg.model,
                                                               sweep_opts, base);
            const CsvTable table = toff_table(sweep);
            write_csv(table, "polarization_vs_toff.csv");
            write_svg(table, "t_off_us", {"polarization"}, {"Polarization vs laser-on time", "t_off [us]", "P1(rho2)"},
                      "polarization_vs_toff.svg");
            write_svg(table, "W_toff", {"polarization"}, {"Polarization vs work", "W(t_off) [MHz]", "P1(rho2)"},
                      "polarization_vs_work.svg");
            log << "sweep-toff: Gamma_p=" << cfg.model.gamma_p << '\n';
            detail::log_flag(log, "polarization non-decreasing in work", sweep.nondecreasing_in_work);
            log << "  saturation work: "
                << (sweep.saturation_work ? format_number(*sweep.saturation_work) : std::string("not reached"))
                << '\n';
            break;
        }
        case Command::sweep_entropy: {
            const EntropySweep sweep = sweep_entropy(cfg.gamma_grid(), cfg.model, sweep_opts);
            const CsvTable table = entropy_table(sweep);
            write_csv(table, "entropy_vs_gamma.csv");
            write_svg(table, "gamma_p", {"S_rho1", "S_rho2"},
                      {"Steady-state entropies", gamma_label, "nats", cfg.log_gamma_axis}, "entropy_vs_gamma.svg");
            write_svg(table, "S_rho2", {"polarization"}, {"Polarization vs entropy", "S(rho2) [nats]", "P1(rho2)"},
                      "polarization_vs_entropy.svg");
            log << "sweep-entropy:\n";
            detail::log_flag(log, "S(rho2) increasing", sweep.s2_increasing);
            detail::log_flag(log, "S(rho1) unimodal", sweep.s1_unimodal);
            log << "  argmax S(rho1): "
                << (sweep.s1_argmax ? format_number(*sweep.s1_argmax) : std::string("not found")) << '\n';
            break;
        }
        case Command::ledger: {
            std::vector<ProtocolConfig> runs;
            for (double g : cfg.decomposition_gamma_p) runs.push_back(cfg.protocol(g));
            const auto decomposition = entropy_decomposition_run(runs, cfg.model, sweep_opts);
            const CsvTable table = decomposition_table(decomposition);
            write_csv(table, "entropy_decomposition.csv");
            write_csv(ledger_totals_table(decomposition), "ledger_totals.csv");
            if (cfg.plot) {
                std::vector<SvgSeries> series;
                for (const auto& d : decomposition) {
                    const std::string tag = " (Gamma_p=" + format_number(d.gamma_p) + ")";
                    series.push_back({"dS" + tag, d.times, d.delta_s});
                    series.push_back({"S_W" + tag, d.times, d.s_work});
                    series.push_back({"S_Q" + tag, d.times, d.s_heat});
                }
                const auto path = dir / "entropy_decomposition.svg";
                std::ofstream svg(path, std::ios::binary);
                svg << render_svg(series, {"Entropy decomposition", "t [us]", "nats"});
                out.files.push_back(path);
            }
            log << "ledger:\n";
            for (const auto& d : decomposition) {
                log << "  Gamma_p=" << format_number(d.gamma_p)
                    << " first-law residual=" << d.totals.first_law_residual()
                    << " entropy residual=" << d.totals.entropy_residual() << '\n';
                if (d.totals.accuracy_warning) out.warnings.push_back(*d.totals.accuracy_warning);
            }
            break;
        }
    }

    for (const auto& w : out.warnings) log << "warning: " << w << '\n';
    if (cfg.strict_convergence && !out.warnings.empty()) out.exit_code = kExitConvergence;
    return out;
}

}  // namespace nvpump::io
