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

// experiments.hpp: the two-step polarization protocol and the parameter
// sweeps built on it.
//
// Protocol: (i) laser on from t = 0 to t_off, ideally long enough to reach
// the first steady state; (ii) laser off until t_end, relaxing into the
// second steady state, which lives entirely in the ground triplet.
// Polarization is the |1> population of that second state.

#pragma once

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstddef>
#include <exception>
#include <functional>
#include <optional>
#include <sstream>
#include <string>
#include <thread>
#include <type_traits>
#include <vector>

#include "nvpump/errors.hpp"
#include "nvpump/lindblad.hpp"
#include "nvpump/model.hpp"
#include "nvpump/thermo.hpp"
#include "nvpump/types.hpp"

namespace nvpump {

// ------------------------------------------------------------------ workers

// Evaluates fn(0..n-1) on a pool of threads; results keep index order, and the
// exception from the lowest failing index is rethrown.
template <class F>
auto parallel_map(std::size_t n, F&& fn, unsigned threads = 0) -> std::vector<std::invoke_result_t<F&, std::size_t>> {
    using R = std::invoke_result_t<F&, std::size_t>;
    std::vector<std::optional<R>> slots(n);
    std::vector<std::exception_ptr> errors(n);
    if (threads == 0) threads = std::max(1u, std::thread::hardware_concurrency());
    threads = static_cast<unsigned>(std::min<std::size_t>(threads, std::max<std::size_t>(n, 1)));

    std::atomic<std::size_t> next{0};
    auto work = [&] {
        for (std::size_t i = next++; i < n; i = next++) {
            try {
                slots[i].emplace(fn(i));
            } catch (...) {
                errors[i] = std::current_exception();
            }
        }
    };
    if (threads <= 1) {
        work();
    } else {
        std::vector<std::jthread> pool;
        pool.reserve(threads);
        for (unsigned t = 0; t < threads; ++t) pool.emplace_back(work);
    }
    for (auto& e : errors)
        if (e) std::rethrow_exception(e);

    std::vector<R> out;
    out.reserve(n);
    for (auto& s : slots) out.push_back(std::move(*s));
    return out;
}

inline std::vector<double> linspace(double a, double b, std::size_t n) {
    if (n < 2) throw InvalidParameter("points", "need at least two points");
    std::vector<double> x(n);
    for (std::size_t i = 0; i < n; ++i) x[i] = a + (b - a) * static_cast<double>(i) / static_cast<double>(n - 1);
    x.back() = b;
    return x;
}

// ------------------------------------------------------------ steady states

// Gamma_p -> 0+ limit of the laser-on steady state. The excited and singlet
// populations vanish and the ground triplet settles into the stationary law
// of the "pump once, relax fully" map K(m, n) = P(end in m | pumped from n).
inline PopulationVector low_power_limit(const NVModel& model) {
    const RateMatrix off = build_rate_matrix(model, false);
    Eigen::Matrix3d k;
    for (int n = 0; n < 3; ++n) {
        const PopulationVector relaxed = asymptotic_state(off, PopulationVector::basis(Level(n + 4)));
        k.col(n) = relaxed.values().head<3>();
    }
    const Eigen::Matrix3d a = k - Eigen::Matrix3d::Identity();
    Eigen::JacobiSVD<Eigen::Matrix3d> svd(a, Eigen::ComputeFullV);
    const auto& s = svd.singularValues();
    if (s[1] <= 1e-12 * std::max(s[0], 1e-300))
        throw DegenerateKernel(2, "low_power_limit: ground-triplet return map is not ergodic");
    Eigen::Vector3d pi = svd.matrixV().col(2);
    pi /= pi.sum();
    Vector8d p = Vector8d::Zero();
    p.head<3>() = pi.cwiseMax(0.0);
    p /= p.sum();
    return PopulationVector(p);
}

// Laser-on steady state rho_1^ss. At Gamma_p = 0 the kernel is degenerate
// and the continuous Gamma_p -> 0+ limit is returned instead.
inline PopulationVector laser_on_steady_state(const NVModel& model) {
    if (model.params().gamma_p == 0.0) return low_power_limit(model);
    return steady_state(build_rate_matrix(model, true));
}

// Laser-off relaxation of p: rho_2^ss.
inline PopulationVector laser_off_limit(const NVModel& model, const PopulationVector& p) {
    return asymptotic_state(build_rate_matrix(model, false), p);
}

inline NVModel model_with_power(ModelParams params, double gamma_p) {
    params.gamma_p = gamma_p;
    return build_model(params);
}

// ----------------------------------------------------------------- protocol

struct ProtocolConfig {
    double gamma_p = 1.0;
    double t_off = 10.0;                // us
    std::optional<double> t_end;        // us; defaults to t_off + 20
    std::size_t sample_count = 1001;
    double b_z = 0.0;                   // T
    double ness_tol = 1e-8;             // relative to the largest rate
    std::optional<PopulationVector> initial_state;  // defaults to uniform on G
    double convergence_tol = 1e-9;      // phase-2 distance to rho_2^ss at t_end
    LedgerOptions ledger{};

    double resolved_t_end() const { return t_end.value_or(t_off + 20.0); }

    void validate() const {
        if (!std::isfinite(gamma_p) || gamma_p < 0.0) throw InvalidParameter("gamma_p", "must be >= 0");
        if (!(t_off > 0.0)) throw InvalidParameter("t_off_us", "must be > 0");
        if (!(resolved_t_end() > t_off)) throw InvalidParameter("t_end_us", "must exceed t_off_us");
        if (sample_count < 2) throw InvalidParameter("sample_count", "must be >= 2");
        if (!(ness_tol > 0.0)) throw InvalidParameter("ness_tol", "must be > 0");
        if (!std::isfinite(b_z)) throw InvalidParameter("b_z_tesla", "must be finite");
        if (initial_state) initial_state->validate();
    }
};

struct ProtocolResult {
    PopulationTrajectory trajectory;
    Ledger ledger;
    PopulationVector rho1_ss;
    PopulationVector rho2_ss;
    double polarization = 0.0;
    std::optional<double> ness1_reached_at;  // us
    bool rho1_converged = false;
    double rho1_residual = 0.0;   // ness_residual at t_off
    double rho2_residual = 0.0;   // max |p(t_end) - rho2_ss|
    std::size_t t_off_index = 0;  // position of t_off in the trajectory
    LedgerTotals phase1;
    LedgerTotals phase2;
    std::vector<std::string> warnings;
};

// Sample grid with t_off as an explicit point; points are split between the
// phases in proportion to their durations (at least two per phase).
inline std::vector<double> protocol_grid(double t_off, double t_end, std::size_t sample_count) {
    const auto n1 = std::max<std::size_t>(
        2, static_cast<std::size_t>(std::llround(static_cast<double>(sample_count) * t_off / t_end)));
    const std::size_t n2 = std::max<std::size_t>(2, sample_count > n1 ? sample_count - n1 + 1 : 2);
    std::vector<double> grid = linspace(0.0, t_off, n1);
    const std::vector<double> tail = linspace(t_off, t_end, n2);
    grid.insert(grid.end(), tail.begin() + 1, tail.end());
    return grid;
}

inline ProtocolResult run_protocol(const ProtocolConfig& cfg, ModelParams params) {
    cfg.validate();
    params.gamma_p = cfg.gamma_p;
    params.b_z = cfg.b_z;
    const NVModel model = build_model(params);
    const double t_end = cfg.resolved_t_end();

    const PopulationVector p0 = cfg.initial_state.value_or(PopulationVector::uniform_ground());
    PhasedEvolution evolution(p0);
    evolution.append(model, true, cfg.t_off);
    evolution.append(model, false, t_end - cfg.t_off);

    const std::vector<double> grid = protocol_grid(cfg.t_off, t_end, cfg.sample_count);

    ProtocolResult r;
    r.trajectory = evolution.sample(grid);
    r.ledger = integrate_ledger(evolution, grid, model, cfg.ledger);
    r.t_off_index = static_cast<std::size_t>(std::find(grid.begin(), grid.end(), cfg.t_off) - grid.begin());

    const RateMatrix w_on = build_rate_matrix(model, true);
    const RateMatrix w_off = build_rate_matrix(model, false);

    // Earliest sample after which phase 1 stays within tolerance.
    for (std::size_t i = r.t_off_index + 1; i-- > 0;) {
        if (ness_residual(w_on, r.trajectory.states[i]) >= cfg.ness_tol) break;
        r.ness1_reached_at = grid[i];
    }

    r.rho1_ss = r.trajectory.states[r.t_off_index];
    r.rho1_residual = ness_residual(w_on, r.rho1_ss);
    r.rho1_converged = r.rho1_residual < cfg.ness_tol;
    if (!r.rho1_converged) {
        std::ostringstream os;
        os << "phase 1 did not reach the steady state by t_off: residual " << r.rho1_residual
           << " >= ness_tol " << cfg.ness_tol;
        r.warnings.push_back(os.str());
    }

    r.rho2_ss = asymptotic_state(w_off, r.rho1_ss);
    r.polarization = r.rho2_ss[Level(1)];
    r.rho2_residual = (r.trajectory.states.back().values() - r.rho2_ss.values()).cwiseAbs().maxCoeff();
    if (r.rho2_residual > cfg.convergence_tol) {
        std::ostringstream os;
        os << "t_end too small for phase-2 convergence: max |p(t_end) - rho2_ss| = " << r.rho2_residual;
        r.warnings.push_back(os.str());
    }
    if (r.rho2_ss.excited() + r.rho2_ss.intersystem() > 1e-9) {
        r.warnings.push_back("rho2_ss has weight outside the ground triplet");
    }

    r.phase1 = r.ledger.between(0, r.t_off_index);
    r.phase2 = r.ledger.between(r.t_off_index, grid.size() - 1);
    if (r.ledger.totals.accuracy_warning) r.warnings.push_back(*r.ledger.totals.accuracy_warning);
    return r;
}

// ------------------------------------------------------------------- sweeps

struct SweepOptions {
    unsigned threads = 0;  // 0 = hardware concurrency
};

namespace detail {

inline bool strictly_decreasing(const std::vector<double>& y) {
    for (std::size_t i = 1; i < y.size(); ++i)
        if (!(y[i] < y[i - 1])) return false;
    return true;
}

inline bool strictly_increasing(const std::vector<double>& y) {
    for (std::size_t i = 1; i < y.size(); ++i)
        if (!(y[i] > y[i - 1])) return false;
    return true;
}

}  // namespace detail

struct Ness1Row {
    double gamma_p;
    PopulationVector p;
};

struct Ness1Sweep {
    std::vector<Ness1Row> rows;
    bool p1_decreasing = false;
    bool p4_increasing = false;
    bool pi_increasing = false;
    // Smallest grid Gamma_p after which every population changes by less
    // than saturation_slope per unit Gamma_p.
    std::optional<double> saturation_gamma;
};

inline Ness1Sweep sweep_ness1(const std::vector<double>& gamma_grid, const ModelParams& params,
                              const SweepOptions& opts = {}, double saturation_slope = 1e-3) {
    Ness1Sweep sweep;
    auto states = parallel_map(
        gamma_grid.size(),
        [&](std::size_t i) { return laser_on_steady_state(model_with_power(params, gamma_grid[i])); },
        opts.threads);
    std::vector<double> p1, p4, pi;
    for (std::size_t i = 0; i < gamma_grid.size(); ++i) {
        sweep.rows.push_back({gamma_grid[i], states[i]});
        p1.push_back(states[i][Level(1)]);
        p4.push_back(states[i][Level(4)]);
        pi.push_back(states[i].intersystem());
    }
    sweep.p1_decreasing = detail::strictly_decreasing(p1);
    sweep.p4_increasing = detail::strictly_increasing(p4);
    sweep.pi_increasing = detail::strictly_increasing(pi);

    for (std::size_t i = gamma_grid.size(); i-- > 1;) {
        const double dg = gamma_grid[i] - gamma_grid[i - 1];
        const double slope = (states[i].values() - states[i - 1].values()).cwiseAbs().maxCoeff() / dg;
        if (slope >= saturation_slope) break;
        sweep.saturation_gamma = gamma_grid[i - 1];
    }
    return sweep;
}

struct PolarizationRow {
    double gamma_p;
    double polarization;
};

struct PolarizationSweep {
    std::vector<PolarizationRow> rows;
    bool decreasing = false;
};

inline PolarizationSweep sweep_polarization_vs_gamma(const std::vector<double>& gamma_grid,
                                                     const ModelParams& params, const SweepOptions& opts = {}) {
    PolarizationSweep sweep;
    auto pol = parallel_map(
        gamma_grid.size(),
        [&](std::size_t i) {
            const NVModel model = model_with_power(params, gamma_grid[i]);
            return laser_off_limit(model, laser_on_steady_state(model))[Level(1)];
        },
        opts.threads);
    for (std::size_t i = 0; i < gamma_grid.size(); ++i) sweep.rows.push_back({gamma_grid[i], pol[i]});
    sweep.decreasing = detail::strictly_decreasing(pol);
    return sweep;
}

struct ToffRow {
    double t_off;
    double polarization;
    double work;          // integrated over [0, t_off]
    double ness_residual; // at t_off
};

struct ToffSweep {
    std::vector<ToffRow> rows;
    // Polarization never decreases as the delivered work grows.
    bool nondecreasing_in_work = false;
    // Work at the first t_off whose state meets the steady-state tolerance.
    std::optional<double> saturation_work;
    // max |P - P_last| over rows at or beyond saturation_work.
    double saturation_spread = 0.0;
};

inline ToffSweep sweep_polarization_vs_toff(const std::vector<double>& toff_grid, double gamma_p,
                                            const ModelParams& params, const SweepOptions& opts = {},
                                            const ProtocolConfig& base = {}) {
    ToffSweep sweep;
    auto rows = parallel_map(
        toff_grid.size(),
        [&](std::size_t i) {
            ProtocolConfig cfg = base;
            cfg.gamma_p = gamma_p;
            cfg.t_off = toff_grid[i];
            cfg.t_end = toff_grid[i] + (base.resolved_t_end() - base.t_off);
            cfg.sample_count = 3;
            const ProtocolResult r = run_protocol(cfg, params);
            return ToffRow{toff_grid[i], r.polarization, r.phase1.work, r.rho1_residual};
        },
        opts.threads);
    sweep.rows = std::move(rows);

    std::vector<ToffRow> by_work = sweep.rows;
    std::stable_sort(by_work.begin(), by_work.end(), [](const ToffRow& a, const ToffRow& b) { return a.work < b.work; });
    sweep.nondecreasing_in_work = true;
    for (std::size_t i = 1; i < by_work.size(); ++i)
        if (by_work[i].polarization < by_work[i - 1].polarization) sweep.nondecreasing_in_work = false;

    for (const auto& row : by_work) {
        if (row.ness_residual < base.ness_tol) {
            sweep.saturation_work = row.work;
            break;
        }
    }
    if (sweep.saturation_work) {
        const double last = by_work.back().polarization;
        for (const auto& row : by_work)
            if (row.work >= *sweep.saturation_work)
                sweep.saturation_spread = std::max(sweep.saturation_spread, std::abs(row.polarization - last));
    }
    return sweep;
}

// Golden-section search for a maximum of f on [a, b].
template <class F>
double golden_section_max(F&& f, double a, double b, double tol) {
    const double inv_phi = (std::sqrt(5.0) - 1.0) / 2.0;
    double c = b - inv_phi * (b - a);
    double d = a + inv_phi * (b - a);
    double fc = f(c);
    double fd = f(d);
    while (b - a > tol) {
        if (fc > fd) {
            b = d;
            d = c;
            fd = fc;
            c = b - inv_phi * (b - a);
            fc = f(c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + inv_phi * (b - a);
            fd = f(d);
        }
    }
    return 0.5 * (a + b);
}

struct EntropyRow {
    double gamma_p;
    double s1;  // S(rho_1^ss)
    double s2;  // S(rho_2^ss)
    double polarization;
};

struct EntropySweep {
    std::vector<EntropyRow> rows;
    bool s2_increasing = false;
    bool s1_unimodal = false;
    std::optional<double> s1_argmax;  // golden-section refined
};

inline double ness1_entropy(const ModelParams& params, double gamma_p) {
    return entropy(laser_on_steady_state(model_with_power(params, gamma_p)));
}

inline EntropySweep sweep_entropy(const std::vector<double>& gamma_grid, const ModelParams& params,
                                  const SweepOptions& opts = {}, double argmax_tol = 1e-4) {
    EntropySweep sweep;
    sweep.rows = parallel_map(
        gamma_grid.size(),
        [&](std::size_t i) {
            const NVModel model = model_with_power(params, gamma_grid[i]);
            const PopulationVector rho1 = laser_on_steady_state(model);
            const PopulationVector rho2 = laser_off_limit(model, rho1);
            return EntropyRow{gamma_grid[i], entropy(rho1), entropy(rho2), rho2[Level(1)]};
        },
        opts.threads);

    std::vector<double> s1, s2;
    for (const auto& r : sweep.rows) {
        s1.push_back(r.s1);
        s2.push_back(r.s2);
    }
    sweep.s2_increasing = detail::strictly_increasing(s2);

    if (s1.size() >= 3) {
        const auto peak = static_cast<std::size_t>(std::max_element(s1.begin(), s1.end()) - s1.begin());
        const std::vector<double> rise(s1.begin(), s1.begin() + static_cast<std::ptrdiff_t>(peak) + 1);
        const std::vector<double> fall(s1.begin() + static_cast<std::ptrdiff_t>(peak), s1.end());
        sweep.s1_unimodal = peak > 0 && peak + 1 < s1.size() && detail::strictly_increasing(rise) &&
                            detail::strictly_decreasing(fall);
        if (sweep.s1_unimodal) {
            sweep.s1_argmax = golden_section_max([&](double g) { return ness1_entropy(params, g); },
                                                 gamma_grid[peak - 1], gamma_grid[peak + 1], argmax_tol);
        }
    }
    return sweep;
}

struct EntropyDecomposition {
    double gamma_p;
    std::vector<double> times;
    std::vector<double> delta_s;  // S(t) - S(0)
    std::vector<double> s_work;
    std::vector<double> s_heat;
    double max_closure_residual = 0.0;
    LedgerTotals totals;
};

inline std::vector<EntropyDecomposition> entropy_decomposition_run(const std::vector<ProtocolConfig>& configs,
                                                                   const ModelParams& params,
                                                                   const SweepOptions& opts = {}) {
    return parallel_map(
        configs.size(),
        [&](std::size_t i) {
            const ProtocolResult r = run_protocol(configs[i], params);
            EntropyDecomposition d;
            d.gamma_p = configs[i].gamma_p;
            d.totals = r.ledger.totals;
            const double s0 = r.ledger.samples.front().s;
            for (std::size_t k = 0; k < r.ledger.samples.size(); ++k) {
                const auto& c = r.ledger.cumulative[k];
                const double ds = r.ledger.samples[k].s - s0;
                d.times.push_back(r.ledger.samples[k].t);
                d.delta_s.push_back(ds);
                d.s_work.push_back(c.s_work);
                d.s_heat.push_back(c.s_heat);
                const double scale = std::max({std::abs(ds), std::abs(c.s_work), std::abs(c.s_heat), 1e-3});
                d.max_closure_residual =
                    std::max(d.max_closure_residual, std::abs(ds - (c.s_work + c.s_heat)) / scale);
            }
            return d;
        },
        opts.threads);
}

// ------------------------------------------------------------- diagnostics

// Bisection for a sign change of f on [lo, hi].
template <class F>
double bisect_root(F&& f, double lo, double hi, double tol = 1e-10) {
    double flo = f(lo);
    if (flo * f(hi) > 0.0) throw InvalidParameter("bracket", "no sign change on the bracket");
    while (hi - lo > tol) {
        const double mid = 0.5 * (lo + hi);
        const double fm = f(mid);
        if ((fm > 0.0) == (flo > 0.0)) {
            lo = mid;
            flo = fm;
        } else {
            hi = mid;
        }
    }
    return 0.5 * (lo + hi);
}

// Gamma_p at which P_E = P_G in rho_1^ss.
inline double excitation_crossover(const ModelParams& params, double lo = 0.5, double hi = 2.0) {
    return bisect_root(
        [&](double g) {
            const PopulationVector p = laser_on_steady_state(model_with_power(params, g));
            return p.excited() - p.ground();
        },
        lo, hi);
}

// Entropy rates at rho_1^ss for a given power.
inline EntropyRates ness1_entropy_rates(const ModelParams& params, double gamma_p) {
    const NVModel model = model_with_power(params, gamma_p);
    return entropy_rates(laser_on_steady_state(model), model, true);
}

// Gamma_p at which Sdot_W changes sign at rho_1^ss.
inline double entropy_sign_crossover(const ModelParams& params, double lo = 0.2, double hi = 3.0) {
    return bisect_root([&](double g) { return ness1_entropy_rates(params, g).work; }, lo, hi);
}

// First time on `grid` after which the laser-on evolution from p0 stays
// within ness_tol of stationarity.
inline std::optional<double> time_to_ness(const ModelParams& params, double gamma_p, const std::vector<double>& grid,
                                          double ness_tol = 1e-8,
                                          const PopulationVector& p0 = PopulationVector::uniform_ground()) {
    const RateMatrix w = build_rate_matrix(model_with_power(params, gamma_p), true);
    const PopulationTrajectory traj = evolve_populations(w, p0, grid);
    std::optional<double> reached;
    for (std::size_t i = traj.size(); i-- > 0;) {
        if (ness_residual(w, traj.states[i]) >= ness_tol) break;
        reached = grid[i];
    }
    return reached;
}

}  // namespace nvpump
