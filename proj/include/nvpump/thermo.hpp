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

// thermo.hpp: thermodynamic bookkeeping along population trajectories.
//
// Sign convention: every current carries the sign of Tr{H D(rho)}. Work
// entering from the pump is positive, heat leaving through a decay channel is
// negative, and at a steady state Wdot + Qdot = 0.

#pragma once

#include <Eigen/Dense>

#include <algorithm>
#include <array>
#include <cmath>
#include <cstddef>
#include <optional>
#include <span>
#include <sstream>
#include <string>
#include <vector>

#include "nvpump/errors.hpp"
#include "nvpump/lindblad.hpp"
#include "nvpump/model.hpp"
#include "nvpump/types.hpp"

namespace nvpump {

// Populations below this value are clamped inside logarithms.
inline constexpr double kLogFloor = 1e-300;

// ------------------------------------------------------------ energy currents

// Tr{H D(rho)} for a diagonal state: sum_j k p_from (E_to - E_from).
inline double energy_current(const PopulationVector& p, JumpSpan jumps, const Vector8d& energies) {
    double flux = 0.0;
    for (const auto& j : jumps)
        flux += j.rate * p.values()[j.from.index()] * (energies[j.to.index()] - energies[j.from.index()]);
    return flux;
}

// Tr{H D(rho)} for a general state.
inline double energy_current(const DensityMatrix& rho, JumpSpan jumps, const NVModel& model) {
    return (model.hamiltonian() * apply_dissipator(rho, jumps)).trace().real();
}

inline double internal_energy(const PopulationVector& p, const NVModel& model) {
    return model.energies().dot(p.values());
}

inline double internal_energy(const DensityMatrix& rho, const NVModel& model) {
    return (model.hamiltonian() * rho.matrix()).trace().real();
}

// Wdot = Tr{H D_p(rho)} = Gamma_p gamma (D41 P1 + D52 P2 + D63 P3).
inline double power_exact(const PopulationVector& p, const NVModel& model, bool laser_on = true) {
    if (!laser_on) return 0.0;
    return energy_current(p, model.jumps(Channel::pump), model.energies());
}

inline double power_exact(const DensityMatrix& rho, const NVModel& model, bool laser_on = true) {
    if (!laser_on) return 0.0;
    return energy_current(rho, model.jumps(Channel::pump), model);
}

// Wdot ~ Delta_EG Gamma_p gamma P_G, valid while the intra-triplet splittings
// are negligible next to Delta_EG.
inline double power_approx(const PopulationVector& p, const NVModel& model, bool laser_on = true) {
    if (!laser_on) return 0.0;
    const auto& prm = model.params();
    return prm.delta_eg * prm.gamma_p * prm.gamma * p.ground();
}

inline double heat_current(const PopulationVector& p, const NVModel& model, Channel channel) {
    if (channel == Channel::pump) throw InvalidParameter("channel", "the pump channel carries work, not heat");
    return energy_current(p, model.jumps(channel), model.energies());
}

inline double heat_current(const DensityMatrix& rho, const NVModel& model, Channel channel) {
    if (channel == Channel::pump) throw InvalidParameter("channel", "the pump channel carries work, not heat");
    return energy_current(rho, model.jumps(channel), model);
}

inline double heat_current_total(const PopulationVector& p, const NVModel& model) {
    return energy_current(p, model.decay_jumps(), model.energies());
}

// Photon emission rate of the spin-conserving decay, gamma * P_E.
inline double fluorescence(const PopulationVector& p, const NVModel& model) {
    return model.params().gamma * p.excited();
}

// Qdot_sc ~ -Delta_EG gamma P_E.
inline double heat_current_sc_closed_form(const PopulationVector& p, const NVModel& model) {
    return -model.params().delta_eg * fluorescence(p, model);
}

// ------------------------------------------------------------------- entropy

inline double entropy(const PopulationVector& p) {
    double s = 0.0;
    for (double x : p.values())
        if (x > 0.0) s -= x * std::log(x);
    return s;
}

// -Tr{rho ln rho} from the spectrum of rho.
inline double von_neumann_entropy(const DensityMatrix& rho) {
    Eigen::SelfAdjointEigenSolver<Matrix8c> es(rho.matrix(), Eigen::EigenvaluesOnly);
    double s = 0.0;
    for (double x : es.eigenvalues())
        if (x > 0.0) s -= x * std::log(x);
    return s;
}

struct EntropyRates {
    double work = 0.0;  // Sdot_W, nats/us
    double heat = 0.0;  // Sdot_Q, nats/us
    bool clamped = false;

    double total() const noexcept { return work + heat; }
};

namespace detail {

inline double clamped_log(double x, bool& clamped) {
    if (x < kLogFloor) {
        clamped = true;
        return std::log(kLogFloor);
    }
    return std::log(x);
}

}  // namespace detail

// -Tr{rho D*(ln rho)} restricted to `jumps`, classical form:
//   -sum_j k p_from ln(p_to / p_from)
// `clamped` is set when an active jump feeds a level below kLogFloor.
inline double entropy_rate(const PopulationVector& p, JumpSpan jumps, bool& clamped) {
    double rate = 0.0;
    for (const auto& j : jumps) {
        const double src = std::max(p.values()[j.from.index()], 0.0);
        if (src == 0.0 || j.rate == 0.0) continue;
        bool hit = false;
        const double log_to = detail::clamped_log(p.values()[j.to.index()], hit);
        clamped = clamped || hit;
        rate -= j.rate * src * (log_to - std::log(src));
    }
    return rate;
}

// -Tr{rho D*(ln rho)} for a general state, with ln rho from the spectral
// decomposition (eigenvalues floored at kLogFloor).
inline double entropy_rate_adjoint(const DensityMatrix& rho, JumpSpan jumps) {
    Eigen::SelfAdjointEigenSolver<Matrix8c> es(rho.matrix());
    Vector8d logs;
    for (int i = 0; i < kLevels; ++i) logs[i] = std::log(std::max(es.eigenvalues()[i], kLogFloor));
    const Matrix8c log_rho = es.eigenvectors() * logs.cast<Complex>().asDiagonal() * es.eigenvectors().adjoint();
    return -(rho.matrix() * apply_adjoint_dissipator(log_rho, jumps)).trace().real();
}

// (Sdot_W, Sdot_Q): entropy change driven by the pump and by the decays.
inline EntropyRates entropy_rates(const PopulationVector& p, const NVModel& model, bool laser_on) {
    EntropyRates r;
    if (laser_on) r.work = entropy_rate(p, model.jumps(Channel::pump), r.clamped);
    r.heat = entropy_rate(p, model.decay_jumps(), r.clamped);
    return r;
}

// dS/dt = -sum_n pdot_n ln p_n with pdot = W p.
inline double total_entropy_rate(const PopulationVector& p, const NVModel& model, bool laser_on) {
    const Vector8d pdot = build_rate_matrix(model, laser_on).matrix() * p.values();
    bool clamped = false;
    double rate = 0.0;
    for (int n = 0; n < kLevels; ++n) {
        if (pdot[n] == 0.0) continue;
        rate -= pdot[n] * detail::clamped_log(p.values()[n], clamped);
    }
    return rate;
}

// ------------------------------------------------------------------- samples

struct ThermoSample {
    double t = 0.0;
    bool laser_on = false;
    double u = 0.0;
    double wdot = 0.0;
    double qdot_sc = 0.0;
    double qdot_isc = 0.0;
    double qdot_nsc = 0.0;
    double qdot_total = 0.0;
    double fluorescence = 0.0;
    double s = 0.0;
    double sdot_w = 0.0;
    double sdot_q = 0.0;
    bool clamped = false;  // a logarithm hit kLogFloor
};

inline ThermoSample thermo_sample(double t, const PopulationVector& p, const NVModel& model, bool laser_on) {
    ThermoSample s;
    s.t = t;
    s.laser_on = laser_on;
    s.u = internal_energy(p, model);
    s.wdot = power_exact(p, model, laser_on);
    s.qdot_sc = heat_current(p, model, Channel::spin_conserving);
    s.qdot_isc = heat_current(p, model, Channel::isc);
    s.qdot_nsc = heat_current(p, model, Channel::non_spin_conserving);
    s.qdot_total = s.qdot_sc + s.qdot_isc + s.qdot_nsc;
    s.fluorescence = fluorescence(p, model);
    s.s = entropy(p);
    const EntropyRates r = entropy_rates(p, model, laser_on);
    s.sdot_w = r.work;
    s.sdot_q = r.heat;
    s.clamped = r.clamped;
    return s;
}

// Running integrals from the first grid point.
struct CumulativeSample {
    double work = 0.0;
    double heat_sc = 0.0;
    double heat_isc = 0.0;
    double heat_nsc = 0.0;
    double s_work = 0.0;
    double s_heat = 0.0;

    double heat() const noexcept { return heat_sc + heat_isc + heat_nsc; }
};

struct LedgerTotals {
    double t_begin = 0.0;
    double t_end = 0.0;
    double work = 0.0;
    double heat = 0.0;
    double heat_sc = 0.0;
    double heat_isc = 0.0;
    double heat_nsc = 0.0;
    double delta_u = 0.0;
    double s_work = 0.0;
    double s_heat = 0.0;
    double delta_s = 0.0;
    std::optional<std::string> accuracy_warning;

    // |dU - (W + Q)| / max(|W|, |Q|, |dU|)
    double first_law_residual() const {
        const double scale = std::max({std::abs(work), std::abs(heat), std::abs(delta_u)});
        const double r = std::abs(delta_u - (work + heat));
        return scale > 0.0 ? r / scale : r;
    }

    // |dS - (S_W + S_Q)| / max(|dS|, |S_W|, |S_Q|, 1e-3)
    double entropy_residual() const {
        const double scale = std::max({std::abs(delta_s), std::abs(s_work), std::abs(s_heat), 1e-3});
        return std::abs(delta_s - (s_work + s_heat)) / scale;
    }

    bool closes(double tol = 1e-6) const {
        return first_law_residual() <= tol && entropy_residual() <= tol;
    }
};

struct Ledger {
    std::vector<ThermoSample> samples;
    std::vector<CumulativeSample> cumulative;
    LedgerTotals totals;
    std::size_t evaluations = 0;  // integrand evaluations used by the quadrature

    // Totals over [samples[i].t, samples[j].t].
    LedgerTotals between(std::size_t i, std::size_t j) const {
        const auto& a = cumulative.at(i);
        const auto& b = cumulative.at(j);
        LedgerTotals t;
        t.t_begin = samples.at(i).t;
        t.t_end = samples.at(j).t;
        t.work = b.work - a.work;
        t.heat_sc = b.heat_sc - a.heat_sc;
        t.heat_isc = b.heat_isc - a.heat_isc;
        t.heat_nsc = b.heat_nsc - a.heat_nsc;
        t.heat = t.heat_sc + t.heat_isc + t.heat_nsc;
        t.delta_u = samples[j].u - samples[i].u;
        t.s_work = b.s_work - a.s_work;
        t.s_heat = b.s_heat - a.s_heat;
        t.delta_s = samples[j].s - samples[i].s;
        return t;
    }
};

struct LedgerOptions {
    // Local acceptance: |T(h/2) - T(h)| <= rel_tol * scale * width / span per
    // component, where scale is the component's largest magnitude on the grid.
    double rel_tol = 1e-8;
    double min_width = 1e-14;  // us
    int max_depth = 64;
    // Outer passes, each tightening rel_tol by 100x, until the totals close.
    int max_refinements = 4;
    double closure_tol = 1e-6;
};

namespace detail {

using FluxVector = Eigen::Matrix<double, 6, 1>;  // Wdot, Qsc, Qisc, Qnsc, SdotW, SdotQ

inline FluxVector flux_vector(const ThermoSample& s) {
    FluxVector f;
    f << s.wdot, s.qdot_sc, s.qdot_isc, s.qdot_nsc, s.sdot_w, s.sdot_q;
    return f;
}

inline FluxVector flux_vector(const PopulationVector& p, const NVModel& model, bool laser_on) {
    const EntropyRates r = entropy_rates(p, model, laser_on);
    FluxVector f;
    f << power_exact(p, model, laser_on), heat_current(p, model, Channel::spin_conserving),
        heat_current(p, model, Channel::isc), heat_current(p, model, Channel::non_spin_conserving), r.work,
        r.heat;
    return f;
}

inline void accumulate(CumulativeSample& c, const FluxVector& d) {
    c.work += d[0];
    c.heat_sc += d[1];
    c.heat_isc += d[2];
    c.heat_nsc += d[3];
    c.s_work += d[4];
    c.s_heat += d[5];
}

template <class Eval>
FluxVector adaptive_trapezoid(const Eval& eval, double a, double b, const FluxVector& fa, const FluxVector& fb,
                              const FluxVector& tol_density, const LedgerOptions& opts, int depth,
                              std::size_t& evaluations) {
    const double h = b - a;
    const FluxVector coarse = 0.5 * h * (fa + fb);
    const double m = a + 0.5 * h;
    const FluxVector fm = eval(m);
    ++evaluations;
    const FluxVector fine = 0.25 * h * (fa + 2.0 * fm + fb);
    const bool converged = ((fine - coarse).cwiseAbs().array() <= tol_density.array() * h).all();
    // Richardson step on the halved trapezoid; cancels the h^2 error term.
    if (converged || h <= opts.min_width || depth >= opts.max_depth) return fine + (fine - coarse) / 3.0;
    return adaptive_trapezoid(eval, a, m, fa, fm, tol_density, opts, depth + 1, evaluations) +
           adaptive_trapezoid(eval, m, b, fm, fb, tol_density, opts, depth + 1, evaluations);
}

// Integral over [a, b] when the integrand has a logarithmic singularity at a
// (a level fed from zero population). With t = a + (b - a) e^{-s} the
// integrand becomes f(t) (b - a) e^{-s} on s in [0, s_max], which is smooth
// and decays exponentially. The sliver below a + min_width is taken as one
// rectangle at its right end.
template <class Eval>
FluxVector log_substituted_trapezoid(const Eval& eval, double a, double b, const FluxVector& fb,
                                     const FluxVector& tol_density, const LedgerOptions& opts,
                                     std::size_t& evaluations) {
    const double width = b - a;
    const double s_max = std::log(width / std::min(opts.min_width, 1e-3 * width));
    auto g = [&](double s) -> FluxVector {
        const double jac = width * std::exp(-s);
        return eval(a + jac) * jac;
    };
    const FluxVector g0 = fb * width;
    const FluxVector g_end = g(s_max);
    ++evaluations;
    const FluxVector density = tol_density * width / s_max;
    FluxVector total = adaptive_trapezoid(g, 0.0, s_max, g0, g_end, density, opts, 0, evaluations);
    total += g_end;  // rectangle on [a, a + width e^{-s_max}]
    return total;
}

inline void finalize_totals(Ledger& ledger, const LedgerOptions& opts) {
    ledger.totals = ledger.between(0, ledger.samples.size() - 1);
    if (!ledger.totals.closes(opts.closure_tol)) {
        std::ostringstream os;
        os << "ledger does not close: first-law residual " << ledger.totals.first_law_residual()
           << ", entropy residual " << ledger.totals.entropy_residual();
        ledger.totals.accuracy_warning = os.str();
    }
}

}  // namespace detail

// Ledger along an exactly known evolution. Each grid interval is integrated
// with dyadically refined, Richardson-extrapolated trapezoids; the pass is repeated with a tighter
// tolerance until both closure residuals meet opts.closure_tol or stop
// improving. Grid points must include every phase boundary.
inline Ledger integrate_ledger(const PhasedEvolution& evolution, std::span<const double> grid,
                               const NVModel& model, const LedgerOptions& opts = {}) {
    detail::require_increasing(grid);
    if (grid.size() < 2) throw InvalidParameter("grid", "need at least two points");

    Ledger base;
    base.samples.reserve(grid.size());
    std::vector<std::size_t> interval_phase(grid.size() - 1);
    for (std::size_t i = 0; i + 1 < grid.size(); ++i) {
        interval_phase[i] = evolution.phase_index(0.5 * (grid[i] + grid[i + 1]));
        const auto& ph = evolution.phases()[interval_phase[i]];
        if (grid[i] < ph.t_begin - 1e-12 || grid[i + 1] > ph.t_end + 1e-12)
            throw InvalidParameter("grid", "interval crosses a phase boundary; add the boundary to the grid");
    }
    for (std::size_t i = 0; i < grid.size(); ++i) {
        const std::size_t ph = i + 1 < grid.size() ? interval_phase[i] : interval_phase.back();
        // The last point of a phase reports that phase's laser setting.
        const std::size_t owner = i > 0 ? interval_phase[i - 1] : ph;
        const bool on = evolution.phases()[owner].laser_on;
        base.samples.push_back(thermo_sample(grid[i], evolution.state_in(owner, grid[i]), model, on));
    }

    detail::FluxVector scale = detail::FluxVector::Constant(1e-300);
    bool any_unclamped = false;
    for (const auto& s : base.samples) {
        if (s.clamped) continue;
        any_unclamped = true;
        scale = scale.cwiseMax(detail::flux_vector(s).cwiseAbs());
    }
    if (!any_unclamped)
        for (const auto& s : base.samples) scale = scale.cwiseMax(detail::flux_vector(s).cwiseAbs());

    const double span = grid.back() - grid.front();
    double tol = opts.rel_tol;
    std::optional<Ledger> best;
    double best_residual = INFINITY;

    for (int pass = 0; pass <= opts.max_refinements; ++pass, tol *= 1e-2) {
        Ledger ledger;
        ledger.samples = base.samples;
        ledger.cumulative.assign(grid.size(), CumulativeSample{});
        const detail::FluxVector tol_density = tol * scale / span;

        for (std::size_t i = 0; i + 1 < grid.size(); ++i) {
            const std::size_t ph = interval_phase[i];
            const bool on = evolution.phases()[ph].laser_on;
            auto eval = [&](double t) { return detail::flux_vector(evolution.state_in(ph, t), model, on); };
            const detail::FluxVector fb = eval(grid[i + 1]);
            ledger.evaluations += 1;
            detail::FluxVector d;
            if (base.samples[i].clamped) {
                d = detail::log_substituted_trapezoid(eval, grid[i], grid[i + 1], fb, tol_density, opts,
                                                      ledger.evaluations);
            } else {
                const detail::FluxVector fa = eval(grid[i]);
                ledger.evaluations += 1;
                d = detail::adaptive_trapezoid(eval, grid[i], grid[i + 1], fa, fb, tol_density, opts, 0,
                                               ledger.evaluations);
            }
            ledger.cumulative[i + 1] = ledger.cumulative[i];
            detail::accumulate(ledger.cumulative[i + 1], d);
        }
        detail::finalize_totals(ledger, opts);

        const double residual = std::max(ledger.totals.first_law_residual(), ledger.totals.entropy_residual());
        const bool improved = residual < best_residual;
        if (improved) {
            best_residual = residual;
            best = std::move(ledger);
        }
        if (!best->totals.accuracy_warning || !improved) break;
    }
    return std::move(*best);
}

// Ledger from samples alone: plain trapezoid, no refinement. Use the
// PhasedEvolution overload when the closure residuals matter.
inline Ledger integrate_ledger(const PopulationTrajectory& traj, const NVModel& model,
                               const LedgerOptions& opts = {}) {
    if (traj.size() < 2) throw InvalidParameter("trajectory", "need at least two samples");
    if (!traj.times_increasing()) throw InvalidParameter("trajectory", "times must be strictly increasing");
    Ledger ledger;
    for (std::size_t i = 0; i < traj.size(); ++i)
        ledger.samples.push_back(thermo_sample(traj.times[i], traj.states[i], model, traj.laser_on[i]));
    ledger.cumulative.assign(traj.size(), CumulativeSample{});
    for (std::size_t i = 0; i + 1 < traj.size(); ++i) {
        // A phase boundary sample carries the earlier phase's flag, so the
        // interval's laser setting is the right endpoint's.
        const bool on = traj.laser_on[i + 1];
        const detail::FluxVector fa = detail::flux_vector(traj.states[i], model, on);
        const detail::FluxVector fb = detail::flux_vector(traj.states[i + 1], model, on);
        ledger.cumulative[i + 1] = ledger.cumulative[i];
        detail::accumulate(ledger.cumulative[i + 1], 0.5 * (traj.times[i + 1] - traj.times[i]) * (fa + fb));
    }
    ledger.evaluations = 2 * (traj.size() - 1);
    detail::finalize_totals(ledger, opts);
    return ledger;
}

}  // namespace nvpump
