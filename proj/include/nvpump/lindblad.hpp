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

// lindblad.hpp: master-equation right-hand side, the classical rate-matrix
// reduction, exact population propagation, and steady-state extraction.
//
// The Hamiltonian is diagonal and every jump maps a basis state onto a basis
// state, so a diagonal initial state stays diagonal. The population path
// (RateMatrix + Propagator) is therefore exact and is the default engine;
// evolve_full() integrates the full 8x8 equation and exists to check that
// claim.

#pragma once

#include <Eigen/Dense>
#include <unsupported/Eigen/MatrixFunctions>

#include <boost/numeric/odeint.hpp>

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
#include "nvpump/model.hpp"
#include "nvpump/types.hpp"

namespace nvpump {

// ---------------------------------------------------------------- dissipators

// sum_j L rho L^dag - 1/2 {L^dag L, rho} for L = sqrt(k)|t><f|:
//   L rho L^dag   = k rho_ff |t><t|
//   L^dag L       = k |f><f|
inline Matrix8c apply_dissipator(const Matrix8c& rho, JumpSpan jumps) {
    Matrix8c out = Matrix8c::Zero();
    for (const auto& j : jumps) {
        const int f = j.from.index();
        const int t = j.to.index();
        const double k = j.rate;
        out(t, t) += k * rho(f, f);
        out.row(f) -= 0.5 * k * rho.row(f);
        out.col(f) -= 0.5 * k * rho.col(f);
    }
    return out;
}

inline Matrix8c apply_dissipator(const DensityMatrix& rho, JumpSpan jumps) {
    return apply_dissipator(rho.matrix(), jumps);
}

// Heisenberg-picture dual: sum_j L^dag A L - 1/2 {L^dag L, A}, with
// L^dag A L = k A_tt |f><f|.
inline Matrix8c apply_adjoint_dissipator(const Matrix8c& a, JumpSpan jumps) {
    Matrix8c out = Matrix8c::Zero();
    for (const auto& j : jumps) {
        const int f = j.from.index();
        const int t = j.to.index();
        const double k = j.rate;
        out(f, f) += k * a(t, t);
        out.row(f) -= 0.5 * k * a.row(f);
        out.col(f) -= 0.5 * k * a.col(f);
    }
    return out;
}

// -i[H, rho] + D_p(rho) + sum_i D_d^i(rho). The pump term is dropped when the
// laser is off.
inline Matrix8c rhs(const Matrix8c& rho, const NVModel& model, bool laser_on) {
    const auto& e = model.energies();
    Matrix8c out;
    for (int j = 0; j < kLevels; ++j)
        for (int i = 0; i < kLevels; ++i) out(i, j) = Complex(0.0, -(e[i] - e[j])) * rho(i, j);
    out += apply_dissipator(rho, model.decay_jumps());
    if (laser_on) out += apply_dissipator(rho, model.jumps(Channel::pump));
    return out;
}

inline Matrix8c rhs(const DensityMatrix& rho, const NVModel& model, bool laser_on) {
    return rhs(rho.matrix(), model, laser_on);
}

// ---------------------------------------------------------------- rate matrix

// Generator of the population dynamics: dp/dt = W p.
// W(m, n) = sum of rates n -> m for m != n, W(n, n) = -sum_m W(m, n).
class RateMatrix {
public:
    RateMatrix() : w_(Matrix8d::Zero()) {}
    explicit RateMatrix(const Matrix8d& w) : w_(w) {}

    const Matrix8d& matrix() const noexcept { return w_; }

    // Largest total escape rate. Used to scale residual tolerances.
    double scale() const { return std::max(w_.diagonal().cwiseAbs().maxCoeff(), 1e-300); }

    double column_sum_error() const { return w_.colwise().sum().cwiseAbs().maxCoeff(); }

    bool is_valid(double tol = 1e-12) const {
        if (!w_.allFinite()) return false;
        for (int m = 0; m < kLevels; ++m)
            for (int n = 0; n < kLevels; ++n)
                if (m != n && w_(m, n) < 0.0) return false;
        return column_sum_error() <= tol * std::max(1.0, scale());
    }

private:
    Matrix8d w_;
};

inline RateMatrix build_rate_matrix(const NVModel& model, bool laser_on) {
    Matrix8d w = Matrix8d::Zero();
    for (const auto& j : model.jumps()) {
        if (!laser_on && j.channel == Channel::pump) continue;
        w(j.to.index(), j.from.index()) += j.rate;
    }
    for (int n = 0; n < kLevels; ++n) {
        double out = 0.0;
        for (int m = 0; m < kLevels; ++m)
            if (m != n) out += w(m, n);
        w(n, n) = -out;
    }
    return RateMatrix(w);
}

// max_n |(W p)_n| / scale(W)
inline double ness_residual(const RateMatrix& w, const PopulationVector& p) {
    return (w.matrix() * p.values()).cwiseAbs().maxCoeff() / w.scale();
}

inline Vector8c spectrum(const RateMatrix& w) {
    Eigen::EigenSolver<Matrix8d> es(w.matrix(), false);
    return es.eigenvalues();
}

// ----------------------------------------------------------------- propagator

// exp(W t) through the eigendecomposition W = V diag(lambda) V^-1. When V is
// ill-conditioned the propagator falls back to scaling-and-squaring exp(W t).
class Propagator {
public:
    static constexpr double kMaxCondition = 1e8;

    explicit Propagator(const RateMatrix& w, double max_condition = kMaxCondition) : w_(w) {
        Eigen::EigenSolver<Matrix8d> es(w.matrix(), true);
        if (es.info() == Eigen::Success) {
            lambda_ = es.eigenvalues();
            v_ = es.eigenvectors();
            Eigen::JacobiSVD<Matrix8c> svd(v_);
            const auto& s = svd.singularValues();
            condition_ = s[kLevels - 1] > 0.0 ? s[0] / s[kLevels - 1] : INFINITY;
            if (condition_ <= max_condition) {
                v_inv_ = v_.inverse();
                spectral_ = v_inv_.allFinite();
            }
        } else {
            condition_ = INFINITY;
        }
    }

    const RateMatrix& generator() const noexcept { return w_; }
    bool spectral() const noexcept { return spectral_; }
    double condition_number() const noexcept { return condition_; }
    const Vector8c& eigenvalues() const noexcept { return lambda_; }

    // Coefficients of p0 in the eigenbasis (only meaningful when spectral()).
    Vector8c modal(const Vector8d& p0) const { return v_inv_ * p0.cast<Complex>(); }

    Vector8d from_modal(const Vector8c& coeff, double t) const {
        Vector8c scaled;
        for (int i = 0; i < kLevels; ++i) scaled[i] = coeff[i] * std::exp(lambda_[i] * t);
        return (v_ * scaled).real();
    }

    Vector8d apply(const Vector8d& p0, double t) const {
        if (spectral_) return from_modal(modal(p0), t);
        const Matrix8d m = w_.matrix() * t;
        return m.exp() * p0;
    }

private:
    RateMatrix w_;
    Vector8c lambda_ = Vector8c::Zero();
    Matrix8c v_ = Matrix8c::Identity();
    Matrix8c v_inv_ = Matrix8c::Identity();
    double condition_ = INFINITY;
    bool spectral_ = false;
};

// p(t0 + s) = exp(W s) p(t0), with the modal coefficients cached.
class Propagation {
public:
    Propagation(const RateMatrix& w, const PopulationVector& p0)
        : propagator_(w), p0_(p0.values()) {
        if (propagator_.spectral()) coeff_ = propagator_.modal(p0_);
    }

    const Propagator& propagator() const noexcept { return propagator_; }
    const RateMatrix& generator() const noexcept { return propagator_.generator(); }
    const PopulationVector initial() const { return PopulationVector(p0_); }

    Vector8d at(double s) const {
        if (s == 0.0) return p0_;
        if (propagator_.spectral()) return propagator_.from_modal(coeff_, s);
        return propagator_.apply(p0_, s);
    }

private:
    Propagator propagator_;
    Vector8d p0_;
    Vector8c coeff_ = Vector8c::Zero();
};

// ----------------------------------------------------------------- trajectory

template <class State>
struct Trajectory {
    std::vector<double> times;
    std::vector<State> states;
    std::vector<bool> laser_on;

    std::size_t size() const noexcept { return times.size(); }

    bool times_increasing() const {
        return std::adjacent_find(times.begin(), times.end(),
                                  [](double a, double b) { return !(a < b); }) == times.end();
    }
};

using PopulationTrajectory = Trajectory<PopulationVector>;
using DensityTrajectory = Trajectory<DensityMatrix>;

namespace detail {

inline void require_increasing(std::span<const double> times) {
    if (times.empty()) throw InvalidParameter("times", "empty time grid");
    if (times.front() < 0.0) throw InvalidParameter("times", "must start at t >= 0");
    for (std::size_t i = 1; i < times.size(); ++i)
        if (!(times[i] > times[i - 1])) throw InvalidParameter("times", "must be strictly increasing");
}

inline void check_population(const Vector8d& p, double t) {
    const bool finite = p.allFinite();
    const double drift = std::abs(p.sum() - 1.0);
    if (!finite || drift > 1e-10) {
        std::ostringstream os;
        os.precision(17);
        os << "population propagation failed at t=" << t << " us: "
           << (finite ? "probability drift " : "non-finite state, drift ") << drift
           << ", p = [" << p.transpose() << "]";
        throw NumericalFailure(os.str());
    }
}

}  // namespace detail

inline PopulationTrajectory evolve_populations(const RateMatrix& w, const PopulationVector& p0,
                                               std::span<const double> times, bool laser_on = true) {
    detail::require_increasing(times);
    const Propagation prop(w, p0);
    PopulationTrajectory traj;
    traj.times.assign(times.begin(), times.end());
    traj.states.reserve(times.size());
    for (double t : times) {
        Vector8d p = prop.at(t);
        detail::check_population(p, t);
        traj.states.emplace_back(p);
    }
    traj.laser_on.assign(times.size(), laser_on);
    return traj;
}

// ------------------------------------------------------------ full evolution

struct FullEvolutionOptions {
    double rel_tol = 1e-10;
    double abs_tol = 1e-12;
    double min_step = 1e-13;  // us
    std::size_t max_steps = 10'000'000;
};

// Adaptive Runge-Kutta-Fehlberg 7(8) on the full density matrix.
inline DensityTrajectory evolve_full(const DensityMatrix& rho0, const NVModel& model, bool laser_on,
                                     std::span<const double> times,
                                     const FullEvolutionOptions& opts = {}) {
    namespace odeint = boost::numeric::odeint;
    using State = std::array<double, 2 * kLevels * kLevels>;

    detail::require_increasing(times);

    auto system = [&](const State& x, State& dxdt, double /*t*/) {
        const Eigen::Map<const Matrix8c> rho(reinterpret_cast<const Complex*>(x.data()));
        Eigen::Map<Matrix8c> out(reinterpret_cast<Complex*>(dxdt.data()));
        out = rhs(rho, model, laser_on);
    };

    State x{};
    Eigen::Map<Matrix8c>(reinterpret_cast<Complex*>(x.data())) = rho0.matrix();

    auto stepper = odeint::make_controlled<odeint::runge_kutta_fehlberg78<State>>(opts.abs_tol, opts.rel_tol);

    DensityTrajectory traj;
    traj.times.assign(times.begin(), times.end());
    traj.laser_on.assign(times.size(), laser_on);
    traj.states.reserve(times.size());

    double t = times.front();
    double dt = 1e-4;
    std::size_t steps = 0;
    for (double target : times) {
        while (t < target) {
            double h = std::min(dt, target - t);
            const bool clipped = h < dt;
            const double t_before = t;
            if (stepper.try_step(system, x, t, h) == odeint::success) {
                ++steps;
                // try_step grows h on success; keep the unclipped proposal.
                dt = clipped ? std::max(dt, h) : h;
                if (target - t < 1e-15 * std::max(1.0, target)) t = target;
            } else {
                dt = h;
                if (dt < opts.min_step) {
                    std::ostringstream os;
                    os << "evolve_full: step size underflow (" << dt << " us) at t=" << t_before
                       << " us; the system is too stiff for the adaptive integrator, "
                          "use evolve_populations for diagonal states";
                    throw StiffnessError(os.str());
                }
            }
            if (steps > opts.max_steps)
                throw StiffnessError("evolve_full: exceeded " + std::to_string(opts.max_steps) +
                                     " steps; use evolve_populations for diagonal states");
        }
        const Eigen::Map<const Matrix8c> rho(reinterpret_cast<const Complex*>(x.data()));
        if (!rho.allFinite()) throw NumericalFailure("evolve_full: non-finite state at t=" + std::to_string(t));
        traj.states.emplace_back(Matrix8c(rho));
    }
    return traj;
}

// -------------------------------------------------------------- steady states

struct KernelOptions {
    // Singular values below kernel_tol * sigma_max count as zero.
    double kernel_tol = 1e-10;
};

inline std::size_t kernel_dimension(const RateMatrix& w, const KernelOptions& opts = {}) {
    Eigen::JacobiSVD<Matrix8d> svd(w.matrix());
    const auto& s = svd.singularValues();
    const double cutoff = opts.kernel_tol * std::max(s[0], 1e-300);
    return static_cast<std::size_t>((s.array() <= cutoff).count());
}

// Unique probability vector in ker(W).
inline PopulationVector steady_state(const RateMatrix& w, const KernelOptions& opts = {}) {
    Eigen::JacobiSVD<Matrix8d> svd(w.matrix(), Eigen::ComputeFullV);
    const auto& s = svd.singularValues();
    const double cutoff = opts.kernel_tol * std::max(s[0], 1e-300);
    const auto dim = static_cast<std::size_t>((s.array() <= cutoff).count());
    if (dim > 1) {
        throw DegenerateKernel(dim, "steady_state: kernel of W has dimension " + std::to_string(dim) +
                                        "; the limit depends on p0, use asymptotic_state");
    }
    if (dim == 0) {
        throw InvalidGenerator("steady_state: W has a trivial kernel (smallest singular value " +
                               std::to_string(s[kLevels - 1]) + "), not a rate matrix");
    }

    Vector8d p = svd.matrixV().col(kLevels - 1);
    p /= p.sum();
    // Round-off can leave entries of order -1e-17 on empty levels.
    p = p.cwiseMax(0.0);
    p /= p.sum();

    const PopulationVector result(p);
    const double residual = ness_residual(w, result);
    if (!p.allFinite() || residual > 1e-10) {
        throw NumericalFailure("steady_state: null vector residual " + std::to_string(residual) +
                               " exceeds 1e-10 of the largest rate");
    }
    return result;
}

// lim_{t->inf} exp(W t) p0, by projecting onto the zero-eigenvalue eigenspace.
inline PopulationVector asymptotic_state(const RateMatrix& w, const PopulationVector& p0) {
    const Propagator prop(w);
    const auto& lambda = prop.eigenvalues();
    const double scale = w.scale();
    if (lambda.real().maxCoeff() > 1e-10 * scale) {
        std::ostringstream os;
        os << "asymptotic_state: eigenvalue with positive real part " << lambda.real().maxCoeff()
           << "; W is not a valid generator";
        throw InvalidGenerator(os.str());
    }

    Vector8d p;
    if (prop.spectral()) {
        Vector8c coeff = prop.modal(p0.values());
        for (int i = 0; i < kLevels; ++i)
            if (std::abs(lambda[i]) > 1e-9 * scale) coeff[i] = 0.0;
        p = prop.from_modal(coeff, 0.0);
    } else {
        // Defective or ill-conditioned spectrum: propagate far past the slowest mode.
        double slowest = INFINITY;
        for (int i = 0; i < kLevels; ++i)
            if (std::abs(lambda[i]) > 1e-9 * scale) slowest = std::min(slowest, -lambda[i].real());
        const double horizon = std::isfinite(slowest) ? 1e3 / slowest : 0.0;
        p = prop.apply(p0.values(), horizon);
    }
    detail::check_population(p, INFINITY);
    return PopulationVector(p);
}

// ---------------------------------------------------------- phased evolution

// Piecewise-constant generator: a sequence of phases, each with its own
// laser setting, glued continuously at the boundaries.
class PhasedEvolution {
public:
    struct Phase {
        double t_begin;
        double t_end;
        bool laser_on;
        Propagation propagation;
    };

    explicit PhasedEvolution(const PopulationVector& p0, double t0 = 0.0) : start_(p0), t0_(t0) {}

    void append(const NVModel& model, bool laser_on, double duration) {
        if (!(duration > 0.0)) throw InvalidParameter("duration", "phase duration must be > 0");
        const double t_begin = phases_.empty() ? t0_ : phases_.back().t_end;
        const PopulationVector p_begin = phases_.empty() ? start_ : state(t_begin);
        phases_.push_back(Phase{t_begin, t_begin + duration, laser_on,
                                Propagation(build_rate_matrix(model, laser_on), p_begin)});
    }

    const std::vector<Phase>& phases() const noexcept { return phases_; }
    double t_begin() const { return t0_; }
    double t_end() const { return phases_.empty() ? t0_ : phases_.back().t_end; }

    // Index of the phase containing t. A boundary belongs to the earlier phase.
    std::size_t phase_index(double t) const {
        for (std::size_t i = 0; i < phases_.size(); ++i)
            if (t <= phases_[i].t_end) return i;
        return phases_.size() - 1;
    }

    PopulationVector state(double t) const { return state_in(phase_index(t), t); }

    PopulationVector state_in(std::size_t phase, double t) const {
        const auto& ph = phases_.at(phase);
        return PopulationVector(ph.propagation.at(t - ph.t_begin));
    }

    PopulationTrajectory sample(std::span<const double> times) const {
        detail::require_increasing(times);
        PopulationTrajectory traj;
        traj.times.assign(times.begin(), times.end());
        for (double t : times) {
            const std::size_t i = phase_index(t);
            const PopulationVector p = state_in(i, t);
            detail::check_population(p.values(), t);
            traj.states.push_back(p);
            traj.laser_on.push_back(phases_[i].laser_on);
        }
        return traj;
    }

private:
    PopulationVector start_;
    double t0_;
    std::vector<Phase> phases_;
};

}  // namespace nvpump
