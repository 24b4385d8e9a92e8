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

// model.hpp: the eight-level NV Hamiltonian and its seventeen jump operators.
//
// Units: frequencies and rates in MHz, time in microseconds, hbar = 1. The
// Hamiltonian is diagonal in the level basis, so it is stored as its eight
// eigenvalues.

#pragma once

#include <array>
#include <cmath>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "nvpump/errors.hpp"
#include "nvpump/types.hpp"

namespace nvpump {

// How the Zeeman term enters the excited triplet. `physical_sz` uses
// gyro*B_z*S_z, which splits |5> and |6> symmetrically. `literal_sz2` uses
// gyro*B_z*S_z^2 and shifts both upward. The two agree at B_z = 0.
enum class ExcitedZeeman { physical_sz, literal_sz2 };

inline std::string_view to_string(ExcitedZeeman z) {
    return z == ExcitedZeeman::physical_sz ? "physical_sz" : "literal_sz2";
}

struct NonSpinConservingRates {
    double g42 = 0.25;
    double g43 = 0.25;
    double g51 = 0.25;
    double g61 = 0.25;
};

struct ModelParams {
    // Splittings (MHz).
    double d_g = 2.87e3;
    double d_e = 1.40e3;
    double delta_eg = 4.7e8;
    double delta_ig = 1.69e8;
    double d_i = 2.88e8;

    double gyro = 2.80e4;  // MHz/T
    double b_z = 0.0;      // T

    // Rates (MHz).
    double gamma = 77.0;
    double gamma_p = 1.0;  // dimensionless laser power
    NonSpinConservingRates gamma_nsc{};
    std::array<double, 3> kappa_ei{0.0, 15.0, 15.0};  // from |4>, |5>, |6> to |8>
    double kappa_i = 1.0e3;                           // |8> -> |7>
    std::array<double, 3> kappa_ig{1.0, 1.0, 1.0};    // |7> -> |1>, |2>, |3>

    ExcitedZeeman excited_zeeman = ExcitedZeeman::physical_sz;

    void validate() const {
        auto non_negative = [](double v, const char* name) {
            if (!std::isfinite(v)) throw InvalidParameter(name, "must be finite");
            if (v < 0.0) throw InvalidParameter(name, "must be >= 0, got " + std::to_string(v));
        };
        non_negative(d_g, "d_g");
        non_negative(d_e, "d_e");
        non_negative(delta_eg, "delta_eg");
        non_negative(delta_ig, "delta_ig");
        non_negative(d_i, "d_i");
        non_negative(gyro, "gyro");
        if (!std::isfinite(b_z)) throw InvalidParameter("b_z", "must be finite");
        non_negative(gamma, "gamma");
        non_negative(gamma_p, "gamma_p");
        non_negative(gamma_nsc.g42, "gamma_42");
        non_negative(gamma_nsc.g43, "gamma_43");
        non_negative(gamma_nsc.g51, "gamma_51");
        non_negative(gamma_nsc.g61, "gamma_61");
        non_negative(kappa_ei[0], "kappa_ei_4");
        non_negative(kappa_ei[1], "kappa_ei_5");
        non_negative(kappa_ei[2], "kappa_ei_6");
        non_negative(kappa_i, "kappa_i");
        non_negative(kappa_ig[0], "kappa_ig_1");
        non_negative(kappa_ig[1], "kappa_ig_2");
        non_negative(kappa_ig[2], "kappa_ig_3");
    }
};

enum class Channel { pump, spin_conserving, isc, non_spin_conserving };

inline constexpr std::array<Channel, 3> kDecayChannels{
    Channel::spin_conserving, Channel::isc, Channel::non_spin_conserving};

inline std::string_view to_string(Channel c) {
    switch (c) {
        case Channel::pump: return "pump";
        case Channel::spin_conserving: return "spin_conserving";
        case Channel::isc: return "isc";
        case Channel::non_spin_conserving: return "non_spin_conserving";
    }
    return "unknown";
}

// L = sqrt(rate) |to><from|
struct JumpOperator {
    Level from;
    Level to;
    double rate;
    Channel channel;

    Matrix8c matrix() const {
        Matrix8c L = Matrix8c::Zero();
        L(to.index(), from.index()) = std::sqrt(rate);
        return L;
    }
};

using JumpSpan = std::span<const JumpOperator>;

class NVModel {
public:
    const Vector8d& energies() const noexcept { return energies_; }
    double energy(Level n) const { return energies_[n.index()]; }
    const ModelParams& params() const noexcept { return params_; }

    // All seventeen operators in order L1..L17.
    JumpSpan jumps() const noexcept { return jumps_; }

    // Operators belonging to one channel. Channels are contiguous in jumps().
    JumpSpan jumps(Channel c) const {
        switch (c) {
            case Channel::pump: return JumpSpan(jumps_).subspan(0, 3);
            case Channel::spin_conserving: return JumpSpan(jumps_).subspan(3, 3);
            case Channel::isc: return JumpSpan(jumps_).subspan(6, 7);
            case Channel::non_spin_conserving: return JumpSpan(jumps_).subspan(13, 4);
        }
        return {};
    }

    // Decay operators only (L4..L17).
    JumpSpan decay_jumps() const { return JumpSpan(jumps_).subspan(3); }

    Matrix8c hamiltonian() const {
        Matrix8c H = Matrix8c::Zero();
        H.diagonal() = energies_.cast<Complex>();
        return H;
    }

    double max_rate() const {
        double m = 0.0;
        for (const auto& j : jumps_) m = std::max(m, j.rate);
        return m;
    }

    // Total rate out of `level` with or without the pump.
    double outflow_rate(Level level, bool laser_on = true) const {
        double total = 0.0;
        for (const auto& j : jumps_) {
            if (!laser_on && j.channel == Channel::pump) continue;
            if (j.from == level) total += j.rate;
        }
        return total;
    }

private:
    friend NVModel build_model(const ModelParams& params);

    NVModel(const ModelParams& params, const Vector8d& energies, std::vector<JumpOperator> jumps)
        : params_(params), energies_(energies), jumps_(std::move(jumps)) {}

    ModelParams params_;
    Vector8d energies_;
    std::vector<JumpOperator> jumps_;
};

inline Vector8d level_energies(const ModelParams& p) {
    const double zeeman = p.gyro * p.b_z;
    Vector8d e;
    e[0] = 0.0;
    e[1] = p.d_g + zeeman;
    e[2] = p.d_g - zeeman;
    e[3] = p.delta_eg;
    if (p.excited_zeeman == ExcitedZeeman::physical_sz) {
        e[4] = p.delta_eg + p.d_e + zeeman;
        e[5] = p.delta_eg + p.d_e - zeeman;
    } else {
        e[4] = p.delta_eg + p.d_e + zeeman;
        e[5] = p.delta_eg + p.d_e + zeeman;
    }
    e[6] = p.delta_ig;
    e[7] = p.delta_ig + p.d_i;
    return e;
}

inline NVModel build_model(const ModelParams& params) {
    params.validate();

    const double pump = params.gamma_p * params.gamma;
    const auto& nsc = params.gamma_nsc;
    auto jump = [](int from, int to, double rate, Channel c) {
        return JumpOperator{Level(from), Level(to), rate, c};
    };

    std::vector<JumpOperator> jumps{
        // pump, L1..L3
        jump(1, 4, pump, Channel::pump),
        jump(2, 5, pump, Channel::pump),
        jump(3, 6, pump, Channel::pump),
        // spin-conserving decay, L4..L6
        jump(4, 1, params.gamma, Channel::spin_conserving),
        jump(5, 2, params.gamma, Channel::spin_conserving),
        jump(6, 3, params.gamma, Channel::spin_conserving),
        // intersystem crossing, L7..L13
        jump(4, 8, params.kappa_ei[0], Channel::isc),
        jump(5, 8, params.kappa_ei[1], Channel::isc),
        jump(6, 8, params.kappa_ei[2], Channel::isc),
        jump(8, 7, params.kappa_i, Channel::isc),
        jump(7, 1, params.kappa_ig[0], Channel::isc),
        jump(7, 2, params.kappa_ig[1], Channel::isc),
        jump(7, 3, params.kappa_ig[2], Channel::isc),
        // non-spin-conserving decay, L14..L17
        jump(4, 2, nsc.g42, Channel::non_spin_conserving),
        jump(4, 3, nsc.g43, Channel::non_spin_conserving),
        jump(5, 1, nsc.g51, Channel::non_spin_conserving),
        jump(6, 1, nsc.g61, Channel::non_spin_conserving),
    };

    return NVModel(params, level_energies(params), std::move(jumps));
}

// E_i - E_j
inline double energy_gap(const NVModel& model, Level i, Level j) {
    return model.energy(i) - model.energy(j);
}

}  // namespace nvpump
