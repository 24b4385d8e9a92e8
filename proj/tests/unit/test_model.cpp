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

#include "nvpump/errors.hpp"
#include "nvpump/model.hpp"

using namespace nvpump;

namespace {

ModelParams with_power(double g) {
    ModelParams p;
    p.gamma_p = g;
    return p;
}

}  // namespace

TEST(Model, SeventeenJumpsInChannelOrder) {
    const NVModel m = build_model(ModelParams{});
    ASSERT_EQ(m.jumps().size(), 17u);
    EXPECT_EQ(m.jumps(Channel::pump).size(), 3u);
    EXPECT_EQ(m.jumps(Channel::spin_conserving).size(), 3u);
    EXPECT_EQ(m.jumps(Channel::isc).size(), 7u);
    EXPECT_EQ(m.jumps(Channel::non_spin_conserving).size(), 4u);
    EXPECT_EQ(m.decay_jumps().size(), 14u);
    for (auto c : {Channel::pump, Channel::spin_conserving, Channel::isc, Channel::non_spin_conserving})
        for (const auto& j : m.jumps(c)) EXPECT_EQ(j.channel, c);
}

TEST(Model, PumpRatesScaleWithPower) {
    const NVModel m = build_model(with_power(0.5));
    for (const auto& j : m.jumps(Channel::pump)) EXPECT_DOUBLE_EQ(j.rate, 38.5);
    EXPECT_EQ(m.jumps(Channel::pump)[0].from, Level(1));
    EXPECT_EQ(m.jumps(Channel::pump)[0].to, Level(4));
}

TEST(Model, ZeroPowerKeepsPumpChannel) {
    const NVModel m = build_model(with_power(0.0));
    ASSERT_EQ(m.jumps(Channel::pump).size(), 3u);
    for (const auto& j : m.jumps(Channel::pump)) EXPECT_EQ(j.rate, 0.0);
}

TEST(Model, LevelFourHasNoIntersystemExit) {
    const NVModel m = build_model(ModelParams{});
    for (const auto& j : m.jumps(Channel::isc))
        if (j.from == Level(4)) {
            EXPECT_EQ(j.rate, 0.0);
        }
    EXPECT_DOUBLE_EQ(m.outflow_rate(Level(4)), 77.5);
}

TEST(Model, OutflowFromFive) {
    EXPECT_DOUBLE_EQ(build_model(ModelParams{}).outflow_rate(Level(5)), 92.25);
}

TEST(Model, JumpMatrixIsSingleEntry) {
    const NVModel m = build_model(with_power(0.5));
    const Matrix8c l = m.jumps()[0].matrix();
    EXPECT_NEAR(l(3, 0).real(), std::sqrt(38.5), 1e-14);
    EXPECT_NEAR(l.cwiseAbs().sum(), std::sqrt(38.5), 1e-14);
}

TEST(Model, LastNonSpinConservingJumpUsesGamma61) {
    ModelParams p;
    p.gamma_nsc.g61 = 0.4;
    const auto nsc = build_model(p).jumps(Channel::non_spin_conserving);
    EXPECT_EQ(nsc[3].from, Level(6));
    EXPECT_EQ(nsc[3].to, Level(1));
    EXPECT_DOUBLE_EQ(nsc[3].rate, 0.4);
    EXPECT_DOUBLE_EQ(nsc[2].rate, 0.25);
}

TEST(Model, EnergiesAtZeroField) {
    const NVModel m = build_model(ModelParams{});
    EXPECT_EQ(m.energy(Level(1)), 0.0);
    EXPECT_DOUBLE_EQ(energy_gap(m, Level(4), Level(1)), 4.7e8);
    EXPECT_DOUBLE_EQ(energy_gap(m, Level(2), Level(1)), 2.87e3);
    EXPECT_EQ(energy_gap(m, Level(1), Level(1)), 0.0);
    EXPECT_DOUBLE_EQ(m.energy(Level(5)), 4.7e8 + 1.4e3);
    EXPECT_DOUBLE_EQ(m.energy(Level(8)), 1.69e8 + 2.88e8);
    EXPECT_DOUBLE_EQ(energy_gap(m, Level(3), Level(7)), -energy_gap(m, Level(7), Level(3)));
}

TEST(Model, HamiltonianIsDiagonal) {
    const NVModel m = build_model(ModelParams{});
    const Matrix8c h = m.hamiltonian();
    for (int i = 0; i < kLevels; ++i)
        for (int j = 0; j < kLevels; ++j)
            if (i != j) {
                EXPECT_EQ(h(i, j), Complex(0.0));
            }
    EXPECT_EQ(h(3, 3).real(), 4.7e8);
}

TEST(Model, ZeemanConventions) {
    ModelParams p;
    p.b_z = 0.01;
    const NVModel phys = build_model(p);
    EXPECT_DOUBLE_EQ(phys.energy(Level(2)) - phys.energy(Level(3)), 2 * 2.8e4 * 0.01);
    EXPECT_DOUBLE_EQ(phys.energy(Level(5)) - phys.energy(Level(6)), 2 * 2.8e4 * 0.01);
    p.excited_zeeman = ExcitedZeeman::literal_sz2;
    const NVModel lit = build_model(p);
    EXPECT_DOUBLE_EQ(lit.energy(Level(5)), lit.energy(Level(6)));
    EXPECT_DOUBLE_EQ(lit.energy(Level(5)), 4.7e8 + 1.4e3 + 2.8e4 * 0.01);
}

TEST(Model, InternalGapsSmallRelativeToOpticalGap) {
    ModelParams p;
    p.b_z = 0.05;
    const NVModel m = build_model(p);
    const double eg = p.delta_eg;
    const double worst = std::max({std::abs(energy_gap(m, Level(4), Level(1)) - eg),
                                   std::abs(energy_gap(m, Level(5), Level(2)) - eg),
                                   std::abs(energy_gap(m, Level(6), Level(3)) - eg)});
    EXPECT_LT(worst / eg, 1e-4);
}

TEST(Model, RejectsNegativeRateNamingField) {
    ModelParams p;
    p.gamma = -1.0;
    try {
        build_model(p);
        FAIL() << "no exception";
    } catch (const InvalidParameter& e) {
        EXPECT_EQ(e.field(), "gamma");
    }
    ModelParams q;
    q.kappa_ei[1] = -2.0;
    try {
        build_model(q);
        FAIL() << "no exception";
    } catch (const InvalidParameter& e) {
        EXPECT_EQ(e.field(), "kappa_ei_5");
    }
    ModelParams r;
    r.d_g = -1.0;
    EXPECT_THROW(build_model(r), InvalidParameter);
}
