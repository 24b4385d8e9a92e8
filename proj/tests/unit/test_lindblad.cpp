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
#include <random>
#include <vector>

#include "nvpump/errors.hpp"
#include "nvpump/experiments.hpp"
#include "nvpump/lindblad.hpp"

using namespace nvpump;

namespace {

NVModel model_at(double gamma_p) {
    ModelParams p;
    p.gamma_p = gamma_p;
    return build_model(p);
}

Matrix8c random_hermitian(std::mt19937_64& rng) {
    std::normal_distribution<double> n(0.0, 1.0);
    Matrix8c a;
    for (int i = 0; i < kLevels; ++i)
        for (int j = 0; j < kLevels; ++j) a(i, j) = Complex(n(rng), n(rng));
    return (a + a.adjoint()) / 2.0;
}

DensityMatrix random_state(std::mt19937_64& rng) {
    std::normal_distribution<double> n(0.0, 1.0);
    Matrix8c a;
    for (int i = 0; i < kLevels; ++i)
        for (int j = 0; j < kLevels; ++j) a(i, j) = Complex(n(rng), n(rng));
    Matrix8c rho = a * a.adjoint();
    return DensityMatrix(rho / rho.trace());
}

PopulationVector random_populations(std::mt19937_64& rng) {
    std::uniform_real_distribution<double> u(0.0, 1.0);
    Vector8d v;
    for (int i = 0; i < kLevels; ++i) v[i] = u(rng);
    return PopulationVector(v / v.sum());
}

// Reference dissipator straight from the operator definition.
Matrix8c dissipator_by_definition(const Matrix8c& rho, JumpSpan jumps) {
    Matrix8c out = Matrix8c::Zero();
    for (const auto& j : jumps) {
        const Matrix8c l = j.matrix();
        const Matrix8c ldl = l.adjoint() * l;
        out += l * rho * l.adjoint() - 0.5 * (ldl * rho + rho * ldl);
    }
    return out;
}

Matrix8c adjoint_by_definition(const Matrix8c& a, JumpSpan jumps) {
    Matrix8c out = Matrix8c::Zero();
    for (const auto& j : jumps) {
        const Matrix8c l = j.matrix();
        const Matrix8c ldl = l.adjoint() * l;
        out += l.adjoint() * a * l - 0.5 * (ldl * a + a * ldl);
    }
    return out;
}

}  // namespace

TEST(Dissipator, PumpOnGroundState) {
    const NVModel m = model_at(0.5);
    const Matrix8c d = apply_dissipator(DensityMatrix::diagonal(PopulationVector::basis(Level(1))), m.jumps(Channel::pump));
    Matrix8c expected = Matrix8c::Zero();
    expected(3, 3) = 38.5;
    expected(0, 0) = -38.5;
    EXPECT_LT((d - expected).cwiseAbs().maxCoeff(), 1e-12);
}

TEST(Dissipator, EmptyJumpSetGivesZero) {
    const Matrix8c d = apply_dissipator(DensityMatrix::diagonal(PopulationVector::uniform_ground()), JumpSpan{});
    EXPECT_EQ(d.cwiseAbs().maxCoeff(), 0.0);
}

TEST(Dissipator, DecayOutOfLevelFive) {
    const NVModel m = model_at(1.0);
    const Matrix8c d = apply_dissipator(DensityMatrix::diagonal(PopulationVector::basis(Level(5))), m.decay_jumps());
    EXPECT_NEAR(d(1, 1).real(), 77.0, 1e-12);
    EXPECT_NEAR(d(0, 0).real(), 0.25, 1e-12);
    EXPECT_NEAR(d(7, 7).real(), 15.0, 1e-12);
    EXPECT_NEAR(d(4, 4).real(), -92.25, 1e-12);
    EXPECT_NEAR(d.trace().real(), 0.0, 1e-12);
}

TEST(Dissipator, MatchesOperatorDefinition) {
    std::mt19937_64 rng(7);
    const NVModel m = model_at(1.3);
    for (int k = 0; k < 5; ++k) {
        const Matrix8c rho = random_state(rng).matrix();
        const Matrix8c a = random_hermitian(rng);
        EXPECT_LT((apply_dissipator(rho, m.jumps()) - dissipator_by_definition(rho, m.jumps())).cwiseAbs().maxCoeff(),
                  1e-10);
        EXPECT_LT((apply_adjoint_dissipator(a, m.jumps()) - adjoint_by_definition(a, m.jumps())).cwiseAbs().maxCoeff(),
                  1e-10);
    }
}

TEST(Dissipator, AdjointOfIdentityIsZero) {
    const NVModel m = model_at(1.0);
    EXPECT_LT(apply_adjoint_dissipator(Matrix8c::Identity(), m.jumps()).cwiseAbs().maxCoeff(), 1e-12);
}

TEST(Dissipator, AdjointOfHamiltonianGivesPumpPower) {
    const NVModel m = model_at(0.5);
    const Matrix8c rho = DensityMatrix::diagonal(PopulationVector::basis(Level(1))).matrix();
    const Complex v = (rho * apply_adjoint_dissipator(m.hamiltonian(), m.jumps(Channel::pump))).trace();
    EXPECT_NEAR(v.real() / (38.5 * 4.7e8), 1.0, 1e-12);
}

TEST(Dissipator, Adjointness) {
    std::mt19937_64 rng(11);
    const NVModel m = model_at(0.8);
    for (auto c : {Channel::pump, Channel::spin_conserving, Channel::isc, Channel::non_spin_conserving}) {
        for (int k = 0; k < 4; ++k) {
            const Matrix8c a = random_hermitian(rng);
            const Matrix8c rho = random_state(rng).matrix();
            const Complex lhs = (a * apply_dissipator(rho, m.jumps(c))).trace();
            const Complex rhs_v = (rho * apply_adjoint_dissipator(a, m.jumps(c))).trace();
            EXPECT_LT(std::abs(lhs - rhs_v), 1e-10 * std::max(1.0, std::abs(lhs)));
        }
    }
}

TEST(Rhs, CommutatorVanishesOnDiagonalStates) {
    const NVModel m = model_at(1.0);
    const Matrix8c rho = DensityMatrix::diagonal(PopulationVector::uniform()).matrix();
    const Matrix8c full = rhs(rho, m, true);
    const Matrix8c diss = apply_dissipator(rho, m.jumps());
    EXPECT_LT((full - diss).cwiseAbs().maxCoeff(), 1e-12);
}

TEST(Rhs, LaserOffDropsPump) {
    const NVModel m = model_at(1.0);
    const Matrix8c rho = DensityMatrix::diagonal(PopulationVector::uniform_ground()).matrix();
    EXPECT_EQ(rhs(rho, m, false).cwiseAbs().maxCoeff(), 0.0);
    EXPECT_GT(rhs(rho, m, true).cwiseAbs().maxCoeff(), 1.0);
}

TEST(Rhs, VanishesAtSteadyStates) {
    const NVModel m = model_at(1.0);
    const PopulationVector p1 = steady_state(build_rate_matrix(m, true));
    EXPECT_LT(rhs(DensityMatrix::diagonal(p1), m, true).cwiseAbs().maxCoeff(), 1e-8 * m.max_rate());
    const PopulationVector p2 = asymptotic_state(build_rate_matrix(m, false), p1);
    EXPECT_LT(rhs(DensityMatrix::diagonal(p2), m, false).cwiseAbs().maxCoeff(), 1e-8 * m.max_rate());
}

TEST(RateMatrix, MatchesDiagonalOfRhs) {
    std::mt19937_64 rng(3);
    for (bool on : {true, false}) {
        const NVModel m = model_at(1.7);
        const RateMatrix w = build_rate_matrix(m, on);
        EXPECT_TRUE(w.is_valid());
        EXPECT_LT(w.column_sum_error(), 1e-12);
        const PopulationVector p = random_populations(rng);
        const Vector8d via_rhs = rhs(DensityMatrix::diagonal(p), m, on).diagonal().real();
        EXPECT_LT((w.matrix() * p.values() - via_rhs).cwiseAbs().maxCoeff(), 1e-12);
    }
}

TEST(RateMatrix, SpectrumInLeftHalfPlane) {
    for (double g : {0.0, 0.5, 2.0, 5.0})
        for (bool on : {true, false}) {
            const Vector8c ev = spectrum(build_rate_matrix(model_at(g), on));
            EXPECT_LE(ev.real().maxCoeff(), 1e-12);
        }
}

TEST(Evolve, BranchingFromIntersystemLevel) {
    const RateMatrix w = build_rate_matrix(model_at(1.0), false);
    const auto traj = evolve_populations(w, PopulationVector::basis(Level(7)), std::vector<double>{0.0, 200.0}, false);
    for (int n = 1; n <= 3; ++n) EXPECT_NEAR(traj.states[1][Level(n)], 1.0 / 3.0, 1e-10);
}

TEST(Evolve, BranchingFromLevelFour) {
    const RateMatrix w = build_rate_matrix(model_at(1.0), false);
    const auto traj = evolve_populations(w, PopulationVector::basis(Level(4)), std::vector<double>{0.0, 200.0}, false);
    EXPECT_NEAR(traj.states[1][Level(1)], 77.0 / 77.5, 1e-10);
    EXPECT_NEAR(traj.states[1][Level(2)], 0.25 / 77.5, 1e-10);
    EXPECT_NEAR(traj.states[1][Level(3)], 0.25 / 77.5, 1e-10);
}

TEST(Evolve, GroundIsInvariantWithoutPump) {
    const RateMatrix w = build_rate_matrix(model_at(0.0), true);
    const auto traj = evolve_populations(w, PopulationVector::uniform_ground(), linspace(0.0, 50.0, 11));
    for (const auto& p : traj.states)
        EXPECT_LT((p.values() - PopulationVector::uniform_ground().values()).cwiseAbs().maxCoeff(), 1e-14);
}

TEST(Evolve, RejectsDecreasingTimes) {
    const RateMatrix w = build_rate_matrix(model_at(1.0), true);
    EXPECT_THROW(evolve_populations(w, PopulationVector::uniform_ground(), std::vector<double>{0.0, 2.0, 1.0}), InvalidParameter);
}

TEST(Evolve, SteadyStateIsFixedPoint) {
    const RateMatrix w = build_rate_matrix(model_at(1.0), true);
    const PopulationVector p = steady_state(w);
    const auto traj = evolve_populations(w, p, linspace(0.0, 100.0, 21));
    for (const auto& q : traj.states) EXPECT_LT((q.values() - p.values()).cwiseAbs().maxCoeff(), 1e-8);
}

TEST(Evolve, PropagatorFallbackAgreesWithSpectralPath) {
    const RateMatrix w = build_rate_matrix(model_at(1.0), true);
    const Propagator spectral(w);
    const Propagator dense(w, 0.0);  // condition bound forces the matrix exponential
    ASSERT_TRUE(spectral.spectral());
    ASSERT_FALSE(dense.spectral());
    const Vector8d p0 = PopulationVector::uniform_ground().values();
    for (double t : {0.01, 0.5, 3.0})
        EXPECT_LT((spectral.apply(p0, t) - dense.apply(p0, t)).cwiseAbs().maxCoeff(), 1e-10);
}

TEST(EvolveFull, StaysIncoherentAndMatchesReduction) {
    std::mt19937_64 rng(5);
    const std::vector<double> times = linspace(0.0, 5.0, 51);
    for (double g : {0.0, 0.5, 2.0}) {
        const NVModel m = model_at(g);
        const PopulationVector p0 = random_populations(rng);
        const auto full = evolve_full(DensityMatrix::diagonal(p0), m, true, times);
        const auto pops = evolve_populations(build_rate_matrix(m, true), p0, times);
        for (std::size_t i = 0; i < times.size(); ++i) {
            EXPECT_LT(full.states[i].max_offdiagonal(), 1e-10);
            EXPECT_LT((full.states[i].populations().values() - pops.states[i].values()).cwiseAbs().maxCoeff(), 1e-8);
            EXPECT_TRUE(full.states[i].is_valid());
        }
    }
}

TEST(EvolveFull, CoherenceDecaysUnderDissipation) {
    Matrix8c rho = DensityMatrix::diagonal(PopulationVector::uniform_ground()).matrix();
    rho(0, 1) = rho(1, 0) = Complex(0.1, 0.0);
    const auto traj = evolve_full(DensityMatrix(rho), model_at(1.0), true, std::vector<double>{0.0, 0.2});
    EXPECT_LT(traj.states[1].max_offdiagonal(), 0.1);
    EXPECT_TRUE(traj.states[1].is_valid());
}

TEST(EvolveFull, StepUnderflowIsStiffnessError) {
    FullEvolutionOptions opts;
    opts.max_steps = 5;
    EXPECT_THROW(evolve_full(DensityMatrix::diagonal(PopulationVector::uniform_ground()), model_at(1.0), true,
                             std::vector<double>{0.0, 20.0}, opts),
                 StiffnessError);
}

TEST(SteadyState, UniqueWithLaserOn) {
    const RateMatrix w = build_rate_matrix(model_at(2.0), true);
    EXPECT_EQ(kernel_dimension(w), 1u);
    const PopulationVector p = steady_state(w);
    EXPECT_TRUE(p.is_valid());
    EXPECT_LT(ness_residual(w, p), 1e-10);
    EXPECT_GT(p.excited(), p.ground());
}

TEST(SteadyState, LaserOffIsDegenerate) {
    const RateMatrix w = build_rate_matrix(model_at(1.0), false);
    EXPECT_EQ(kernel_dimension(w), 3u);
    try {
        steady_state(w);
        FAIL() << "no exception";
    } catch (const DegenerateKernel& e) {
        EXPECT_EQ(e.dimension(), 3u);
    }
}

TEST(AsymptoticState, MatchesLongEvolution) {
    const NVModel m = model_at(1.0);
    const PopulationVector p1 = steady_state(build_rate_matrix(m, true));
    const RateMatrix off = build_rate_matrix(m, false);
    const PopulationVector p2 = asymptotic_state(off, p1);
    EXPECT_TRUE(p2.is_valid());
    EXPECT_NEAR(p2.intersystem() + p2.excited(), 0.0, 1e-12);
    // slowest non-zero laser-off rate is kappa_IG = 1 MHz
    const auto traj = evolve_populations(off, p1, std::vector<double>{0.0, 1000.0}, false);
    EXPECT_LT((traj.states[1].values() - p2.values()).cwiseAbs().maxCoeff(), 1e-8);
}

TEST(AsymptoticState, RejectsGrowingModes) {
    Matrix8d bad = build_rate_matrix(model_at(1.0), false).matrix();
    bad(0, 0) += 0.5;
    EXPECT_THROW(asymptotic_state(RateMatrix(bad), PopulationVector::uniform_ground()), InvalidGenerator);
}

TEST(PhasedEvolution, ContinuousAcrossSwitch) {
    const NVModel m = model_at(1.0);
    PhasedEvolution ev(PopulationVector::uniform_ground());
    ev.append(m, true, 10.0);
    ev.append(m, false, 20.0);
    EXPECT_EQ(ev.phase_index(10.0), 0u);
    EXPECT_EQ(ev.phase_index(10.0 + 1e-9), 1u);
    const Vector8d left = ev.state_in(0, 10.0).values();
    const Vector8d right = ev.state_in(1, 10.0).values();
    EXPECT_LT((left - right).cwiseAbs().maxCoeff(), 1e-14);
    EXPECT_DOUBLE_EQ(ev.t_end(), 30.0);
}
