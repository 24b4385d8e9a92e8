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

// types.hpp: fixed-size linear algebra aliases and the two state types.

#pragma once

#include <Eigen/Dense>

#include <cmath>
#include <complex>
#include <stdexcept>
#include <string>
#include <vector>

#include "nvpump/errors.hpp"

namespace nvpump {

inline constexpr int kLevels = 8;

using Complex = std::complex<double>;
using Matrix8c = Eigen::Matrix<Complex, kLevels, kLevels>;
using Matrix8d = Eigen::Matrix<double, kLevels, kLevels>;
using Vector8d = Eigen::Matrix<double, kLevels, 1>;
using Vector8c = Eigen::Matrix<Complex, kLevels, 1>;

// Level label n in 1..8. The physical assignment is fixed:
//   1 = G, m_s=0    2,3 = G, m_s=+1/-1
//   4 = E, m_s=0    5,6 = E, m_s=+1/-1
//   7 = I (lower)   8 = I (upper)
class Level {
public:
    constexpr explicit Level(int n) : n_(n) {
        if (n < 1 || n > kLevels) {
            throw std::out_of_range("Level: index must be in 1..8, got " + std::to_string(n));
        }
    }

    constexpr int number() const noexcept { return n_; }
    constexpr int index() const noexcept { return n_ - 1; }

    friend constexpr bool operator==(Level a, Level b) noexcept { return a.n_ == b.n_; }

private:
    int n_;
};

enum class Subspace { ground, excited, intersystem };

constexpr Subspace subspace_of(Level level) noexcept {
    if (level.number() <= 3) return Subspace::ground;
    if (level.number() <= 6) return Subspace::excited;
    return Subspace::intersystem;
}

// Diagonal of the density matrix in the energy basis.
class PopulationVector {
public:
    PopulationVector() : p_(Vector8d::Zero()) {}
    explicit PopulationVector(const Vector8d& p) : p_(p) {}

    static PopulationVector basis(Level level) {
        Vector8d p = Vector8d::Zero();
        p[level.index()] = 1.0;
        return PopulationVector(p);
    }

    // The mixed initial state (|1><1| + |2><2| + |3><3|)/3.
    static PopulationVector uniform_ground() {
        Vector8d p = Vector8d::Zero();
        p.head<3>().setConstant(1.0 / 3.0);
        return PopulationVector(p);
    }

    static PopulationVector uniform() { return PopulationVector(Vector8d::Constant(1.0 / kLevels)); }

    double operator[](Level level) const { return p_[level.index()]; }
    const Vector8d& values() const noexcept { return p_; }

    double total() const { return p_.sum(); }
    double ground() const { return p_.head<3>().sum(); }
    double excited() const { return p_.segment<3>(3).sum(); }
    double intersystem() const { return p_.tail<2>().sum(); }

    bool is_valid(double tol = 1e-10) const {
        if (!p_.allFinite()) return false;
        if (p_.minCoeff() < -1e-12) return false;
        return std::abs(p_.sum() - 1.0) <= tol;
    }

    void validate(double tol = 1e-10) const {
        if (!is_valid(tol)) {
            throw InvalidParameter("populations", "not a probability vector (sum " +
                                                      std::to_string(p_.sum()) + ", min " +
                                                      std::to_string(p_.minCoeff()) + ")");
        }
    }

private:
    Vector8d p_;
};

// Full 8x8 state.
class DensityMatrix {
public:
    DensityMatrix() : rho_(Matrix8c::Zero()) {}
    explicit DensityMatrix(const Matrix8c& rho) : rho_(rho) {}

    static DensityMatrix diagonal(const PopulationVector& p) {
        Matrix8c rho = Matrix8c::Zero();
        rho.diagonal() = p.values().cast<Complex>();
        return DensityMatrix(rho);
    }

    const Matrix8c& matrix() const noexcept { return rho_; }

    PopulationVector populations() const { return PopulationVector(rho_.diagonal().real()); }

    double max_offdiagonal() const {
        double m = 0.0;
        for (int i = 0; i < kLevels; ++i)
            for (int j = 0; j < kLevels; ++j)
                if (i != j) m = std::max(m, std::abs(rho_(i, j)));
        return m;
    }

    double hermiticity_error() const { return (rho_ - rho_.adjoint()).cwiseAbs().maxCoeff(); }

    double min_eigenvalue() const {
        Eigen::SelfAdjointEigenSolver<Matrix8c> es(rho_, Eigen::EigenvaluesOnly);
        return es.eigenvalues().minCoeff();
    }

    bool is_valid() const {
        if (!rho_.allFinite()) return false;
        if (hermiticity_error() >= 1e-12) return false;
        if (std::abs(rho_.trace() - Complex(1.0, 0.0)) > 1e-10) return false;
        return min_eigenvalue() > -1e-10;
    }

private:
    Matrix8c rho_;
};

}  // namespace nvpump
