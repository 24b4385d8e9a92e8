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

// errors.hpp: exception hierarchy shared by the library and the CLI.

#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>
#include <utility>

namespace nvpump {

// A model or protocol parameter violates its constraints. `field` names the
// offending parameter so callers can report it verbatim.
class InvalidParameter : public std::invalid_argument {
public:
    InvalidParameter(std::string field, const std::string& what)
        : std::invalid_argument(field + ": " + what), field_(std::move(field)) {}

    const std::string& field() const noexcept { return field_; }

private:
    std::string field_;
};

// Non-finite values, loss of probability, or a propagator that cannot be built.
class NumericalFailure : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

// The adaptive integrator could not make progress. The population path is
// exact at any step size and should be used instead.
class StiffnessError : public NumericalFailure {
public:
    using NumericalFailure::NumericalFailure;
};

// ker(W) has dimension > 1, so the steady state depends on the initial
// condition. Use asymptotic_state() with an explicit p0.
class DegenerateKernel : public NumericalFailure {
public:
    DegenerateKernel(std::size_t dimension, const std::string& what)
        : NumericalFailure(what), dimension_(dimension) {}

    std::size_t dimension() const noexcept { return dimension_; }

private:
    std::size_t dimension_;
};

// A rate matrix with an eigenvalue in the right half plane.
class InvalidGenerator : public NumericalFailure {
public:
    using NumericalFailure::NumericalFailure;
};

// A warning that the caller asked to treat as fatal.
class ConvergenceError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

}  // namespace nvpump
