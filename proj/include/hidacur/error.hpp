/*
   Copyright 2026 The hidacur Authors

   Licensed under the Apache License, Version 2.0 (the "License");
   you may not use this file except in compliance with the License.
   You may obtain a copy of the License at

       http://www.apache.org/licenses/LICENSE-2.0

   Unless required by applicable law or agreed to in writing, software
   distributed under the License is distributed on an "AS IS" BASIS,
   WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
   See the License for the specific language governing permissions and
   limitations under the License.
*/

#pragma once

#include <stdexcept>
#include <string>

namespace hidacur {

/// Base class of every error raised by the library.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Argument outside the mathematical domain of an operation.
class DomainError : public Error {
public:
    using Error::Error;
};

/// Parameter inside the domain but outside the supported range.
class UnsupportedParameter : public Error {
public:
    using Error::Error;
};

/// The requested object does not exist as a Hida distribution
/// (stochastic current at x = 0 in dimension d > 1).
class NonexistenceError : public Error {
public:
    using Error::Error;
};

/// Adaptive quadrature ran out of its evaluation budget.
class BudgetExceeded : public Error {
public:
    BudgetExceeded(const std::string& what, double best_estimate, double error_estimate)
        : Error(what), best_estimate_(best_estimate), error_estimate_(error_estimate)
    {
    }

    double best_estimate() const noexcept { return best_estimate_; }
    double error_estimate() const noexcept { return error_estimate_; }

private:
    double best_estimate_;
    double error_estimate_;
};

/// The integrand returned NaN or infinity.
class IntegrandFailure : public Error {
public:
    using Error::Error;
};

/// Finite-difference derivative estimates disagree beyond tolerance.
class UnstableDerivative : public Error {
public:
    using Error::Error;
};

/// Malformed experiment configuration.
class ConfigError : public Error {
public:
    using Error::Error;
};

} // namespace hidacur
