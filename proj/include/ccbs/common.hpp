/*
 * Copyright 2026 The ccbs Authors
 *
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 *     http://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */


#ifndef CCBS_COMMON_HPP
#define CCBS_COMMON_HPP

#include <cmath>
#include <complex>
#include <stdexcept>
#include <string>

#include <Eigen/Dense>

namespace ccbs {

using Complex = std::complex<double>;
using ComplexMatrix = Eigen::MatrixXcd;
using RealMatrix = Eigen::MatrixXd;
using ComplexVector = Eigen::VectorXcd;
using RealVector = Eigen::VectorXd;

inline constexpr double kPi = 3.14159265358979323846;

/// Base class of every error raised by the library.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Invalid configuration or violated precondition on user-supplied input.
class ConfigError : public Error {
public:
    using Error::Error;
};

/// Argument outside the mathematical domain of an operation.
class DomainError : public Error {
public:
    using Error::Error;
};

/// Problem size beyond what an algorithm supports.
class CapacityError : public Error {
public:
    using Error::Error;
};

/// Not enough data to determine the requested quantity.
class UnderdeterminedError : public Error {
public:
    using Error::Error;
};

/// Measured data incompatible with any model instance.
class InconsistentDataError : public Error {
public:
    using Error::Error;
};

/// Iterative fit failed to converge.
class FitError : public Error {
public:
    using Error::Error;
};

/// Numerical result violates a guaranteed invariant (e.g. unitarity).
class NumericalError : public Error {
public:
    using Error::Error;
};

/// Wraps an angle into (-pi, pi].
inline double wrap_phase(double angle)
{
    double wrapped = std::remainder(angle, 2.0 * kPi);
    if (wrapped <= -kPi) {
        wrapped += 2.0 * kPi;
    }
    return wrapped;
}

} // namespace ccbs

#endif
