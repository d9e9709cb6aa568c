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


#ifndef CCBS_SRC_LEAST_SQUARES_HPP
#define CCBS_SRC_LEAST_SQUARES_HPP

#include <string>
#include <utility>

#include <unsupported/Eigen/LevenbergMarquardt>

#include "ccbs/common.hpp"

namespace ccbs::detail {

struct LeastSquaresOptions {
    int max_evaluations = 2000;
    double xtol = 1e-13;
    double ftol = 1e-13;
    double gtol = 0.0;
};

struct LeastSquaresResult {
    RealVector x;
    RealVector residuals;
    RealMatrix jacobian;
    double cost = 0.0;
    double initial_cost = 0.0;
    int iterations = 0;
    bool converged = false;
    std::string status;
};

inline const char* status_name(Eigen::LevenbergMarquardtSpace::Status s)
{
    using namespace Eigen::LevenbergMarquardtSpace;
    switch (s) {
    case RelativeReductionTooSmall: return "relative-reduction";
    case RelativeErrorTooSmall: return "relative-error";
    case RelativeErrorAndReductionTooSmall: return "relative-error-and-reduction";
    case CosinusTooSmall: return "gradient-orthogonal";
    case TooManyFunctionEvaluation: return "too-many-evaluations";
    case FtolTooSmall: return "ftol-limit";
    case XtolTooSmall: return "xtol-limit";
    case GtolTooSmall: return "gtol-limit";
    case ImproperInputParameters: return "improper-input";
    default: return "other";
    }
}

template <class Residual, class Jacobian>
struct LmFunctor : Eigen::DenseFunctor<double> {
    LmFunctor(int n_params, int n_residuals, Residual r, Jacobian j)
        : Eigen::DenseFunctor<double>(n_params, n_residuals), residual(std::move(r)), jacobian(std::move(j))
    {
    }
    int operator()(const InputType& x, ValueType& f) const
    {
        residual(x, f);
        return 0;
    }
    int df(const InputType& x, JacobianType& jac) const
    {
        jacobian(x, jac);
        return 0;
    }
    Residual residual;
    Jacobian jacobian;
};

/// Minimises ||r(x)||^2. residual(x, r) fills r (size n_residuals);
/// jacobian(x, J) fills dr/dx.
template <class Residual, class Jacobian>
LeastSquaresResult least_squares(Residual residual, Jacobian jacobian, RealVector x0, int n_residuals,
                                 const LeastSquaresOptions& options = {})
{
    const int n = static_cast<int>(x0.size());
    if (n_residuals < n) {
        throw DomainError("least squares needs at least as many residuals as parameters");
    }
    LmFunctor<Residual, Jacobian> functor(n, n_residuals, std::move(residual), std::move(jacobian));
    LeastSquaresResult out;
    RealVector r(n_residuals);
    functor(x0, r);
    out.initial_cost = r.squaredNorm();

    Eigen::LevenbergMarquardt<LmFunctor<Residual, Jacobian>> lm(functor);
    lm.setMaxfev(options.max_evaluations);
    lm.setXtol(options.xtol);
    lm.setFtol(options.ftol);
    lm.setGtol(options.gtol);
    const auto status = lm.minimize(x0);

    functor(x0, r);
    out.cost = r.squaredNorm();
    if (!(out.cost <= out.initial_cost)) {
        throw NumericalError("least squares increased the objective");
    }
    out.x = std::move(x0);
    out.residuals = std::move(r);
    out.jacobian.resize(n_residuals, n);
    functor.df(out.x, out.jacobian);
    out.iterations = static_cast<int>(lm.iterations());
    out.status = status_name(status);
    out.converged = status != Eigen::LevenbergMarquardtSpace::TooManyFunctionEvaluation &&
                    status != Eigen::LevenbergMarquardtSpace::ImproperInputParameters;
    return out;
}

} // namespace ccbs::detail

#endif
