// SPDX-License-Identifier: Apache-2.0
//
// onebit-doa: direction-of-arrival estimation from dithered one-bit array data
// Copyright (C) 2026 The onebit-doa Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
// http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.
// ------------------------------------------------------------------------

#include <cmath>
#include <stdexcept>

#include "onebit_doa/sparse_solver.hpp"

namespace onebit
{

Eigen::VectorXd soft_threshold(const Eigen::VectorXd &x, double eta)
{
    if (!(eta >= 0.0))
        throw std::invalid_argument("soft threshold requires eta >= 0");
    Eigen::VectorXd out(x.size());
    for (Eigen::Index i = 0; i < x.size(); ++i)
    {
        const double mag = std::abs(x(i)) - eta;
        out(i) = mag > 0.0 ? std::copysign(mag, x(i)) : 0.0;
    }
    return out;
}

double largest_singular_value_sq(const Eigen::MatrixXd &phi, int max_iterations, double tolerance)
{
    if (phi.size() == 0)
        throw std::invalid_argument("empty dictionary");
    Eigen::VectorXd v = Eigen::VectorXd::Ones(phi.cols()).normalized();
    double estimate = 0.0;
    for (int it = 0; it < max_iterations; ++it)
    {
        const Eigen::VectorXd w = phi.transpose() * (phi * v);
        const double next = w.norm();
        if (next == 0.0)
            return 0.0;
        v = w / next;
        if (std::abs(next - estimate) <= tolerance * next)
            return next;
        estimate = next;
    }
    return estimate;
}

double lasso_objective(const Eigen::MatrixXd &phi, const Eigen::VectorXd &c, const Eigen::VectorXd &nu, double lambda)
{
    return 0.5 * (c - phi * nu).squaredNorm() + lambda * nu.lpNorm<1>();
}

IstaResult ista_solve(const Eigen::MatrixXd &phi, const Eigen::VectorXd &c, double lambda, int iterations, bool record)
{
    if (c.size() != phi.rows())
        throw std::invalid_argument("measurement length does not match dictionary rows");
    if (!phi.allFinite() || !c.allFinite())
        throw std::invalid_argument("ISTA inputs must be finite");
    if (!(lambda >= 0.0) || iterations < 0)
        throw std::invalid_argument("ISTA needs lambda >= 0 and a nonnegative iteration count");

    IstaResult result;
    const double lipschitz = largest_singular_value_sq(phi);
    result.step = lipschitz > 0.0 ? 1.0 / lipschitz : 1.0;
    const double mu = result.step;

    Eigen::VectorXd nu = Eigen::VectorXd::Zero(phi.cols());
    if (record)
    {
        result.iterates.reserve(static_cast<std::size_t>(iterations));
        result.objective.reserve(static_cast<std::size_t>(iterations) + 1);
        result.objective.push_back(lasso_objective(phi, c, nu, lambda));
    }
    for (int t = 0; t < iterations; ++t)
    {
        const Eigen::VectorXd residual = c - phi * nu;
        nu = soft_threshold(nu + mu * (phi.transpose() * residual), mu * lambda);
        if (record)
        {
            result.iterates.push_back(nu);
            result.objective.push_back(lasso_objective(phi, c, nu, lambda));
        }
    }
    result.solution = std::move(nu);
    return result;
}

IstaResult ista_solve(const LinearModel &model, const Eigen::VectorXd &c, double lambda, int iterations, bool record)
{
    if (!model.noise_offset.allFinite())
        throw std::invalid_argument("ISTA inputs must be finite");
    return ista_solve(model.dictionary, c, lambda, iterations, record);
}

} // namespace onebit
