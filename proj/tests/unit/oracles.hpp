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

#pragma once

// Reference implementations used by the tests. They are written from the defining
// formulas with plain loops and share no code with the library.

#include <cmath>
#include <complex>
#include <vector>

#include <Eigen/Dense>

namespace oracle
{

using cd = std::complex<double>;
constexpr double pi = 3.14159265358979323846;

inline cd steering_entry(int m, double theta_deg, double spacing)
{
    const double phase = -2.0 * pi * m * spacing * std::sin(theta_deg * pi / 180.0);
    return {std::cos(phase), std::sin(phase)};
}

// sum_k nu_k a_k a_k^H + sigma2 I
inline Eigen::MatrixXcd covariance(int M, double spacing, const std::vector<double> &angles_deg,
                                   const std::vector<double> &powers, double sigma2)
{
    Eigen::MatrixXcd R = Eigen::MatrixXcd::Zero(M, M);
    for (std::size_t k = 0; k < angles_deg.size(); ++k)
        for (int i = 0; i < M; ++i)
            for (int j = 0; j < M; ++j)
                R(i, j) += powers[k] * steering_entry(i, angles_deg[k], spacing) *
                           std::conj(steering_entry(j, angles_deg[k], spacing));
    for (int i = 0; i < M; ++i)
        R(i, i) += sigma2;
    return R;
}

// [Re vec(R); Im vec(R)] with column-major vec.
inline Eigen::VectorXd stacked(const Eigen::MatrixXcd &R)
{
    const int M = static_cast<int>(R.rows());
    Eigen::VectorXd b(2 * M * M);
    for (int col = 0; col < M; ++col)
        for (int row = 0; row < M; ++row)
        {
            b(row + M * col) = R(row, col).real();
            b(M * M + row + M * col) = R(row, col).imag();
        }
    return b;
}

// Column l: stacked vec(a_l a_l^H).
inline Eigen::MatrixXd real_dictionary(int M, double spacing, const std::vector<double> &grid_deg)
{
    Eigen::MatrixXd phi(2 * M * M, static_cast<Eigen::Index>(grid_deg.size()));
    for (std::size_t l = 0; l < grid_deg.size(); ++l)
        phi.col(static_cast<Eigen::Index>(l)) = stacked(covariance(M, spacing, {grid_deg[l]}, {1.0}, 0.0));
    return phi;
}

// LASSO 1/2 ||c - Phi x||^2 + lambda ||x||_1 by cyclic coordinate descent.
inline Eigen::VectorXd lasso_coordinate_descent(const Eigen::MatrixXd &phi, const Eigen::VectorXd &c, double lambda,
                                                int sweeps)
{
    const Eigen::Index L = phi.cols();
    Eigen::VectorXd x = Eigen::VectorXd::Zero(L);
    Eigen::VectorXd r = c;
    for (int s = 0; s < sweeps; ++s)
    {
        for (Eigen::Index l = 0; l < L; ++l)
        {
            const double nrm = phi.col(l).squaredNorm();
            if (nrm == 0.0)
                continue;
            const double rho = phi.col(l).dot(r) + nrm * x(l);
            const double next = rho > lambda ? (rho - lambda) / nrm : rho < -lambda ? (rho + lambda) / nrm : 0.0;
            r -= (next - x(l)) * phi.col(l);
            x(l) = next;
        }
    }
    return x;
}

} // namespace oracle
