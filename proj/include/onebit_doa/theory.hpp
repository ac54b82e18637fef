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

// Error bounds for one-bit covariance recovery and the unrolled solver, and the
// empirical quantities they are checked against.
//
// The covariance estimate satisfies ||R_hat - R||_max <~ T^2 sqrt((log M + t) / N)
// with high probability, and the layer outputs of the tied network obey
//
//     ||nu_i - nu||_2 <= s B exp(-c2 i) + C T^2 M^2 sqrt((log M + t) / N).
//
// Universal constants are not estimated; rates are checked instead.

#include <iosfwd>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "sparse_solver.hpp"

namespace onebit
{

struct CovarianceErrors
{
    double max_norm = 0.0;  // max_ij |R_hat - R|
    double frobenius = 0.0; // sqrt(sum |R_hat - R|^2)
};

// Throws std::invalid_argument on a dimension mismatch.
CovarianceErrors covariance_error_norms(const Eigen::MatrixXcd &R, const Eigen::MatrixXcd &R_hat);

struct BoundParams
{
    double sparsity = 2.0;         // s
    double amplitude = 1.0 / 12.0; // B
    double decay = 0.1;            // c2
    double confidence = 0.01;      // t
    double constant = 2.0;         // C
    double covariance_constant = 0.0; // c1; enters only the success probability, kept for reports
    double scale = 1.0;            // T
    int sensors = 8;               // M
    int snapshots = 10000;         // N

    // Throws std::invalid_argument unless s, B, c2, C, T, M, N > 0 and t >= 0.
    void validate() const;
};

// C T^2 M^2 sqrt((ln M + t) / N), the part of the bound that does not decay.
double bound_floor(const BoundParams &p);

// s B exp(-c2 i) + bound_floor(p)
double layer_error_bound(double layer, const BoundParams &p);

// ||nu_i - nu||_2 for i = 1 .. I.
std::vector<double> per_layer_error_curve(const ListaParams &params, const Eigen::MatrixXd &phi,
                                          const Eigen::VectorXd &truth, const Eigen::VectorXd &c);

// Quantile with linear interpolation between order statistics; q in [0, 1].
double quantile(std::vector<double> values, double q);
double median(std::vector<double> values);

// Least-squares slope of log(y) against log(x).
double log_log_slope(const std::vector<double> &x, const std::vector<double> &y);

struct SweepRow
{
    std::string variable;
    double value = 0.0;
    double median = 0.0;
    double q25 = 0.0;
    double q75 = 0.0;
    double bound = 0.0;
};

// Summarizes samples at one sweep point.
SweepRow summarize(std::string variable, double value, const std::vector<double> &samples, double bound);

// CSV with header "sweep_variable,value,empirical_median,empirical_q25,empirical_q75,bound".
// NaN statistics are written as empty fields.
void write_sweep_csv(std::ostream &os, const std::vector<SweepRow> &rows);

} // namespace onebit
