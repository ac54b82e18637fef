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

#include "onebit_doa/theory.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>
#include <ostream>
#include <stdexcept>

namespace onebit
{

CovarianceErrors covariance_error_norms(const Eigen::MatrixXcd &R, const Eigen::MatrixXcd &R_hat)
{
    if (R.rows() != R_hat.rows() || R.cols() != R_hat.cols())
        throw std::invalid_argument("covariance matrices differ in size");
    const Eigen::MatrixXcd diff = R_hat - R;
    CovarianceErrors e;
    if (diff.size() == 0)
        return e;
    e.max_norm = diff.cwiseAbs().maxCoeff();
    e.frobenius = diff.norm();
    return e;
}

void BoundParams::validate() const
{
    if (!(sparsity > 0.0 && amplitude > 0.0 && decay > 0.0 && constant > 0.0 && scale > 0.0))
        throw std::invalid_argument("bound parameters s, B, c2, C and T must be positive");
    if (!(confidence >= 0.0))
        throw std::invalid_argument("bound parameter t must be nonnegative");
    if (sensors < 1 || snapshots < 1)
        throw std::invalid_argument("bound needs M >= 1 and N >= 1");
}

double bound_floor(const BoundParams &p)
{
    p.validate();
    const double m = p.sensors;
    return p.constant * p.scale * p.scale * m * m * std::sqrt((std::log(m) + p.confidence) / p.snapshots);
}

double layer_error_bound(double layer, const BoundParams &p)
{
    return p.sparsity * p.amplitude * std::exp(-p.decay * layer) + bound_floor(p);
}

std::vector<double> per_layer_error_curve(const ListaParams &params, const Eigen::MatrixXd &phi,
                                          const Eigen::VectorXd &truth, const Eigen::VectorXd &c)
{
    const ListaTrace trace = lista_forward(params, phi, c);
    if (truth.size() != phi.cols())
        throw std::invalid_argument("truth length does not match the grid");
    std::vector<double> curve;
    curve.reserve(static_cast<std::size_t>(params.layers()));
    for (std::size_t i = 1; i < trace.outputs.size(); ++i)
        curve.push_back((trace.outputs[i] - truth).norm());
    return curve;
}

double quantile(std::vector<double> values, double q)
{
    if (values.empty())
        return std::numeric_limits<double>::quiet_NaN();
    std::sort(values.begin(), values.end());
    const double pos = std::clamp(q, 0.0, 1.0) * static_cast<double>(values.size() - 1);
    const auto lo = static_cast<std::size_t>(std::floor(pos));
    const auto hi = std::min(lo + 1, values.size() - 1);
    const double frac = pos - static_cast<double>(lo);
    return values[lo] + frac * (values[hi] - values[lo]);
}

double median(std::vector<double> values) { return quantile(std::move(values), 0.5); }

double log_log_slope(const std::vector<double> &x, const std::vector<double> &y)
{
    if (x.size() != y.size() || x.size() < 2)
        throw std::invalid_argument("slope needs at least two paired points");
    const auto n = static_cast<double>(x.size());
    double sx = 0, sy = 0, sxx = 0, sxy = 0;
    for (std::size_t i = 0; i < x.size(); ++i)
    {
        const double lx = std::log(x[i]);
        const double ly = std::log(y[i]);
        sx += lx;
        sy += ly;
        sxx += lx * lx;
        sxy += lx * ly;
    }
    return (n * sxy - sx * sy) / (n * sxx - sx * sx);
}

SweepRow summarize(std::string variable, double value, const std::vector<double> &samples, double bound)
{
    SweepRow row;
    row.variable = std::move(variable);
    row.value = value;
    row.median = quantile(samples, 0.5);
    row.q25 = quantile(samples, 0.25);
    row.q75 = quantile(samples, 0.75);
    row.bound = bound;
    return row;
}

void write_sweep_csv(std::ostream &os, const std::vector<SweepRow> &rows)
{
    auto field = [](double v) {
        if (std::isnan(v))
            return std::string();
        char buf[32];
        std::snprintf(buf, sizeof(buf), "%.17g", v);
        return std::string(buf);
    };
    os << "sweep_variable,value,empirical_median,empirical_q25,empirical_q75,bound\n";
    for (const SweepRow &r : rows)
        os << r.variable << ',' << field(r.value) << ',' << field(r.median) << ',' << field(r.q25) << ','
           << field(r.q75) << ',' << field(r.bound) << '\n';
}

} // namespace onebit
