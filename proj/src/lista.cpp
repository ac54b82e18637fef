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
#include <fstream>
#include <stdexcept>

#include "onebit_doa/binary_io.hpp"
#include "onebit_doa/sparse_solver.hpp"

namespace onebit
{

namespace
{

void check_batch(const ListaParams &params, const Eigen::MatrixXd &phi, const Eigen::MatrixXd &inputs)
{
    params.validate(phi.rows(), phi.cols());
    if (inputs.rows() != phi.rows())
        throw std::invalid_argument("measurement length does not match dictionary rows");
}

// Componentwise soft threshold of a matrix.
Eigen::MatrixXd shrink(const Eigen::MatrixXd &u, double eta)
{
    return u.unaryExpr([eta](double x) {
        const double mag = std::abs(x) - eta;
        return mag > 0.0 ? std::copysign(mag, x) : 0.0;
    });
}

} // namespace

void ListaParams::validate(Eigen::Index rows, Eigen::Index cols) const
{
    if (weights.empty())
        throw std::invalid_argument("LISTA needs at least one layer");
    if (thresholds.size() != weights.size())
        throw std::invalid_argument("one threshold per layer required");
    for (std::size_t i = 0; i < weights.size(); ++i)
    {
        if (weights[i].rows() != rows || weights[i].cols() != cols)
            throw std::invalid_argument("layer " + std::to_string(i) + " weight has wrong dimensions");
        if (!weights[i].allFinite())
            throw std::invalid_argument("layer " + std::to_string(i) + " weight is not finite");
        if (!(thresholds[i] >= 0.0) || !std::isfinite(thresholds[i]))
            throw std::invalid_argument("layer " + std::to_string(i) + " threshold must be finite and >= 0");
    }
}

ListaParams ista_params(const Eigen::MatrixXd &phi, double lambda, int layers)
{
    if (layers < 1)
        throw std::invalid_argument("LISTA needs at least one layer");
    if (!(lambda >= 0.0))
        throw std::invalid_argument("lambda must be nonnegative");
    const double lipschitz = largest_singular_value_sq(phi);
    const double mu = lipschitz > 0.0 ? 1.0 / lipschitz : 1.0;
    ListaParams params;
    params.weights.assign(static_cast<std::size_t>(layers), mu * phi);
    params.thresholds.assign(static_cast<std::size_t>(layers), mu * lambda);
    return params;
}

double default_lambda(const Eigen::MatrixXd &phi, const Eigen::VectorXd &mean_measurement, double fraction)
{
    return fraction * (phi.transpose() * mean_measurement).lpNorm<Eigen::Infinity>();
}

NonFiniteActivation::NonFiniteActivation(int layer)
    : std::runtime_error("non-finite activation in LISTA layer " + std::to_string(layer)), layer_(layer)
{
}

ListaTrace lista_forward(const ListaParams &params, const Eigen::MatrixXd &phi, const Eigen::VectorXd &c)
{
    check_batch(params, phi, c);
    ListaTrace trace;
    trace.outputs.reserve(static_cast<std::size_t>(params.layers()) + 1);
    trace.outputs.push_back(Eigen::VectorXd::Zero(phi.cols()));
    for (int i = 0; i < params.layers(); ++i)
    {
        const Eigen::VectorXd &nu = trace.outputs.back();
        const Eigen::VectorXd residual = c - phi * nu;
        const Eigen::VectorXd pre = nu + params.weights[static_cast<std::size_t>(i)].transpose() * residual;
        trace.outputs.push_back(soft_threshold(pre, params.thresholds[static_cast<std::size_t>(i)]));
    }
    return trace;
}

Eigen::MatrixXd lista_predict(const ListaParams &params, const Eigen::MatrixXd &phi, const Eigen::MatrixXd &inputs)
{
    check_batch(params, phi, inputs);
    Eigen::MatrixXd nu = Eigen::MatrixXd::Zero(phi.cols(), inputs.cols());
    Eigen::MatrixXd residual(inputs.rows(), inputs.cols());
    for (int i = 0; i < params.layers(); ++i)
    {
        residual = inputs;
        residual.noalias() -= phi * nu;
        Eigen::MatrixXd pre = nu;
        pre.noalias() += params.weights[static_cast<std::size_t>(i)].transpose() * residual;
        nu = shrink(pre, params.thresholds[static_cast<std::size_t>(i)]);
    }
    return nu;
}

double lista_loss(const ListaParams &params, const Eigen::MatrixXd &phi, const Eigen::MatrixXd &targets,
                  const Eigen::MatrixXd &inputs)
{
    if (targets.cols() != inputs.cols() || targets.rows() != phi.cols() || inputs.cols() == 0)
        throw std::invalid_argument("targets and inputs must pair up column by column");
    return (lista_predict(params, phi, inputs) - targets).squaredNorm() / static_cast<double>(inputs.cols());
}

ListaGradients lista_backward(const ListaParams &params, const Eigen::MatrixXd &phi, const Eigen::MatrixXd &targets,
                              const Eigen::MatrixXd &inputs)
{
    check_batch(params, phi, inputs);
    if (inputs.cols() == 0)
        throw std::invalid_argument("LISTA backward needs a nonempty batch");
    if (targets.cols() != inputs.cols() || targets.rows() != phi.cols())
        throw std::invalid_argument("targets and inputs must pair up column by column");

    const auto layers = static_cast<std::size_t>(params.layers());
    const double batch = static_cast<double>(inputs.cols());

    // Forward pass, keeping residuals r_i = c - Phi nu_i and pre-activations u_i.
    std::vector<Eigen::MatrixXd> residuals(layers);
    std::vector<Eigen::MatrixXd> pre(layers);
    Eigen::MatrixXd nu = Eigen::MatrixXd::Zero(phi.cols(), inputs.cols());
    for (std::size_t i = 0; i < layers; ++i)
    {
        residuals[i] = inputs;
        residuals[i].noalias() -= phi * nu;
        pre[i] = nu;
        pre[i].noalias() += params.weights[i].transpose() * residuals[i];
        if (!pre[i].allFinite())
            throw NonFiniteActivation(static_cast<int>(i));
        nu = shrink(pre[i], params.thresholds[i]);
    }

    ListaGradients grad;
    const Eigen::MatrixXd error = nu - targets;
    grad.loss = error.squaredNorm() / batch;
    grad.weights.resize(layers);
    grad.thresholds.assign(layers, 0.0);

    // upstream = dLoss / d nu_{i+1}
    Eigen::MatrixXd upstream = (2.0 / batch) * error;
    for (std::size_t k = layers; k-- > 0;)
    {
        const double eta = params.thresholds[k];
        Eigen::MatrixXd d_pre(upstream.rows(), upstream.cols());
        double d_eta = 0.0;
        for (Eigen::Index col = 0; col < upstream.cols(); ++col)
        {
            for (Eigen::Index row = 0; row < upstream.rows(); ++row)
            {
                const double u = pre[k](row, col);
                if (std::abs(u) > eta)
                {
                    d_pre(row, col) = upstream(row, col);
                    d_eta -= (u > 0.0 ? 1.0 : -1.0) * upstream(row, col);
                }
                else
                {
                    d_pre(row, col) = 0.0;
                }
            }
        }
        grad.thresholds[k] = d_eta;
        grad.weights[k].noalias() = residuals[k] * d_pre.transpose();

        if (k == 0)
            break; // nu_0 is fixed at zero
        // u_k = nu_k + W_k^T (c - Phi nu_k)  =>  d nu_k = d_pre - Phi^T (W_k d_pre)
        const Eigen::MatrixXd d_residual = params.weights[k] * d_pre;
        upstream = d_pre;
        upstream.noalias() -= phi.transpose() * d_residual;
    }
    return grad;
}

void write_checkpoint(std::ostream &os, const ListaParams &params, int sensors)
{
    if (params.weights.empty())
        throw std::invalid_argument("cannot write an empty checkpoint");
    const Eigen::Index rows = 2 * static_cast<Eigen::Index>(sensors) * sensors;
    params.validate(rows, params.weights.front().cols());
    io::write_magic(os, "LSTA");
    io::write_u32(os, checkpoint_version);
    io::write_u32(os, static_cast<std::uint32_t>(params.layers()));
    io::write_u32(os, static_cast<std::uint32_t>(sensors));
    io::write_u32(os, static_cast<std::uint32_t>(params.weights.front().cols()));
    for (std::size_t i = 0; i < params.weights.size(); ++i)
    {
        const Eigen::MatrixXd &w = params.weights[i];
        for (Eigen::Index r = 0; r < w.rows(); ++r)
            for (Eigen::Index c = 0; c < w.cols(); ++c)
                io::write_f64(os, w(r, c));
        io::write_f64(os, params.thresholds[i]);
    }
}

ListaParams read_checkpoint(std::istream &is, int *sensors)
{
    io::expect_magic(is, "LSTA");
    const std::uint32_t version = io::read_u32(is);
    if (version != checkpoint_version)
        throw io::FormatError("unsupported checkpoint version " + std::to_string(version));
    const std::uint32_t layers = io::read_u32(is);
    const std::uint32_t m = io::read_u32(is);
    const std::uint32_t grid = io::read_u32(is);
    const Eigen::Index rows = 2 * static_cast<Eigen::Index>(m) * m;
    ListaParams params;
    for (std::uint32_t i = 0; i < layers; ++i)
    {
        Eigen::MatrixXd w(rows, grid);
        for (Eigen::Index r = 0; r < rows; ++r)
            for (Eigen::Index c = 0; c < static_cast<Eigen::Index>(grid); ++c)
                w(r, c) = io::read_f64(is);
        params.weights.push_back(std::move(w));
        params.thresholds.push_back(io::read_f64(is));
    }
    params.validate(rows, grid);
    if (sensors)
        *sensors = static_cast<int>(m);
    return params;
}

void write_checkpoint(const std::string &path, const ListaParams &params, int sensors)
{
    std::ofstream os(path, std::ios::binary);
    if (!os)
        throw std::runtime_error("cannot open " + path + " for writing");
    write_checkpoint(os, params, sensors);
}

ListaParams read_checkpoint(const std::string &path, int *sensors)
{
    std::ifstream is(path, std::ios::binary);
    if (!is)
        throw std::runtime_error("cannot open " + path);
    return read_checkpoint(is, sensors);
}

} // namespace onebit
