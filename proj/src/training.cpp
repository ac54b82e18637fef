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

#include <algorithm>
#include <chrono>
#include <cmath>
#include <fstream>
#include <numeric>
#include <stdexcept>

#include "onebit_doa/binary_io.hpp"
#include "onebit_doa/one_bit.hpp"
#include "onebit_doa/parallel.hpp"
#include "onebit_doa/rng.hpp"
#include "onebit_doa/sparse_solver.hpp"

namespace onebit
{

OneBitMeasurement measure_one_bit(const SourceScene &scene, const ArrayConfig &cfg, const TrainingSetOptions &options,
                                  std::uint64_t seed)
{
    OneBitMeasurement out;
    if (options.exact_covariance)
    {
        out.covariance = true_covariance(scene, cfg);
        out.stacked = stack_covariance(out.covariance);
        return out;
    }

    const SnapshotSet snapshots = generate_snapshots(scene, cfg, options.snapshots, seed);
    if (options.dither_policy == DitherPolicy::fixed)
    {
        out.scale = options.dither_scale;
        if (max_component(snapshots) >= out.scale)
            throw DynamicRangeError("snapshot component reaches the fixed dither scale T = " +
                                    std::to_string(out.scale));
    }
    else
    {
        out.scale = pick_dither_scale(snapshots, options.dither_margin);
    }
    const OneBitSet bits = quantize(snapshots, DitherParams{out.scale, seed});
    out.covariance = estimate_covariance(bits).hermitian;
    out.stacked = stack_covariance(out.covariance);
    return out;
}

TrainingSet make_training_set(const ArrayConfig &cfg, const SceneSampler &sampler, const TrainingSetOptions &options,
                              std::uint64_t seed)
{
    cfg.validate();
    if (options.samples < 2)
        throw std::invalid_argument("training set needs at least 2 samples");
    if (options.validation < 1 || options.validation >= options.samples)
        throw std::invalid_argument("validation count must lie in [1, samples)");
    if (!options.exact_covariance && options.snapshots < 1)
        throw std::invalid_argument("snapshot count must be positive");

    const int grid = cfg.grid_size();
    const int rows = 2 * cfg.sensors * cfg.sensors;
    TrainingSet set;
    set.sensors = cfg.sensors;
    set.train_count = options.samples - options.validation;
    set.noise_variance = options.subtract_noise ? sampler.noise_variance : 0.0;
    set.targets.resize(grid, options.samples);
    set.inputs.resize(rows, options.samples);
    set.scales.assign(static_cast<std::size_t>(options.samples), 0.0);
    const Eigen::VectorXd z = noise_offset(cfg.sensors, set.noise_variance);

    parallel_for(static_cast<std::size_t>(options.samples), [&](std::size_t j) {
        const SourceScene scene = sampler.sample(cfg, seed, j);
        const OneBitMeasurement meas = measure_one_bit(scene, cfg, options, derive_seed(seed, StreamTag::sample, j));
        const auto col = static_cast<Eigen::Index>(j);
        set.targets.col(col) = scene.grid_powers(grid);
        set.inputs.col(col) = meas.stacked - z;
        set.scales[j] = meas.scale;
    });
    return set;
}

void write_training_set(std::ostream &os, const TrainingSet &set)
{
    io::write_magic(os, "DSET");
    io::write_u32(os, static_cast<std::uint32_t>(set.size()));
    io::write_u32(os, static_cast<std::uint32_t>(set.targets.rows()));
    io::write_u32(os, static_cast<std::uint32_t>(set.inputs.rows()));
    for (Eigen::Index j = 0; j < set.targets.cols(); ++j)
    {
        for (Eigen::Index l = 0; l < set.targets.rows(); ++l)
            io::write_f64(os, set.targets(l, j));
        for (Eigen::Index r = 0; r < set.inputs.rows(); ++r)
            io::write_f64(os, set.inputs(r, j));
    }
}

TrainingSet read_training_set(std::istream &is, int validation_count)
{
    io::expect_magic(is, "DSET");
    const std::uint32_t samples = io::read_u32(is);
    const std::uint32_t grid = io::read_u32(is);
    const std::uint32_t rows = io::read_u32(is);
    const auto sensors = static_cast<int>(std::lround(std::sqrt(rows / 2.0)));
    if (2u * static_cast<std::uint32_t>(sensors * sensors) != rows)
        throw io::FormatError("dataset measurement length is not of the form 2M^2");
    if (validation_count < 1 || static_cast<std::uint32_t>(validation_count) >= samples)
        throw std::invalid_argument("validation count must lie in [1, samples)");

    TrainingSet set;
    set.sensors = sensors;
    set.train_count = static_cast<int>(samples) - validation_count;
    set.targets.resize(grid, samples);
    set.inputs.resize(rows, samples);
    for (std::uint32_t j = 0; j < samples; ++j)
    {
        for (std::uint32_t l = 0; l < grid; ++l)
            set.targets(l, j) = io::read_f64(is);
        for (std::uint32_t r = 0; r < rows; ++r)
            set.inputs(r, j) = io::read_f64(is);
    }
    return set;
}

void write_training_set(const std::string &path, const TrainingSet &set)
{
    std::ofstream os(path, std::ios::binary);
    if (!os)
        throw std::runtime_error("cannot open " + path + " for writing");
    write_training_set(os, set);
}

TrainingSet read_training_set(const std::string &path, int validation_count)
{
    std::ifstream is(path, std::ios::binary);
    if (!is)
        throw std::runtime_error("cannot open " + path);
    return read_training_set(is, validation_count);
}

namespace
{

struct AdamState
{
    std::vector<Eigen::MatrixXd> m_w, v_w;
    std::vector<double> m_eta, v_eta;
    std::vector<double> scale_w; // step multiplier per layer
    double scale_eta = 1.0;
    long step = 0;

    AdamState(const ListaParams &p, bool relative)
    {
        for (const auto &w : p.weights)
        {
            m_w.push_back(Eigen::MatrixXd::Zero(w.rows(), w.cols()));
            v_w.push_back(Eigen::MatrixXd::Zero(w.rows(), w.cols()));
            const double peak = w.size() > 0 ? w.cwiseAbs().maxCoeff() : 0.0;
            scale_w.push_back(relative && peak > 0.0 ? peak : 1.0);
        }
        m_eta.assign(p.thresholds.size(), 0.0);
        v_eta.assign(p.thresholds.size(), 0.0);
        const double eta_peak = *std::max_element(p.thresholds.begin(), p.thresholds.end());
        scale_eta = relative && eta_peak > 0.0 ? eta_peak : 1.0;
    }

    void apply(ListaParams &p, const ListaGradients &g, const TrainOptions &o)
    {
        ++step;
        const double bc1 = 1.0 - std::pow(o.beta1, static_cast<double>(step));
        const double bc2 = 1.0 - std::pow(o.beta2, static_cast<double>(step));
        const double rate = o.learning_rate;
        const double eps = o.epsilon;
        for (std::size_t i = 0; i < p.weights.size(); ++i)
        {
            m_w[i] = o.beta1 * m_w[i] + (1.0 - o.beta1) * g.weights[i];
            v_w[i] = o.beta2 * v_w[i] + (1.0 - o.beta2) * g.weights[i].cwiseAbs2();
            p.weights[i].array() -=
                rate * scale_w[i] * (m_w[i].array() / bc1) / ((v_w[i].array() / bc2).sqrt() + eps);

            m_eta[i] = o.beta1 * m_eta[i] + (1.0 - o.beta1) * g.thresholds[i];
            v_eta[i] = o.beta2 * v_eta[i] + (1.0 - o.beta2) * g.thresholds[i] * g.thresholds[i];
            p.thresholds[i] -= rate * scale_eta * (m_eta[i] / bc1) / (std::sqrt(v_eta[i] / bc2) + eps);
            p.thresholds[i] = std::max(p.thresholds[i], 0.0);
        }
    }
};

// Fisher-Yates with the library's own generator, so the order does not depend on
// the standard library's shuffle implementation.
std::vector<Eigen::Index> epoch_order(Eigen::Index n, std::uint64_t seed, int epoch)
{
    std::vector<Eigen::Index> order(static_cast<std::size_t>(n));
    std::iota(order.begin(), order.end(), Eigen::Index{0});
    Substream rng(seed, StreamTag::shuffle, static_cast<std::uint64_t>(epoch));
    for (std::size_t i = order.size(); i > 1; --i)
    {
        const auto j = static_cast<std::size_t>(rng.uniform() * static_cast<double>(i));
        std::swap(order[i - 1], order[std::min(j, i - 1)]);
    }
    return order;
}

} // namespace

TrainReport train(const TrainingSet &data, const Eigen::MatrixXd &phi, ListaParams init, const TrainOptions &options,
                  const EpochCallback &on_epoch)
{
    init.validate(phi.rows(), phi.cols());
    if (data.train_count < 1 || data.validation_count() < 1)
        throw std::invalid_argument("training needs nonempty training and validation splits");
    if (data.targets.rows() != phi.cols() || data.inputs.rows() != phi.rows())
        throw std::invalid_argument("training set does not match the dictionary");
    if (options.batch_size < 1 || options.epochs < 0 || !(options.learning_rate >= 0.0))
        throw std::invalid_argument("invalid training hyperparameters");

    const Eigen::Index n_train = data.train_count;
    const auto train_targets = data.targets.leftCols(n_train);
    const auto train_inputs = data.inputs.leftCols(n_train);
    const Eigen::MatrixXd val_targets = data.targets.rightCols(data.validation_count());
    const Eigen::MatrixXd val_inputs = data.inputs.rightCols(data.validation_count());

    TrainReport report;
    report.initial_train_loss = lista_loss(init, phi, train_targets, train_inputs);
    report.initial_val_loss = lista_loss(init, phi, val_targets, val_inputs);
    report.params = init;
    double best_val = report.initial_val_loss;

    ListaParams params = std::move(init);
    AdamState adam(params, options.relative_steps);
    Eigen::MatrixXd batch_targets, batch_inputs;
    for (int epoch = 1; epoch <= options.epochs; ++epoch)
    {
        const auto start = std::chrono::steady_clock::now();
        const auto order = epoch_order(n_train, options.seed, epoch);
        for (Eigen::Index first = 0; first < n_train; first += options.batch_size)
        {
            const Eigen::Index size = std::min<Eigen::Index>(options.batch_size, n_train - first);
            batch_targets.resize(phi.cols(), size);
            batch_inputs.resize(phi.rows(), size);
            for (Eigen::Index b = 0; b < size; ++b)
            {
                const Eigen::Index j = order[static_cast<std::size_t>(first + b)];
                batch_targets.col(b) = data.targets.col(j);
                batch_inputs.col(b) = data.inputs.col(j);
            }
            const ListaGradients grad = lista_backward(params, phi, batch_targets, batch_inputs);
            adam.apply(params, grad, options);
        }

        const double train_loss = lista_loss(params, phi, train_targets, train_inputs);
        const double val_loss = lista_loss(params, phi, val_targets, val_inputs);
        report.train_loss.push_back(train_loss);
        report.val_loss.push_back(val_loss);
        report.epoch_seconds.push_back(
            std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count());
        if (on_epoch)
            on_epoch(epoch, train_loss, val_loss);

        if (!std::isfinite(train_loss) || train_loss > options.divergence_factor * report.initial_train_loss)
            throw TrainingDiverged("training loss " + std::to_string(train_loss) + " at epoch " +
                                   std::to_string(epoch) + " exceeds " + std::to_string(options.divergence_factor) +
                                   "x the initial loss " + std::to_string(report.initial_train_loss));
        if (val_loss < best_val)
        {
            best_val = val_loss;
            report.best_epoch = epoch;
            report.params = params;
        }
    }
    return report;
}

} // namespace onebit
