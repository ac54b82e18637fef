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

#include "onebit_doa/array_model.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numbers>
#include <random>
#include <stdexcept>

#include "onebit_doa/binary_io.hpp"
#include "onebit_doa/diagnostics.hpp"
#include "onebit_doa/rng.hpp"

namespace onebit
{

int ArrayConfig::grid_size() const
{
    // The small slack keeps e.g. (60 - -60) / 1 from landing just below 120.
    return static_cast<int>(std::floor((grid_stop_deg - grid_start_deg) / grid_step_deg + 1e-9)) + 1;
}

double ArrayConfig::grid_angle_deg(int l) const { return grid_start_deg + l * grid_step_deg; }

std::vector<double> ArrayConfig::grid_angles_deg() const
{
    std::vector<double> out(static_cast<std::size_t>(grid_size()));
    for (int l = 0; l < grid_size(); ++l)
        out[static_cast<std::size_t>(l)] = grid_angle_deg(l);
    return out;
}

int ArrayConfig::nearest_grid_index(double theta_deg) const
{
    const double u = (theta_deg - grid_start_deg) / grid_step_deg;
    const int l = static_cast<int>(std::ceil(u - 0.5));
    return std::clamp(l, 0, grid_size() - 1);
}

void ArrayConfig::validate_geometry() const
{
    if (sensors < 2)
        throw std::invalid_argument("array needs at least 2 sensors");
    if (!(spacing_ratio > 0.0) || !std::isfinite(spacing_ratio))
        throw std::invalid_argument("spacing_ratio must be positive");
    if (!(grid_step_deg > 0.0) || !std::isfinite(grid_step_deg))
        throw std::invalid_argument("grid_step_deg must be positive");
    if (!std::isfinite(grid_start_deg) || !std::isfinite(grid_stop_deg) || grid_stop_deg < grid_start_deg)
        throw std::invalid_argument("grid_stop_deg must not be below grid_start_deg");
    if (grid_start_deg < -90.0 || grid_stop_deg > 90.0)
        throw std::invalid_argument("grid must lie within [-90, 90] degrees");
    if (spacing_ratio > 0.5)
        warn("spacing_ratio " + std::to_string(spacing_ratio) + " > 0.5 allows grating lobes");
}

void ArrayConfig::validate() const
{
    validate_geometry();
    if (grid_size() <= sensors)
        throw std::invalid_argument("grid must be overcomplete: L = " + std::to_string(grid_size()) +
                                    " is not greater than M = " + std::to_string(sensors));
}

Eigen::VectorXd SourceScene::grid_powers(int grid_size) const
{
    Eigen::VectorXd nu = Eigen::VectorXd::Zero(grid_size);
    for (std::size_t k = 0; k < support.size(); ++k)
        nu(support[k]) = powers[k];
    return nu;
}

SourceScene make_scene(const ArrayConfig &cfg, std::vector<double> doas_deg, std::vector<double> powers,
                       double noise_variance)
{
    cfg.validate_geometry();
    const std::size_t k = doas_deg.size();
    if (k == 0)
        throw std::invalid_argument("scene has no sources");
    if (powers.size() != k)
        throw std::invalid_argument("one power per source required");
    if (static_cast<int>(k) >= cfg.sensors)
        throw std::invalid_argument("source count K must be below sensor count M");
    if (!(noise_variance >= 0.0) || !std::isfinite(noise_variance))
        throw std::invalid_argument("noise variance must be nonnegative");

    SourceScene scene;
    scene.noise_variance = noise_variance;
    scene.support.reserve(k);
    for (std::size_t i = 0; i < k; ++i)
    {
        if (!(doas_deg[i] >= cfg.grid_start_deg && doas_deg[i] <= cfg.grid_stop_deg))
            throw std::invalid_argument("DoA " + std::to_string(doas_deg[i]) + " outside the grid");
        if (!(powers[i] > 0.0) || !std::isfinite(powers[i]))
            throw std::invalid_argument("source powers must be positive");
        const int l = cfg.nearest_grid_index(doas_deg[i]);
        if (std::find(scene.support.begin(), scene.support.end(), l) != scene.support.end())
            throw std::invalid_argument("two sources map to grid index " + std::to_string(l));
        scene.support.push_back(l);
    }
    scene.doas_deg = std::move(doas_deg);
    scene.powers = std::move(powers);
    return scene;
}

SourceScene SceneSampler::sample(const ArrayConfig &cfg, std::uint64_t seed, std::uint64_t index) const
{
    if (sources < 1)
        throw std::invalid_argument("sampler needs at least one source");
    if (!(angle_max_deg > angle_min_deg))
        throw std::invalid_argument("sampler angle range is empty");

    Substream rng(seed, StreamTag::scene, index);
    std::vector<int> candidates;
    if (on_grid)
    {
        for (int l = 0; l < cfg.grid_size(); ++l)
        {
            const double a = cfg.grid_angle_deg(l);
            if (a >= angle_min_deg - 1e-9 && a <= angle_max_deg + 1e-9)
                candidates.push_back(l);
        }
        if (static_cast<int>(candidates.size()) < sources)
            throw std::invalid_argument("sampler angle range holds too few grid points");
    }

    std::vector<double> doas;
    constexpr int max_attempts = 100000;
    for (int attempt = 0;; ++attempt)
    {
        if (attempt == max_attempts)
            throw std::invalid_argument("cannot place sources with the requested minimum separation");
        doas.clear();
        for (int k = 0; k < sources; ++k)
        {
            if (on_grid)
            {
                const auto pick = static_cast<std::size_t>(rng.uniform() * static_cast<double>(candidates.size()));
                doas.push_back(cfg.grid_angle_deg(candidates[std::min(pick, candidates.size() - 1)]));
            }
            else
            {
                doas.push_back(angle_min_deg + (angle_max_deg - angle_min_deg) * rng.uniform());
            }
        }
        std::sort(doas.begin(), doas.end());
        bool ok = true;
        for (std::size_t k = 1; k < doas.size() && ok; ++k)
        {
            const double gap = doas[k] - doas[k - 1];
            ok = gap >= min_separation_deg - 1e-9 &&
                 cfg.nearest_grid_index(doas[k]) != cfg.nearest_grid_index(doas[k - 1]);
        }
        if (ok)
            break;
    }

    std::vector<double> powers(static_cast<std::size_t>(sources), 1.0);
    if (power_policy == PowerPolicy::uniform)
    {
        for (auto &p : powers)
            p = power_min + (power_max - power_min) * rng.uniform();
    }
    return make_scene(cfg, std::move(doas), std::move(powers), noise_variance);
}

Eigen::VectorXcd steering_vector(double theta_deg, const ArrayConfig &cfg)
{
    const double phase_step = -2.0 * std::numbers::pi * cfg.spacing_ratio * std::sin(deg_to_rad(theta_deg));
    Eigen::VectorXcd a(cfg.sensors);
    a(0) = Complex(1.0, 0.0);
    for (int m = 1; m < cfg.sensors; ++m)
        a(m) = std::polar(1.0, phase_step * m);
    return a;
}

Eigen::MatrixXcd build_dictionary(const ArrayConfig &cfg)
{
    cfg.validate_geometry();
    const int grid = cfg.grid_size();
    Eigen::MatrixXcd A(cfg.sensors, grid);
    for (int l = 0; l < grid; ++l)
        A.col(l) = steering_vector(cfg.grid_angle_deg(l), cfg);
    return A;
}

SnapshotSet generate_snapshots(const SourceScene &scene, const ArrayConfig &cfg, int count, std::uint64_t seed)
{
    if (count < 1)
        throw std::invalid_argument("snapshot count must be positive");
    if (scene.source_count() >= cfg.sensors)
        throw std::invalid_argument("source count K must be below sensor count M");
    if (scene.support.size() != scene.doas_deg.size() || scene.powers.size() != scene.doas_deg.size())
        throw std::invalid_argument("scene is inconsistent; build it with make_scene");

    const int m_count = cfg.sensors;
    const int k_count = scene.source_count();
    Eigen::MatrixXcd steering(m_count, k_count);
    std::vector<double> amp(static_cast<std::size_t>(k_count));
    for (int k = 0; k < k_count; ++k)
    {
        steering.col(k) = steering_vector(cfg.grid_angle_deg(scene.support[static_cast<std::size_t>(k)]), cfg);
        amp[static_cast<std::size_t>(k)] = std::sqrt(0.5 * scene.powers[static_cast<std::size_t>(k)]);
    }
    const double noise_amp = std::sqrt(0.5 * scene.noise_variance);

    SnapshotSet out;
    out.seed = seed;
    out.data.resize(m_count, count);
    Eigen::VectorXcd s(k_count);
    for (int n = 0; n < count; ++n)
    {
        Substream rng(seed, StreamTag::snapshots, static_cast<std::uint64_t>(n));
        std::normal_distribution<double> gauss(0.0, 1.0);
        for (int k = 0; k < k_count; ++k)
        {
            const double re = gauss(rng);
            const double im = gauss(rng);
            s(k) = amp[static_cast<std::size_t>(k)] * Complex(re, im);
        }
        auto x = out.data.col(n);
        x.noalias() = steering * s;
        for (int m = 0; m < m_count; ++m)
        {
            const double re = gauss(rng);
            const double im = gauss(rng);
            x(m) += noise_amp * Complex(re, im);
        }
    }
    return out;
}

Eigen::MatrixXcd true_covariance(const SourceScene &scene, const ArrayConfig &cfg)
{
    const int m_count = cfg.sensors;
    Eigen::MatrixXcd R = scene.noise_variance * Eigen::MatrixXcd::Identity(m_count, m_count);
    for (std::size_t k = 0; k < scene.support.size(); ++k)
    {
        const Eigen::VectorXcd a = steering_vector(cfg.grid_angle_deg(scene.support[k]), cfg);
        R.noalias() += scene.powers[k] * (a * a.adjoint());
    }
    return R;
}

Eigen::VectorXd stack_covariance(const Eigen::MatrixXcd &R)
{
    const Eigen::Index m = R.rows();
    const Eigen::Index mm = m * R.cols();
    Eigen::VectorXd b(2 * mm);
    for (Eigen::Index col = 0; col < R.cols(); ++col)
    {
        for (Eigen::Index row = 0; row < m; ++row)
        {
            b(col * m + row) = R(row, col).real();
            b(mm + col * m + row) = R(row, col).imag();
        }
    }
    return b;
}

Eigen::MatrixXcd unstack_covariance(const Eigen::VectorXd &stacked, int sensors)
{
    const Eigen::Index mm = static_cast<Eigen::Index>(sensors) * sensors;
    if (stacked.size() != 2 * mm)
        throw std::invalid_argument("stacked covariance must have length 2M^2");
    Eigen::MatrixXcd R(sensors, sensors);
    for (int col = 0; col < sensors; ++col)
        for (int row = 0; row < sensors; ++row)
            R(row, col) = Complex(stacked(col * sensors + row), stacked(mm + col * sensors + row));
    return R;
}

Eigen::MatrixXd real_dictionary(const ArrayConfig &cfg)
{
    const Eigen::MatrixXcd A = build_dictionary(cfg);
    const int m = cfg.sensors;
    const Eigen::Index mm = static_cast<Eigen::Index>(m) * m;
    Eigen::MatrixXd phi(2 * mm, A.cols());
    for (Eigen::Index l = 0; l < A.cols(); ++l)
    {
        // Column l of conj(A) * A is conj(a_l) kron a_l = vec(a_l a_l^H).
        for (int col = 0; col < m; ++col)
        {
            for (int row = 0; row < m; ++row)
            {
                const Complex v = A(row, l) * std::conj(A(col, l));
                phi(col * m + row, l) = v.real();
                phi(mm + col * m + row, l) = v.imag();
            }
        }
    }
    return phi;
}

Eigen::VectorXd noise_offset(int sensors, double noise_variance)
{
    Eigen::VectorXd z = Eigen::VectorXd::Zero(2 * static_cast<Eigen::Index>(sensors) * sensors);
    for (int m = 0; m < sensors; ++m)
        z(m * (sensors + 1)) = noise_variance;
    return z;
}

LinearModel build_linear_model(const ArrayConfig &cfg, double noise_variance, const Eigen::VectorXd &measurement)
{
    const Eigen::Index rows = 2 * static_cast<Eigen::Index>(cfg.sensors) * cfg.sensors;
    if (measurement.size() != rows)
        throw std::invalid_argument("measurement length " + std::to_string(measurement.size()) +
                                    " does not match 2M^2 = " + std::to_string(rows));
    LinearModel model;
    model.sensors = cfg.sensors;
    model.dictionary = real_dictionary(cfg);
    model.noise_offset = noise_offset(cfg.sensors, noise_variance);
    model.measurement = measurement;
    model.clean = measurement - model.noise_offset;
    return model;
}

void write_snapshots(std::ostream &os, const SnapshotSet &set)
{
    io::write_magic(os, "OBDA");
    io::write_u32(os, snapshot_file_version);
    io::write_u32(os, static_cast<std::uint32_t>(set.sensors()));
    io::write_u32(os, static_cast<std::uint32_t>(set.count()));
    for (int n = 0; n < set.count(); ++n)
    {
        for (int m = 0; m < set.sensors(); ++m)
        {
            io::write_f64(os, set.data(m, n).real());
            io::write_f64(os, set.data(m, n).imag());
        }
    }
}

SnapshotSet read_snapshots(std::istream &is)
{
    io::expect_magic(is, "OBDA");
    const std::uint32_t version = io::read_u32(is);
    if (version != snapshot_file_version)
        throw io::FormatError("unsupported snapshot file version " + std::to_string(version));
    const std::uint32_t m = io::read_u32(is);
    const std::uint32_t n = io::read_u32(is);
    SnapshotSet set;
    set.data.resize(m, n);
    for (std::uint32_t j = 0; j < n; ++j)
    {
        for (std::uint32_t i = 0; i < m; ++i)
        {
            const double re = io::read_f64(is);
            const double im = io::read_f64(is);
            set.data(i, j) = Complex(re, im);
        }
    }
    return set;
}

void write_snapshots(const std::string &path, const SnapshotSet &set)
{
    std::ofstream os(path, std::ios::binary);
    if (!os)
        throw std::runtime_error("cannot open " + path + " for writing");
    write_snapshots(os, set);
}

SnapshotSet read_snapshots(const std::string &path)
{
    std::ifstream is(path, std::ios::binary);
    if (!is)
        throw std::runtime_error("cannot open " + path);
    return read_snapshots(is);
}

} // namespace onebit
