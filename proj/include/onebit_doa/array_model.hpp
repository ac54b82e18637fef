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

// Uniform linear array model: steering vectors over an angular grid, snapshot
// simulation, the exact covariance and its real-stacked linearization
//
//     [Re vec(R); Im vec(R)] = Phi * nu + z,
//
// where Phi stacks the real and imaginary parts of the Khatri-Rao product
// conj(A) * A of the grid dictionary and z carries sigma^2 on the diagonal
// positions. All angles crossing the interface are in degrees.

#include <complex>
#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

#include <Eigen/Dense>

namespace onebit
{

using Complex = std::complex<double>;

inline constexpr double deg_to_rad(double deg) { return deg * 0.017453292519943295769; }

struct ArrayConfig
{
    int sensors = 8;            // M
    double spacing_ratio = 0.5; // d / lambda
    double grid_start_deg = -60.0;
    double grid_stop_deg = 60.0;
    double grid_step_deg = 1.0;

    // L = floor((stop - start) / step) + 1
    int grid_size() const;
    double grid_angle_deg(int l) const;
    std::vector<double> grid_angles_deg() const;

    // Nearest grid index; an angle exactly half a step between two points maps
    // to the lower index. Angles outside the grid clamp to the end points.
    int nearest_grid_index(double theta_deg) const;

    // Sensor count, step and grid bounds. Warns for spacing_ratio > 0.5.
    void validate_geometry() const;
    // validate_geometry() plus the overcomplete requirement L > M.
    void validate() const;
};

struct SourceScene
{
    std::vector<double> doas_deg; // theta_k
    std::vector<double> powers;   // nu_k, one per source
    double noise_variance = 0.0;  // sigma^2
    std::vector<int> support;     // grid index of each source, same order as doas_deg

    int source_count() const { return static_cast<int>(doas_deg.size()); }

    // Length-L vector holding nu_k at support[k] and zero elsewhere.
    Eigen::VectorXd grid_powers(int grid_size) const;
};

// Validates the scene against the grid and fills in the support.
// Throws std::invalid_argument for K >= M, empty or mismatched lists, angles
// outside the grid, non-positive powers, negative noise variance, or two
// sources landing on the same grid point.
SourceScene make_scene(const ArrayConfig &cfg, std::vector<double> doas_deg, std::vector<double> powers,
                       double noise_variance);

enum class PowerPolicy
{
    unit,    // every source has power 1
    uniform, // powers drawn uniformly from [power_min, power_max]
};

// Draws random scenes for datasets and Monte-Carlo runs.
struct SceneSampler
{
    int sources = 2;
    double angle_min_deg = -60.0;
    double angle_max_deg = 60.0;
    PowerPolicy power_policy = PowerPolicy::unit;
    double power_min = 0.5;
    double power_max = 1.5;
    double min_separation_deg = 0.0;
    bool on_grid = true; // draw DoAs from grid points instead of a continuum
    double noise_variance = 0.1;

    // Deterministic in (seed, index). DoAs are returned in ascending order.
    SourceScene sample(const ArrayConfig &cfg, std::uint64_t seed, std::uint64_t index) const;
};

struct SnapshotSet
{
    Eigen::MatrixXcd data; // M x N, column n is x(n)
    std::uint64_t seed = 0;

    int sensors() const { return static_cast<int>(data.rows()); }
    int count() const { return static_cast<int>(data.cols()); }
};

// a(theta)_m = exp(-j 2 pi m (d/lambda) sin(theta)), m = 0 .. M-1
Eigen::VectorXcd steering_vector(double theta_deg, const ArrayConfig &cfg);

// M x L matrix whose column l is the steering vector of grid angle l.
Eigen::MatrixXcd build_dictionary(const ArrayConfig &cfg);

// x(n) = A_grid p(n) + v(n) with p_l(n) ~ CN(0, nu_l) on the support and
// v(n) ~ CN(0, sigma^2 I). Snapshot n draws from its own substream of seed.
SnapshotSet generate_snapshots(const SourceScene &scene, const ArrayConfig &cfg, int count, std::uint64_t seed);

// R = A_grid diag(nu) A_grid^H + sigma^2 I
Eigen::MatrixXcd true_covariance(const SourceScene &scene, const ArrayConfig &cfg);

// Column-major vec(R), real parts in rows [0, M^2), imaginary parts in [M^2, 2M^2).
Eigen::VectorXd stack_covariance(const Eigen::MatrixXcd &R);
Eigen::MatrixXcd unstack_covariance(const Eigen::VectorXd &stacked, int sensors);

// 2M^2 x L real dictionary [Re(conj(A) * A); Im(conj(A) * A)].
Eigen::MatrixXd real_dictionary(const ArrayConfig &cfg);

// sigma^2 at the real positions of the diagonal entries, zero elsewhere.
Eigen::VectorXd noise_offset(int sensors, double noise_variance);

struct LinearModel
{
    Eigen::MatrixXd dictionary;   // Phi, 2M^2 x L
    Eigen::VectorXd noise_offset; // z
    Eigen::VectorXd measurement;  // b
    Eigen::VectorXd clean;        // c = b - z
    int sensors = 0;

    int grid_size() const { return static_cast<int>(dictionary.cols()); }
    int rows() const { return static_cast<int>(dictionary.rows()); }
};

LinearModel build_linear_model(const ArrayConfig &cfg, double noise_variance, const Eigen::VectorXd &measurement);

// Snapshot file: "OBDA", u32 version, u32 M, u32 N, then M*N (re, im) f64 pairs,
// snapshot after snapshot. Little-endian throughout.
inline constexpr std::uint32_t snapshot_file_version = 1;
void write_snapshots(std::ostream &os, const SnapshotSet &set);
SnapshotSet read_snapshots(std::istream &is);
void write_snapshots(const std::string &path, const SnapshotSet &set);
SnapshotSet read_snapshots(const std::string &path);

} // namespace onebit
