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

// Dithered one-bit front end.
//
// Each snapshot is quantized twice, r_i(n) = sgn(x(n) + tau_i(n)), with the real
// and imaginary parts of tau_1, tau_2 i.i.d. uniform on [-T, T]. Because
// E[T sgn(x + tau)] = x whenever |x| < T, the cross product
//
//     R1 = T^2 / N * sum_n r_1(n) r_2(n)^H
//
// is an unbiased estimate of the covariance, and R = (R1 + R1^H) / 2 is its
// Hermitian part. The dither values themselves are never stored.

#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "array_model.hpp"

namespace onebit
{

struct DitherParams
{
    double scale = 1.0; // T
    std::uint64_t seed = 0;
};

// Real and imaginary parts each map to +1 or -1; zero maps to +1.
Complex complex_sign(Complex a);

// Two quantized streams stored as packed bits: per complex sample four bits in
// the order (Re r1, Im r1, Re r2, Im r2), bit value 1 for +1 and 0 for -1, LSB
// first within a byte. Each snapshot starts on a byte boundary.
class OneBitSet
{
  public:
    OneBitSet() = default;
    OneBitSet(int sensors, int count, double scale);

    int sensors() const { return sensors_; }
    int count() const { return count_; }
    double scale() const { return scale_; }

    // stream is 0 or 1.
    Complex sample(int stream, int sensor, int snapshot) const;
    void set_sample(int stream, int sensor, int snapshot, Complex quaternary);

    // Unpacked M x N matrix of one stream, entries in {+-1 +- j}.
    Eigen::MatrixXcd stream(int stream) const;

    std::size_t bytes_per_snapshot() const { return bytes_per_snapshot_; }
    const std::vector<std::uint8_t> &packed() const { return bits_; }
    std::vector<std::uint8_t> &packed() { return bits_; }

    bool operator==(const OneBitSet &) const = default;

  private:
    bool bit(std::size_t snapshot_offset, std::size_t index) const;
    void set_bit(std::size_t snapshot_offset, std::size_t index, bool value);

    int sensors_ = 0;
    int count_ = 0;
    double scale_ = 1.0;
    std::size_t bytes_per_snapshot_ = 0;
    std::vector<std::uint8_t> bits_;
};

// r_i(n) = complex_sign(x(n) + tau_i(n)). Dither for (stream i, snapshot n) comes
// from its own substream of params.seed. Warns when any |Re x| or |Im x| >= T.
OneBitSet quantize(const SnapshotSet &snapshots, const DitherParams &params);

// Largest |Re| or |Im| over all entries.
double max_component(const SnapshotSet &snapshots);

// T = margin * max_component(snapshots), or 1 when the data are all zero.
// Throws std::invalid_argument for an empty set or margin < 1.
double pick_dither_scale(const SnapshotSet &snapshots, double margin = 1.2);

struct CovarianceEstimate
{
    Eigen::MatrixXcd hermitian; // R = (R1 + R1^H) / 2
    Eigen::MatrixXcd raw;       // R1
    int snapshots = 0;
};

// Uses the first `count` snapshots (all of them when count <= 0).
CovarianceEstimate estimate_covariance(const OneBitSet &bits, int count = 0);

// Unquantized sample covariance (1/N) sum x(n) x(n)^H.
Eigen::MatrixXcd sample_covariance(const SnapshotSet &snapshots);

// One-bit file: "OB1B", u32 version, u32 M, u32 N, f64 T, then the packed bits.
inline constexpr std::uint32_t one_bit_file_version = 1;
void write_one_bit(std::ostream &os, const OneBitSet &bits);
OneBitSet read_one_bit(std::istream &is);
void write_one_bit(const std::string &path, const OneBitSet &bits);
OneBitSet read_one_bit(const std::string &path);

} // namespace onebit
