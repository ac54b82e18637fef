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

#include "onebit_doa/one_bit.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <stdexcept>

#include "onebit_doa/binary_io.hpp"
#include "onebit_doa/diagnostics.hpp"
#include "onebit_doa/rng.hpp"

namespace onebit
{

Complex complex_sign(Complex a)
{
    return {a.real() >= 0.0 ? 1.0 : -1.0, a.imag() >= 0.0 ? 1.0 : -1.0};
}

OneBitSet::OneBitSet(int sensors, int count, double scale)
    : sensors_(sensors), count_(count), scale_(scale),
      bytes_per_snapshot_((4 * static_cast<std::size_t>(sensors) + 7) / 8),
      bits_(bytes_per_snapshot_ * static_cast<std::size_t>(count), 0)
{
    if (sensors < 1 || count < 0)
        throw std::invalid_argument("invalid one-bit set dimensions");
    if (!(scale > 0.0) || !std::isfinite(scale))
        throw std::invalid_argument("dither scale must be positive");
}

bool OneBitSet::bit(std::size_t snapshot_offset, std::size_t index) const
{
    return (bits_[snapshot_offset + index / 8] >> (index % 8)) & 1u;
}

void OneBitSet::set_bit(std::size_t snapshot_offset, std::size_t index, bool value)
{
    auto &byte = bits_[snapshot_offset + index / 8];
    const auto mask = static_cast<std::uint8_t>(1u << (index % 8));
    byte = value ? static_cast<std::uint8_t>(byte | mask) : static_cast<std::uint8_t>(byte & ~mask);
}

Complex OneBitSet::sample(int stream, int sensor, int snapshot) const
{
    const std::size_t offset = static_cast<std::size_t>(snapshot) * bytes_per_snapshot_;
    const std::size_t base = 4 * static_cast<std::size_t>(sensor) + 2 * static_cast<std::size_t>(stream);
    return {bit(offset, base) ? 1.0 : -1.0, bit(offset, base + 1) ? 1.0 : -1.0};
}

void OneBitSet::set_sample(int stream, int sensor, int snapshot, Complex quaternary)
{
    const std::size_t offset = static_cast<std::size_t>(snapshot) * bytes_per_snapshot_;
    const std::size_t base = 4 * static_cast<std::size_t>(sensor) + 2 * static_cast<std::size_t>(stream);
    set_bit(offset, base, quaternary.real() >= 0.0);
    set_bit(offset, base + 1, quaternary.imag() >= 0.0);
}

Eigen::MatrixXcd OneBitSet::stream(int stream) const
{
    Eigen::MatrixXcd out(sensors_, count_);
    for (int n = 0; n < count_; ++n)
        for (int m = 0; m < sensors_; ++m)
            out(m, n) = sample(stream, m, n);
    return out;
}

double max_component(const SnapshotSet &snapshots)
{
    double peak = 0.0;
    for (Eigen::Index j = 0; j < snapshots.data.cols(); ++j)
    {
        for (Eigen::Index i = 0; i < snapshots.data.rows(); ++i)
        {
            const Complex v = snapshots.data(i, j);
            peak = std::max({peak, std::abs(v.real()), std::abs(v.imag())});
        }
    }
    return peak;
}

OneBitSet quantize(const SnapshotSet &snapshots, const DitherParams &params)
{
    const double T = params.scale;
    OneBitSet out(snapshots.sensors(), snapshots.count(), T);

    std::size_t violations = 0;
    const StreamTag tags[2] = {StreamTag::dither_1, StreamTag::dither_2};
    for (int n = 0; n < snapshots.count(); ++n)
    {
        for (int i = 0; i < 2; ++i)
        {
            Substream rng(params.seed, tags[i], static_cast<std::uint64_t>(n));
            for (int m = 0; m < snapshots.sensors(); ++m)
            {
                const double tau_re = T * (2.0 * rng.uniform() - 1.0);
                const double tau_im = T * (2.0 * rng.uniform() - 1.0);
                const Complex x = snapshots.data(m, n);
                out.set_sample(i, m, n, complex_sign(x + Complex(tau_re, tau_im)));
            }
        }
        for (int m = 0; m < snapshots.sensors(); ++m)
        {
            const Complex x = snapshots.data(m, n);
            if (std::abs(x.real()) >= T || std::abs(x.imag()) >= T)
                ++violations;
        }
    }
    if (violations > 0)
        warn("dynamic range violated: " + std::to_string(violations) + " samples have a component at or above T = " +
             std::to_string(T));
    return out;
}

double pick_dither_scale(const SnapshotSet &snapshots, double margin)
{
    if (snapshots.data.size() == 0)
        throw std::invalid_argument("cannot pick a dither scale from an empty snapshot set");
    if (!(margin >= 1.0))
        throw std::invalid_argument("dither margin must be at least 1");
    const double T = margin * max_component(snapshots);
    return T > 0.0 ? T : 1.0;
}

CovarianceEstimate estimate_covariance(const OneBitSet &bits, int count)
{
    const int n = (count <= 0) ? bits.count() : count;
    if (n < 1 || n > bits.count())
        throw std::invalid_argument("estimate_covariance needs 1 <= N <= stored snapshot count");

    // Split both streams into real sign matrices, r_i = re_i + j im_i. Then
    //   r1 r2^H = (re1 re2^T + im1 im2^T) + j (im1 re2^T - re1 im2^T).
    // All partial sums are integers, so the result is exact and independent of
    // summation order.
    const int m_count = bits.sensors();
    Eigen::MatrixXd re1(m_count, n), im1(m_count, n), re2(m_count, n), im2(m_count, n);
    for (int j = 0; j < n; ++j)
    {
        for (int m = 0; m < m_count; ++m)
        {
            const Complex a = bits.sample(0, m, j);
            const Complex b = bits.sample(1, m, j);
            re1(m, j) = a.real();
            im1(m, j) = a.imag();
            re2(m, j) = b.real();
            im2(m, j) = b.imag();
        }
    }
    Eigen::MatrixXd real_part = re1 * re2.transpose();
    real_part.noalias() += im1 * im2.transpose();
    Eigen::MatrixXd imag_part = im1 * re2.transpose();
    imag_part.noalias() -= re1 * im2.transpose();

    const double factor = bits.scale() * bits.scale() / n;
    CovarianceEstimate est;
    est.snapshots = n;
    est.raw.resize(m_count, m_count);
    est.raw.real() = factor * real_part;
    est.raw.imag() = factor * imag_part;
    est.hermitian = 0.5 * (est.raw + est.raw.adjoint());
    return est;
}

Eigen::MatrixXcd sample_covariance(const SnapshotSet &snapshots)
{
    if (snapshots.count() < 1)
        throw std::invalid_argument("sample covariance needs at least one snapshot");
    return (snapshots.data * snapshots.data.adjoint()) / static_cast<double>(snapshots.count());
}

void write_one_bit(std::ostream &os, const OneBitSet &bits)
{
    io::write_magic(os, "OB1B");
    io::write_u32(os, one_bit_file_version);
    io::write_u32(os, static_cast<std::uint32_t>(bits.sensors()));
    io::write_u32(os, static_cast<std::uint32_t>(bits.count()));
    io::write_f64(os, bits.scale());
    os.write(reinterpret_cast<const char *>(bits.packed().data()), static_cast<std::streamsize>(bits.packed().size()));
}

OneBitSet read_one_bit(std::istream &is)
{
    io::expect_magic(is, "OB1B");
    const std::uint32_t version = io::read_u32(is);
    if (version != one_bit_file_version)
        throw io::FormatError("unsupported one-bit file version " + std::to_string(version));
    const auto m = static_cast<int>(io::read_u32(is));
    const auto n = static_cast<int>(io::read_u32(is));
    const double T = io::read_f64(is);
    OneBitSet bits(m, n, T);
    io::read_exact(is, reinterpret_cast<char *>(bits.packed().data()), bits.packed().size(), "packed bits");
    return bits;
}

void write_one_bit(const std::string &path, const OneBitSet &bits)
{
    std::ofstream os(path, std::ios::binary);
    if (!os)
        throw std::runtime_error("cannot open " + path + " for writing");
    write_one_bit(os, bits);
}

OneBitSet read_one_bit(const std::string &path)
{
    std::ifstream is(path, std::ios::binary);
    if (!is)
        throw std::runtime_error("cannot open " + path);
    return read_one_bit(is);
}

} // namespace onebit
