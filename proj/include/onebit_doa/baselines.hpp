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

// MUSIC pseudospectrum, a cyclic Jacobi Hermitian eigensolver behind it, and the
// peak picking shared by every spectrum kind.

#include <iosfwd>
#include <string>
#include <string_view>
#include <vector>

#include <Eigen/Dense>

#include "array_model.hpp"

namespace onebit
{

struct HermitianEigen
{
    Eigen::VectorXd values;   // ascending
    Eigen::MatrixXcd vectors; // column i belongs to values(i)
    int sweeps = 0;
};

// Cyclic Jacobi. The input must be Hermitian to within 1e-8 * max|R_ij|; its
// Hermitian part is diagonalized. Throws std::invalid_argument for non-square,
// non-finite or non-Hermitian input.
HermitianEigen hermitian_eig(const Eigen::MatrixXcd &R, int max_sweeps = 100);

enum class SpectrumKind
{
    music,
    lista,
    ista,
};

std::string_view to_string(SpectrumKind kind);

struct Spectrum
{
    std::vector<double> angles_deg;
    std::vector<double> values; // finite, >= 0
    SpectrumKind kind = SpectrumKind::music;
};

// Recovered grid powers as a spectrum; negative entries are clamped to zero.
Spectrum power_spectrum(const Eigen::VectorXd &nu, const ArrayConfig &cfg, SpectrumKind kind);

// 1 / (a^H En En^H a) over the grid, En spanning the eigenvectors of the M - K
// smallest eigenvalues. Throws std::invalid_argument unless 1 <= K < M.
Spectrum music_spectrum(const Eigen::MatrixXcd &R, int sources, const ArrayConfig &cfg);

struct Peak
{
    int index = 0;
    double angle_deg = 0.0;
    double value = 0.0;
};

// Up to `count` strict local maxima, largest first, each at least
// min_separation grid cells from every peak already taken. Equal values prefer
// the lower angle.
std::vector<Peak> find_peaks(const Spectrum &spectrum, int count, int min_separation = 2);

// True when every truth grid index has its own peak within `tolerance` cells
// (one-to-one matching over all assignments).
bool peaks_match(const std::vector<Peak> &peaks, const std::vector<int> &truth_indices, int tolerance = 1);

// For each true DoA, the signed error to its nearest peak in degrees (NaN when
// there are no peaks).
std::vector<double> doa_errors_deg(const std::vector<Peak> &peaks, const std::vector<double> &truth_deg);

// CSV with header "angle_deg,value,kind".
void write_spectrum_csv(std::ostream &os, const Spectrum &spectrum);

} // namespace onebit
