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


#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <random>
#include <sstream>

#include <Eigen/Eigenvalues>

#include "oracles.hpp"
#include "onebit_doa/array_model.hpp"
#include "onebit_doa/baselines.hpp"
#include "onebit_doa/one_bit.hpp"
#include "onebit_doa/rng.hpp"

using namespace onebit;
using Catch::Approx;

namespace
{

Eigen::MatrixXcd random_hermitian(int n, Substream &rng)
{
    std::normal_distribution<double> g(0.0, 1.0);
    Eigen::MatrixXcd A(n, n);
    for (Eigen::Index i = 0; i < A.size(); ++i)
        A.data()[i] = Complex(g(rng), g(rng));
    return 0.5 * (A + A.adjoint());
}

Spectrum spectrum_of(std::vector<double> values)
{
    Spectrum s;
    s.values = std::move(values);
    for (std::size_t l = 0; l < s.values.size(); ++l)
        s.angles_deg.push_back(-10.0 + static_cast<double>(l));
    return s;
}

} // namespace

TEST_CASE("hermitian_eig - agrees with a library eigensolver")
{
    Substream rng(2024, StreamTag::test, 0);
    double worst_values = 0.0, worst_residual = 0.0, worst_orth = 0.0;
    for (int t = 0; t < 1000; ++t)
    {
        const int n = 2 + t % 15;
        const Eigen::MatrixXcd A = random_hermitian(n, rng);
        const HermitianEigen mine = hermitian_eig(A);
        const Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> ref(A);
        const double scale = std::max(1.0, A.norm());
        worst_values = std::max(worst_values, (mine.values - ref.eigenvalues()).cwiseAbs().maxCoeff() / scale);
        worst_residual = std::max(
            worst_residual, (A * mine.vectors - mine.vectors * mine.values.asDiagonal()).cwiseAbs().maxCoeff() / scale);
        worst_orth = std::max(worst_orth,
                              (mine.vectors.adjoint() * mine.vectors - Eigen::MatrixXcd::Identity(n, n))
                                  .cwiseAbs()
                                  .maxCoeff());
        for (int i = 1; i < n; ++i)
            REQUIRE(mine.values(i) >= mine.values(i - 1));
    }
    CHECK(worst_values < 1e-10);
    CHECK(worst_residual < 1e-10);
    CHECK(worst_orth < 1e-10);
}

TEST_CASE("hermitian_eig - diagonal inputs and errors")
{
    const HermitianEigen id = hermitian_eig(Eigen::MatrixXcd::Identity(4, 4));
    CHECK(id.values.isOnes(0.0));
    CHECK(id.sweeps == 0);

    Eigen::MatrixXcd d = Eigen::MatrixXcd::Zero(3, 3);
    d(0, 0) = 5.0;
    d(1, 1) = -1.0;
    d(2, 2) = 2.0;
    const HermitianEigen e = hermitian_eig(d);
    CHECK(e.values(0) == -1.0);
    CHECK(e.values(1) == 2.0);
    CHECK(e.values(2) == 5.0);
    CHECK(std::abs(e.vectors(1, 0)) == 1.0);

    CHECK_THROWS_AS(hermitian_eig(Eigen::MatrixXcd(0, 0)), std::invalid_argument);
    CHECK_THROWS_AS(hermitian_eig(Eigen::MatrixXcd::Zero(2, 3)), std::invalid_argument);
    Eigen::MatrixXcd nh = Eigen::MatrixXcd::Identity(2, 2);
    nh(0, 1) = Complex(0.0, 1.0);
    CHECK_THROWS_AS(hermitian_eig(nh), std::invalid_argument);
    nh(0, 1) = NAN;
    CHECK_THROWS_AS(hermitian_eig(nh), std::invalid_argument);
}

TEST_CASE("music - exact covariance peaks at the sources")
{
    ArrayConfig cfg;
    const std::vector<std::vector<double>> cases = {{-20.0, 15.0}, {-45.0, 0.0, 33.0}, {10.0}};
    for (const auto &doas : cases)
    {
        const SourceScene scene = make_scene(cfg, doas, std::vector<double>(doas.size(), 1.0), 0.1);
        const Spectrum s = music_spectrum(true_covariance(scene, cfg), scene.source_count(), cfg);
        CHECK(s.kind == SpectrumKind::music);
        REQUIRE(s.values.size() == 121);
        const auto peaks = find_peaks(s, scene.source_count());
        CHECK(peaks_match(peaks, scene.support, 0));
        for (double v : s.values)
            CHECK((std::isfinite(v) && v >= 0.0));
    }
}

TEST_CASE("music - invariant to covariance scaling")
{
    ArrayConfig cfg;
    const SourceScene scene = make_scene(cfg, {-5.0, 30.0}, {1.0, 0.5}, 0.2);
    // A finite-sample covariance keeps the pseudospectrum away from 1/0.
    const Eigen::MatrixXcd R = sample_covariance(generate_snapshots(scene, cfg, 500, 3));
    const Spectrum a = music_spectrum(R, 2, cfg);
    const Spectrum b = music_spectrum(7.5 * R, 2, cfg);
    for (std::size_t l = 0; l < a.values.size(); ++l)
        CHECK(b.values[l] == Approx(a.values[l]).epsilon(1e-6));
    CHECK_THROWS_AS(music_spectrum(R, 0, cfg), std::invalid_argument);
    CHECK_THROWS_AS(music_spectrum(R, 8, cfg), std::invalid_argument);
    CHECK_THROWS_AS(music_spectrum(R.topLeftCorner(4, 4), 2, cfg), std::invalid_argument);
}

TEST_CASE("power_spectrum - clamps to finite nonnegative values")
{
    ArrayConfig cfg;
    cfg.grid_start_deg = -2.0;
    cfg.grid_stop_deg = 2.0;
    Eigen::VectorXd nu(5);
    nu << 0.5, -0.1, NAN, INFINITY, 2.0;
    const Spectrum s = power_spectrum(nu, cfg, SpectrumKind::lista);
    CHECK(s.values == std::vector<double>{0.5, 0.0, 0.0, 0.0, 2.0});
    CHECK(s.angles_deg == std::vector<double>{-2.0, -1.0, 0.0, 1.0, 2.0});
    CHECK_THROWS_AS(power_spectrum(Eigen::VectorXd::Zero(4), cfg, SpectrumKind::ista), std::invalid_argument);
}

TEST_CASE("find_peaks - strict maxima, separation and ordering")
{
    SECTION("plateaus are not peaks")
    {
        const auto p = find_peaks(spectrum_of({0, 1, 1, 0, 2, 0}), 3);
        REQUIRE(p.size() == 1);
        CHECK(p[0].index == 4);
    }
    SECTION("equal heights resolve to the lower angle first")
    {
        const auto p = find_peaks(spectrum_of({0, 3, 0, 0, 3, 0, 1, 0}), 2);
        REQUIRE(p.size() == 2);
        CHECK(p[0].index == 1);
        CHECK(p[1].index == 4);
        CHECK(p[0].angle_deg == -9.0);
    }
    SECTION("minimum separation suppresses the weaker neighbour")
    {
        const auto p = find_peaks(spectrum_of({0, 5, 0, 4, 0, 0, 3, 0}), 3, 3);
        REQUIRE(p.size() == 2);
        CHECK(p[0].index == 1);
        CHECK(p[1].index == 6);
        CHECK(find_peaks(spectrum_of({0, 5, 0, 4, 0, 0, 3, 0}), 3, 2).size() == 3);
    }
    SECTION("endpoints count when they exceed their single neighbour")
    {
        const auto p = find_peaks(spectrum_of({4, 1, 2, 1, 6}), 3);
        REQUIRE(p.size() == 3);
        CHECK(p[0].index == 4);
        CHECK(p[1].index == 0);
        CHECK(p[2].index == 2);
    }
    SECTION("random spectra")
    {
        Substream rng(5, StreamTag::test, 1);
        for (int t = 0; t < 300; ++t)
        {
            std::vector<double> v(40);
            for (double &x : v)
                x = std::floor(10.0 * rng.uniform());
            const int k = 1 + t % 5;
            const auto p = find_peaks(spectrum_of(v), k);
            CHECK(static_cast<int>(p.size()) <= k);
            for (std::size_t i = 1; i < p.size(); ++i)
                CHECK(p[i].value <= p[i - 1].value);
            for (std::size_t i = 0; i < p.size(); ++i)
                for (std::size_t j = i + 1; j < p.size(); ++j)
                    CHECK(std::abs(p[i].index - p[j].index) >= 2);
        }
    }
    CHECK_THROWS_AS(find_peaks(spectrum_of({1, 2}), 0), std::invalid_argument);
}

TEST_CASE("peaks_match and doa_errors_deg")
{
    const std::vector<Peak> peaks = {{50, -10.0, 3.0}, {80, 20.0, 2.0}};
    CHECK(peaks_match(peaks, {81, 49}));
    CHECK_FALSE(peaks_match(peaks, {82, 49}));
    CHECK(peaks_match(peaks, {82, 49}, 2));
    CHECK_FALSE(peaks_match({peaks[0]}, {50, 80}));

    const auto e = doa_errors_deg(peaks, {-11.0, 21.5, 4.0});
    REQUIRE(e.size() == 3);
    CHECK(e[0] == Approx(1.0));
    CHECK(e[1] == Approx(-1.5));
    CHECK(e[2] == Approx(-14.0));
    CHECK(std::isnan(doa_errors_deg({}, {3.0})[0]));
}

TEST_CASE("spectrum csv")
{
    Spectrum s = spectrum_of({0.25, 1e-3});
    s.kind = SpectrumKind::ista;
    std::ostringstream os;
    write_spectrum_csv(os, s);
    CHECK(os.str() == "angle_deg,value,kind\n-10,0.25,ista\n-9,0.001,ista\n");
    CHECK(to_string(SpectrumKind::music) == "music");
    CHECK(to_string(SpectrumKind::lista) == "lista");
}
