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
#include <cstring>
#include <sstream>

#include "oracles.hpp"
#include "onebit_doa/array_model.hpp"
#include "onebit_doa/diagnostics.hpp"
#include "onebit_doa/rng.hpp"

using namespace onebit;
using Catch::Approx;

TEST_CASE("steering_vector - closed forms")
{
    ArrayConfig cfg;
    cfg.sensors = 4;
    const Eigen::VectorXcd a0 = steering_vector(0.0, cfg);
    for (int m = 0; m < 4; ++m)
    {
        CHECK(a0(m).real() == 1.0);
        CHECK(a0(m).imag() == 0.0);
    }

    cfg.sensors = 2;
    const Eigen::VectorXcd a30 = steering_vector(30.0, cfg);
    CHECK(a30(0) == Complex(1.0, 0.0));
    CHECK(a30(1).real() == Approx(0.0).margin(1e-15));
    CHECK(a30(1).imag() == Approx(-1.0).margin(1e-15));
}

TEST_CASE("steering_vector - matches scalar evaluation")
{
    ArrayConfig cfg;
    for (double theta : {17.3, -42.0, 59.9, 0.25})
    {
        const Eigen::VectorXcd a = steering_vector(theta, cfg);
        REQUIRE(a.size() == 8);
        CHECK(a(0) == Complex(1.0, 0.0));
        for (int m = 0; m < 8; ++m)
        {
            const auto ref = oracle::steering_entry(m, theta, 0.5);
            CHECK(std::abs(a(m) - ref) < 1e-13);
            CHECK(std::abs(a(m)) == Approx(1.0).epsilon(1e-14));
        }
    }
}

TEST_CASE("steering_vector - reflection is conjugation")
{
    ArrayConfig cfg;
    cfg.sensors = 12;
    Substream rng(3);
    for (int t = 0; t < 100; ++t)
    {
        const double theta = 180.0 * rng.uniform() - 90.0;
        const Eigen::VectorXcd a = steering_vector(theta, cfg);
        const Eigen::VectorXcd b = steering_vector(-theta, cfg);
        CHECK((b - a.conjugate()).cwiseAbs().maxCoeff() < 1e-13);
    }
}

TEST_CASE("ArrayConfig - grid size and validation")
{
    ArrayConfig cfg;
    CHECK(cfg.grid_size() == 121);
    CHECK(cfg.grid_angle_deg(0) == -60.0);
    CHECK(cfg.grid_angle_deg(120) == 60.0);
    CHECK_NOTHROW(cfg.validate());

    cfg.grid_step_deg = 0.7;
    CHECK(cfg.grid_size() == static_cast<int>(std::floor(120.0 / 0.7)) + 1);

    ArrayConfig bad;
    bad.sensors = 1;
    CHECK_THROWS_AS(bad.validate(), std::invalid_argument);
    bad = ArrayConfig{};
    bad.grid_step_deg = 0.0;
    CHECK_THROWS_AS(bad.validate(), std::invalid_argument);
    bad = ArrayConfig{};
    bad.grid_start_deg = -10;
    bad.grid_stop_deg = -5; // 6 points, fewer than 8 sensors
    CHECK_THROWS_AS(bad.validate(), std::invalid_argument);

    std::vector<std::string> warnings;
    set_warning_sink([&](const std::string &w) { warnings.push_back(w); });
    ArrayConfig wide;
    wide.spacing_ratio = 0.7;
    CHECK_NOTHROW(wide.validate());
    set_warning_sink(nullptr);
    CHECK(warnings.size() == 1);
}

TEST_CASE("ArrayConfig - nearest grid index ties go low")
{
    ArrayConfig cfg;
    CHECK(cfg.nearest_grid_index(0.0) == 60);
    CHECK(cfg.nearest_grid_index(0.4) == 60);
    CHECK(cfg.nearest_grid_index(0.5) == 60);
    CHECK(cfg.nearest_grid_index(0.5000001) == 61);
    CHECK(cfg.nearest_grid_index(-0.5) == 59);
    CHECK(cfg.nearest_grid_index(-60.0) == 0);
    CHECK(cfg.nearest_grid_index(60.0) == 120);
}

TEST_CASE("build_dictionary - columns are steering vectors")
{
    ArrayConfig cfg;
    const Eigen::MatrixXcd A = build_dictionary(cfg);
    CHECK(A.cols() == 121);
    CHECK(A.rows() == 8);
    for (int l = 0; l < A.cols(); ++l)
    {
        CHECK((A.col(l) - steering_vector(cfg.grid_angle_deg(l), cfg)).norm() == 0.0);
        CHECK(A(0, l) == Complex(1.0, 0.0));
    }
    CHECK((A.cwiseAbs().array() - 1.0).abs().maxCoeff() < 1e-14);

    ArrayConfig single;
    single.grid_start_deg = 10.0;
    single.grid_stop_deg = 10.0;
    const Eigen::MatrixXcd one = build_dictionary(single);
    REQUIRE(one.cols() == 1);
    CHECK((one.col(0) - steering_vector(10.0, single)).norm() == 0.0);
}

TEST_CASE("make_scene - support and validation")
{
    ArrayConfig cfg;
    const SourceScene s = make_scene(cfg, {-20.3, 10.5}, {1.0, 2.0}, 0.1);
    CHECK(s.support == std::vector<int>{40, 70});
    const Eigen::VectorXd nu = s.grid_powers(cfg.grid_size());
    CHECK(nu.sum() == 3.0);
    CHECK(nu(40) == 1.0);
    CHECK(nu(70) == 2.0);

    CHECK_THROWS_AS(make_scene(cfg, {1, 2, 3, 4, 5, 6, 7, 8}, std::vector<double>(8, 1.0), 0.1), std::invalid_argument);
    CHECK_THROWS_AS(make_scene(cfg, {70.0}, {1.0}, 0.1), std::invalid_argument);
    CHECK_THROWS_AS(make_scene(cfg, {1.0}, {0.0}, 0.1), std::invalid_argument);
    CHECK_THROWS_AS(make_scene(cfg, {1.0, 1.2}, {1.0, 1.0}, 0.1), std::invalid_argument);
    CHECK_THROWS_AS(make_scene(cfg, {1.0}, {1.0, 1.0}, 0.1), std::invalid_argument);
    CHECK_THROWS_AS(make_scene(cfg, {1.0}, {1.0}, -0.1), std::invalid_argument);
}

TEST_CASE("SceneSampler - deterministic, distinct, sorted")
{
    ArrayConfig cfg;
    SceneSampler sampler;
    sampler.sources = 3;
    sampler.min_separation_deg = 5.0;
    for (std::uint64_t i = 0; i < 200; ++i)
    {
        const SourceScene a = sampler.sample(cfg, 9, i);
        const SourceScene b = sampler.sample(cfg, 9, i);
        REQUIRE(a.doas_deg == b.doas_deg);
        REQUIRE(a.source_count() == 3);
        for (int k = 1; k < 3; ++k)
        {
            CHECK(a.doas_deg[k] > a.doas_deg[k - 1]);
            CHECK(a.doas_deg[k] - a.doas_deg[k - 1] >= 5.0);
        }
        for (double p : a.powers)
            CHECK(p == 1.0);
    }

    sampler.power_policy = PowerPolicy::uniform;
    const SourceScene u = sampler.sample(cfg, 9, 0);
    for (double p : u.powers)
    {
        CHECK(p >= sampler.power_min);
        CHECK(p <= sampler.power_max);
    }
}

TEST_CASE("generate_snapshots - noiseless single source is rank one")
{
    ArrayConfig cfg;
    const SourceScene scene = make_scene(cfg, {23.0}, {1.0}, 0.0);
    const SnapshotSet x = generate_snapshots(scene, cfg, 50, 4);
    const Eigen::VectorXcd a = steering_vector(23.0, cfg);
    for (int n = 0; n < x.count(); ++n)
    {
        const Complex s = x.data(0, n);
        CHECK((x.data.col(n) - s * a).norm() < 1e-12 * std::max(1.0, std::abs(s)));
    }
}

TEST_CASE("generate_snapshots - dimensions, determinism and errors")
{
    ArrayConfig cfg;
    const SourceScene scene = make_scene(cfg, {-10.0, 30.0}, {1.0, 1.0}, 0.1);
    const SnapshotSet a = generate_snapshots(scene, cfg, 10000, 77);
    CHECK(a.sensors() == 8);
    CHECK(a.count() == 10000);
    CHECK(a.data.allFinite());
    const SnapshotSet b = generate_snapshots(scene, cfg, 10000, 77);
    CHECK(a.data == b.data);
    const SnapshotSet c = generate_snapshots(scene, cfg, 10000, 78);
    CHECK(a.data != c.data);
    // Snapshot n depends only on (seed, n): a prefix run reproduces the prefix.
    const SnapshotSet prefix = generate_snapshots(scene, cfg, 100, 77);
    CHECK(prefix.data == a.data.leftCols(100));

    CHECK_THROWS_AS(generate_snapshots(scene, cfg, 0, 1), std::invalid_argument);
}

TEST_CASE("true_covariance - closed forms and oracle")
{
    ArrayConfig cfg;
    SourceScene empty;
    empty.noise_variance = 1.0;
    CHECK((true_covariance(empty, cfg) - Eigen::MatrixXcd::Identity(8, 8)).norm() == 0.0);

    const SourceScene one = make_scene(cfg, {12.0}, {2.5}, 0.0);
    const Eigen::MatrixXcd R1 = true_covariance(one, cfg);
    CHECK(R1.trace().real() == Approx(2.5 * 8).epsilon(1e-14));
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> es(R1);
    CHECK(es.eigenvalues()(6) < 1e-12);

    const SourceScene two = make_scene(cfg, {-31.0, 7.0}, {1.0, 0.5}, 0.2);
    const Eigen::MatrixXcd R = true_covariance(two, cfg);
    const Eigen::MatrixXcd ref = oracle::covariance(8, 0.5, {-31.0, 7.0}, {1.0, 0.5}, 0.2);
    CHECK((R - ref).cwiseAbs().maxCoeff() < 1e-13);
    CHECK((R - R.adjoint()).norm() == 0.0);
}

TEST_CASE("true_covariance - Hermitian PSD over random scenes")
{
    Substream rng(11);
    for (int t = 0; t < 200; ++t)
    {
        ArrayConfig cfg;
        cfg.sensors = 2 + static_cast<int>(rng.uniform() * 15);
        SceneSampler sampler;
        sampler.sources = 1 + static_cast<int>(rng.uniform() * (cfg.sensors - 1));
        sampler.power_policy = PowerPolicy::uniform;
        sampler.noise_variance = rng.uniform();
        const SourceScene scene = sampler.sample(cfg, 5, static_cast<std::uint64_t>(t));
        const Eigen::MatrixXcd R = true_covariance(scene, cfg);
        CHECK((R - R.adjoint()).cwiseAbs().maxCoeff() <= 1e-12 * R.cwiseAbs().maxCoeff());
        Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> es(R);
        CHECK(es.eigenvalues().minCoeff() >= -1e-10 * R.trace().real());
    }
}

TEST_CASE("sample covariance approaches the true covariance at the 1/sqrt(N) rate")
{
    ArrayConfig cfg;
    const SourceScene scene = make_scene(cfg, {-20.0, 25.0}, {1.0, 1.0}, 0.1);
    const Eigen::MatrixXcd R = true_covariance(scene, cfg);
    double err_small = 0.0, err_large = 0.0;
    const int seeds = 10;
    for (int s = 0; s < seeds; ++s)
    {
        const SnapshotSet x = generate_snapshots(scene, cfg, 100000, 1000 + s);
        const Eigen::MatrixXcd Rs = x.data * x.data.adjoint() / 100000.0;
        const Eigen::MatrixXcd Rp = x.data.leftCols(1000) * x.data.leftCols(1000).adjoint() / 1000.0;
        err_large += (Rs - R).cwiseAbs().maxCoeff() / seeds;
        err_small += (Rp - R).cwiseAbs().maxCoeff() / seeds;
    }
    // 100x more snapshots gives ~10x smaller errors.
    CHECK(err_large < 0.02 * R.cwiseAbs().maxCoeff());
    CHECK(err_small / err_large == Approx(10.0).epsilon(0.35));
}

TEST_CASE("real_dictionary and stacking match the oracle")
{
    ArrayConfig cfg;
    cfg.sensors = 5;
    cfg.grid_step_deg = 7.0;
    const Eigen::MatrixXd phi = real_dictionary(cfg);
    const Eigen::MatrixXd ref = oracle::real_dictionary(5, 0.5, cfg.grid_angles_deg());
    CHECK((phi - ref).cwiseAbs().maxCoeff() < 1e-13);

    // Real diagonal rows of every column sum to M.
    for (Eigen::Index l = 0; l < phi.cols(); ++l)
    {
        double sum = 0.0;
        for (int m = 0; m < 5; ++m)
            sum += phi(m * 6, l);
        CHECK(sum == Approx(5.0).epsilon(1e-14));
    }

    const Eigen::MatrixXcd R = oracle::covariance(5, 0.5, {3.0, -40.0}, {1.0, 2.0}, 0.3);
    const Eigen::VectorXd b = stack_covariance(R);
    CHECK((b - oracle::stacked(R)).norm() == 0.0);
    CHECK((unstack_covariance(b, 5) - R).norm() == 0.0);
    CHECK_THROWS_AS(unstack_covariance(Eigen::VectorXd::Zero(7), 5), std::invalid_argument);
}

TEST_CASE("build_linear_model - exact covariance gives zero residual")
{
    Substream rng(21);
    for (int t = 0; t < 100; ++t)
    {
        ArrayConfig cfg;
        cfg.sensors = 2 + static_cast<int>(rng.uniform() * 15);
        SceneSampler sampler;
        sampler.sources = 1 + static_cast<int>(rng.uniform() * (cfg.sensors - 1));
        sampler.power_policy = PowerPolicy::uniform;
        sampler.noise_variance = 2.0 * rng.uniform();
        const SourceScene scene = sampler.sample(cfg, 6, static_cast<std::uint64_t>(t));
        const Eigen::MatrixXcd R = oracle::covariance(cfg.sensors, 0.5, scene.doas_deg, scene.powers,
                                                      scene.noise_variance);
        const LinearModel model = build_linear_model(cfg, scene.noise_variance, oracle::stacked(R));
        const Eigen::VectorXd residual = model.clean - model.dictionary * scene.grid_powers(cfg.grid_size());
        CHECK(residual.cwiseAbs().maxCoeff() <= 1e-12 * R.cwiseAbs().maxCoeff());
        CHECK((model.measurement - model.noise_offset - model.clean).norm() == 0.0);
    }
}

TEST_CASE("noise_offset - only real diagonal positions")
{
    const Eigen::VectorXd z = noise_offset(4, 0.7);
    REQUIRE(z.size() == 32);
    for (Eigen::Index i = 0; i < z.size(); ++i)
    {
        const bool diag = i < 16 && i % 5 == 0;
        CHECK(z(i) == (diag ? 0.7 : 0.0));
    }
    ArrayConfig cfg;
    const Eigen::VectorXd b = Eigen::VectorXd::LinSpaced(128, 0.0, 1.0);
    const LinearModel m = build_linear_model(cfg, 0.0, b);
    CHECK(m.noise_offset.norm() == 0.0);
    CHECK(m.clean == b);
    CHECK_THROWS_AS(build_linear_model(cfg, 0.1, Eigen::VectorXd::Zero(127)), std::invalid_argument);
}

TEST_CASE("snapshot file - layout and round trip")
{
    ArrayConfig cfg;
    cfg.sensors = 3;
    const SourceScene scene = make_scene(cfg, {5.0}, {1.0}, 0.1);
    const SnapshotSet x = generate_snapshots(scene, cfg, 4, 8);
    std::stringstream ss;
    write_snapshots(ss, x);
    const std::string bytes = ss.str();
    REQUIRE(bytes.size() == 16 + 3 * 4 * 16);
    CHECK(bytes.substr(0, 4) == "OBDA");
    auto u32 = [&](std::size_t off) {
        return static_cast<std::uint32_t>(static_cast<unsigned char>(bytes[off])) |
               static_cast<std::uint32_t>(static_cast<unsigned char>(bytes[off + 1])) << 8 |
               static_cast<std::uint32_t>(static_cast<unsigned char>(bytes[off + 2])) << 16 |
               static_cast<std::uint32_t>(static_cast<unsigned char>(bytes[off + 3])) << 24;
    };
    CHECK(u32(4) == 1);
    CHECK(u32(8) == 3);
    CHECK(u32(12) == 4);
    // Second complex entry is sensor 1 of snapshot 0: column-major by snapshot.
    double re = 0.0;
    std::memcpy(&re, bytes.data() + 16 + 16, 8);
    CHECK(re == x.data(1, 0).real());

    const SnapshotSet y = read_snapshots(ss);
    CHECK(y.data == x.data);

    std::stringstream bad("OBDX");
    CHECK_THROWS(read_snapshots(bad));
    std::stringstream truncated(bytes.substr(0, bytes.size() - 3));
    CHECK_THROWS(read_snapshots(truncated));
}
