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
#include <sstream>

#include "oracles.hpp"
#include "onebit_doa/array_model.hpp"
#include "onebit_doa/one_bit.hpp"
#include "onebit_doa/rng.hpp"
#include "onebit_doa/theory.hpp"

using namespace onebit;
using Catch::Approx;

namespace
{

// Reference constants for the layer-error curve.
BoundParams reference_constants()
{
    BoundParams p;
    p.sparsity = 2.0;
    p.amplitude = 1.0 / 12.0;
    p.decay = 0.1;
    p.confidence = 0.01;
    p.constant = 2.0;
    return p;
}

} // namespace

TEST_CASE("bound - defaults are the reference constants")
{
    const BoundParams d;
    const BoundParams p = reference_constants();
    CHECK(d.sparsity == p.sparsity);
    CHECK(d.amplitude == p.amplitude);
    CHECK(d.decay == p.decay);
    CHECK(d.confidence == p.confidence);
    CHECK(d.constant == p.constant);
}

TEST_CASE("bound - closed form")
{
    BoundParams p = reference_constants();
    p.scale = 1.5;
    p.sensors = 8;
    p.snapshots = 10000;
    const double floor = 2.0 * 2.25 * 64.0 * std::sqrt((std::log(8.0) + 0.01) / 10000.0);
    CHECK(bound_floor(p) == Approx(floor).epsilon(1e-14));
    // s B = 2 / 12 at layer zero.
    CHECK(layer_error_bound(0, p) - bound_floor(p) == Approx(1.0 / 6.0).epsilon(1e-14));
    CHECK(layer_error_bound(10, p) - bound_floor(p) == Approx(std::exp(-1.0) / 6.0).epsilon(1e-14));
}

TEST_CASE("bound - monotone in layer and snapshot count")
{
    BoundParams p = reference_constants();
    for (int i = 0; i < 30; ++i)
        CHECK(layer_error_bound(i + 1, p) < layer_error_bound(i, p));
    for (int n = 100; n < 100000; n *= 2)
    {
        BoundParams q = p;
        q.snapshots = n;
        BoundParams r = p;
        r.snapshots = 2 * n;
        CHECK(layer_error_bound(3, r) < layer_error_bound(3, q));
        CHECK(bound_floor(q) / bound_floor(r) == Approx(std::sqrt(2.0)).epsilon(1e-12));
    }
    BoundParams bigger_t = p;
    bigger_t.scale = 2.0;
    CHECK(bound_floor(bigger_t) == Approx(4.0 * bound_floor(p)).epsilon(1e-14));
}

TEST_CASE("bound - parameter validation")
{
    BoundParams p = reference_constants();
    p.decay = 0.0;
    CHECK_THROWS_AS(bound_floor(p), std::invalid_argument);
    p = reference_constants();
    p.confidence = -0.5;
    CHECK_THROWS_AS(bound_floor(p), std::invalid_argument);
    p = reference_constants();
    p.snapshots = 0;
    CHECK_THROWS_AS(bound_floor(p), std::invalid_argument);
    p = reference_constants();
    p.confidence = 0.0;
    CHECK_NOTHROW(bound_floor(p));
}

TEST_CASE("covariance_error_norms - norm relations")
{
    Substream rng(3, StreamTag::test, 0);
    for (int t = 0; t < 200; ++t)
    {
        const int M = 2 + t % 7;
        Eigen::MatrixXcd R(M, M), S(M, M);
        for (Eigen::Index i = 0; i < R.size(); ++i)
        {
            R.data()[i] = Complex(rng.uniform(), rng.uniform());
            S.data()[i] = Complex(rng.uniform(), rng.uniform());
        }
        const CovarianceErrors e = covariance_error_norms(R, S);
        double max_oracle = 0.0, fro_oracle = 0.0;
        for (int i = 0; i < M; ++i)
            for (int j = 0; j < M; ++j)
            {
                max_oracle = std::max(max_oracle, std::abs(S(i, j) - R(i, j)));
                fro_oracle += std::norm(S(i, j) - R(i, j));
            }
        CHECK(e.max_norm == Approx(max_oracle).epsilon(1e-14));
        CHECK(e.frobenius == Approx(std::sqrt(fro_oracle)).epsilon(1e-14));
        CHECK(e.max_norm <= e.frobenius + 1e-15);
        CHECK(e.frobenius <= M * e.max_norm + 1e-15);
    }
    CHECK_THROWS_AS(covariance_error_norms(Eigen::MatrixXcd::Zero(2, 2), Eigen::MatrixXcd::Zero(3, 3)),
                    std::invalid_argument);
}

TEST_CASE("per_layer_error_curve - distances to the truth")
{
    Eigen::MatrixXd phi = Eigen::MatrixXd::Identity(3, 3);
    Eigen::VectorXd truth(3), c(3);
    truth << 1.0, 0.0, 0.0;
    c << 1.0, 0.0, 0.0;
    const ListaParams p = ista_params(phi, 0.25, 2);
    const auto curve = per_layer_error_curve(p, phi, truth, c);
    REQUIRE(curve.size() == 2);
    CHECK(curve[0] == Approx(0.25));
    CHECK(curve[1] == Approx(0.25));
}

TEST_CASE("quantile, median and slope")
{
    CHECK(median({3.0, 1.0, 2.0}) == 2.0);
    CHECK(median({4.0, 1.0, 2.0, 3.0}) == 2.5);
    CHECK(quantile({0.0, 10.0}, 0.25) == 2.5);
    CHECK(quantile({5.0}, 0.9) == 5.0);
    CHECK(std::isnan(quantile({}, 0.5)));

    std::vector<double> x, y;
    for (double n : {1e3, 4e3, 1.6e4, 6.4e4})
    {
        x.push_back(n);
        y.push_back(3.0 * std::pow(n, -0.5));
    }
    CHECK(log_log_slope(x, y) == Approx(-0.5).epsilon(1e-12));
    CHECK_THROWS_AS(log_log_slope({1.0}, {1.0}), std::invalid_argument);
}

TEST_CASE("one-bit covariance error shrinks like N^-1/2")
{
    ArrayConfig cfg;
    cfg.sensors = 4;
    const SourceScene scene = make_scene(cfg, {-10.0, 25.0}, {1.0, 1.0}, 0.1);
    const Eigen::MatrixXcd R = true_covariance(scene, cfg);
    const std::vector<int> sizes = {500, 2000, 8000};
    std::vector<std::vector<double>> errors(sizes.size());
    for (std::uint64_t s = 0; s < 30; ++s)
    {
        const SnapshotSet x = generate_snapshots(scene, cfg, sizes.back(), 100 + s);
        const OneBitSet bits = quantize(x, {pick_dither_scale(x), 200 + s});
        for (std::size_t k = 0; k < sizes.size(); ++k)
            errors[k].push_back(covariance_error_norms(R, estimate_covariance(bits, sizes[k]).hermitian).max_norm);
    }
    std::vector<double> n, med;
    for (std::size_t k = 0; k < sizes.size(); ++k)
    {
        n.push_back(sizes[k]);
        med.push_back(median(errors[k]));
    }
    const double slope = log_log_slope(n, med);
    INFO("slope " << slope);
    CHECK(slope > -0.7);
    CHECK(slope < -0.3);
}

TEST_CASE("sweep csv")
{
    std::vector<SweepRow> rows = {summarize("layer", 1, {1.0, 2.0, 3.0, 4.0, 5.0}, 0.5),
                                  summarize("layer", 2, {}, NAN)};
    CHECK(rows[0].median == 3.0);
    CHECK(rows[0].q25 == 2.0);
    CHECK(rows[0].q75 == 4.0);
    std::ostringstream os;
    write_sweep_csv(os, rows);
    CHECK(os.str() == "sweep_variable,value,empirical_median,empirical_q25,empirical_q75,bound\n"
                      "layer,1,3,2,4,0.5\n"
                      "layer,2,,,,\n");
}
