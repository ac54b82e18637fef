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

#include "onebit_doa/baselines.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>
#include <numeric>
#include <ostream>
#include <stdexcept>

namespace onebit
{

namespace
{

// A <- U^H A U and V <- V U for the unitary U acting on coordinates (p, q).
void rotate(Eigen::MatrixXcd &A, Eigen::MatrixXcd &V, Eigen::Index p, Eigen::Index q)
{
    const Complex b = A(p, q);
    const double mag = std::abs(b);
    if (mag == 0.0)
        return;
    const Complex phase = std::conj(b / mag);

    // Real symmetric Jacobi step on [[a_pp, |b|], [|b|, a_qq]].
    const double theta = (A(q, q).real() - A(p, p).real()) / (2.0 * mag);
    const double t = (theta >= 0.0 ? 1.0 : -1.0) / (std::abs(theta) + std::sqrt(theta * theta + 1.0));
    const double c = 1.0 / std::sqrt(t * t + 1.0);
    const double s = t * c;

    const Complex u_pp = c;
    const Complex u_pq = s;
    const Complex u_qp = -s * phase;
    const Complex u_qq = c * phase;

    const Eigen::Index n = A.rows();
    for (Eigen::Index k = 0; k < n; ++k)
    {
        const Complex akp = A(k, p);
        const Complex akq = A(k, q);
        A(k, p) = akp * u_pp + akq * u_qp;
        A(k, q) = akp * u_pq + akq * u_qq;
    }
    for (Eigen::Index k = 0; k < n; ++k)
    {
        const Complex apk = A(p, k);
        const Complex aqk = A(q, k);
        A(p, k) = std::conj(u_pp) * apk + std::conj(u_qp) * aqk;
        A(q, k) = std::conj(u_pq) * apk + std::conj(u_qq) * aqk;
    }
    A(p, q) = 0.0;
    A(q, p) = 0.0;
    A(p, p) = A(p, p).real();
    A(q, q) = A(q, q).real();

    for (Eigen::Index k = 0; k < n; ++k)
    {
        const Complex vkp = V(k, p);
        const Complex vkq = V(k, q);
        V(k, p) = vkp * u_pp + vkq * u_qp;
        V(k, q) = vkp * u_pq + vkq * u_qq;
    }
}

double off_diagonal_sq(const Eigen::MatrixXcd &A)
{
    double sum = 0.0;
    for (Eigen::Index j = 0; j < A.cols(); ++j)
        for (Eigen::Index i = 0; i < A.rows(); ++i)
            if (i != j)
                sum += std::norm(A(i, j));
    return sum;
}

} // namespace

HermitianEigen hermitian_eig(const Eigen::MatrixXcd &R, int max_sweeps)
{
    if (R.rows() != R.cols() || R.rows() == 0)
        throw std::invalid_argument("eigendecomposition needs a nonempty square matrix");
    if (!R.allFinite())
        throw std::invalid_argument("eigendecomposition input is not finite");
    const double scale = R.cwiseAbs().maxCoeff();
    if ((R - R.adjoint()).cwiseAbs().maxCoeff() > 1e-8 * scale)
        throw std::invalid_argument("eigendecomposition input is not Hermitian");

    const Eigen::Index n = R.rows();
    Eigen::MatrixXcd A = 0.5 * (R + R.adjoint());
    Eigen::MatrixXcd V = Eigen::MatrixXcd::Identity(n, n);
    const double target = std::pow(std::numeric_limits<double>::epsilon() * A.norm(), 2);

    HermitianEigen out;
    while (out.sweeps < max_sweeps && off_diagonal_sq(A) > target)
    {
        for (Eigen::Index p = 0; p + 1 < n; ++p)
            for (Eigen::Index q = p + 1; q < n; ++q)
                rotate(A, V, p, q);
        ++out.sweeps;
    }

    std::vector<Eigen::Index> order(static_cast<std::size_t>(n));
    std::iota(order.begin(), order.end(), Eigen::Index{0});
    std::stable_sort(order.begin(), order.end(),
                     [&A](Eigen::Index a, Eigen::Index b) { return A(a, a).real() < A(b, b).real(); });
    out.values.resize(n);
    out.vectors.resize(n, n);
    for (Eigen::Index i = 0; i < n; ++i)
    {
        out.values(i) = A(order[static_cast<std::size_t>(i)], order[static_cast<std::size_t>(i)]).real();
        out.vectors.col(i) = V.col(order[static_cast<std::size_t>(i)]);
    }
    return out;
}

std::string_view to_string(SpectrumKind kind)
{
    switch (kind)
    {
    case SpectrumKind::music:
        return "music";
    case SpectrumKind::lista:
        return "lista";
    case SpectrumKind::ista:
        return "ista";
    }
    return "unknown";
}

Spectrum power_spectrum(const Eigen::VectorXd &nu, const ArrayConfig &cfg, SpectrumKind kind)
{
    if (nu.size() != cfg.grid_size())
        throw std::invalid_argument("power vector length does not match the grid");
    Spectrum s;
    s.kind = kind;
    s.angles_deg = cfg.grid_angles_deg();
    s.values.resize(static_cast<std::size_t>(nu.size()));
    for (Eigen::Index l = 0; l < nu.size(); ++l)
        s.values[static_cast<std::size_t>(l)] = std::isfinite(nu(l)) ? std::max(nu(l), 0.0) : 0.0;
    return s;
}

Spectrum music_spectrum(const Eigen::MatrixXcd &R, int sources, const ArrayConfig &cfg)
{
    if (R.rows() != cfg.sensors || R.cols() != cfg.sensors)
        throw std::invalid_argument("covariance size does not match the array");
    if (sources < 1 || sources >= cfg.sensors)
        throw std::invalid_argument("MUSIC needs 1 <= K < M");

    const HermitianEigen eig = hermitian_eig(R);
    const Eigen::MatrixXcd noise = eig.vectors.leftCols(cfg.sensors - sources);

    Spectrum s;
    s.kind = SpectrumKind::music;
    s.angles_deg = cfg.grid_angles_deg();
    s.values.reserve(s.angles_deg.size());
    for (double angle : s.angles_deg)
    {
        const Eigen::VectorXcd a = steering_vector(angle, cfg);
        const double denom = (noise.adjoint() * a).squaredNorm();
        s.values.push_back(1.0 / std::max(denom, std::numeric_limits<double>::min()));
    }
    return s;
}

std::vector<Peak> find_peaks(const Spectrum &spectrum, int count, int min_separation)
{
    if (count < 1)
        throw std::invalid_argument("peak count must be at least 1");
    const auto &v = spectrum.values;
    const int n = static_cast<int>(v.size());

    std::vector<int> candidates;
    for (int l = 0; l < n; ++l)
    {
        const bool above_left = l == 0 || v[static_cast<std::size_t>(l)] > v[static_cast<std::size_t>(l - 1)];
        const bool above_right = l == n - 1 || v[static_cast<std::size_t>(l)] > v[static_cast<std::size_t>(l + 1)];
        if (above_left && above_right)
            candidates.push_back(l);
    }
    std::stable_sort(candidates.begin(), candidates.end(),
                     [&v](int a, int b) { return v[static_cast<std::size_t>(a)] > v[static_cast<std::size_t>(b)]; });

    std::vector<Peak> peaks;
    for (int l : candidates)
    {
        if (static_cast<int>(peaks.size()) == count)
            break;
        const bool clear = std::all_of(peaks.begin(), peaks.end(),
                                       [&](const Peak &p) { return std::abs(p.index - l) >= min_separation; });
        if (clear)
            peaks.push_back({l, spectrum.angles_deg[static_cast<std::size_t>(l)], v[static_cast<std::size_t>(l)]});
    }
    return peaks;
}

bool peaks_match(const std::vector<Peak> &peaks, const std::vector<int> &truth_indices, int tolerance)
{
    if (peaks.size() < truth_indices.size())
        return false;
    // Try every assignment of peaks to truths; K is small.
    std::vector<std::size_t> perm(peaks.size());
    std::iota(perm.begin(), perm.end(), std::size_t{0});
    do
    {
        bool ok = true;
        for (std::size_t k = 0; k < truth_indices.size() && ok; ++k)
            ok = std::abs(peaks[perm[k]].index - truth_indices[k]) <= tolerance;
        if (ok)
            return true;
    } while (std::next_permutation(perm.begin(), perm.end()));
    return false;
}

std::vector<double> doa_errors_deg(const std::vector<Peak> &peaks, const std::vector<double> &truth_deg)
{
    std::vector<double> errors;
    errors.reserve(truth_deg.size());
    for (double truth : truth_deg)
    {
        double best = std::numeric_limits<double>::quiet_NaN();
        for (const Peak &p : peaks)
        {
            const double e = p.angle_deg - truth;
            if (std::isnan(best) || std::abs(e) < std::abs(best))
                best = e;
        }
        errors.push_back(best);
    }
    return errors;
}

void write_spectrum_csv(std::ostream &os, const Spectrum &spectrum)
{
    os << "angle_deg,value,kind\n";
    char buf[64];
    for (std::size_t l = 0; l < spectrum.values.size(); ++l)
    {
        std::snprintf(buf, sizeof(buf), "%.17g,%.17g,", spectrum.angles_deg[l], spectrum.values[l]);
        os << buf << to_string(spectrum.kind) << '\n';
    }
}

} // namespace onebit
