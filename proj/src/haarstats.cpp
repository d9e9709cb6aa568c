/*
 * Copyright 2026 The ccbs Authors
 *
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 *     http://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */


#include "ccbs/haarstats.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include <boost/math/distributions/chi_squared.hpp>

#include "ccbs/random.hpp"

namespace ccbs {

std::vector<double> uniform_edges(double lo, double hi, int bins)
{
    if (bins < 1 || !(hi > lo)) {
        throw DomainError("histogram needs bins >= 1 and hi > lo");
    }
    std::vector<double> edges(static_cast<std::size_t>(bins) + 1);
    for (int b = 0; b <= bins; ++b) {
        edges[b] = lo + (hi - lo) * b / bins;
    }
    edges.back() = hi;
    return edges;
}

Histogram make_histogram(std::span<const double> values, std::vector<double> edges)
{
    if (edges.size() < 2) {
        throw DomainError("histogram needs at least one bin");
    }
    for (std::size_t e = 1; e < edges.size(); ++e) {
        if (!(edges[e] > edges[e - 1])) {
            throw DomainError("histogram edges must be strictly increasing");
        }
    }
    if (values.empty()) {
        throw DomainError("cannot normalise an empty histogram");
    }
    Histogram h;
    h.masses.assign(edges.size() - 1, 0.0);
    for (double v : values) {
        auto it = std::upper_bound(edges.begin(), edges.end(), v);
        auto bin = static_cast<std::ptrdiff_t>(it - edges.begin()) - 1;
        bin = std::clamp<std::ptrdiff_t>(bin, 0, static_cast<std::ptrdiff_t>(h.masses.size()) - 1);
        h.masses[static_cast<std::size_t>(bin)] += 1.0;
    }
    for (double& mass : h.masses) {
        mass /= static_cast<double>(values.size());
    }
    h.edges = std::move(edges);
    h.samples = values.size();
    return h;
}

UnitaryMatrix haar_unitary(int m, std::uint64_t seed)
{
    if (m < 1) {
        throw DomainError("haar_unitary: m must be positive");
    }
    Rng rng(seed);
    std::normal_distribution<double> normal(0.0, std::sqrt(0.5));
    ComplexMatrix z(m, m);
    for (int j = 0; j < m; ++j) {
        for (int i = 0; i < m; ++i) {
            const double re = normal(rng);
            const double im = normal(rng);
            z(i, j) = Complex(re, im);
        }
    }
    Eigen::HouseholderQR<ComplexMatrix> qr(z);
    ComplexMatrix q = qr.householderQ();
    const ComplexMatrix& r = qr.matrixQR();
    for (int j = 0; j < m; ++j) {
        const double mag = std::abs(r(j, j));
        const Complex phase = mag > 0.0 ? r(j, j) / mag : Complex(1.0);
        q.col(j) *= phase;
    }
    return UnitaryMatrix(std::move(q));
}

double similarity(std::span<const double> p, std::span<const double> q)
{
    if (p.size() != q.size() || p.empty()) {
        throw DomainError("similarity: distributions must have equal, non-zero length");
    }
    double sp = 0.0;
    double sq = 0.0;
    for (std::size_t i = 0; i < p.size(); ++i) {
        if (p[i] < 0.0 || q[i] < 0.0) {
            throw DomainError("similarity: negative probability");
        }
        sp += p[i];
        sq += q[i];
    }
    if (!(sp > 0.0) || !(sq > 0.0)) {
        throw DomainError("similarity: zero-mass distribution");
    }
    double bc = 0.0;
    for (std::size_t i = 0; i < p.size(); ++i) {
        bc += std::sqrt(p[i] * q[i]);
    }
    bc /= std::sqrt(sp * sq);
    return std::min(1.0, bc * bc);
}

double histogram_overlap(const Histogram& h1, const Histogram& h2)
{
    if (h1.edges != h2.edges) {
        throw DomainError("histogram_overlap: bin edges differ");
    }
    double overlap = 0.0;
    for (std::size_t b = 0; b < h1.masses.size(); ++b) {
        overlap += std::min(h1.masses[b], h2.masses[b]);
    }
    return overlap;
}

std::vector<double> column_similarities(int m, std::size_t pairs, std::uint64_t seed)
{
    std::vector<double> values(pairs);
    const auto count = static_cast<std::ptrdiff_t>(pairs);
#if defined(_OPENMP)
#pragma omp parallel for schedule(static)
#endif
    for (std::ptrdiff_t k = 0; k < count; ++k) {
        const auto uk = static_cast<std::uint64_t>(k);
        const UnitaryMatrix a = haar_unitary(m, derive_seed(seed, "column-a", uk));
        const UnitaryMatrix b = haar_unitary(m, derive_seed(seed, "column-b", uk));
        const RealVector pa = a.matrix().col(0).cwiseAbs2();
        const RealVector pb = b.matrix().col(0).cwiseAbs2();
        values[k] = similarity(std::span<const double>(pa.data(), pa.size()), std::span<const double>(pb.data(), pb.size()));
    }
    return values;
}

Histogram column_similarity_distribution(int m, std::size_t pairs, std::uint64_t seed, int bins)
{
    const auto values = column_similarities(m, pairs, seed);
    return make_histogram(values, uniform_edges(0.0, 1.0, bins));
}

ComplexMatrix input_rows(const ComplexMatrix& u, std::span<const int> inputs)
{
    ComplexMatrix rows(static_cast<Eigen::Index>(inputs.size()), u.rows());
    for (std::size_t r = 0; r < inputs.size(); ++r) {
        if (inputs[r] < 0 || inputs[r] >= u.cols()) {
            throw ConfigError("input mode outside the unitary");
        }
        rows.row(static_cast<Eigen::Index>(r)) = u.col(inputs[r]).transpose();
    }
    return rows;
}

RealMatrix gauge_fixed_phases(const ComplexMatrix& rows)
{
    RealMatrix phases(rows.rows(), rows.cols());
    for (Eigen::Index r = 0; r < rows.rows(); ++r) {
        for (Eigen::Index o = 0; o < rows.cols(); ++o) {
            const double raw = std::arg(rows(r, o)) - std::arg(rows(0, o)) - std::arg(rows(r, 0)) + std::arg(rows(0, 0));
            phases(r, o) = wrap_phase(raw);
        }
    }
    return phases;
}

ModuliPhaseHistograms ensemble_moduli_phase_histograms(std::span<const ComplexMatrix> submatrices, int bins)
{
    std::vector<double> moduli;
    std::vector<double> phases;
    for (const auto& sub : submatrices) {
        const RealMatrix gauge = gauge_fixed_phases(sub);
        for (Eigen::Index r = 0; r < sub.rows(); ++r) {
            for (Eigen::Index o = 0; o < sub.cols(); ++o) {
                moduli.push_back(std::norm(sub(r, o)));
                if (r > 0 && o > 0) {
                    phases.push_back(gauge(r, o));
                }
            }
        }
    }
    ModuliPhaseHistograms out;
    out.squared_moduli = make_histogram(moduli, uniform_edges(0.0, 1.0, bins));
    out.phases = make_histogram(phases, uniform_edges(-kPi, kPi, bins));
    return out;
}

namespace {

// Asymptotic Kolmogorov distribution tail with the Stephens small-n correction.
double kolmogorov_tail(double lambda)
{
    if (lambda < 1e-3) {
        return 1.0;
    }
    double sum = 0.0;
    for (int k = 1; k <= 100; ++k) {
        const double term = std::exp(-2.0 * k * k * lambda * lambda);
        sum += (k % 2 == 1 ? 2.0 : -2.0) * term;
        if (term < 1e-16) {
            break;
        }
    }
    return std::clamp(sum, 0.0, 1.0);
}

} // namespace

TestResult ks_uniform_test(std::vector<double> values, double lo, double hi)
{
    if (values.empty() || !(hi > lo)) {
        throw DomainError("ks_uniform_test: need samples and hi > lo");
    }
    std::sort(values.begin(), values.end());
    const auto n = static_cast<double>(values.size());
    double d = 0.0;
    for (std::size_t i = 0; i < values.size(); ++i) {
        const double cdf = std::clamp((values[i] - lo) / (hi - lo), 0.0, 1.0);
        d = std::max({d, (static_cast<double>(i) + 1.0) / n - cdf, cdf - static_cast<double>(i) / n});
    }
    const double sqrt_n = std::sqrt(n);
    TestResult result;
    result.statistic = d;
    result.p_value = kolmogorov_tail((sqrt_n + 0.12 + 0.11 / sqrt_n) * d);
    return result;
}

TestResult chi_square_test(std::span<const double> observed_counts, std::span<const double> expected_probabilities)
{
    if (observed_counts.size() != expected_probabilities.size() || observed_counts.empty()) {
        throw DomainError("chi_square_test: size mismatch");
    }
    const double total = std::accumulate(observed_counts.begin(), observed_counts.end(), 0.0);
    const double norm = std::accumulate(expected_probabilities.begin(), expected_probabilities.end(), 0.0);
    std::vector<double> obs;
    std::vector<double> exp;
    double o_acc = 0.0;
    double e_acc = 0.0;
    for (std::size_t b = 0; b < observed_counts.size(); ++b) {
        o_acc += observed_counts[b];
        e_acc += total * expected_probabilities[b] / norm;
        if (e_acc >= 5.0) {
            obs.push_back(o_acc);
            exp.push_back(e_acc);
            o_acc = 0.0;
            e_acc = 0.0;
        }
    }
    if (e_acc > 0.0 || o_acc > 0.0) {
        if (exp.empty()) {
            obs.push_back(o_acc);
            exp.push_back(e_acc);
        } else {
            obs.back() += o_acc;
            exp.back() += e_acc;
        }
    }
    TestResult result;
    for (std::size_t b = 0; b < obs.size(); ++b) {
        const double diff = obs[b] - exp[b];
        result.statistic += diff * diff / exp[b];
    }
    result.dof = obs.size() > 1 ? obs.size() - 1 : 1;
    const boost::math::chi_squared dist(static_cast<double>(result.dof));
    result.p_value = boost::math::cdf(boost::math::complement(dist, result.statistic));
    return result;
}

std::vector<double> haar_squared_modulus_bin_probabilities(int m, std::span<const double> edges)
{
    if (m < 2) {
        throw DomainError("Haar marginal needs m >= 2");
    }
    std::vector<double> probs;
    for (std::size_t e = 1; e < edges.size(); ++e) {
        const double a = std::clamp(edges[e - 1], 0.0, 1.0);
        const double b = std::clamp(edges[e], 0.0, 1.0);
        probs.push_back(std::pow(1.0 - a, m - 1) - std::pow(1.0 - b, m - 1));
    }
    return probs;
}

} // namespace ccbs
