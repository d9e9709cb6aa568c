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


#ifndef CCBS_HAARSTATS_HPP
#define CCBS_HAARSTATS_HPP

#include <cstdint>
#include <span>
#include <vector>

#include "ccbs/common.hpp"
#include "ccbs/evolution.hpp"

namespace ccbs {

/// Normalised histogram; masses sum to one.
struct Histogram {
    std::vector<double> edges;
    std::vector<double> masses;
    std::size_t samples = 0;

    std::size_t bins() const { return masses.size(); }
};

inline constexpr int kDefaultBins = 25;

std::vector<double> uniform_edges(double lo, double hi, int bins);

/// Bins `values` on `edges`; values on the upper edge fall in the last bin and
/// values outside [edges.front(), edges.back()] are clamped into the end bins.
Histogram make_histogram(std::span<const double> values, std::vector<double> edges);

/// Haar-random unitary: QR of a complex Ginibre matrix with the phases of
/// diag(R) divided out.
UnitaryMatrix haar_unitary(int m, std::uint64_t seed);

/// Squared Bhattacharyya coefficient (sum_i sqrt(p_i q_i))^2 of two
/// distributions (each normalised by its own sum).
double similarity(std::span<const double> p, std::span<const double> q);

/// Sum over bins of min(mass1, mass2). Requires identical edges.
double histogram_overlap(const Histogram& h1, const Histogram& h2);

/// Similarities between squared-moduli vectors of pairs of independent Haar columns.
std::vector<double> column_similarities(int m, std::size_t pairs, std::uint64_t seed);
Histogram column_similarity_distribution(int m, std::size_t pairs, std::uint64_t seed, int bins = kDefaultBins);

/// Rows-by-outputs submatrix entries; phases are gauge-fixed so that the
/// first row and first column are real, and those reference entries are left
/// out of the phase pool.
struct ModuliPhaseHistograms {
    Histogram squared_moduli;
    Histogram phases;
};

ModuliPhaseHistograms ensemble_moduli_phase_histograms(std::span<const ComplexMatrix> submatrices,
                                                       int bins = kDefaultBins);

/// Rows `inputs` of U^T, i.e. entry (r, o) = U(o, inputs[r]).
ComplexMatrix input_rows(const ComplexMatrix& u, std::span<const int> inputs);

/// Gauge-fixed phases (first row and first column zero), wrapped to (-pi, pi].
RealMatrix gauge_fixed_phases(const ComplexMatrix& rows);

struct TestResult {
    double statistic = 0.0;
    double p_value = 0.0;
    std::size_t dof = 0;
};

/// One-sample Kolmogorov-Smirnov test against Uniform(lo, hi).
TestResult ks_uniform_test(std::vector<double> values, double lo, double hi);

/// Pearson chi-square goodness of fit of raw counts against expected
/// probabilities; adjacent bins are pooled until each expected count is >= 5.
TestResult chi_square_test(std::span<const double> observed_counts, std::span<const double> expected_probabilities);

/// Bin probabilities of |U_ij|^2 under the Haar marginal (m-1)(1-x)^(m-2).
std::vector<double> haar_squared_modulus_bin_probabilities(int m, std::span<const double> edges);

} // namespace ccbs

#endif
