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


#ifndef CCBS_RECONSTRUCTION_HPP
#define CCBS_RECONSTRUCTION_HPP

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "ccbs/common.hpp"

namespace ccbs {

// Index conventions: U(i, h) is the amplitude from input h to output i.
// Submatrices are stored with one row per input and one column per output,
// M(r, o) = U(o, inputs[r]).

/// Distinguishable two-photon coincidence probability for inputs (h, k)
/// and outputs (i, j): |U_ih|^2 |U_jk|^2 + |U_jh|^2 |U_ik|^2.
double hom_plateau(const ComplexMatrix& u, int h, int k, int i, int j);

/// Indistinguishable coincidence probability |U_ih U_jk + U_jh U_ik|^2.
double hom_coincidence(const ComplexMatrix& u, int h, int k, int i, int j);

/// (a - |U_ih U_jk + U_jh U_ik|^2) / a. Positive for a dip.
double hom_visibility(const ComplexMatrix& u, int h, int k, int i, int j);

/// -(2 rho_ih rho_jk rho_jh rho_ik / a) cos(theta_ih + theta_jk - theta_jh - theta_ik)
double hom_visibility_phase_form(const ComplexMatrix& u, int h, int k, int i, int j);

// ---------------------------------------------------------------- dip scans

/// Expected counts mean_counts * a * (1 + amplitude * exp(-(x - x0)^2 / (2 sigma^2))).
/// A coincidence dip has amplitude = -V with V the HOM visibility above.
double dip_model(double x, double a, double amplitude, double x0, double sigma);

/// `points` positions evenly spaced over x0 +- span_sigmas * sigma.
std::vector<double> scan_positions(double x0, double sigma, int points = 21, double span_sigmas = 3.0);

/// Counts at each position; Poisson-distributed unless `noiseless`.
std::vector<double> simulate_dip_scan(double a, double amplitude, double x0, double sigma,
                                      std::span<const double> positions, double mean_counts, std::uint64_t seed,
                                      bool noiseless = false);

struct DipFit {
    /// Plateau in units of count_scale.
    double a = 0.0;
    double amplitude = 0.0;
    double x0 = 0.0;
    double sigma = 0.0;
    double err_a = 0.0;
    double err_amplitude = 0.0;
    double err_x0 = 0.0;
    double err_sigma = 0.0;
    double cov_a_amplitude = 0.0;
    double chi2 = 0.0;
    int iterations = 0;
};

/// Poisson-weighted Gaussian-dip fit. Throws FitError on non-convergence.
DipFit fit_dip(std::span<const double> positions, std::span<const double> counts, double count_scale = 1.0);

// ------------------------------------------------------------------ dataset

struct HomEntry {
    int i = 0;
    int j = 0;
    double a = 0.0;
    /// HOM visibility; meaningless when !defined.
    double V = 0.0;
    double err_a = 0.0;
    /// Uncertainty of the coincidence level a (1 - V).
    double err_b = 0.0;
    bool defined = false;

    double coincidence() const { return a * (1.0 - V); }
};

struct HomPairData {
    int h = 0;
    int k = 0;
    /// One entry per unordered output pair i < j, lexicographic.
    std::vector<HomEntry> entries;
};

struct HomDataset {
    int m = 0;
    /// Input modes in row order; inputs[0] is the reference row.
    std::vector<int> inputs;
    std::vector<HomPairData> pairs;
    /// Optional single-photon output intensities, one row per input.
    std::optional<RealMatrix> intensities;

    int rows() const { return static_cast<int>(inputs.size()); }
    int row_of(int mode) const;
    void validate() const;
};

/// Pairs (inputs[0], inputs[r]) for r = 1..rows-1.
std::vector<std::pair<int, int>> default_input_pairs(std::span<const int> inputs);

enum class SynthesisMethod { direct, scan };

struct SynthesisOptions {
    SynthesisMethod method = SynthesisMethod::direct;
    /// Mean counts of the median plateau; 0 gives noiseless data.
    double median_counts = 0.0;
    /// Gaussian multiplicative noise on a and a (1 - V) (direct method only).
    double relative_noise = 0.0;
    /// Scales every true visibility before measurement.
    double visibility_scale = 1.0;
    bool with_intensities = true;
    /// Counts per row for the intensity measurement; 0 gives noiseless rows.
    double intensity_counts = 0.0;
    double dip_x0_um = 0.0;
    double dip_sigma_um = 60.0;
    int scan_points = 21;
    double scan_span_sigmas = 3.0;
    std::uint64_t seed = 0;
};

struct DipRecord {
    int h = 0;
    int k = 0;
    int i = 0;
    int j = 0;
    std::vector<double> positions;
    std::vector<double> counts;
    DipFit fit;
    bool fitted = false;
};

HomDataset synthesize_dataset(const ComplexMatrix& u, std::span<const int> inputs,
                              std::span<const std::pair<int, int>> pairs, const SynthesisOptions& options = {},
                              std::vector<DipRecord>* records = nullptr);

// ----------------------------------------------------------- reconstruction

struct ReconstructedSubmatrix {
    std::vector<int> inputs;
    RealMatrix moduli;
    /// Wrapped to (-pi, pi]; zero on row 0 and column 0.
    RealMatrix phases;
    std::string gauge = "row0-col0";
    double chi2 = 0.0;
    double chi2_data = 0.0;
    bool converged = true;
    std::string warning;

    int rows() const { return static_cast<int>(moduli.rows()); }
    int cols() const { return static_cast<int>(moduli.cols()); }
    ComplexMatrix matrix() const;
};

struct ModuliOptions {
    /// Weight of the unit-norm row constraint.
    double normalization_sigma = 1e-4;
};

/// Rows x m moduli minimising the plateau chi^2.
RealMatrix reconstruct_moduli(const HomDataset& dataset, const ModuliOptions& options = {});

struct PhaseOptions {
    /// Allowed excess of |cos| above 1 before the data are rejected.
    double cos_tolerance = 1e-6;
    /// Uncertainty assigned to row inner products; 0 drops the
    /// orthogonality terms.
    double orthogonality_sigma = 0.02;
};

/// Analytic phase solution followed by refine_chi2 on every sign candidate;
/// returns the best refined candidate.
ReconstructedSubmatrix reconstruct_phases(const HomDataset& dataset, const RealMatrix& moduli,
                                          const PhaseOptions& options = {});

/// Phase-only local minimisation with the moduli held fixed.
ReconstructedSubmatrix refine_chi2(const ReconstructedSubmatrix& candidate, const HomDataset& dataset,
                                   const PhaseOptions& options = {});

/// Objective of refine_chi2 evaluated at `candidate`: {total, data-only}.
std::pair<double, double> phase_chi2(const ReconstructedSubmatrix& candidate, const HomDataset& dataset,
                                     const PhaseOptions& options = {});

ReconstructedSubmatrix reconstruct(const HomDataset& dataset, const ModuliOptions& moduli_options = {},
                                   const PhaseOptions& phase_options = {});

struct GaugeDistance {
    double moduli_rmse = 0.0;
    double phase_quadruple_rmse = 0.0;
};

/// Compares against reference rows (rows x m, same row order), invariant
/// under row/column re-phasing and global complex conjugation.
GaugeDistance gauge_distance(const ReconstructedSubmatrix& a, const ComplexMatrix& reference_rows);

} // namespace ccbs

#endif
