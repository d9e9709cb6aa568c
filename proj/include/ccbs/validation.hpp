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


#ifndef CCBS_VALIDATION_HPP
#define CCBS_VALIDATION_HPP

#include <cstdint>
#include <optional>
#include <span>
#include <string_view>
#include <vector>

#include "ccbs/common.hpp"
#include "ccbs/haarstats.hpp"
#include "ccbs/interference.hpp"

namespace ccbs {

enum class TestKind { uniform, distinguishable };

std::string_view to_string(TestKind kind);
TestKind parse_test_kind(std::string_view name);

enum class BranchScoring {
    /// Score each event against the input of its recorded source branch.
    recorded,
    /// Weight q and d over all branches with the source weights, as an
    /// experiment that cannot see the branch would.
    marginal,
};

/// What the scorer assumes was injected.
struct InputModel {
    /// Fixed input: one photon per listed waveguide. SPDC input: the four
    /// source waveguides in ket order.
    std::vector<int> input_modes;
    std::optional<SourceWeights> spdc;
    BranchScoring scoring = BranchScoring::recorded;
    /// Active output modes; 0 means all m.
    int active_outputs = 0;

    int photons() const;
    FockPattern input_for(Branch branch, int m) const;
};

struct ValidationTrace {
    TestKind kind = TestKind::uniform;
    /// counter[k] after k + 1 accepted events.
    std::vector<int> counter;
    double slope = 0.0;
    double normalized_slope = 0.0;
    std::size_t rejected = 0;
};

/// Least-squares slope of counter[k] against k = 1..N.
double ols_slope(std::span<const int> counter);

/// +1 when prod_i sum_j |U_ij|^2 >= (n/m)^n over detected outputs i and
/// designated inputs j, else -1.
int uniform_step(const ComplexMatrix& u, std::span<const int> outputs, std::span<const int> inputs, int n, int m);

ValidationTrace run_uniform_test(std::span<const SampleEvent> events, const ComplexMatrix& u, const InputModel& model);

/// +1 when q / d >= 1 (q, d the indistinguishable and distinguishable
/// probabilities of the outcome), else -1; d == 0 rejects the event.
ValidationTrace run_distinguishable_test(std::span<const SampleEvent> events, const ComplexMatrix& u,
                                         const InputModel& model);

ValidationTrace run_test(TestKind kind, std::span<const SampleEvent> events, const ComplexMatrix& u,
                         const InputModel& model);

/// Sets normalized_slope = slope / |reference_slope|.
void normalize(ValidationTrace& trace, double reference_slope);

struct SlopeEnsemble {
    std::vector<double> normalized_slopes;
    Histogram histogram;
    double mean = 0.0;
    double stddev = 0.0;
    double true_normalized_slope = 0.0;
    double z_score = 0.0;
};

/// Re-scores `events` against `ensemble_size` Haar-random unitaries and
/// reports where the slope obtained with `true_u` falls in that spread.
/// Slopes are divided by |normalization| before binning.
SlopeEnsemble wrong_unitary_slope_histogram(TestKind kind, std::span<const SampleEvent> events,
                                            const ComplexMatrix& true_u, const InputModel& model,
                                            std::size_t ensemble_size, std::uint64_t seed,
                                            double normalization = 1.0, int bins = kDefaultBins);

} // namespace ccbs

#endif
