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


#include "ccbs/validation.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "ccbs/random.hpp"

namespace ccbs {

std::string_view to_string(TestKind kind)
{
    return kind == TestKind::uniform ? "uniform" : "distinguishable";
}

TestKind parse_test_kind(std::string_view name)
{
    if (name == "uniform") {
        return TestKind::uniform;
    }
    if (name == "distinguishable") {
        return TestKind::distinguishable;
    }
    throw ConfigError("unknown validation test '" + std::string(name) + "'");
}

int InputModel::photons() const
{
    return spdc ? 4 : static_cast<int>(input_modes.size());
}

FockPattern InputModel::input_for(Branch branch, int m) const
{
    if (spdc) {
        if (branch == Branch::fixed) {
            throw DomainError("event without source branch scored against an SPDC input");
        }
        return branch_input(branch, m, input_modes);
    }
    return FockPattern::from_modes(m, input_modes);
}

double ols_slope(std::span<const int> counter)
{
    const auto n = static_cast<double>(counter.size());
    if (counter.size() < 2) {
        return 0.0;
    }
    const double mean_k = (n + 1.0) / 2.0;
    double mean_c = 0.0;
    for (int c : counter) {
        mean_c += c;
    }
    mean_c /= n;
    double sxy = 0.0;
    double sxx = 0.0;
    for (std::size_t k = 0; k < counter.size(); ++k) {
        const double dx = static_cast<double>(k + 1) - mean_k;
        sxy += dx * (counter[k] - mean_c);
        sxx += dx * dx;
    }
    return sxy / sxx;
}

int uniform_step(const ComplexMatrix& u, std::span<const int> outputs, std::span<const int> inputs, int n, int m)
{
    double p = 1.0;
    for (int i : outputs) {
        double row = 0.0;
        for (int j : inputs) {
            row += std::norm(u(i, j));
        }
        p *= row;
    }
    const double threshold = std::pow(static_cast<double>(n) / m, n);
    return p >= threshold ? 1 : -1;
}

namespace {

std::vector<int> distinct_inputs(const InputModel& model)
{
    std::vector<int> inputs = model.input_modes;
    std::sort(inputs.begin(), inputs.end());
    inputs.erase(std::unique(inputs.begin(), inputs.end()), inputs.end());
    return inputs;
}

bool event_fits(const SampleEvent& e, const ComplexMatrix& u, const InputModel& model)
{
    if (static_cast<int>(e.output.size()) != model.photons()) {
        return false;
    }
    return std::all_of(e.output.begin(), e.output.end(), [&](int o) { return o >= 0 && o < u.rows(); });
}

void check_model(const ComplexMatrix& u, const InputModel& model)
{
    if (u.rows() != u.cols()) {
        throw ConfigError("validation needs a square unitary");
    }
    if (model.input_modes.empty()) {
        throw ConfigError("validation needs designated input modes");
    }
    for (int j : model.input_modes) {
        if (j < 0 || j >= u.cols()) {
            throw ConfigError("designated input " + std::to_string(j) + " outside the unitary");
        }
    }
    if (model.spdc && model.input_modes.size() != 4) {
        throw ConfigError("SPDC scoring needs exactly 4 source waveguides");
    }
    if (model.active_outputs < 0 || model.active_outputs > u.rows()) {
        throw ConfigError("active output count outside [0, m]");
    }
}

void finish(ValidationTrace& trace)
{
    trace.slope = ols_slope(trace.counter);
    trace.normalized_slope = trace.slope;
}

} // namespace

ValidationTrace run_uniform_test(std::span<const SampleEvent> events, const ComplexMatrix& u, const InputModel& model)
{
    check_model(u, model);
    ValidationTrace trace;
    trace.kind = TestKind::uniform;
    const auto inputs = distinct_inputs(model);
    const int n = model.photons();
    const int m = model.active_outputs > 0 ? model.active_outputs : static_cast<int>(u.rows());
    int w = 0;
    for (const auto& e : events) {
        if (!event_fits(e, u, model)) {
            ++trace.rejected;
            continue;
        }
        w += uniform_step(u, e.output, inputs, n, m);
        trace.counter.push_back(w);
    }
    finish(trace);
    return trace;
}

ValidationTrace run_distinguishable_test(std::span<const SampleEvent> events, const ComplexMatrix& u,
                                         const InputModel& model)
{
    check_model(u, model);
    ValidationTrace trace;
    trace.kind = TestKind::distinguishable;
    const int m = static_cast<int>(u.rows());
    int c = 0;
    for (const auto& e : events) {
        if (!event_fits(e, u, model)) {
            ++trace.rejected;
            continue;
        }
        const FockPattern out = FockPattern::from_modes(m, e.output);
        double q = 0.0;
        double d = 0.0;
        if (model.spdc && model.scoring == BranchScoring::marginal) {
            for (Branch b : {Branch::b1111, Branch::b2002, Branch::b0220}) {
                const double w = model.spdc->weight(b);
                if (w == 0.0) {
                    continue;
                }
                const FockPattern in = model.input_for(b, m);
                q += w * output_probability(u, in, out, Statistics::indistinguishable);
                d += w * output_probability(u, in, out, Statistics::distinguishable);
            }
        } else {
            if (model.spdc && e.branch == Branch::fixed) {
                ++trace.rejected;
                continue;
            }
            const FockPattern in = model.input_for(e.branch, m);
            q = output_probability(u, in, out, Statistics::indistinguishable);
            d = output_probability(u, in, out, Statistics::distinguishable);
        }
        if (!(d > 0.0)) {
            ++trace.rejected;
            continue;
        }
        c += (q / d >= 1.0) ? 1 : -1;
        trace.counter.push_back(c);
    }
    finish(trace);
    return trace;
}

ValidationTrace run_test(TestKind kind, std::span<const SampleEvent> events, const ComplexMatrix& u,
                         const InputModel& model)
{
    return kind == TestKind::uniform ? run_uniform_test(events, u, model) : run_distinguishable_test(events, u, model);
}

void normalize(ValidationTrace& trace, double reference_slope)
{
    if (!(std::abs(reference_slope) > 0.0)) {
        throw DomainError("reference slope for normalisation is zero");
    }
    trace.normalized_slope = trace.slope / std::abs(reference_slope);
}

SlopeEnsemble wrong_unitary_slope_histogram(TestKind kind, std::span<const SampleEvent> events,
                                            const ComplexMatrix& true_u, const InputModel& model,
                                            std::size_t ensemble_size, std::uint64_t seed, double normalization,
                                            int bins)
{
    if (ensemble_size < 2) {
        throw DomainError("z-score undefined for an ensemble of fewer than two unitaries");
    }
    if (!(std::abs(normalization) > 0.0)) {
        throw DomainError("slope normalisation must be non-zero");
    }
    check_model(true_u, model);
    const int m = static_cast<int>(true_u.rows());
    const double scale = 1.0 / std::abs(normalization);

    SlopeEnsemble out;
    out.true_normalized_slope = run_test(kind, events, true_u, model).slope * scale;
    out.normalized_slopes.resize(ensemble_size);
    const auto count = static_cast<std::ptrdiff_t>(ensemble_size);
#if defined(_OPENMP)
#pragma omp parallel for schedule(dynamic)
#endif
    for (std::ptrdiff_t e = 0; e < count; ++e) {
        const UnitaryMatrix wrong = haar_unitary(m, derive_seed(seed, "wrong-unitary", static_cast<std::uint64_t>(e)));
        out.normalized_slopes[e] = run_test(kind, events, wrong.matrix(), model).slope * scale;
    }
    const double n = static_cast<double>(ensemble_size);
    out.mean = std::accumulate(out.normalized_slopes.begin(), out.normalized_slopes.end(), 0.0) / n;
    double var = 0.0;
    for (double s : out.normalized_slopes) {
        var += (s - out.mean) * (s - out.mean);
    }
    out.stddev = std::sqrt(var / (n - 1.0));
    if (!(out.stddev > 0.0)) {
        throw DomainError("wrong-unitary slopes have zero spread; z-score undefined");
    }
    out.z_score = (out.true_normalized_slope - out.mean) / out.stddev;

    const auto [lo_it, hi_it] = std::minmax_element(out.normalized_slopes.begin(), out.normalized_slopes.end());
    const double lo = std::min(*lo_it, out.true_normalized_slope);
    const double hi = std::max(*hi_it, out.true_normalized_slope);
    const double pad = 1e-9 + 1e-6 * (hi - lo);
    out.histogram = make_histogram(out.normalized_slopes, uniform_edges(lo - pad, hi + pad, bins));
    return out;
}

} // namespace ccbs
