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


#include "ccbs/interference.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <memory>
#include <numeric>

#include "ccbs/random.hpp"

namespace ccbs {

FockPattern::FockPattern(std::vector<int> occupations) : occupations_(std::move(occupations))
{
    for (int n : occupations_) {
        if (n < 0) {
            throw DomainError("occupation numbers must be non-negative");
        }
        photons_ += n;
    }
}

FockPattern FockPattern::from_modes(int m, std::span<const int> modes)
{
    std::vector<int> occ(static_cast<std::size_t>(m), 0);
    for (int mode : modes) {
        if (mode < 0 || mode >= m) {
            throw ConfigError("mode index " + std::to_string(mode) + " outside [0, " + std::to_string(m) + ")");
        }
        ++occ[mode];
    }
    return FockPattern(std::move(occ));
}

bool FockPattern::collision_free() const
{
    return std::all_of(occupations_.begin(), occupations_.end(), [](int n) { return n <= 1; });
}

std::vector<int> FockPattern::mode_list() const
{
    std::vector<int> list;
    list.reserve(static_cast<std::size_t>(photons_));
    for (int i = 0; i < modes(); ++i) {
        for (int k = 0; k < occupations_[i]; ++k) {
            list.push_back(i);
        }
    }
    return list;
}

std::string_view to_string(Statistics statistics)
{
    return statistics == Statistics::indistinguishable ? "indistinguishable" : "distinguishable";
}

Statistics parse_statistics(std::string_view name)
{
    if (name == "indistinguishable") {
        return Statistics::indistinguishable;
    }
    if (name == "distinguishable") {
        return Statistics::distinguishable;
    }
    throw ConfigError("unknown statistics '" + std::string(name) + "'");
}

namespace {

template <typename Scalar, typename MatrixType>
Scalar glynn_permanent(const MatrixType& a)
{
    if (a.rows() != a.cols()) {
        throw DomainError("permanent of a non-square matrix");
    }
    const auto n = static_cast<int>(a.rows());
    if (n == 0) {
        return Scalar(1.0);
    }
    if (n > kMaxPermanentSize) {
        throw CapacityError("permanent supports n <= " + std::to_string(kMaxPermanentSize));
    }
    if (n == 1) {
        return a(0, 0);
    }
    // delta_0 is pinned to +1; the remaining n-1 signs walk a Gray code.
    std::vector<Scalar> colsum(static_cast<std::size_t>(n));
    for (int j = 0; j < n; ++j) {
        Scalar s(0.0);
        for (int i = 0; i < n; ++i) {
            s += a(i, j);
        }
        colsum[j] = s;
    }
    std::vector<int> delta(static_cast<std::size_t>(n), 1);
    const auto product = [&]() {
        Scalar p = colsum[0];
        for (int j = 1; j < n; ++j) {
            p *= colsum[j];
        }
        return p;
    };
    Scalar total = product();
    int sign = 1;
    const std::uint64_t steps = std::uint64_t{1} << (n - 1);
    for (std::uint64_t g = 1; g < steps; ++g) {
        const int row = std::countr_zero(g) + 1;
        const double twice = 2.0 * delta[row];
        for (int j = 0; j < n; ++j) {
            colsum[j] -= twice * a(row, j);
        }
        delta[row] = -delta[row];
        sign = -sign;
        if (sign > 0) {
            total += product();
        } else {
            total -= product();
        }
    }
    return total / static_cast<double>(steps);
}

double log_factorial_product(const FockPattern& p)
{
    double s = 0.0;
    for (int n : p.occupations()) {
        s += std::lgamma(n + 1.0);
    }
    return s;
}

void check_compatible(const ComplexMatrix& u, const FockPattern& input, const FockPattern& output)
{
    if (input.photons() != output.photons()) {
        throw DomainError("input and output photon numbers differ");
    }
    if (input.modes() != u.cols() || output.modes() != u.rows()) {
        throw DomainError("pattern length does not match the unitary");
    }
}

} // namespace

Complex permanent(const ComplexMatrix& a)
{
    return glynn_permanent<Complex>(a);
}

double permanent(const RealMatrix& a)
{
    return glynn_permanent<double>(a);
}

ComplexMatrix scattering_submatrix(const ComplexMatrix& u, const FockPattern& input, const FockPattern& output)
{
    check_compatible(u, input, output);
    const auto rows = output.mode_list();
    const auto cols = input.mode_list();
    ComplexMatrix m(static_cast<Eigen::Index>(rows.size()), static_cast<Eigen::Index>(cols.size()));
    for (std::size_t r = 0; r < rows.size(); ++r) {
        for (std::size_t c = 0; c < cols.size(); ++c) {
            m(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(c)) = u(rows[r], cols[c]);
        }
    }
    return m;
}

double output_probability(const ComplexMatrix& u, const FockPattern& input, const FockPattern& output,
                          Statistics statistics)
{
    const ComplexMatrix m = scattering_submatrix(u, input, output);
    if (statistics == Statistics::indistinguishable) {
        const double norm = std::exp(log_factorial_product(input) + log_factorial_product(output));
        return std::norm(permanent(m)) / norm;
    }
    const RealMatrix intensities = m.cwiseAbs2();
    return permanent(intensities) / std::exp(log_factorial_product(output));
}

std::vector<FockPattern> enumerate_patterns(int m, int n, bool collision_free, std::span<const int> allowed)
{
    if (m < 1 || n < 0) {
        throw DomainError("enumerate_patterns: need m >= 1 and n >= 0");
    }
    std::vector<int> modes(allowed.begin(), allowed.end());
    std::sort(modes.begin(), modes.end());
    modes.erase(std::unique(modes.begin(), modes.end()), modes.end());
    for (int mode : modes) {
        if (mode < 0 || mode >= m) {
            throw DomainError("allowed mode outside [0, m)");
        }
    }
    std::vector<FockPattern> out;
    const int k = static_cast<int>(modes.size());
    if (n == 0) {
        out.emplace_back(std::vector<int>(static_cast<std::size_t>(m), 0));
        return out;
    }
    if (k == 0 || (collision_free && n > k)) {
        return out;
    }
    // idx is a non-decreasing (or strictly increasing) index tuple into `modes`.
    std::vector<int> idx(static_cast<std::size_t>(n));
    for (int t = 0; t < n; ++t) {
        idx[t] = collision_free ? t : 0;
    }
    while (true) {
        std::vector<int> occ(static_cast<std::size_t>(m), 0);
        for (int t : idx) {
            ++occ[modes[t]];
        }
        out.emplace_back(std::move(occ));
        int pos = n - 1;
        while (pos >= 0) {
            const int limit = collision_free ? k - (n - pos) : k - 1;
            if (idx[pos] < limit) {
                break;
            }
            --pos;
        }
        if (pos < 0) {
            break;
        }
        ++idx[pos];
        for (int t = pos + 1; t < n; ++t) {
            idx[t] = collision_free ? idx[t - 1] + 1 : idx[pos];
        }
    }
    return out;
}

std::vector<FockPattern> enumerate_patterns(int m, int n, bool collision_free)
{
    std::vector<int> all(static_cast<std::size_t>(std::max(m, 0)));
    std::iota(all.begin(), all.end(), 0);
    return enumerate_patterns(m, n, collision_free, all);
}

ProbabilityTable distribution(const ComplexMatrix& u, const FockPattern& input, Statistics statistics,
                              const TableOptions& options)
{
    if (u.rows() != u.cols() || input.modes() != u.cols()) {
        throw DomainError("input pattern does not match the unitary");
    }
    if (input.photons() > kMaxPermanentSize) {
        throw CapacityError("photon number above the supported permanent size");
    }
    const int m = static_cast<int>(u.rows());
    for (int e : options.excluded_outputs) {
        if (e < 0 || e >= m) {
            throw ConfigError("excluded output outside [0, m)");
        }
    }
    std::vector<int> allowed;
    for (int i = 0; i < m; ++i) {
        if (std::find(options.excluded_outputs.begin(), options.excluded_outputs.end(), i) ==
            options.excluded_outputs.end()) {
            allowed.push_back(i);
        }
    }
    ProbabilityTable table;
    table.patterns = enumerate_patterns(m, input.photons(), options.collision_free, allowed);
    table.probabilities.resize(table.patterns.size());
    const auto count = static_cast<std::ptrdiff_t>(table.patterns.size());
#if defined(_OPENMP)
#pragma omp parallel for schedule(static)
#endif
    for (std::ptrdiff_t p = 0; p < count; ++p) {
        table.probabilities[p] = output_probability(u, input, table.patterns[p], statistics);
    }
    table.total_mass = std::accumulate(table.probabilities.begin(), table.probabilities.end(), 0.0);
    return table;
}

std::string_view to_string(Branch branch)
{
    switch (branch) {
    case Branch::fixed:
        return "fixed";
    case Branch::b1111:
        return "1111";
    case Branch::b2002:
        return "2002";
    case Branch::b0220:
        return "0220";
    }
    return "unknown";
}

Branch parse_branch(std::string_view name)
{
    for (Branch b : {Branch::fixed, Branch::b1111, Branch::b2002, Branch::b0220}) {
        if (to_string(b) == name) {
            return b;
        }
    }
    throw ConfigError("unknown source branch '" + std::string(name) + "'");
}

namespace {

class TableSampler {
public:
    explicit TableSampler(const ProbabilityTable& table) : table_(table)
    {
        if (table.patterns.empty() || !(table.total_mass > 0.0)) {
            throw DomainError("cannot sample from an empty or zero-mass table");
        }
        cumulative_.resize(table.probabilities.size());
        std::partial_sum(table.probabilities.begin(), table.probabilities.end(), cumulative_.begin());
    }

    const FockPattern& draw(Rng& rng) const
    {
        const double target = uniform01(rng) * cumulative_.back();
        auto it = std::upper_bound(cumulative_.begin(), cumulative_.end(), target);
        if (it == cumulative_.end()) {
            --it;
        }
        // Skip zero-probability entries that share a cumulative value.
        auto index = static_cast<std::size_t>(it - cumulative_.begin());
        while (table_.probabilities[index] == 0.0 && index + 1 < cumulative_.size()) {
            ++index;
        }
        return table_.patterns[index];
    }

private:
    const ProbabilityTable& table_;
    std::vector<double> cumulative_;
};

} // namespace

std::vector<SampleEvent> sample(const ProbabilityTable& table, std::uint64_t seed, std::size_t count, Branch branch,
                                bool distinguishable)
{
    std::vector<SampleEvent> events;
    if (count == 0) {
        return events;
    }
    TableSampler sampler(table);
    Rng rng(seed);
    events.reserve(count);
    for (std::size_t k = 0; k < count; ++k) {
        events.push_back({k, branch, sampler.draw(rng).mode_list(), distinguishable});
    }
    return events;
}

double SourceWeights::weight(Branch branch) const
{
    switch (branch) {
    case Branch::b1111:
        return normalized[0];
    case Branch::b2002:
        return normalized[1];
    case Branch::b0220:
        return normalized[2];
    case Branch::fixed:
        break;
    }
    throw DomainError("fixed inputs carry no source weight");
}

SourceWeights spdc_weights(double R)
{
    if (!(R >= 0.0) || !std::isfinite(R)) {
        throw DomainError("source ratio R must be finite and non-negative");
    }
    SourceWeights w;
    w.R = R;
    w.alpha = R;
    w.beta = R * R;
    w.gamma = 1.0;
    const double total = w.alpha + w.beta + w.gamma;
    w.normalized = {w.alpha / total, w.beta / total, w.gamma / total};
    return w;
}

FockPattern branch_input(Branch branch, int m, std::span<const int> source_inputs)
{
    if (source_inputs.size() != 4) {
        throw ConfigError("the SPDC source needs exactly 4 designated input waveguides");
    }
    const std::array<int, 4> modes{source_inputs[0], source_inputs[1], source_inputs[2], source_inputs[3]};
    switch (branch) {
    case Branch::b1111:
        return FockPattern::from_modes(m, modes);
    case Branch::b2002: {
        const std::array<int, 4> occ{modes[0], modes[0], modes[3], modes[3]};
        return FockPattern::from_modes(m, occ);
    }
    case Branch::b0220: {
        const std::array<int, 4> occ{modes[1], modes[1], modes[2], modes[2]};
        return FockPattern::from_modes(m, occ);
    }
    case Branch::fixed:
        break;
    }
    throw DomainError("fixed branch has no SPDC input");
}

namespace {

constexpr std::array<Branch, 3> kSpdcBranches{Branch::b1111, Branch::b2002, Branch::b0220};

}

ProbabilityTable spdc_distribution(const ComplexMatrix& u, const SourceWeights& weights, Statistics statistics,
                                   std::span<const int> source_inputs, const TableOptions& options)
{
    const int m = static_cast<int>(u.rows());
    ProbabilityTable mixture;
    for (Branch b : kSpdcBranches) {
        const ProbabilityTable t = distribution(u, branch_input(b, m, source_inputs), statistics, options);
        if (mixture.patterns.empty()) {
            mixture.patterns = t.patterns;
            mixture.probabilities.assign(t.probabilities.size(), 0.0);
        }
        const double w = weights.weight(b);
        for (std::size_t p = 0; p < t.probabilities.size(); ++p) {
            mixture.probabilities[p] += w * t.probabilities[p];
        }
    }
    mixture.total_mass = std::accumulate(mixture.probabilities.begin(), mixture.probabilities.end(), 0.0);
    return mixture;
}

std::vector<SampleEvent> spdc_sample(const ComplexMatrix& u, const SourceWeights& weights, Statistics statistics,
                                     std::span<const int> source_inputs, std::uint64_t seed, std::size_t count,
                                     const TableOptions& options)
{
    const int m = static_cast<int>(u.rows());
    // Validate before building any table.
    branch_input(Branch::b1111, m, source_inputs);
    std::vector<ProbabilityTable> tables;
    for (Branch b : kSpdcBranches) {
        if (weights.weight(b) > 0.0) {
            tables.push_back(distribution(u, branch_input(b, m, source_inputs), statistics, options));
        } else {
            tables.emplace_back();
        }
    }
    std::vector<SampleEvent> events;
    if (count == 0) {
        return events;
    }
    std::vector<std::unique_ptr<TableSampler>> per_branch(3);
    for (std::size_t b = 0; b < 3; ++b) {
        if (weights.normalized[b] > 0.0) {
            per_branch[b] = std::make_unique<TableSampler>(tables[b]);
        }
    }
    Rng rng(seed);
    const bool dist = statistics == Statistics::distinguishable;
    events.reserve(count);
    for (std::size_t k = 0; k < count; ++k) {
        const double u01 = uniform01(rng);
        std::size_t b = 0;
        double acc = 0.0;
        for (std::size_t c = 0; c < 3; ++c) {
            if (!per_branch[c]) {
                continue;
            }
            b = c;
            acc += weights.normalized[c];
            if (u01 < acc) {
                break;
            }
        }
        events.push_back({k, kSpdcBranches[b], per_branch[b]->draw(rng).mode_list(), dist});
    }
    return events;
}

} // namespace ccbs
