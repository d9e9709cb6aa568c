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


#ifndef CCBS_INTERFERENCE_HPP
#define CCBS_INTERFERENCE_HPP

#include <array>
#include <cstdint>
#include <span>
#include <string_view>
#include <vector>

#include "ccbs/common.hpp"

namespace ccbs {

/// Occupation numbers over m modes.
class FockPattern {
public:
    FockPattern() = default;
    explicit FockPattern(std::vector<int> occupations);

    /// Pattern with one photon per listed mode (repeats allowed).
    static FockPattern from_modes(int m, std::span<const int> modes);

    int modes() const { return static_cast<int>(occupations_.size()); }
    int photons() const { return photons_; }
    bool collision_free() const;
    const std::vector<int>& occupations() const { return occupations_; }
    int operator[](int mode) const { return occupations_.at(mode); }

    /// Mode index of every photon, ascending (mode i listed occupations[i] times).
    std::vector<int> mode_list() const;

    bool operator==(const FockPattern&) const = default;

private:
    std::vector<int> occupations_;
    int photons_ = 0;
};

enum class Statistics { indistinguishable, distinguishable };

std::string_view to_string(Statistics statistics);
Statistics parse_statistics(std::string_view name);

inline constexpr int kMaxPermanentSize = 20;

/// Glynn's formula with Gray-code ordering, O(2^(n-1) n).
Complex permanent(const ComplexMatrix& a);
double permanent(const RealMatrix& a);

/// Scattering matrix for U_(out, in) convention: row i of U repeated out_i
/// times, column j repeated in_j times.
ComplexMatrix scattering_submatrix(const ComplexMatrix& u, const FockPattern& input, const FockPattern& output);

/// indistinguishable: |Per M|^2 / (prod in_j! prod out_i!)
/// distinguishable:   Per |M|^2 / prod out_i!
double output_probability(const ComplexMatrix& u, const FockPattern& input, const FockPattern& output,
                          Statistics statistics);

/// All n-photon patterns over m modes, ordered lexicographically by mode list.
std::vector<FockPattern> enumerate_patterns(int m, int n, bool collision_free);
/// As above but photons may only occupy `allowed` modes.
std::vector<FockPattern> enumerate_patterns(int m, int n, bool collision_free, std::span<const int> allowed);

struct TableOptions {
    bool collision_free = true;
    /// Output modes without a detector (e.g. the herald-trigger slot).
    std::vector<int> excluded_outputs;
};

struct ProbabilityTable {
    std::vector<FockPattern> patterns;
    std::vector<double> probabilities;
    /// Sum of probabilities; < 1 for collision-free or reduced-output tables.
    double total_mass = 0.0;
};

ProbabilityTable distribution(const ComplexMatrix& u, const FockPattern& input, Statistics statistics,
                              const TableOptions& options = {});

enum class Branch { fixed, b1111, b2002, b0220 };

std::string_view to_string(Branch branch);
Branch parse_branch(std::string_view name);

struct SampleEvent {
    std::size_t index = 0;
    Branch branch = Branch::fixed;
    /// Detected output modes, ascending.
    std::vector<int> output;
    bool distinguishable = false;
};

/// i.i.d. draws from the table renormalised by its total mass.
std::vector<SampleEvent> sample(const ProbabilityTable& table, std::uint64_t seed, std::size_t count,
                                Branch branch = Branch::fixed, bool distinguishable = false);

/// Post-selected four-photon SPDC state alpha|1111> + beta|2002> + gamma|0220>.
struct SourceWeights {
    double R = 1.0;
    double alpha = 1.0;
    double beta = 1.0;
    double gamma = 1.0;
    /// (alpha, beta, gamma) / (alpha + beta + gamma), in branch order 1111, 2002, 0220.
    std::array<double, 3> normalized{1.0 / 3.0, 1.0 / 3.0, 1.0 / 3.0};

    double weight(Branch branch) const;
};

SourceWeights spdc_weights(double R);

/// The four source waveguides are given in ket order |n4 n1 n2 n3>: branch
/// 2002 fills the first and last, 0220 the middle two.
FockPattern branch_input(Branch branch, int m, std::span<const int> source_inputs);

/// sum_b w_b P_b(pattern) over the three branches.
ProbabilityTable spdc_distribution(const ComplexMatrix& u, const SourceWeights& weights, Statistics statistics,
                                   std::span<const int> source_inputs, const TableOptions& options = {});

std::vector<SampleEvent> spdc_sample(const ComplexMatrix& u, const SourceWeights& weights, Statistics statistics,
                                     std::span<const int> source_inputs, std::uint64_t seed, std::size_t count,
                                     const TableOptions& options = {});

} // namespace ccbs

#endif
