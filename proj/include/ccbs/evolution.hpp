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


#ifndef CCBS_EVOLUTION_HPP
#define CCBS_EVOLUTION_HPP

#include <vector>

#include "ccbs/common.hpp"
#include "ccbs/lattice.hpp"

namespace ccbs {

/// Complex Hermitian matrix; only the upper triangle is ever written and the
/// lower triangle is mirrored, so H_ij == conj(H_ji) holds bit-for-bit.
class HermitianMatrix {
public:
    explicit HermitianMatrix(int size) : entries_(ComplexMatrix::Zero(size, size)) {}

    int size() const { return static_cast<int>(entries_.rows()); }
    void set(int i, int j, Complex value);
    void set_diagonal(int i, double value) { entries_(i, i) = value; }
    Complex operator()(int i, int j) const { return entries_(i, j); }
    const ComplexMatrix& matrix() const { return entries_; }

private:
    ComplexMatrix entries_;
};

/// max_ij |(U^dagger U - I)_ij|
double unitarity_defect(const ComplexMatrix& u);

class UnitaryMatrix {
public:
    UnitaryMatrix() = default;
    explicit UnitaryMatrix(ComplexMatrix entries);

    int size() const { return static_cast<int>(entries_.rows()); }
    const ComplexMatrix& matrix() const { return entries_; }
    Complex operator()(int i, int j) const { return entries_(i, j); }
    double defect() const { return defect_; }

private:
    ComplexMatrix entries_;
    double defect_ = 0.0;
};

enum class Integrator {
    /// Sixth-order Magnus expansion with three Gauss-Legendre nodes per slice.
    magnus6,
    /// exp(i H(z_mid) dz) per slice; second order.
    midpoint,
};

struct PropagationOptions {
    int n_steps = 1024;
    double k0_per_mm = 0.0;
    Integrator integrator = Integrator::magnus6;
    /// Split slices at modulation knots and heater edges.
    bool align_breakpoints = true;
};

HermitianMatrix assemble_hamiltonian(const WaveguideLayout& layout, const CouplingModel& model,
                                     const HeaterBank& bank, double z_mm, double k0_per_mm = 0.0);

/// exp(i t H) for Hermitian H via eigendecomposition.
ComplexMatrix exp_i_hermitian(const ComplexMatrix& h, double t);

/// Slice boundaries used by propagate(): the uniform grid L k / n_steps,
/// refined at breakpoints when requested.
std::vector<double> propagation_grid(const WaveguideLayout& layout, const HeaterBank& bank,
                                     const PropagationOptions& options);

/// Integrates d a / dz = i H(z) a over the coupling region; later slices
/// multiply from the left.
UnitaryMatrix propagate(const WaveguideLayout& layout, const CouplingModel& model, const HeaterBank& bank,
                        const PropagationOptions& options = {});

/// Everything needed to produce one circuit unitary.
struct DeviceConfig {
    LatticeSpec lattice;
    CouplingModel coupling;
    HeaterGeometry heaters;
    /// One power per heater; empty draws uniform powers in [0, max_power_mW]
    /// from the "heaters" stream of lattice.seed.
    std::vector<double> powers_mW;
    double max_power_mW = 500.0;
    PropagationOptions propagation;
};

std::vector<double> random_heater_powers(int count, double max_power_mW, std::uint64_t seed);

UnitaryMatrix simulate_device(const DeviceConfig& config);

} // namespace ccbs

#endif
