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


#include "ccbs/evolution.hpp"

#include <algorithm>
#include <cmath>

#include <Eigen/Eigenvalues>

#include "ccbs/random.hpp"

namespace ccbs {

void HermitianMatrix::set(int i, int j, Complex value)
{
    if (i == j) {
        entries_(i, i) = value.real();
        return;
    }
    entries_(i, j) = value;
    entries_(j, i) = std::conj(value);
}

double unitarity_defect(const ComplexMatrix& u)
{
    if (u.rows() != u.cols()) {
        throw DomainError("unitarity_defect: matrix is not square");
    }
    const ComplexMatrix gram = u.adjoint() * u - ComplexMatrix::Identity(u.rows(), u.cols());
    return gram.cwiseAbs().maxCoeff();
}

UnitaryMatrix::UnitaryMatrix(ComplexMatrix entries) : entries_(std::move(entries))
{
    defect_ = unitarity_defect(entries_);
}

HermitianMatrix assemble_hamiltonian(const WaveguideLayout& layout, const CouplingModel& model,
                                     const HeaterBank& bank, double z_mm, double k0_per_mm)
{
    model.validate();
    if (!bank.heaters.empty() && bank.size() != static_cast<int>(bank.powers_mW.size())) {
        throw ConfigError("heater bank dimension mismatch");
    }
    const int m = layout.modes();
    HermitianMatrix h(m);
    const RealVector detuning =
        bank.heaters.empty() ? RealVector(RealVector::Zero(m)) : heater_detunings(bank, layout, z_mm);
    for (int i = 0; i < m; ++i) {
        h.set_diagonal(i, k0_per_mm + detuning[i]);
    }
    const auto pos = layout.positions(z_mm);
    for (const auto& [i, j] : layout.bonds()) {
        const double c = coupling_coefficient(distance(pos[i], pos[j]), model);
        if (c >= model.cutoff_per_mm) {
            h.set(i, j, c);
        }
    }
    return h;
}

ComplexMatrix exp_i_hermitian(const ComplexMatrix& h, double t)
{
    if (h.isDiagonal(0.0)) {
        ComplexMatrix out = ComplexMatrix::Zero(h.rows(), h.cols());
        for (Eigen::Index k = 0; k < h.rows(); ++k) {
            out(k, k) = std::polar(1.0, t * h(k, k).real());
        }
        return out;
    }
    Eigen::SelfAdjointEigenSolver<ComplexMatrix> solver(h);
    if (solver.info() != Eigen::Success) {
        throw NumericalError("eigendecomposition failed");
    }
    const auto& v = solver.eigenvectors();
    ComplexVector phases(h.rows());
    for (Eigen::Index k = 0; k < h.rows(); ++k) {
        phases[k] = std::polar(1.0, t * solver.eigenvalues()[k]);
    }
    return v * phases.asDiagonal() * v.adjoint();
}

std::vector<double> propagation_grid(const WaveguideLayout& layout, const HeaterBank& bank,
                                     const PropagationOptions& options)
{
    if (options.n_steps < 1) {
        throw ConfigError("n_steps must be at least 1");
    }
    const double length = layout.length_mm();
    std::vector<double> grid;
    grid.reserve(static_cast<std::size_t>(options.n_steps) + 1);
    for (int s = 0; s <= options.n_steps; ++s) {
        grid.push_back(length * s / options.n_steps);
    }
    grid.back() = length;
    if (!options.align_breakpoints) {
        return grid;
    }
    std::vector<double> breaks = layout.knot_z_mm();
    const auto edges = bank.edges_mm();
    breaks.insert(breaks.end(), edges.begin(), edges.end());
    // Snap to existing nodes.
    const double snap = 1e-9 * length / options.n_steps;
    for (double b : breaks) {
        if (b <= 0.0 || b >= length) {
            continue;
        }
        auto it = std::lower_bound(grid.begin(), grid.end(), b);
        const bool near_upper = it != grid.end() && std::abs(*it - b) <= snap;
        const bool near_lower = it != grid.begin() && std::abs(*(it - 1) - b) <= snap;
        if (!near_upper && !near_lower) {
            grid.insert(it, b);
        }
    }
    return grid;
}

namespace {

ComplexMatrix commutator(const ComplexMatrix& a, const ComplexMatrix& b)
{
    return a * b - b * a;
}

ComplexMatrix slice_propagator(const WaveguideLayout& layout, const CouplingModel& model, const HeaterBank& bank,
                               const PropagationOptions& options, double z0, double z1)
{
    const double h = z1 - z0;
    const auto ham = [&](double z) { return assemble_hamiltonian(layout, model, bank, z, options.k0_per_mm).matrix(); };
    if (options.integrator == Integrator::midpoint) {
        return exp_i_hermitian(ham(z0 + 0.5 * h), h);
    }
    // Omega for y' = A(z) y with A = iH, Gauss nodes 1/2 -+ sqrt(15)/10.
    const Complex i1(0.0, 1.0);
    const double r = std::sqrt(15.0) / 10.0;
    const ComplexMatrix a1 = i1 * ham(z0 + (0.5 - r) * h);
    const ComplexMatrix a2 = i1 * ham(z0 + 0.5 * h);
    const ComplexMatrix a3 = i1 * ham(z0 + (0.5 + r) * h);
    const ComplexMatrix q1 = h * a2;
    const ComplexMatrix q2 = (std::sqrt(15.0) * h / 3.0) * (a3 - a1);
    const ComplexMatrix q3 = (10.0 * h / 3.0) * (a3 - 2.0 * a2 + a1);
    const ComplexMatrix r1 = commutator(q1, q2);
    const ComplexMatrix r2 = commutator(q1, 2.0 * q3 + r1);
    const ComplexMatrix omega =
        q1 + q3 / 12.0 + commutator(-20.0 * q1 - q3 + r1, q2 - r2 / 60.0) / 240.0;
    // omega is anti-Hermitian; exponentiate the Hermitian part -i omega.
    ComplexMatrix generator = -i1 * omega;
    generator = 0.5 * (generator + generator.adjoint()).eval();
    return exp_i_hermitian(generator, 1.0);
}

} // namespace

UnitaryMatrix propagate(const WaveguideLayout& layout, const CouplingModel& model, const HeaterBank& bank,
                        const PropagationOptions& options)
{
    const auto grid = propagation_grid(layout, bank, options);
    // Validate outside the parallel region.
    assemble_hamiltonian(layout, model, bank, 0.0, options.k0_per_mm);
    const auto slices = static_cast<std::ptrdiff_t>(grid.size()) - 1;
    std::vector<ComplexMatrix> factors(static_cast<std::size_t>(slices));
#if defined(_OPENMP)
#pragma omp parallel for schedule(static)
#endif
    for (std::ptrdiff_t s = 0; s < slices; ++s) {
        factors[s] = slice_propagator(layout, model, bank, options, grid[s], grid[s + 1]);
    }
    ComplexMatrix u = ComplexMatrix::Identity(layout.modes(), layout.modes());
    for (const auto& f : factors) {
        u = f * u;
    }
    return UnitaryMatrix(std::move(u));
}

} // namespace ccbs

namespace ccbs {

std::vector<double> random_heater_powers(int count, double max_power_mW, std::uint64_t seed)
{
    if (count < 0 || !(max_power_mW >= 0.0)) {
        throw ConfigError("heater powers need count >= 0 and max power >= 0");
    }
    Rng rng(seed);
    std::vector<double> powers(static_cast<std::size_t>(count));
    for (double& p : powers) {
        p = uniform(rng, 0.0, max_power_mW);
    }
    return powers;
}

UnitaryMatrix simulate_device(const DeviceConfig& config)
{
    config.lattice.validate();
    config.coupling.validate();
    const WaveguideLayout layout = build_lattice(config.lattice);
    HeaterBank bank = default_heater_bank(layout, config.heaters);
    if (config.powers_mW.empty()) {
        bank.powers_mW = random_heater_powers(bank.size(), config.max_power_mW,
                                              derive_seed(config.lattice.seed, "heaters"));
    } else {
        if (static_cast<int>(config.powers_mW.size()) != bank.size()) {
            throw ConfigError("expected " + std::to_string(bank.size()) + " heater powers, got " +
                              std::to_string(config.powers_mW.size()));
        }
        bank.powers_mW = config.powers_mW;
    }
    bank.validate();
    return propagate(layout, config.coupling, bank, config.propagation);
}

} // namespace ccbs
