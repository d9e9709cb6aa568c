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


#include <doctest.h>

#include "ccbs/evolution.hpp"
#include "ccbs/haarstats.hpp"

using namespace ccbs;

namespace {

WaveguideLayout pair_layout(double length_mm)
{
    LatticeSpec spec;
    spec.kind = LatticeKind::linear;
    spec.rows = 1;
    spec.cols = 2;
    spec.max_shift_um = 0.0;
    spec.length_mm = length_mm;
    return build_lattice(spec);
}

DeviceConfig small_device(std::uint64_t seed)
{
    DeviceConfig dev;
    dev.lattice.rows = 2;
    dev.lattice.cols = 4;
    dev.lattice.seed = seed;
    dev.heaters.per_side = 4;
    return dev;
}

double max_diff(const ComplexMatrix& a, const ComplexMatrix& b)
{
    return (a - b).cwiseAbs().maxCoeff();
}

} // namespace

TEST_CASE("unitarity_defect")
{
    CHECK(unitarity_defect(ComplexMatrix::Identity(4, 4)) == 0.0);
    CHECK(unitarity_defect(2.0 * ComplexMatrix::Identity(3, 3)) == doctest::Approx(3.0));
    CHECK_THROWS_AS(unitarity_defect(ComplexMatrix::Zero(2, 3)), DomainError);
    CHECK(haar_unitary(32, 5).defect() < 1e-12);
}

TEST_CASE("Hamiltonian is Hermitian with lattice sparsity")
{
    LatticeSpec spec;
    spec.seed = 3;
    const WaveguideLayout layout = build_lattice(spec);
    HeaterBank bank = default_heater_bank(layout);
    bank.powers_mW = random_heater_powers(bank.size(), 500.0, 1);
    const HermitianMatrix h = assemble_hamiltonian(layout, CouplingModel{}, bank, 12.5);
    CHECK(h.size() == 32);
    for (int i = 0; i < 32; ++i) {
        int neighbours = 0;
        for (int j = 0; j < 32; ++j) {
            CHECK(h(i, j) == std::conj(h(j, i)));
            if (i != j && h(i, j) != Complex(0.0)) {
                CHECK(h(i, j).real() > 0.0);
                CHECK(h(i, j).imag() == 0.0);
                ++neighbours;
            }
        }
        CHECK(neighbours <= 6);
    }

    const WaveguideLayout two = pair_layout(10.0);
    const HermitianMatrix h2 = assemble_hamiltonian(two, CouplingModel{}, HeaterBank{}, 0.0);
    CHECK(h2(0, 1).real() == doctest::Approx(0.2));
    CHECK(h2(1, 0).real() == doctest::Approx(0.2));
    bank.powers_mW.pop_back();
    CHECK_THROWS_AS(assemble_hamiltonian(layout, CouplingModel{}, bank, 0.0), ConfigError);
}

TEST_CASE("zero coupling and detuning propagate to the identity")
{
    LatticeSpec spec;
    spec.max_shift_um = 0.0;
    spec.pitch_um = 400.0;
    const WaveguideLayout layout = build_lattice(spec);
    CouplingModel model;
    model.cutoff_per_mm = 1e-3;
    PropagationOptions opts;
    opts.n_steps = 16;
    const UnitaryMatrix u = propagate(layout, model, HeaterBank{}, opts);
    CHECK(u.matrix() == ComplexMatrix::Identity(32, 32));
}

TEST_CASE("two-mode coupler transfers sin^2(cL)")
{
    for (double length : {1.0, 5.0, 7.85, 36.0}) {
        const WaveguideLayout layout = pair_layout(length);
        for (Integrator integ : {Integrator::magnus6, Integrator::midpoint}) {
            PropagationOptions opts;
            opts.integrator = integ;
            opts.n_steps = 64;
            const UnitaryMatrix u = propagate(layout, CouplingModel{}, HeaterBank{}, opts);
            CHECK(std::abs(std::norm(u(0, 1)) - std::pow(std::sin(0.2 * length), 2)) < 1e-10);
            CHECK(u.defect() < 1e-12);
        }
    }
}

TEST_CASE("device unitaries conserve norm and are seeded")
{
    const DeviceConfig dev = small_device(11);
    const UnitaryMatrix u = simulate_device(dev);
    CHECK(u.defect() < 1e-9);
    const ComplexVector a = ComplexVector::Random(8);
    CHECK(std::abs((u.matrix() * a).norm() - a.norm()) < 1e-9);
    CHECK(simulate_device(dev).matrix() == u.matrix());
    DeviceConfig other = dev;
    other.lattice.seed = 12;
    CHECK(max_diff(simulate_device(other).matrix(), u.matrix()) > 1e-3);
    DeviceConfig bad = dev;
    bad.powers_mW = {1.0, 2.0};
    CHECK_THROWS_AS(simulate_device(bad), ConfigError);
}

TEST_CASE("integrator orders: midpoint second, Magnus sixth")
{
    DeviceConfig dev = small_device(4);
    dev.propagation.n_steps = 2048;
    const ComplexMatrix ref = simulate_device(dev).matrix();
    auto err = [&](Integrator integ, int steps) {
        DeviceConfig d = dev;
        d.propagation.integrator = integ;
        d.propagation.n_steps = steps;
        return max_diff(simulate_device(d).matrix(), ref);
    };
    const double mid_ratio = err(Integrator::midpoint, 32) / err(Integrator::midpoint, 64);
    CHECK(mid_ratio > 3.5);
    CHECK(mid_ratio < 4.5);
    const double mag_ratio = err(Integrator::magnus6, 8) / err(Integrator::magnus6, 16);
    CHECK(mag_ratio > 40.0);
}

TEST_CASE("step halving at the default resolution")
{
    DeviceConfig dev;
    dev.lattice.seed = 2;
    const ComplexMatrix coarse = simulate_device(dev).matrix();
    dev.propagation.n_steps *= 2;
    const ComplexMatrix fine = simulate_device(dev).matrix();
    CHECK(max_diff(coarse, fine) <= 1e-8);
}

TEST_CASE("exp_i_hermitian")
{
    ComplexMatrix h(2, 2);
    h << 0.0, 1.0, 1.0, 0.0;
    const ComplexMatrix e = exp_i_hermitian(h, kPi / 2);
    CHECK(std::abs(e(0, 1) - Complex(0.0, 1.0)) < 1e-14);
    CHECK(std::abs(e(0, 0)) < 1e-14);
}

TEST_CASE("propagation grid honours breakpoints")
{
    LatticeSpec spec;
    spec.n_knots = 5;
    const WaveguideLayout layout = build_lattice(spec);
    const HeaterBank bank = default_heater_bank(layout);
    PropagationOptions opts;
    opts.n_steps = 7;
    const auto grid = propagation_grid(layout, bank, opts);
    CHECK(grid.front() == 0.0);
    CHECK(grid.back() == doctest::Approx(36.0));
    for (double k : layout.knot_z_mm()) {
        CHECK(std::any_of(grid.begin(), grid.end(), [&](double z) { return std::abs(z - k) < 1e-12; }));
    }
    opts.n_steps = 0;
    CHECK_THROWS_AS(propagation_grid(layout, bank, opts), ConfigError);
}
