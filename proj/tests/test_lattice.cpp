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

#include <set>

#include "ccbs/lattice.hpp"

using namespace ccbs;

TEST_CASE("ideal triangular lattice keeps nearest neighbours at the pitch")
{
    LatticeSpec spec;
    spec.max_shift_um = 0.0;
    const WaveguideLayout layout = build_lattice(spec);
    CHECK(layout.modes() == 32);
    REQUIRE(!layout.bonds().empty());
    for (double z : {0.0, 7.3, 36.0}) {
        for (const auto& [i, j] : layout.bonds()) {
            CHECK(distance(layout.position(i, z), layout.position(j, z)) == doctest::Approx(11.0).epsilon(1e-12));
        }
    }
    std::vector<int> degree(32, 0);
    for (const auto& [i, j] : layout.bonds()) {
        ++degree[i];
        ++degree[j];
    }
    CHECK(*std::max_element(degree.begin(), degree.end()) <= 6);
    CHECK(*std::max_element(degree.begin(), degree.end()) == 6);
}

TEST_CASE("knot displacements stay within max_shift and are seeded")
{
    LatticeSpec spec;
    spec.seed = 7;
    const WaveguideLayout a = build_lattice(spec);
    const WaveguideLayout b = build_lattice(spec);
    double largest = 0.0;
    for (int i = 0; i < a.modes(); ++i) {
        for (std::size_t k = 0; k < a.knot_z_mm().size(); ++k) {
            const Point2 s = a.knot_shift(i, static_cast<int>(k));
            const double r = std::hypot(s.x, s.y);
            CHECK(r <= 2.0);
            largest = std::max(largest, r);
            CHECK(s.x == b.knot_shift(i, static_cast<int>(k)).x);
            CHECK(s.y == b.knot_shift(i, static_cast<int>(k)).y);
        }
        for (double z : {0.0, 3.1, 17.9, 36.0}) {
            const Point2 p = a.position(i, z);
            const Point2 q = a.ideal_site(i);
            CHECK(std::hypot(p.x - q.x, p.y - q.y) <= 2.0 + 1e-12);
        }
    }
    CHECK(largest > 1.0);
    spec.seed = 8;
    const WaveguideLayout c = build_lattice(spec);
    CHECK(c.knot_shift(0, 0).x != a.knot_shift(0, 0).x);
}

TEST_CASE("invalid lattice specs are rejected")
{
    LatticeSpec spec;
    spec.pitch_um = 0.0;
    CHECK_THROWS_AS(build_lattice(spec), ConfigError);
    spec = LatticeSpec{};
    spec.max_shift_um = 5.5;
    CHECK_THROWS_AS(build_lattice(spec), ConfigError);
    spec = LatticeSpec{};
    spec.rows = 1;
    spec.cols = 1;
    CHECK_THROWS_AS(build_lattice(spec), ConfigError);
    CHECK_THROWS_AS(parse_lattice_kind("hexagonal"), ConfigError);
    CHECK(parse_lattice_kind("square") == LatticeKind::square);
}

TEST_CASE("symmetry permutation maps the ideal lattice onto itself")
{
    for (LatticeKind kind : {LatticeKind::linear, LatticeKind::square, LatticeKind::triangular}) {
        LatticeSpec spec;
        spec.kind = kind;
        spec.max_shift_um = 0.0;
        if (kind == LatticeKind::linear) {
            spec.rows = 1;
        }
        const WaveguideLayout layout = build_lattice(spec);
        const auto perm = layout.symmetry_permutation();
        REQUIRE(static_cast<int>(perm.size()) == layout.modes());
        CHECK(std::set<int>(perm.begin(), perm.end()).size() == perm.size());
        std::set<std::pair<int, int>> bonds(layout.bonds().begin(), layout.bonds().end());
        for (const auto& [i, j] : layout.bonds()) {
            const int a = std::min(perm[i], perm[j]);
            const int b = std::max(perm[i], perm[j]);
            CHECK(bonds.count({a, b}) == 1);
        }
    }
}

TEST_CASE("coupling law")
{
    CouplingModel model;
    CHECK(coupling_coefficient(model.d0_um, model) == doctest::Approx(model.c0_per_mm));
    CHECK(coupling_coefficient(model.d0_um + model.kappa_um, model) ==
          doctest::Approx(model.c0_per_mm / std::exp(1.0)).epsilon(1e-14));
    CHECK(coupling_coefficient(11.0, model) == doctest::Approx(0.2));
    CHECK(coupling_coefficient(10.0, model) > coupling_coefficient(10.5, model));
    CHECK_THROWS_AS(coupling_coefficient(0.0, model), DomainError);
    CHECK_THROWS_AS(coupling_coefficient(-1.0, model), DomainError);
}

TEST_CASE("heater detunings are linear in power and peak nearest the heater")
{
    LatticeSpec spec;
    spec.max_shift_um = 0.0;
    const WaveguideLayout layout = build_lattice(spec);
    HeaterBank bank = default_heater_bank(layout);
    CHECK(bank.size() == 16);
    CHECK(heater_detunings(bank, layout, 5.0).isZero(0.0));

    bank.powers_mW[0] = 100.0;
    const RealVector d1 = heater_detunings(bank, layout, 1.0);
    for (auto& p : bank.powers_mW) {
        p *= 2.0;
    }
    const RealVector d2 = heater_detunings(bank, layout, 1.0);
    CHECK((d2 - 2.0 * d1).cwiseAbs().maxCoeff() == 0.0);

    int nearest = 0;
    double best = 1e300;
    const Heater& h = bank.heaters[0];
    for (int i = 0; i < layout.modes(); ++i) {
        const Point2 p = layout.position(i, 1.0);
        const double dist = std::hypot(p.x - h.x_um, p.y - h.y_um);
        if (dist < best) {
            best = dist;
            nearest = i;
        }
    }
    Eigen::Index argmax = 0;
    d1.maxCoeff(&argmax);
    CHECK(argmax == nearest);
    // Outside the heater's z-span nothing changes.
    CHECK(heater_detunings(bank, layout, 30.0).isZero(0.0));
    bank.powers_mW[1] = -1.0;
    CHECK_THROWS_AS(heater_detunings(bank, layout, 1.0), ConfigError);
}
