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


#ifndef CCBS_LATTICE_HPP
#define CCBS_LATTICE_HPP

#include <cstdint>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "ccbs/common.hpp"

namespace ccbs {

enum class LatticeKind { linear, square, triangular };

std::string_view to_string(LatticeKind kind);
LatticeKind parse_lattice_kind(std::string_view name);

/// Geometry of the randomly modulated waveguide array.
///
/// Lengths in the transverse plane are in micrometres, the propagation
/// coordinate z in millimetres.
struct LatticeSpec {
    int rows = 4;
    int cols = 8;
    double pitch_um = 11.0;
    double max_shift_um = 2.0;
    double length_mm = 36.0;
    int n_knots = 8;
    std::uint64_t seed = 0;
    LatticeKind kind = LatticeKind::triangular;

    int modes() const { return rows * cols; }
    void validate() const;
};

struct Point2 {
    double x = 0.0;
    double y = 0.0;
};

inline double distance(Point2 a, Point2 b)
{
    return std::hypot(a.x - b.x, a.y - b.y);
}

/// Per-waveguide piecewise-linear transverse trajectories over [0, L].
///
/// Waveguide i sits at ideal_site(i) displaced by a vector interpolated
/// linearly between displacement knots placed uniformly along z.
class WaveguideLayout {
public:
    WaveguideLayout(LatticeKind kind, double pitch_um, double length_mm, std::vector<Point2> sites,
                    std::vector<double> knot_z_mm, std::vector<std::vector<Point2>> knot_shifts);

    int modes() const { return static_cast<int>(sites_.size()); }
    LatticeKind kind() const { return kind_; }
    double pitch_um() const { return pitch_um_; }
    double length_mm() const { return length_mm_; }

    Point2 ideal_site(int waveguide) const { return sites_.at(waveguide); }
    const std::vector<double>& knot_z_mm() const { return knot_z_mm_; }
    Point2 knot_shift(int waveguide, int knot) const { return shifts_.at(waveguide).at(knot); }

    Point2 position(int waveguide, double z_mm) const;
    std::vector<Point2> positions(double z_mm) const;

    /// Nearest-neighbour pairs (i < j) of the ideal lattice.
    const std::vector<std::pair<int, int>>& bonds() const { return bonds_; }

    /// Permutation realising a geometric symmetry of the ideal lattice:
    /// left-right mirror for linear and square lattices, 180 degree rotation
    /// for the staggered triangular lattice (which has no left-right mirror).
    std::vector<int> symmetry_permutation() const;

private:
    LatticeKind kind_;
    double pitch_um_;
    double length_mm_;
    std::vector<Point2> sites_;
    std::vector<double> knot_z_mm_;
    std::vector<std::vector<Point2>> shifts_;
    std::vector<std::pair<int, int>> bonds_;
};

/// Deterministic in spec.seed. Each knot displacement has radius drawn
/// uniformly in [0, max_shift] and direction uniformly in [0, 2 pi).
WaveguideLayout build_lattice(const LatticeSpec& spec);

/// Exponential evanescent coupling law c(d) = c0 exp(-(d - d0) / kappa).
struct CouplingModel {
    double c0_per_mm = 0.2;
    double d0_um = 11.0;
    double kappa_um = 3.0;
    /// Couplings below this are dropped from the Hamiltonian.
    double cutoff_per_mm = 1e-4;

    void validate() const;
};

double coupling_coefficient(double d_um, const CouplingModel& model);

struct Heater {
    double x_um = 0.0;
    double y_um = 0.0;
    double z_begin_mm = 0.0;
    double z_end_mm = 0.0;
};

/// Resistive heaters with a linear power-to-detuning response and a Gaussian
/// transverse kernel.
struct HeaterBank {
    std::vector<Heater> heaters;
    std::vector<double> powers_mW;
    double kernel_width_um = 25.0;
    /// Detuning per unit power at zero distance, in mm^-1 / mW.
    double alpha_per_mm_mW = 0.0;

    int size() const { return static_cast<int>(heaters.size()); }
    void validate() const;
    /// z positions where some heater switches on or off.
    std::vector<double> edges_mm() const;
};

struct HeaterGeometry {
    int per_side = 8;
    double side_offset_um = 15.0;
    double surface_offset_um = 20.0;
    double kernel_width_um = 25.0;
    /// Calibration target: the strongest heater at this power accumulates
    /// `reference_phase` on its nearest waveguide over its z-span.
    double reference_power_mW = 500.0;
    double reference_phase = 2.0 * kPi;
};

/// Two parallel rows of heaters flanking the array, each row split into
/// `per_side` consecutive z-segments. Powers start at zero.
HeaterBank default_heater_bank(const WaveguideLayout& layout, const HeaterGeometry& geometry = {});

/// Delta k_i(z) = sum_r alpha P_r exp(-|p_i(z) - h_r|^2 / (2 w^2)) over heaters active at z.
RealVector heater_detunings(const HeaterBank& bank, const WaveguideLayout& layout, double z_mm);

} // namespace ccbs

#endif
