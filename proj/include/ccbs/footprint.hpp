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


#ifndef CCBS_FOOTPRINT_HPP
#define CCBS_FOOTPRINT_HPP

#include <string>
#include <string_view>
#include <vector>

#include "ccbs/lattice.hpp"

namespace ccbs::footprint {

// Lengths in mm, coupling rates in mm^-1.

enum class FanArrangement { linear, grid };

std::string_view to_string(FanArrangement arrangement);
FanArrangement parse_fan_arrangement(std::string_view name);

struct FootprintParams {
    double R_min_mm = 30.0;
    double pitch_mm = 0.06;
    double fiber_pitch_mm = 0.127;
    double coupling_per_mm = 1.0;
    int modes = 32;
    /// Spreading constant of the 2D minimum-length estimate.
    double B = 2.0;
    LatticeKind lattice = LatticeKind::triangular;
    FanArrangement fan = FanArrangement::linear;

    void validate() const;
};

/// Sinusoidal S-bend covering lateral offset h at minimum radius R_min.
double sbend_length(double R_min_mm, double h_mm);

/// sin^2(c L_C + phi0)
double coupler_reflectivity(double c_per_mm, double L_C_mm, double phi0 = 0.0);

/// Balanced-transfer interaction length pi / (2c).
double coupler_length(double c_per_mm);

/// (m - 1) S-bends of elongation p plus m couplers.
double clements_length(int m, double R_min_mm, double pitch_mm, double c_per_mm);

/// d L_Clem / d m
double clements_increment(double R_min_mm, double pitch_mm, double c_per_mm);

/// beta_z for a plane wave with transverse wavevector (beta_x, beta_y);
/// beta_y is ignored for the linear lattice.
double dispersion(LatticeKind kind, double c_per_mm, double beta_x, double beta_y = 0.0);

struct GroupVelocity {
    double vx = 0.0;
    double vy = 0.0;
};

/// Linear and square: the exact beta-gradient of dispersion(). Triangular:
/// -4c sin(beta) per axis, which is not the gradient of the triangular
/// dispersion relation but gives its quoted maximum 4c.
GroupVelocity group_velocity(LatticeKind kind, double c_per_mm, double beta_x, double beta_y = 0.0);

double max_group_velocity(LatticeKind kind, double c_per_mm);

/// Planar m/(2c); square B sqrt(m)/(2c); triangular B sqrt(m)/(4c).
double min_spread_length(LatticeKind kind, int m, double c_per_mm, double B);

/// Linear fiber array: bound (pi/2) sqrt((m-1) R_min p_F). Grid: S-bend over
/// h_max = p_F (ceil(sqrt m) - 1) / 2.
double fan_length(int m, double R_min_mm, double fiber_pitch_mm, FanArrangement arrangement);

struct ScalingRow {
    int m = 0;
    double clements_mm = 0.0;
    double spread_planar_mm = 0.0;
    double spread_triangular_mm = 0.0;
    double fan_mm = 0.0;
};

struct ScalingTable {
    std::vector<ScalingRow> rows;
    double clements_loglog_slope = 0.0;
    double triangular_loglog_slope = 0.0;
};

/// Rows for m = m_min, 2 m_min, ... up to m_max (powers-of-two grid).
ScalingTable compare_layouts(int m_min, int m_max, const FootprintParams& params);

/// Least-squares slope of log(y) against log(x).
double loglog_slope(const std::vector<double>& x, const std::vector<double>& y);

std::string scaling_csv(const ScalingTable& table);

} // namespace ccbs::footprint

#endif
