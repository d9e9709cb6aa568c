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


#include "ccbs/footprint.hpp"

#include <cmath>
#include <cstdio>
#include <sstream>

#include "ccbs/common.hpp"

namespace ccbs::footprint {

std::string_view to_string(FanArrangement arrangement)
{
    return arrangement == FanArrangement::linear ? "linear" : "grid";
}

FanArrangement parse_fan_arrangement(std::string_view name)
{
    if (name == "linear") {
        return FanArrangement::linear;
    }
    if (name == "grid") {
        return FanArrangement::grid;
    }
    throw ConfigError("unknown fan arrangement '" + std::string(name) + "'");
}

void FootprintParams::validate() const
{
    if (!(R_min_mm > 0.0) || !(pitch_mm > 0.0) || !(fiber_pitch_mm > 0.0) || !(coupling_per_mm > 0.0)) {
        throw ConfigError("footprint lengths and coupling must be positive");
    }
    if (modes < 2) {
        throw ConfigError("footprint needs m >= 2");
    }
    if (!(B > 0.0)) {
        throw ConfigError("spreading constant B must be positive");
    }
}

namespace {

void require_positive(double v, const char* what)
{
    if (!(v > 0.0)) {
        throw DomainError(std::string(what) + " must be positive");
    }
}

void require_modes(int m)
{
    if (m < 2) {
        throw DomainError("mode count must be at least 2");
    }
}

} // namespace

double sbend_length(double R_min_mm, double h_mm)
{
    require_positive(R_min_mm, "R_min");
    if (h_mm < 0.0) {
        throw DomainError("S-bend elongation must be non-negative");
    }
    return 0.5 * kPi * std::sqrt(2.0 * R_min_mm * h_mm);
}

double coupler_reflectivity(double c_per_mm, double L_C_mm, double phi0)
{
    const double s = std::sin(c_per_mm * L_C_mm + phi0);
    return s * s;
}

double coupler_length(double c_per_mm)
{
    require_positive(c_per_mm, "coupling");
    return kPi / (2.0 * c_per_mm);
}

double clements_length(int m, double R_min_mm, double pitch_mm, double c_per_mm)
{
    require_modes(m);
    require_positive(pitch_mm, "pitch");
    return (m - 1) * sbend_length(R_min_mm, pitch_mm) + m * coupler_length(c_per_mm);
}

double clements_increment(double R_min_mm, double pitch_mm, double c_per_mm)
{
    require_positive(pitch_mm, "pitch");
    return 0.5 * kPi * (std::sqrt(2.0 * R_min_mm * pitch_mm) + 1.0 / c_per_mm);
}

double dispersion(LatticeKind kind, double c_per_mm, double beta_x, double beta_y)
{
    switch (kind) {
    case LatticeKind::linear:
        return 2.0 * c_per_mm * std::cos(beta_x);
    case LatticeKind::square:
        return 2.0 * c_per_mm * (std::cos(beta_x) + std::cos(beta_y));
    case LatticeKind::triangular:
        return 2.0 * c_per_mm * (std::cos(beta_x) + std::cos(beta_y) + std::cos(beta_x + beta_y));
    }
    return 0.0;
}

GroupVelocity group_velocity(LatticeKind kind, double c_per_mm, double beta_x, double beta_y)
{
    switch (kind) {
    case LatticeKind::linear:
        return {-2.0 * c_per_mm * std::sin(beta_x), 0.0};
    case LatticeKind::square:
        return {-2.0 * c_per_mm * std::sin(beta_x), -2.0 * c_per_mm * std::sin(beta_y)};
    case LatticeKind::triangular:
        return {-4.0 * c_per_mm * std::sin(beta_x), -4.0 * c_per_mm * std::sin(beta_y)};
    }
    return {};
}

double max_group_velocity(LatticeKind kind, double c_per_mm)
{
    return (kind == LatticeKind::triangular ? 4.0 : 2.0) * c_per_mm;
}

double min_spread_length(LatticeKind kind, int m, double c_per_mm, double B)
{
    require_modes(m);
    require_positive(c_per_mm, "coupling");
    require_positive(B, "B");
    if (kind == LatticeKind::linear) {
        return m / (2.0 * c_per_mm);
    }
    return B * std::sqrt(static_cast<double>(m)) / max_group_velocity(kind, c_per_mm);
}

double fan_length(int m, double R_min_mm, double fiber_pitch_mm, FanArrangement arrangement)
{
    require_modes(m);
    require_positive(fiber_pitch_mm, "fiber pitch");
    if (arrangement == FanArrangement::linear) {
        require_positive(R_min_mm, "R_min");
        return 0.5 * kPi * std::sqrt((m - 1) * R_min_mm * fiber_pitch_mm);
    }
    const double side = std::ceil(std::sqrt(static_cast<double>(m)));
    return sbend_length(R_min_mm, fiber_pitch_mm * (side - 1.0) / 2.0);
}

double loglog_slope(const std::vector<double>& x, const std::vector<double>& y)
{
    if (x.size() != y.size() || x.size() < 2) {
        throw DomainError("loglog_slope needs two or more points");
    }
    const auto n = static_cast<double>(x.size());
    double mx = 0.0;
    double my = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        mx += std::log(x[i]);
        my += std::log(y[i]);
    }
    mx /= n;
    my /= n;
    double sxy = 0.0;
    double sxx = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        const double dx = std::log(x[i]) - mx;
        sxy += dx * (std::log(y[i]) - my);
        sxx += dx * dx;
    }
    return sxy / sxx;
}

ScalingTable compare_layouts(int m_min, int m_max, const FootprintParams& params)
{
    params.validate();
    if (m_min < 2 || m_max < m_min) {
        throw ConfigError("scaling range needs 2 <= m_min <= m_max");
    }
    ScalingTable table;
    std::vector<double> ms;
    std::vector<double> clem;
    std::vector<double> tri;
    for (long m = m_min; m <= m_max; m *= 2) {
        const int mi = static_cast<int>(m);
        ScalingRow row;
        row.m = mi;
        row.clements_mm = clements_length(mi, params.R_min_mm, params.pitch_mm, params.coupling_per_mm);
        row.spread_planar_mm = min_spread_length(LatticeKind::linear, mi, params.coupling_per_mm, params.B);
        row.spread_triangular_mm = min_spread_length(LatticeKind::triangular, mi, params.coupling_per_mm, params.B);
        row.fan_mm = fan_length(mi, params.R_min_mm, params.fiber_pitch_mm, params.fan);
        table.rows.push_back(row);
        ms.push_back(mi);
        clem.push_back(row.clements_mm);
        tri.push_back(row.spread_triangular_mm);
    }
    if (ms.size() >= 2) {
        table.clements_loglog_slope = loglog_slope(ms, clem);
        table.triangular_loglog_slope = loglog_slope(ms, tri);
    }
    return table;
}

std::string scaling_csv(const ScalingTable& table)
{
    std::ostringstream out;
    out << "m,clements_mm,spread_planar_mm,spread_triangular_mm,fan_mm\n";
    char line[256];
    for (const auto& r : table.rows) {
        std::snprintf(line, sizeof line, "%d,%.17g,%.17g,%.17g,%.17g\n", r.m, r.clements_mm, r.spread_planar_mm,
                      r.spread_triangular_mm, r.fan_mm);
        out << line;
    }
    return out.str();
}

} // namespace ccbs::footprint
