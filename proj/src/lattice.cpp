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


#include "ccbs/lattice.hpp"

#include <algorithm>
#include <cmath>

#include "ccbs/random.hpp"

namespace ccbs {

std::string_view to_string(LatticeKind kind)
{
    switch (kind) {
    case LatticeKind::linear:
        return "linear";
    case LatticeKind::square:
        return "square";
    case LatticeKind::triangular:
        return "triangular";
    }
    return "unknown";
}

LatticeKind parse_lattice_kind(std::string_view name)
{
    if (name == "linear") {
        return LatticeKind::linear;
    }
    if (name == "square") {
        return LatticeKind::square;
    }
    if (name == "triangular") {
        return LatticeKind::triangular;
    }
    throw ConfigError("unknown lattice kind '" + std::string(name) + "'");
}

void LatticeSpec::validate() const
{
    if (rows < 1 || cols < 1 || rows * cols < 2) {
        throw ConfigError("lattice needs at least two waveguides");
    }
    if (!(pitch_um > 0.0)) {
        throw ConfigError("lattice pitch must be positive");
    }
    if (!(max_shift_um >= 0.0) || !(max_shift_um < 0.5 * pitch_um)) {
        throw ConfigError("max_shift must lie in [0, pitch/2)");
    }
    if (!(length_mm > 0.0)) {
        throw ConfigError("coupling length must be positive");
    }
    if (n_knots < 2) {
        throw ConfigError("at least two modulation knots are required");
    }
}

namespace {

std::vector<Point2> ideal_sites(const LatticeSpec& spec)
{
    std::vector<Point2> sites;
    sites.reserve(static_cast<std::size_t>(spec.modes()));
    const double p = spec.pitch_um;
    for (int r = 0; r < spec.rows; ++r) {
        for (int c = 0; c < spec.cols; ++c) {
            switch (spec.kind) {
            case LatticeKind::linear:
                sites.push_back({(r * spec.cols + c) * p, 0.0});
                break;
            case LatticeKind::square:
                sites.push_back({c * p, r * p});
                break;
            case LatticeKind::triangular:
                sites.push_back({c * p + ((r % 2 != 0) ? 0.5 * p : 0.0), r * p * std::sqrt(3.0) / 2.0});
                break;
            }
        }
    }
    return sites;
}

} // namespace

WaveguideLayout::WaveguideLayout(LatticeKind kind, double pitch_um, double length_mm, std::vector<Point2> sites,
                                 std::vector<double> knot_z_mm, std::vector<std::vector<Point2>> knot_shifts)
    : kind_(kind), pitch_um_(pitch_um), length_mm_(length_mm), sites_(std::move(sites)),
      knot_z_mm_(std::move(knot_z_mm)), shifts_(std::move(knot_shifts))
{
    if (shifts_.size() != sites_.size()) {
        throw ConfigError("layout: one shift list per waveguide required");
    }
    for (const auto& s : shifts_) {
        if (s.size() != knot_z_mm_.size()) {
            throw ConfigError("layout: one shift per knot required");
        }
    }
    const double tol = 1e-9 * pitch_um_;
    for (int i = 0; i < modes(); ++i) {
        for (int j = i + 1; j < modes(); ++j) {
            if (distance(sites_[i], sites_[j]) <= pitch_um_ + tol) {
                bonds_.emplace_back(i, j);
            }
        }
    }
}

Point2 WaveguideLayout::position(int waveguide, double z_mm) const
{
    const Point2 site = sites_.at(waveguide);
    const auto& shifts = shifts_.at(waveguide);
    const auto n = knot_z_mm_.size();
    const double z = std::clamp(z_mm, knot_z_mm_.front(), knot_z_mm_.back());
    auto upper = std::upper_bound(knot_z_mm_.begin(), knot_z_mm_.end(), z);
    std::size_t k = (upper == knot_z_mm_.begin()) ? 0 : static_cast<std::size_t>(upper - knot_z_mm_.begin()) - 1;
    k = std::min(k, n - 2);
    const double t = (z - knot_z_mm_[k]) / (knot_z_mm_[k + 1] - knot_z_mm_[k]);
    return {site.x + (1.0 - t) * shifts[k].x + t * shifts[k + 1].x,
            site.y + (1.0 - t) * shifts[k].y + t * shifts[k + 1].y};
}

std::vector<Point2> WaveguideLayout::positions(double z_mm) const
{
    std::vector<Point2> out;
    out.reserve(sites_.size());
    for (int i = 0; i < modes(); ++i) {
        out.push_back(position(i, z_mm));
    }
    return out;
}

std::vector<int> WaveguideLayout::symmetry_permutation() const
{
    double xmin = sites_.front().x;
    double xmax = xmin;
    double ymin = sites_.front().y;
    double ymax = ymin;
    for (const auto& s : sites_) {
        xmin = std::min(xmin, s.x);
        xmax = std::max(xmax, s.x);
        ymin = std::min(ymin, s.y);
        ymax = std::max(ymax, s.y);
    }
    const bool rotate = kind_ == LatticeKind::triangular;
    std::vector<int> perm(sites_.size(), -1);
    for (int i = 0; i < modes(); ++i) {
        const Point2 image{xmin + xmax - sites_[i].x, rotate ? ymin + ymax - sites_[i].y : sites_[i].y};
        for (int j = 0; j < modes(); ++j) {
            if (distance(image, sites_[j]) < 1e-9 * pitch_um_) {
                perm[i] = j;
                break;
            }
        }
        if (perm[i] < 0) {
            throw ConfigError("lattice has no symmetry of the expected kind");
        }
    }
    return perm;
}

WaveguideLayout build_lattice(const LatticeSpec& spec)
{
    spec.validate();
    std::vector<double> knots(static_cast<std::size_t>(spec.n_knots));
    for (int k = 0; k < spec.n_knots; ++k) {
        knots[k] = spec.length_mm * k / (spec.n_knots - 1);
    }
    knots.back() = spec.length_mm;

    Rng rng(derive_seed(spec.seed, "lattice"));
    std::vector<std::vector<Point2>> shifts(static_cast<std::size_t>(spec.modes()));
    for (auto& per_waveguide : shifts) {
        per_waveguide.resize(knots.size());
        for (auto& shift : per_waveguide) {
            const double radius = uniform(rng, 0.0, spec.max_shift_um);
            const double angle = uniform(rng, 0.0, 2.0 * kPi);
            shift = {radius * std::cos(angle), radius * std::sin(angle)};
        }
    }
    return WaveguideLayout(spec.kind, spec.pitch_um, spec.length_mm, ideal_sites(spec), std::move(knots),
                           std::move(shifts));
}

void CouplingModel::validate() const
{
    if (!(c0_per_mm > 0.0) || !(kappa_um > 0.0)) {
        throw ConfigError("coupling model needs c0 > 0 and kappa > 0");
    }
    if (!(cutoff_per_mm >= 0.0)) {
        throw ConfigError("coupling cutoff must be non-negative");
    }
}

double coupling_coefficient(double d_um, const CouplingModel& model)
{
    if (!(d_um > 0.0)) {
        throw DomainError("coupling distance must be positive");
    }
    return model.c0_per_mm * std::exp(-(d_um - model.d0_um) / model.kappa_um);
}

void HeaterBank::validate() const
{
    if (powers_mW.size() != heaters.size()) {
        throw ConfigError("heater bank: " + std::to_string(heaters.size()) + " heaters but " +
                          std::to_string(powers_mW.size()) + " powers");
    }
    for (double p : powers_mW) {
        if (!(p >= 0.0)) {
            throw ConfigError("heater powers must be non-negative");
        }
    }
    if (!(kernel_width_um > 0.0)) {
        throw ConfigError("heater kernel width must be positive");
    }
    for (const auto& h : heaters) {
        if (!(h.z_end_mm > h.z_begin_mm)) {
            throw ConfigError("heater z-span must be non-empty");
        }
    }
}

std::vector<double> HeaterBank::edges_mm() const
{
    std::vector<double> edges;
    for (const auto& h : heaters) {
        edges.push_back(h.z_begin_mm);
        edges.push_back(h.z_end_mm);
    }
    std::sort(edges.begin(), edges.end());
    edges.erase(std::unique(edges.begin(), edges.end()), edges.end());
    return edges;
}

namespace {

double kernel(Point2 p, const Heater& h, double width)
{
    const double dx = p.x - h.x_um;
    const double dy = p.y - h.y_um;
    return std::exp(-(dx * dx + dy * dy) / (2.0 * width * width));
}

bool active(const Heater& h, double z, double length)
{
    if (z >= h.z_begin_mm && z < h.z_end_mm) {
        return true;
    }
    return z == h.z_end_mm && h.z_end_mm >= length;
}

} // namespace

HeaterBank default_heater_bank(const WaveguideLayout& layout, const HeaterGeometry& geometry)
{
    if (geometry.per_side < 1) {
        throw ConfigError("need at least one heater per side");
    }
    double xmin = layout.ideal_site(0).x;
    double xmax = xmin;
    double ymax = layout.ideal_site(0).y;
    for (int i = 0; i < layout.modes(); ++i) {
        xmin = std::min(xmin, layout.ideal_site(i).x);
        xmax = std::max(xmax, layout.ideal_site(i).x);
        ymax = std::max(ymax, layout.ideal_site(i).y);
    }
    HeaterBank bank;
    bank.kernel_width_um = geometry.kernel_width_um;
    const double span = layout.length_mm() / geometry.per_side;
    const double y = ymax + geometry.surface_offset_um;
    for (double x : {xmin - geometry.side_offset_um, xmax + geometry.side_offset_um}) {
        for (int s = 0; s < geometry.per_side; ++s) {
            bank.heaters.push_back({x, y, s * span, (s == geometry.per_side - 1) ? layout.length_mm() : (s + 1) * span});
        }
    }
    bank.powers_mW.assign(bank.heaters.size(), 0.0);

    double strongest = 0.0;
    for (const auto& h : bank.heaters) {
        for (int i = 0; i < layout.modes(); ++i) {
            strongest = std::max(strongest, kernel(layout.ideal_site(i), h, bank.kernel_width_um) *
                                                (h.z_end_mm - h.z_begin_mm));
        }
    }
    bank.alpha_per_mm_mW = geometry.reference_phase / (geometry.reference_power_mW * strongest);
    return bank;
}

RealVector heater_detunings(const HeaterBank& bank, const WaveguideLayout& layout, double z_mm)
{
    if (z_mm < 0.0 || z_mm > layout.length_mm()) {
        throw DomainError("z outside the coupling region");
    }
    bank.validate();
    RealVector detuning = RealVector::Zero(layout.modes());
    for (int r = 0; r < bank.size(); ++r) {
        const Heater& h = bank.heaters[r];
        if (bank.powers_mW[r] == 0.0 || !active(h, z_mm, layout.length_mm())) {
            continue;
        }
        const double scale = bank.alpha_per_mm_mW * bank.powers_mW[r];
        for (int i = 0; i < layout.modes(); ++i) {
            detuning[i] += scale * kernel(layout.position(i, z_mm), h, bank.kernel_width_um);
        }
    }
    return detuning;
}

} // namespace ccbs
