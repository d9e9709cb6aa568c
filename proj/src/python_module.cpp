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


#include <pybind11/eigen.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include "ccbs/evolution.hpp"
#include "ccbs/footprint.hpp"
#include "ccbs/haarstats.hpp"
#include "ccbs/interference.hpp"
#include "ccbs/reconstruction.hpp"
#include "ccbs/validation.hpp"

namespace py = pybind11;
using namespace ccbs;

namespace {

DeviceConfig make_device(int rows, int cols, std::uint64_t seed, int n_steps, const std::string& kind)
{
    DeviceConfig d;
    d.lattice.rows = rows;
    d.lattice.cols = cols;
    d.lattice.seed = seed;
    d.lattice.kind = parse_lattice_kind(kind);
    d.propagation.n_steps = n_steps;
    return d;
}

py::dict table_dict(const ProbabilityTable& t)
{
    std::vector<std::vector<int>> patterns;
    for (const auto& p : t.patterns) {
        patterns.push_back(p.occupations());
    }
    py::dict d;
    d["patterns"] = patterns;
    d["probabilities"] = t.probabilities;
    d["total_mass"] = t.total_mass;
    return d;
}

} // namespace

PYBIND11_MODULE(_core, mod)
{
    mod.doc() = "Continuously-coupled boson sampling core";

    py::register_exception<ConfigError>(mod, "ConfigError", PyExc_ValueError);
    py::register_exception<DomainError>(mod, "DomainError", PyExc_ValueError);
    py::register_exception<CapacityError>(mod, "CapacityError", PyExc_ValueError);
    py::register_exception<UnderdeterminedError>(mod, "UnderdeterminedError", PyExc_ValueError);
    py::register_exception<InconsistentDataError>(mod, "InconsistentDataError", PyExc_ValueError);
    py::register_exception<FitError>(mod, "FitError", PyExc_RuntimeError);
    py::register_exception<NumericalError>(mod, "NumericalError", PyExc_RuntimeError);

    mod.def("permanent", py::overload_cast<const ComplexMatrix&>(&permanent), py::arg("a"));
    mod.def("unitarity_defect", &unitarity_defect, py::arg("u"));
    mod.def(
        "haar_unitary", [](int m, std::uint64_t seed) { return haar_unitary(m, seed).matrix(); }, py::arg("m"),
        py::arg("seed"));
    mod.def(
        "simulate_device",
        [](int rows, int cols, std::uint64_t seed, int n_steps, const std::string& kind) {
            return simulate_device(make_device(rows, cols, seed, n_steps, kind)).matrix();
        },
        py::arg("rows") = 4, py::arg("cols") = 8, py::arg("seed") = 0, py::arg("n_steps") = 1024,
        py::arg("kind") = "triangular");
    mod.def(
        "output_probability",
        [](const ComplexMatrix& u, const std::vector<int>& input, const std::vector<int>& output,
           bool distinguishable) {
            return output_probability(u, FockPattern(input), FockPattern(output),
                                      distinguishable ? Statistics::distinguishable : Statistics::indistinguishable);
        },
        py::arg("u"), py::arg("input"), py::arg("output"), py::arg("distinguishable") = false);
    mod.def(
        "distribution",
        [](const ComplexMatrix& u, const std::vector<int>& input, bool distinguishable, bool collision_free) {
            TableOptions opts;
            opts.collision_free = collision_free;
            return table_dict(distribution(u, FockPattern(input),
                                           distinguishable ? Statistics::distinguishable : Statistics::indistinguishable,
                                           opts));
        },
        py::arg("u"), py::arg("input"), py::arg("distinguishable") = false, py::arg("collision_free") = true);
    mod.def(
        "sample",
        [](const ComplexMatrix& u, const std::vector<int>& input_modes, std::uint64_t seed, std::size_t count) {
            const int m = static_cast<int>(u.rows());
            const auto table = distribution(u, FockPattern::from_modes(m, input_modes), Statistics::indistinguishable);
            std::vector<std::vector<int>> out;
            for (const auto& e : sample(table, seed, count)) {
                out.push_back(e.output);
            }
            return out;
        },
        py::arg("u"), py::arg("input_modes"), py::arg("seed"), py::arg("count"));
    mod.def(
        "spdc_weights",
        [](double R) {
            const SourceWeights w = spdc_weights(R);
            return std::vector<double>{w.normalized[0], w.normalized[1], w.normalized[2]};
        },
        py::arg("R"));

    mod.def("hom_plateau", &hom_plateau, py::arg("u"), py::arg("h"), py::arg("k"), py::arg("i"), py::arg("j"));
    mod.def("hom_visibility", &hom_visibility, py::arg("u"), py::arg("h"), py::arg("k"), py::arg("i"), py::arg("j"));
    mod.def(
        "reconstruct_from_unitary",
        [](const ComplexMatrix& u, const std::vector<int>& inputs, double median_counts, std::uint64_t seed) {
            SynthesisOptions opts;
            opts.median_counts = median_counts;
            opts.seed = seed;
            const HomDataset ds = synthesize_dataset(u, inputs, default_input_pairs(inputs), opts);
            const ReconstructedSubmatrix rec = reconstruct(ds);
            const GaugeDistance d = gauge_distance(rec, input_rows(u, inputs));
            py::dict out;
            out["moduli"] = rec.moduli;
            out["phases"] = rec.phases;
            out["moduli_rmse"] = d.moduli_rmse;
            out["phase_quadruple_rmse"] = d.phase_quadruple_rmse;
            return out;
        },
        py::arg("u"), py::arg("inputs"), py::arg("median_counts") = 0.0, py::arg("seed") = 0);

    mod.def(
        "validation_z_score",
        [](const ComplexMatrix& u, const std::vector<int>& inputs, const std::string& test, std::size_t events,
           std::size_t ensemble, std::uint64_t seed) {
            const int m = static_cast<int>(u.rows());
            const auto table = distribution(u, FockPattern::from_modes(m, inputs), Statistics::indistinguishable);
            const auto ev = sample(table, seed, events);
            InputModel model;
            model.input_modes = inputs;
            return wrong_unitary_slope_histogram(parse_test_kind(test), ev, u, model, ensemble, seed + 1).z_score;
        },
        py::arg("u"), py::arg("inputs"), py::arg("test") = "distinguishable", py::arg("events") = 300,
        py::arg("ensemble") = 200, py::arg("seed") = 0);

    mod.def(
        "similarity", [](const std::vector<double>& p, const std::vector<double>& q) { return similarity(p, q); },
        py::arg("p"), py::arg("q"));
    mod.def("clements_increment", &footprint::clements_increment, py::arg("R_min_mm"), py::arg("pitch_mm"),
            py::arg("c_per_mm"));
    mod.def(
        "min_spread_length",
        [](const std::string& kind, int m, double c, double B) {
            return footprint::min_spread_length(parse_lattice_kind(kind), m, c, B);
        },
        py::arg("kind"), py::arg("m"), py::arg("c_per_mm"), py::arg("B") = 2.0);
}
