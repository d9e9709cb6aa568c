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


#include "ccbs/cli.hpp"

#include <algorithm>
#include <iostream>
#include <numeric>

#include <CLI11.hpp>

#include "ccbs/haarstats.hpp"
#include "ccbs/random.hpp"

namespace ccbs::cli {

namespace {

using io::Json;

template <typename T>
T get_or(const Json& obj, const char* key, T fallback)
{
    if (!obj.is_object() || !obj.contains(key) || obj.at(key).is_null()) {
        return fallback;
    }
    return obj.at(key).get<T>();
}

const Json& section(const Json& doc, const char* key)
{
    static const Json empty = Json::object();
    if (!doc.contains(key)) {
        return empty;
    }
    if (!doc.at(key).is_object()) {
        throw ConfigError(std::string("config section '") + key + "' must be an object");
    }
    return doc.at(key);
}

Integrator parse_integrator(const std::string& name)
{
    if (name == "magnus6") {
        return Integrator::magnus6;
    }
    if (name == "midpoint") {
        return Integrator::midpoint;
    }
    throw ConfigError("unknown integrator '" + name + "'");
}

BranchScoring parse_scoring(const std::string& name)
{
    if (name == "recorded") {
        return BranchScoring::recorded;
    }
    if (name == "marginal") {
        return BranchScoring::marginal;
    }
    throw ConfigError("unknown branch scoring '" + name + "'");
}

SynthesisMethod parse_method(const std::string& name)
{
    if (name == "direct") {
        return SynthesisMethod::direct;
    }
    if (name == "scan") {
        return SynthesisMethod::scan;
    }
    throw ConfigError("unknown synthesis method '" + name + "'");
}

void check_modes(const std::vector<int>& modes, int m, const char* what)
{
    for (int mode : modes) {
        if (mode < 0 || mode >= m) {
            throw ConfigError(std::string(what) + " mode " + std::to_string(mode) + " outside [0, " +
                              std::to_string(m) + ")");
        }
    }
}

Json provenance(const RunConfig& config, const char* command)
{
    Json p;
    p["tool"] = "ccbs";
    p["command"] = command;
    p["config_hash"] = io::content_hash(config.canonical);
    p["seed"] = config.seed;
    return p;
}

std::string dump(const Json& doc)
{
    return doc.dump(2) + "\n";
}

struct LoadedUnitary {
    ComplexMatrix u;
    double defect = 0.0;
    bool simulated = false;
};

LoadedUnitary obtain_unitary(const RunConfig& config)
{
    LoadedUnitary out;
    if (config.unitary) {
        out.u = io::unitary_from_json(io::read_json(*config.unitary));
        out.defect = unitarity_defect(out.u);
    } else {
        const UnitaryMatrix u = simulate_device(config.device);
        out.u = u.matrix();
        out.defect = u.defect();
        out.simulated = true;
    }
    if (!(out.defect <= 1e-9)) {
        throw NumericalError("unitarity defect " + io::format_double(out.defect) + " exceeds 1e-9");
    }
    return out;
}

void write_unitary(const RunConfig& config, const LoadedUnitary& u, const char* command)
{
    Json prov = provenance(config, command);
    prov["unitarity_defect"] = u.defect;
    prov["integrator"] = config.device.propagation.integrator == Integrator::magnus6 ? "magnus6" : "midpoint";
    prov["n_steps"] = config.device.propagation.n_steps;
    io::write_text(config.out / "unitary.json", dump(io::unitary_to_json(u.u, prov)));
}

std::vector<SampleEvent> draw_events(const RunConfig& config, const ComplexMatrix& u, Statistics statistics,
                                     std::size_t count, std::uint64_t seed)
{
    const int m = static_cast<int>(u.rows());
    TableOptions opts;
    opts.collision_free = config.photons.collision_free;
    opts.excluded_outputs = excluded_outputs(config, m);
    if (config.photons.spdc_R) {
        return spdc_sample(u, spdc_weights(*config.photons.spdc_R), statistics, config.inputs, seed, count, opts);
    }
    const FockPattern input = FockPattern::from_modes(m, config.inputs);
    const ProbabilityTable table = distribution(u, input, statistics, opts);
    return sample(table, seed, count, Branch::fixed, statistics == Statistics::distinguishable);
}

io::SampleHeader make_header(const RunConfig& config, int m, Statistics statistics, std::size_t count)
{
    io::SampleHeader h;
    h.m = m;
    h.photons = config.photons.spdc_R ? 4 : static_cast<int>(config.inputs.size());
    h.statistics = std::string(to_string(statistics));
    h.inputs = config.inputs;
    h.source = config.photons.spdc_R ? "spdc" : "fixed";
    h.R = config.photons.spdc_R.value_or(0.0);
    h.excluded_outputs = excluded_outputs(config, m);
    h.collision_free = config.photons.collision_free;
    h.count = count;
    h.seed = config.seed;
    return h;
}

} // namespace

RunConfig load_config(const Json& doc, const Overrides& overrides)
{
    if (!doc.is_object()) {
        throw ConfigError("config must be a JSON object");
    }
    RunConfig c;
    try {
        c.seed = overrides.seed.value_or(get_or<std::uint64_t>(doc, "seed", 0));
        c.out = overrides.out.value_or(get_or<std::string>(doc, "out", "ccbs_out"));
        if (doc.contains("unitary") && !doc.at("unitary").is_null()) {
            c.unitary = doc.at("unitary").get<std::string>();
        }
        c.inputs = get_or<std::vector<int>>(doc, "inputs", c.inputs);

        const Json& lat = section(doc, "lattice");
        auto& ls = c.device.lattice;
        ls.kind = parse_lattice_kind(get_or<std::string>(lat, "kind", std::string(to_string(ls.kind))));
        ls.rows = get_or(lat, "rows", ls.rows);
        ls.cols = get_or(lat, "cols", ls.cols);
        ls.pitch_um = get_or(lat, "pitch_um", ls.pitch_um);
        ls.max_shift_um = get_or(lat, "max_shift_um", ls.max_shift_um);
        ls.length_mm = get_or(lat, "length_mm", ls.length_mm);
        ls.n_knots = get_or(lat, "n_knots", ls.n_knots);
        ls.seed = c.seed;
        ls.validate();

        const Json& cp = section(doc, "coupling");
        auto& cm = c.device.coupling;
        cm.c0_per_mm = get_or(cp, "c0_per_mm", cm.c0_per_mm);
        cm.d0_um = get_or(cp, "d0_um", cm.d0_um);
        cm.kappa_um = get_or(cp, "kappa_um", cm.kappa_um);
        cm.cutoff_per_mm = get_or(cp, "cutoff_per_mm", cm.cutoff_per_mm);
        cm.validate();

        const Json& ht = section(doc, "heaters");
        auto& hg = c.device.heaters;
        hg.per_side = get_or(ht, "per_side", hg.per_side);
        hg.side_offset_um = get_or(ht, "side_offset_um", hg.side_offset_um);
        hg.surface_offset_um = get_or(ht, "surface_offset_um", hg.surface_offset_um);
        hg.kernel_width_um = get_or(ht, "kernel_width_um", hg.kernel_width_um);
        hg.reference_power_mW = get_or(ht, "reference_power_mW", hg.reference_power_mW);
        hg.reference_phase = get_or(ht, "reference_phase", hg.reference_phase);
        c.device.powers_mW = get_or<std::vector<double>>(ht, "powers_mW", {});
        c.device.max_power_mW = get_or(ht, "max_power_mW", c.device.max_power_mW);
        if (!(c.device.max_power_mW >= 0.0)) {
            throw ConfigError("max_power_mW must be non-negative");
        }

        const Json& pr = section(doc, "propagation");
        auto& po = c.device.propagation;
        po.n_steps = get_or(pr, "n_steps", po.n_steps);
        po.k0_per_mm = get_or(pr, "k0_per_mm", po.k0_per_mm);
        po.integrator = parse_integrator(get_or<std::string>(pr, "integrator", "magnus6"));
        po.align_breakpoints = get_or(pr, "align_breakpoints", po.align_breakpoints);
        if (po.n_steps < 1) {
            throw ConfigError("n_steps must be positive");
        }

        const int m = ls.modes();
        if (c.inputs.empty()) {
            throw ConfigError("at least one designated input mode is required");
        }
        check_modes(c.inputs, m, "input");

        const Json& ph = section(doc, "photons");
        auto& pc = c.photons;
        pc.statistics = parse_statistics(get_or<std::string>(ph, "statistics", "indistinguishable"));
        pc.collision_free = overrides.collision_free.value_or(get_or(ph, "collision_free", true));
        if (ph.contains("excluded_outputs") && !ph.at("excluded_outputs").is_null()) {
            pc.excluded_outputs = ph.at("excluded_outputs").get<std::vector<int>>();
            check_modes(*pc.excluded_outputs, m, "excluded output");
        }
        if (ph.contains("spdc_R") && !ph.at("spdc_R").is_null()) {
            pc.spdc_R = ph.at("spdc_R").get<double>();
            if (!(*pc.spdc_R >= 0.0)) {
                throw ConfigError("spdc_R must be non-negative");
            }
            if (c.inputs.size() != 4) {
                throw ConfigError("an SPDC source needs exactly 4 designated inputs");
            }
        }
        pc.events = overrides.events.value_or(get_or<std::size_t>(ph, "events", pc.events));

        const Json& rc = section(doc, "reconstruction");
        auto& rcfg = c.reconstruction;
        if (rc.contains("pairs")) {
            for (const auto& p : rc.at("pairs")) {
                if (!p.is_array() || p.size() != 2) {
                    throw ConfigError("reconstruction pairs are [h, k] arrays");
                }
                rcfg.pairs.emplace_back(p[0].get<int>(), p[1].get<int>());
            }
        } else {
            rcfg.pairs = default_input_pairs(c.inputs);
        }
        for (const auto& [h, k] : rcfg.pairs) {
            check_modes({h, k}, m, "pair");
        }
        auto& so = rcfg.synthesis;
        so.method = parse_method(get_or<std::string>(rc, "method", "direct"));
        so.median_counts = get_or(rc, "median_counts", so.median_counts);
        so.relative_noise = get_or(rc, "relative_noise", so.relative_noise);
        so.visibility_scale = get_or(rc, "visibility_scale", so.visibility_scale);
        so.with_intensities = get_or(rc, "with_intensities", so.with_intensities);
        so.intensity_counts = get_or(rc, "intensity_counts", so.intensity_counts);
        so.dip_x0_um = get_or(rc, "dip_x0_um", so.dip_x0_um);
        so.dip_sigma_um = get_or(rc, "dip_sigma_um", so.dip_sigma_um);
        so.scan_points = get_or(rc, "scan_points", so.scan_points);
        so.scan_span_sigmas = get_or(rc, "scan_span_sigmas", so.scan_span_sigmas);
        so.seed = derive_seed(c.seed, "noise");
        if (rc.contains("dataset") && !rc.at("dataset").is_null()) {
            rcfg.dataset = rc.at("dataset").get<std::string>();
        }
        rcfg.phases.cos_tolerance = get_or(rc, "cos_tolerance", rcfg.phases.cos_tolerance);
        rcfg.phases.orthogonality_sigma = get_or(rc, "orthogonality_sigma", rcfg.phases.orthogonality_sigma);
        rcfg.moduli.normalization_sigma = get_or(rc, "normalization_sigma", rcfg.moduli.normalization_sigma);

        const Json& vc = section(doc, "validation");
        auto& vcfg = c.validation;
        vcfg.test = parse_test_kind(overrides.test.value_or(get_or<std::string>(vc, "test", "uniform")));
        vcfg.ensemble = overrides.ensemble.value_or(get_or<std::size_t>(vc, "ensemble", vcfg.ensemble));
        vcfg.scoring = parse_scoring(get_or<std::string>(vc, "scoring", "recorded"));
        vcfg.bins = get_or(vc, "bins", vcfg.bins);
        if (vc.contains("samples") && !vc.at("samples").is_null()) {
            vcfg.samples = vc.at("samples").get<std::string>();
        }

        const Json& hc = section(doc, "haar");
        c.haar.configurations = overrides.ensemble.value_or(get_or<std::size_t>(hc, "configurations", 20));
        c.haar.column_pairs = get_or<std::size_t>(hc, "column_pairs", c.haar.column_pairs);
        c.haar.bins = get_or(hc, "bins", c.haar.bins);
        if (c.haar.configurations < 2 || c.haar.column_pairs < 1 || c.haar.bins < 1) {
            throw ConfigError("haar needs >= 2 configurations, >= 1 column pair and >= 1 bin");
        }

        const Json& fc = section(doc, "footprint");
        auto& fp = c.footprint.params;
        fp.R_min_mm = get_or(fc, "R_min_mm", fp.R_min_mm);
        fp.pitch_mm = get_or(fc, "pitch_mm", fp.pitch_mm);
        fp.fiber_pitch_mm = get_or(fc, "fiber_pitch_mm", fp.fiber_pitch_mm);
        fp.coupling_per_mm = get_or(fc, "coupling_per_mm", fp.coupling_per_mm);
        fp.modes = get_or(fc, "modes", fp.modes);
        fp.B = get_or(fc, "B", fp.B);
        fp.lattice = parse_lattice_kind(get_or<std::string>(fc, "lattice_kind", "triangular"));
        fp.fan = footprint::parse_fan_arrangement(get_or<std::string>(fc, "fan", "linear"));
        c.footprint.m_min = get_or(fc, "m_min", c.footprint.m_min);
        c.footprint.m_max = get_or(fc, "m_max", c.footprint.m_max);
        fp.validate();
    } catch (const nlohmann::json::exception& e) {
        throw ConfigError(std::string("config: ") + e.what());
    }

    // Effective configuration with overrides folded in; hashed into provenance.
    Json canon = doc;
    canon["seed"] = c.seed;
    if (overrides.events) {
        canon["photons"]["events"] = *overrides.events;
    }
    if (overrides.test) {
        canon["validation"]["test"] = *overrides.test;
    }
    if (overrides.ensemble) {
        canon["validation"]["ensemble"] = *overrides.ensemble;
        canon["haar"]["configurations"] = *overrides.ensemble;
    }
    if (overrides.collision_free) {
        canon["photons"]["collision_free"] = *overrides.collision_free;
    }
    canon.erase("out");
    c.canonical = std::move(canon);
    return c;
}

std::vector<int> excluded_outputs(const RunConfig& config, int m)
{
    if (config.photons.excluded_outputs) {
        return *config.photons.excluded_outputs;
    }
    if (!config.photons.spdc_R && config.inputs.size() == 3) {
        return {m - 1};
    }
    return {};
}

// ---------------------------------------------------------------- simulate

void cmd_simulate(const RunConfig& config)
{
    const LoadedUnitary u = obtain_unitary(config);
    write_unitary(config, u, "simulate");
}

// ------------------------------------------------------------------ sample

void cmd_sample(const RunConfig& config)
{
    const LoadedUnitary u = obtain_unitary(config);
    const int m = static_cast<int>(u.u.rows());
    check_modes(config.inputs, m, "input");
    const std::size_t count = config.photons.events;
    const auto events =
        draw_events(config, u.u, config.photons.statistics, count, derive_seed(config.seed, "sampling"));
    const auto header = make_header(config, m, config.photons.statistics, count);
    io::write_text(config.out / "samples.jsonl", io::samples_to_jsonl(header, events));
    if (u.simulated) {
        write_unitary(config, u, "sample");
    }
}

// ------------------------------------------------------------- reconstruct

void cmd_reconstruct(const RunConfig& config)
{
    std::optional<LoadedUnitary> truth;
    HomDataset dataset;
    std::vector<DipRecord> dips;
    const auto& rc = config.reconstruction;
    if (rc.dataset) {
        dataset = io::dataset_from_json(io::read_json(*rc.dataset));
        if (config.unitary) {
            truth = obtain_unitary(config);
        }
    } else {
        truth = obtain_unitary(config);
        dataset = synthesize_dataset(truth->u, config.inputs, rc.pairs, rc.synthesis, &dips);
    }
    const ReconstructedSubmatrix rec = reconstruct(dataset, rc.moduli, rc.phases);

    io::write_text(config.out / "dataset.json", dump(io::dataset_to_json(dataset)));
    Json rec_json = io::reconstructed_to_json(rec);
    rec_json["provenance"] = provenance(config, "reconstruct");
    io::write_text(config.out / "reconstructed.json", dump(rec_json));

    // Per-dip residuals of the reconstructed submatrix against the data.
    const ComplexMatrix z = rec.matrix();
    std::string csv = "h,k,i,j,a_measured,a_model,coincidence_measured,coincidence_model,pull_a,pull_coincidence\n";
    double chi2_a = 0.0;
    std::size_t n_a = 0;
    for (const auto& pd : dataset.pairs) {
        const int p = dataset.row_of(pd.h);
        const int q = dataset.row_of(pd.k);
        for (const auto& e : pd.entries) {
            const double a_model = std::norm(z(p, e.i)) * std::norm(z(q, e.j)) + std::norm(z(p, e.j)) * std::norm(z(q, e.i));
            const double b_model = std::norm(z(p, e.i) * z(q, e.j) + z(p, e.j) * z(q, e.i));
            const double pull_a = e.err_a > 0.0 ? (e.a - a_model) / e.err_a : 0.0;
            chi2_a += pull_a * pull_a;
            ++n_a;
            csv += std::to_string(pd.h) + "," + std::to_string(pd.k) + "," + std::to_string(e.i) + "," +
                   std::to_string(e.j) + "," + io::format_double(e.a) + "," + io::format_double(a_model) + ",";
            if (e.defined) {
                const double b = e.coincidence();
                const double pull_b = e.err_b > 0.0 ? (b - b_model) / e.err_b : 0.0;
                csv += io::format_double(b) + "," + io::format_double(b_model) + "," + io::format_double(pull_a) +
                       "," + io::format_double(pull_b) + "\n";
            } else {
                csv += "," + io::format_double(b_model) + "," + io::format_double(pull_a) + ",\n";
            }
        }
    }
    io::write_text(config.out / "residuals.csv", csv);

    if (!dips.empty()) {
        std::string fits = "h,k,i,j,a,amplitude,x0_um,sigma_um,err_a,err_amplitude,chi2,shape_fitted\n";
        std::string scans = "h,k,i,j,position_um,counts\n";
        for (const auto& d : dips) {
            const std::string key = std::to_string(d.h) + "," + std::to_string(d.k) + "," + std::to_string(d.i) +
                                    "," + std::to_string(d.j) + ",";
            fits += key + io::format_double(d.fit.a) + "," + io::format_double(d.fit.amplitude) + "," +
                    io::format_double(d.fit.x0) + "," + io::format_double(d.fit.sigma) + "," +
                    io::format_double(d.fit.err_a) + "," + io::format_double(d.fit.err_amplitude) + "," +
                    io::format_double(d.fit.chi2) + "," + (d.fitted ? "1" : "0") + "\n";
            for (std::size_t p = 0; p < d.positions.size(); ++p) {
                scans += key + io::format_double(d.positions[p]) + "," + io::format_double(d.counts[p]) + "\n";
            }
        }
        io::write_text(config.out / "dip_fits.csv", fits);
        io::write_text(config.out / "dip_scans.csv", scans);
    }

    Json report;
    report["rows"] = rec.rows();
    report["cols"] = rec.cols();
    report["chi2"] = rec.chi2;
    report["chi2_data"] = rec.chi2_data;
    report["plateau_chi2"] = chi2_a;
    report["plateau_terms"] = n_a;
    report["converged"] = rec.converged;
    report["warning"] = rec.warning;
    if (truth) {
        const ComplexMatrix ref = input_rows(truth->u, dataset.inputs);
        const GaugeDistance gd = gauge_distance(rec, ref);
        report["gauge_distance"] = {{"moduli_rmse", gd.moduli_rmse}, {"phase_quadruple_rmse", gd.phase_quadruple_rmse}};
    } else {
        report["gauge_distance"] = nullptr;
    }
    report["provenance"] = provenance(config, "reconstruct");
    io::write_text(config.out / "report.json", dump(report));
}

// ---------------------------------------------------------------- validate

void cmd_validate(const RunConfig& config)
{
    const LoadedUnitary u = obtain_unitary(config);
    const int m = static_cast<int>(u.u.rows());
    io::SampleHeader header;
    std::vector<SampleEvent> events;
    if (config.validation.samples) {
        io::read_samples_jsonl(*config.validation.samples, header, events);
    } else {
        events = draw_events(config, u.u, config.photons.statistics, config.photons.events,
                             derive_seed(config.seed, "sampling"));
        header = make_header(config, m, config.photons.statistics, events.size());
    }
    if (header.m != m) {
        throw ConfigError("samples were drawn on " + std::to_string(header.m) + " modes but the unitary has " +
                          std::to_string(m));
    }
    check_modes(header.inputs, m, "sample input");
    for (const auto& e : events) {
        check_modes(e.output, m, "event output");
        if (static_cast<int>(e.output.size()) != header.photons) {
            throw ConfigError("event " + std::to_string(e.index) + " has the wrong photon count");
        }
    }

    InputModel model;
    model.input_modes = header.inputs;
    if (header.source == "spdc") {
        model.spdc = spdc_weights(header.R);
    }
    model.scoring = config.validation.scoring;
    model.active_outputs = m - static_cast<int>(header.excluded_outputs.size());

    const TestKind kind = config.validation.test;
    ValidationTrace trace = run_test(kind, events, u.u, model);

    // Reference: a distinguishable-particle stream of equal length on the same U.
    RunConfig ref_config = config;
    ref_config.inputs = header.inputs;
    ref_config.photons.excluded_outputs = header.excluded_outputs;
    ref_config.photons.collision_free = header.collision_free;
    if (header.source == "spdc") {
        ref_config.photons.spdc_R = header.R;
    } else {
        ref_config.photons.spdc_R.reset();
    }
    const auto ref_events = draw_events(ref_config, u.u, Statistics::distinguishable, events.size(),
                                        derive_seed(config.seed, "reference"));
    const ValidationTrace ref_trace = run_test(kind, ref_events, u.u, model);
    double normalization = std::abs(ref_trace.slope);
    bool normalized = normalization > 0.0;
    if (!normalized) {
        normalization = 1.0;
    }
    trace.normalized_slope = trace.slope / normalization;

    std::string csv = "k,counter\n";
    for (std::size_t k = 0; k < trace.counter.size(); ++k) {
        csv += std::to_string(k + 1) + "," + std::to_string(trace.counter[k]) + "\n";
    }
    io::write_text(config.out / "trace.csv", csv);

    Json summary;
    summary["test"] = std::string(to_string(kind));
    summary["events"] = events.size();
    summary["accepted"] = trace.counter.size();
    summary["rejected"] = trace.rejected;
    summary["slope"] = trace.slope;
    summary["reference_slope"] = ref_trace.slope;
    summary["normalized"] = normalized;
    summary["normalized_slope"] = trace.normalized_slope;
    if (config.validation.ensemble > 0) {
        const SlopeEnsemble ens =
            wrong_unitary_slope_histogram(kind, events, u.u, model, config.validation.ensemble,
                                          derive_seed(config.seed, "ensemble"), normalization, config.validation.bins);
        io::write_text(config.out / "slope_histogram.csv", io::histograms_csv({"mass"}, {&ens.histogram}));
        summary["ensemble"] = config.validation.ensemble;
        summary["ensemble_mean"] = ens.mean;
        summary["ensemble_stddev"] = ens.stddev;
        summary["true_normalized_slope"] = ens.true_normalized_slope;
        summary["z_score"] = ens.z_score;
    } else {
        summary["ensemble"] = 0;
        summary["z_score"] = nullptr;
    }
    summary["provenance"] = provenance(config, "validate");
    io::write_text(config.out / "summary.json", dump(summary));
}

// -------------------------------------------------------------------- haar

void cmd_haar(const RunConfig& config)
{
    const auto& hc = config.haar;
    const int m = config.device.lattice.modes();
    const std::size_t n = hc.configurations;

    std::vector<ComplexMatrix> device_unitaries(n);
    for (std::size_t c = 0; c < n; ++c) {
        DeviceConfig dev = config.device;
        if (dev.powers_mW.empty() || c > 0) {
            const int heaters = 2 * dev.heaters.per_side;
            dev.powers_mW = random_heater_powers(heaters, dev.max_power_mW, derive_seed(config.seed, "configuration", c));
        }
        const UnitaryMatrix u = simulate_device(dev);
        if (!(u.defect() <= 1e-9)) {
            throw NumericalError("device unitary violates unitarity");
        }
        device_unitaries[c] = u.matrix();
    }
    std::vector<ComplexMatrix> device_rows;
    std::vector<ComplexMatrix> haar_rows;
    for (std::size_t c = 0; c < n; ++c) {
        device_rows.push_back(input_rows(device_unitaries[c], config.inputs));
        const UnitaryMatrix h = haar_unitary(m, derive_seed(config.seed, "haar", c));
        haar_rows.push_back(input_rows(h.matrix(), config.inputs));
    }
    const auto dev_hist = ensemble_moduli_phase_histograms(device_rows, hc.bins);
    const auto haar_hist = ensemble_moduli_phase_histograms(haar_rows, hc.bins);

    Histogram analytic_moduli = dev_hist.squared_moduli;
    const auto probs = haar_squared_modulus_bin_probabilities(m, analytic_moduli.edges);
    analytic_moduli.masses = probs;
    Histogram uniform_phase = dev_hist.phases;
    std::fill(uniform_phase.masses.begin(), uniform_phase.masses.end(), 1.0 / uniform_phase.bins());
    io::write_text(config.out / "moduli_histogram.csv",
                   io::histograms_csv({"device", "haar", "analytic"},
                                      {&dev_hist.squared_moduli, &haar_hist.squared_moduli, &analytic_moduli}));
    io::write_text(config.out / "phase_histogram.csv",
                   io::histograms_csv({"device", "haar", "uniform"},
                                      {&dev_hist.phases, &haar_hist.phases, &uniform_phase}));

    // Columns of different configurations, same input.
    std::vector<double> device_sim;
    for (std::size_t c = 0; c < n; ++c) {
        const std::size_t d = (c + 1) % n;
        for (int in : config.inputs) {
            const RealVector p = device_unitaries[c].col(in).cwiseAbs2();
            const RealVector q = device_unitaries[d].col(in).cwiseAbs2();
            device_sim.push_back(similarity(std::span<const double>(p.data(), p.size()),
                                            std::span<const double>(q.data(), q.size())));
        }
    }
    const Histogram dev_sim = make_histogram(device_sim, uniform_edges(0.0, 1.0, hc.bins));
    const Histogram haar_sim = column_similarity_distribution(m, hc.column_pairs, derive_seed(config.seed, "columns"), hc.bins);
    io::write_text(config.out / "similarity_histogram.csv",
                   io::histograms_csv({"device", "haar"}, {&dev_sim, &haar_sim}));

    std::vector<double> dev_phases;
    for (const auto& rows : device_rows) {
        const RealMatrix g = gauge_fixed_phases(rows);
        for (Eigen::Index r = 1; r < g.rows(); ++r) {
            for (Eigen::Index o = 1; o < g.cols(); ++o) {
                dev_phases.push_back(g(r, o));
            }
        }
    }
    std::vector<double> counts(dev_hist.squared_moduli.bins());
    const double total = static_cast<double>(dev_hist.squared_moduli.samples);
    for (std::size_t b = 0; b < counts.size(); ++b) {
        counts[b] = dev_hist.squared_moduli.masses[b] * total;
    }
    const TestResult ks = ks_uniform_test(dev_phases, -kPi, kPi);
    const TestResult chi = chi_square_test(counts, probs);

    Json summary;
    summary["m"] = m;
    summary["configurations"] = n;
    summary["inputs"] = config.inputs;
    summary["moduli_overlap"] = histogram_overlap(dev_hist.squared_moduli, haar_hist.squared_moduli);
    summary["phase_overlap"] = histogram_overlap(dev_hist.phases, haar_hist.phases);
    summary["similarity_overlap"] = histogram_overlap(dev_sim, haar_sim);
    summary["device_phase_ks"] = {{"statistic", ks.statistic}, {"p_value", ks.p_value}};
    summary["device_moduli_chi2"] = {{"statistic", chi.statistic}, {"dof", chi.dof}, {"p_value", chi.p_value}};
    summary["provenance"] = provenance(config, "haar");
    io::write_text(config.out / "haar_summary.json", dump(summary));
}

// --------------------------------------------------------------- footprint

void cmd_footprint(const RunConfig& config)
{
    const auto& fc = config.footprint;
    const auto& p = fc.params;
    const auto table = footprint::compare_layouts(fc.m_min, fc.m_max, p);
    io::write_text(config.out / "footprint.csv", footprint::scaling_csv(table));

    Json summary;
    summary["clements_loglog_slope"] = table.clements_loglog_slope;
    summary["triangular_loglog_slope"] = table.triangular_loglog_slope;
    summary["clements_increment_mm"] = footprint::clements_increment(p.R_min_mm, p.pitch_mm, p.coupling_per_mm);
    summary["clements_length_mm"] = footprint::clements_length(p.modes, p.R_min_mm, p.pitch_mm, p.coupling_per_mm);
    summary["lattice_kind"] = std::string(to_string(p.lattice));
    summary["min_spread_length_mm"] = footprint::min_spread_length(p.lattice, p.modes, p.coupling_per_mm, p.B);
    summary["fan_length_mm"] = footprint::fan_length(p.modes, p.R_min_mm, p.fiber_pitch_mm, p.fan);
    summary["modes"] = p.modes;
    summary["provenance"] = provenance(config, "footprint");
    io::write_text(config.out / "footprint_summary.json", dump(summary));
}

// --------------------------------------------------------------------- run

int run(int argc, char** argv)
{
    CLI::App app{"ccbs: continuously-coupled boson sampling toolkit"};
    app.require_subcommand(1);
    std::string config_path;
    std::uint64_t seed = 0;
    std::string out;
    std::size_t events = 0;
    std::string test;
    std::size_t ensemble = 0;
    bool collision_free = true;

    const std::vector<std::pair<std::string, void (*)(const RunConfig&)>> commands{
        {"simulate", cmd_simulate}, {"sample", cmd_sample},       {"reconstruct", cmd_reconstruct},
        {"validate", cmd_validate}, {"haar", cmd_haar},           {"footprint", cmd_footprint}};
    const std::vector<std::string> help{
        "Propagate the device and write unitary.json",
        "Draw multi-photon events into samples.jsonl",
        "Synthesize HOM data and reconstruct the input submatrix",
        "Score events with the likelihood-ratio counters",
        "Compare device ensembles with Haar statistics",
        "Tabulate interferometer footprint scaling"};
    std::vector<CLI::App*> subs;
    std::vector<CLI::Option*> opt_seed, opt_out, opt_events, opt_test, opt_ensemble, opt_cf;
    for (std::size_t i = 0; i < commands.size(); ++i) {
        CLI::App* sub = app.add_subcommand(commands[i].first, help[i]);
        sub->add_option("--config", config_path, "JSON configuration file")->check(CLI::ExistingFile);
        opt_seed.push_back(sub->add_option("--seed", seed, "Master seed"));
        opt_out.push_back(sub->add_option("--out", out, "Output directory"));
        opt_events.push_back(sub->add_option("--events", events, "Number of events"));
        opt_test.push_back(
            sub->add_option("--test", test, "Validation test")->check(CLI::IsMember({"uniform", "distinguishable"})));
        opt_ensemble.push_back(sub->add_option("--ensemble", ensemble, "Ensemble size"));
        opt_cf.push_back(sub->add_option("--collision-free", collision_free, "Collision-free outputs (true/false)"));
        subs.push_back(sub);
    }

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? kExitOk : kExitConfig;
    }

    try {
        std::size_t which = 0;
        while (!subs[which]->parsed()) {
            ++which;
        }
        Overrides ov;
        if (*opt_seed[which]) {
            ov.seed = seed;
        }
        if (*opt_out[which]) {
            ov.out = out;
        }
        if (*opt_events[which]) {
            ov.events = events;
        }
        if (*opt_test[which]) {
            ov.test = test;
        }
        if (*opt_ensemble[which]) {
            ov.ensemble = ensemble;
        }
        if (*opt_cf[which]) {
            ov.collision_free = collision_free;
        }
        const io::Json doc = config_path.empty() ? io::Json::object() : io::read_json(config_path);
        const RunConfig config = load_config(doc, ov);
        commands[which].second(config);
        return kExitOk;
    } catch (const FitError& e) {
        std::cerr << "ccbs: fit failed: " << e.what() << "\n";
        return kExitNumerical;
    } catch (const NumericalError& e) {
        std::cerr << "ccbs: numerical failure: " << e.what() << "\n";
        return kExitNumerical;
    } catch (const Error& e) {
        std::cerr << "ccbs: " << e.what() << "\n";
        return kExitConfig;
    } catch (const std::filesystem::filesystem_error& e) {
        std::cerr << "ccbs: " << e.what() << "\n";
        return kExitConfig;
    }
}

} // namespace ccbs::cli
