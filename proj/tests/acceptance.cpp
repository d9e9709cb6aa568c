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


#include <algorithm>
#include <chrono>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <sstream>
#include <string>
#include <vector>

#include <boost/math/distributions/binomial.hpp>

#include "ccbs/evolution.hpp"
#include "ccbs/footprint.hpp"
#include "ccbs/haarstats.hpp"
#include "ccbs/interference.hpp"
#include "ccbs/random.hpp"
#include "ccbs/reconstruction.hpp"
#include "ccbs/validation.hpp"
#include "oracles.hpp"

using namespace ccbs;
namespace fs = std::filesystem;

namespace {

struct Outcome {
    bool pass = false;
    std::string detail;
};

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0)
{
    return std::chrono::duration<double>(Clock::now() - t0).count();
}

std::string fmt(const char* f, double v)
{
    char buf[64];
    std::snprintf(buf, sizeof buf, f, v);
    return buf;
}

DeviceConfig device(std::uint64_t seed)
{
    DeviceConfig d;
    d.lattice.seed = seed;
    return d;
}

// ------------------------------------------------------------------------

Outcome permanent_oracle()
{
    const auto t0 = Clock::now();
    std::mt19937_64 rng(2026);
    double worst = 0.0;
    for (int t = 0; t < 200; ++t) {
        const int n = 2 + t % 6;
        const ComplexMatrix a = oracle::random_complex(n, n, rng);
        const Complex ref = oracle::naive_permanent(a);
        worst = std::max(worst, std::abs(permanent(a) - ref) / std::abs(ref));
    }
    const double dt = seconds_since(t0);
    return {worst <= 1e-10 && dt < 10.0, "max rel err " + fmt("%.2e", worst) + ", " + fmt("%.2f", dt) + " s"};
}

Outcome unitarity_convergence()
{
    double worst_defect = 0.0;
    double worst_halving = 0.0;
    for (std::uint64_t c = 0; c < 100; ++c) {
        DeviceConfig d = device(1000 + c);
        const UnitaryMatrix coarse = simulate_device(d);
        worst_defect = std::max(worst_defect, coarse.defect());
        d.propagation.n_steps *= 2;
        const UnitaryMatrix fine = simulate_device(d);
        worst_defect = std::max(worst_defect, fine.defect());
        worst_halving = std::max(worst_halving, (coarse.matrix() - fine.matrix()).cwiseAbs().maxCoeff());
    }

    LatticeSpec spec;
    spec.kind = LatticeKind::linear;
    spec.rows = 1;
    spec.cols = 2;
    spec.max_shift_um = 0.0;
    double worst_coupler = 0.0;
    for (double length : {1.0, 3.7, 10.0, 36.0}) {
        spec.length_mm = length;
        const UnitaryMatrix u = propagate(build_lattice(spec), CouplingModel{}, HeaterBank{});
        worst_coupler = std::max(worst_coupler, std::abs(std::norm(u(0, 1)) - std::pow(std::sin(0.2 * length), 2)));
    }
    return {worst_defect <= 1e-9 && worst_halving <= 1e-8 && worst_coupler <= 1e-10,
            "defect " + fmt("%.2e", worst_defect) + ", halving " + fmt("%.2e", worst_halving) + ", coupler " +
                fmt("%.2e", worst_coupler)};
}

Outcome brute_force_distribution()
{
    double worst = 0.0;
    double worst_norm = 0.0;
    std::size_t outcomes = 0;
    const std::vector<std::vector<int>> inputs{{1, 1, 1, 0, 0, 0}, {0, 1, 0, 1, 0, 1}, {3, 0, 0, 0, 0, 0}};
    for (std::size_t t = 0; t < inputs.size(); ++t) {
        const UnitaryMatrix u = haar_unitary(6, 60 + t);
        TableOptions opts;
        opts.collision_free = false;
        const auto table = distribution(u.matrix(), FockPattern(inputs[t]), Statistics::indistinguishable, opts);
        outcomes = table.patterns.size();
        const auto amps = oracle::fock_evolve(u.matrix(), inputs[t]);
        for (std::size_t p = 0; p < table.patterns.size(); ++p) {
            worst = std::max(worst, std::abs(table.probabilities[p] - std::norm(amps.at(table.patterns[p].occupations()))));
        }
        worst_norm = std::max(worst_norm, std::abs(table.total_mass - 1.0));
    }
    return {outcomes == 56 && worst <= 1e-10 && worst_norm <= 1e-9,
            std::to_string(outcomes) + " outcomes, max diff " + fmt("%.2e", worst) + ", |sum-1| " +
                fmt("%.2e", worst_norm)};
}

Outcome hom_identities()
{
    double worst_v = 0.0;
    double worst_a = 0.0;
    std::size_t pairs = 0;
    for (std::uint64_t s = 0; s < 50; ++s) {
        const UnitaryMatrix u = haar_unitary(32, 4000 + s);
        const int h = static_cast<int>(s % 32);
        const int k = static_cast<int>((s * 7 + 3) % 32) == h ? (h + 1) % 32 : static_cast<int>((s * 7 + 3) % 32);
        const int in[] = {h, k};
        const FockPattern input = FockPattern::from_modes(32, in);
        pairs = 0;
        for (int i = 0; i < 32; ++i) {
            for (int j = i + 1; j < 32; ++j) {
                ++pairs;
                worst_v = std::max(worst_v, std::abs(hom_visibility(u.matrix(), h, k, i, j) -
                                                     hom_visibility_phase_form(u.matrix(), h, k, i, j)));
                const int out[] = {i, j};
                const double d = output_probability(u.matrix(), input, FockPattern::from_modes(32, out),
                                                    Statistics::distinguishable);
                worst_a = std::max(worst_a, std::abs(hom_plateau(u.matrix(), h, k, i, j) - d));
            }
        }
    }
    return {pairs == 496 && worst_v <= 1e-12 && worst_a <= 1e-12,
            std::to_string(pairs) + " pairs, visibility diff " + fmt("%.2e", worst_v) + ", plateau diff " +
                fmt("%.2e", worst_a)};
}

Outcome reconstruction_round_trip()
{
    const auto t0 = Clock::now();
    const std::vector<int> inputs{9, 13, 18};
    const auto pairs = default_input_pairs(inputs);
    double clean_mod = 0.0;
    double clean_phase = 0.0;
    double noisy_rel = 0.0;
    double noisy_phase = 0.0;
    for (std::uint64_t r = 0; r < 15; ++r) {
        const UnitaryMatrix u = simulate_device(device(100 + r));
        const ComplexMatrix truth = input_rows(u.matrix(), inputs);

        const HomDataset clean = synthesize_dataset(u.matrix(), inputs, pairs, {});
        const GaugeDistance dc = gauge_distance(reconstruct(clean), truth);
        clean_mod = std::max(clean_mod, dc.moduli_rmse);
        clean_phase = std::max(clean_phase, dc.phase_quadruple_rmse);

        SynthesisOptions opts;
        opts.median_counts = 1e4;
        opts.intensity_counts = 1e6;
        opts.seed = derive_seed(7, "noise", r);
        const HomDataset noisy = synthesize_dataset(u.matrix(), inputs, pairs, opts);
        const ReconstructedSubmatrix rec = reconstruct(noisy);
        std::vector<double> rel;
        for (Eigen::Index i = 0; i < truth.rows(); ++i) {
            for (Eigen::Index o = 0; o < truth.cols(); ++o) {
                rel.push_back(std::abs(rec.moduli(i, o) - std::abs(truth(i, o))) / std::abs(truth(i, o)));
            }
        }
        std::nth_element(rel.begin(), rel.begin() + rel.size() / 2, rel.end());
        noisy_rel = std::max(noisy_rel, rel[rel.size() / 2]);
        noisy_phase = std::max(noisy_phase, gauge_distance(rec, truth).phase_quadruple_rmse);
    }
    const double dt = seconds_since(t0);
    return {clean_mod < 1e-6 && clean_phase < 1e-6 && noisy_rel < 0.03 && noisy_phase < 0.1 && dt < 300.0,
            "noiseless rmse " + fmt("%.1e", clean_mod) + "/" + fmt("%.1e", clean_phase) + " rad; noisy median rel " +
                fmt("%.4f", noisy_rel) + ", phase rmse " + fmt("%.4f", noisy_phase) + " rad; " + fmt("%.1f", dt) +
                " s"};
}

Outcome validation_separation()
{
    const std::vector<int> inputs{9, 13, 18};
    const int m = 32;
    TableOptions opts;
    opts.excluded_outputs = {m - 1};
    InputModel model;
    model.input_modes = inputs;
    model.active_outputs = m - 1;

    int z_w = 0;
    int z_c = 0;
    int positive = 0;
    int negative = 0;
    int significant_alone = 0;
    long pooled_steps = 0;
    long pooled_ups = 0;
    const int reps = 50;
    for (int r = 0; r < reps; ++r) {
        const UnitaryMatrix u = simulate_device(device(7000 + r));
        const FockPattern in = FockPattern::from_modes(m, inputs);
        const auto bosons = sample(distribution(u.matrix(), in, Statistics::indistinguishable, opts),
                                   derive_seed(r, "bosons"), 300);
        const auto classical = sample(distribution(u.matrix(), in, Statistics::distinguishable, opts),
                                      derive_seed(r, "classical"), 300, Branch::fixed, true);

        const auto w = wrong_unitary_slope_histogram(TestKind::uniform, bosons, u.matrix(), model, 200,
                                                     derive_seed(r, "ensemble-w"));
        const auto c = wrong_unitary_slope_histogram(TestKind::distinguishable, bosons, u.matrix(), model, 200,
                                                     derive_seed(r, "ensemble-c"));
        z_w += w.z_score > 3.0;
        z_c += c.z_score > 3.0;
        positive += w.true_normalized_slope > 0.0 && c.true_normalized_slope > 0.0;

        const ValidationTrace d = run_distinguishable_test(classical, u.matrix(), model);
        const int n = static_cast<int>(d.counter.size());
        const int ups = (d.counter.back() + n) / 2;
        negative += d.slope < 0.0;
        // Sign test on the counter steps: with no preference each step is +1 with probability 1/2.
        significant_alone += boost::math::cdf(boost::math::binomial(n, 0.5), ups) < 1e-3;
        pooled_steps += n;
        pooled_ups += ups;
    }
    const double p_slopes = boost::math::cdf(boost::math::binomial(reps, 0.5), reps - negative);
    const double p_pooled =
        boost::math::cdf(boost::math::binomial(static_cast<double>(pooled_steps), 0.5), static_cast<double>(pooled_ups));
    const int need = (95 * reps + 99) / 100;
    const bool pass = positive >= need && z_w >= need && z_c >= need && negative == reps && p_slopes < 1e-3 &&
                      p_pooled < 1e-3;
    return {pass, "W,C slopes positive " + std::to_string(positive) + "/50, z>3 W " + std::to_string(z_w) + "/50 C " +
                      std::to_string(z_c) + "/50; distinguishable C slopes negative " + std::to_string(negative) +
                      "/50, sign-test p " + fmt("%.1e", p_slopes) + ", pooled-step p " + fmt("%.1e", p_pooled) +
                      ", single-stream p<1e-3 " + std::to_string(significant_alone) + "/50"};
}

Outcome haar_statistics()
{
    const int m = 32;
    const int n = 1000;
    std::vector<double> x00;
    std::vector<double> moduli;
    std::vector<double> phases;
    moduli.reserve(static_cast<std::size_t>(n) * m * m);
    for (int s = 0; s < n; ++s) {
        const UnitaryMatrix u = haar_unitary(m, derive_seed(2026, "haar-acceptance", s));
        x00.push_back(std::norm(u(0, 0)));
        for (int i = 0; i < m; ++i) {
            for (int j = 0; j < m; ++j) {
                moduli.push_back(std::norm(u(i, j)));
                phases.push_back(std::arg(u(i, j)));
            }
        }
    }
    double mean = 0.0;
    for (double v : x00) {
        mean += v;
    }
    mean /= n;
    double var = 0.0;
    for (double v : x00) {
        var += (v - mean) * (v - mean);
    }
    const double se = std::sqrt(var / (n - 1) / n);
    const bool moment = std::abs(mean - 1.0 / m) <= 3.0 * se;

    const TestResult ks = ks_uniform_test(phases, -kPi, kPi);
    const auto edges = uniform_edges(0.0, 0.3, 30);
    const Histogram h = make_histogram(moduli, edges);
    std::vector<double> counts(h.bins());
    for (std::size_t b = 0; b < counts.size(); ++b) {
        counts[b] = h.masses[b] * static_cast<double>(h.samples);
    }
    // The last bin absorbs the tail above 0.3 through clamping; give it the tail mass too.
    auto probs = haar_squared_modulus_bin_probabilities(m, edges);
    probs.back() += std::pow(1.0 - edges.back(), m - 1);
    const TestResult chi = chi_square_test(counts, probs);
    return {moment && ks.p_value > 0.01 && chi.p_value > 0.01,
            "E|U00|^2 " + fmt("%.5f", mean) + " +- " + fmt("%.5f", se) + ", KS p " + fmt("%.3f", ks.p_value) +
                ", chi2 p " + fmt("%.3f", chi.p_value)};
}

Outcome footprint_numbers()
{
    const auto t0 = Clock::now();
    const double inc = footprint::clements_increment(30.0, 0.06, 1.0);
    const double planar = footprint::min_spread_length(LatticeKind::linear, 32, 0.2, 2.0);
    const double tri = footprint::min_spread_length(LatticeKind::triangular, 32, 0.2, 2.0);
    footprint::FootprintParams p;
    const auto table = footprint::compare_layouts(8, 1024, p);
    const double dt = seconds_since(t0);
    const bool pass = std::abs(inc - 4.55) < 0.005 && std::abs(inc - 4.5) <= 0.1 && planar == 80.0 &&
                      std::abs(tri - 14.1) < 0.05 && std::abs(tri - 15.0) <= 7.5 &&
                      std::abs(table.clements_loglog_slope - 1.0) <= 0.02 &&
                      std::abs(table.triangular_loglog_slope - 0.5) <= 0.02 && dt < 1.0;
    return {pass, "increment " + fmt("%.3f", inc) + " mm, planar " + fmt("%.6g", planar) + " mm, triangular " +
                      fmt("%.2f", tri) + " mm, slopes " + fmt("%.4f", table.clements_loglog_slope) + "/" +
                      fmt("%.4f", table.triangular_loglog_slope)};
}

Outcome spdc_model()
{
    bool exact = true;
    for (double R : {0.0, 0.37, 1.0, 2.0, 5.5}) {
        const SourceWeights w = spdc_weights(R);
        exact = exact && w.alpha == R && w.beta == R * R && w.gamma == 1.0;
    }

    const SourceWeights w = spdc_weights(1.7);
    const UnitaryMatrix u6 = haar_unitary(6, 909);
    const int src6[] = {0, 2, 3, 5};
    TableOptions full;
    full.collision_free = false;
    const auto mix = spdc_distribution(u6.matrix(), w, Statistics::indistinguishable, src6, full);
    std::vector<double> expect(mix.patterns.size(), 0.0);
    for (Branch b : {Branch::b1111, Branch::b2002, Branch::b0220}) {
        const auto amps = oracle::fock_evolve(u6.matrix(), branch_input(b, 6, src6).occupations());
        for (std::size_t p = 0; p < expect.size(); ++p) {
            expect[p] += w.weight(b) * std::norm(amps.at(mix.patterns[p].occupations()));
        }
    }
    double worst = 0.0;
    for (std::size_t p = 0; p < expect.size(); ++p) {
        worst = std::max(worst, std::abs(mix.probabilities[p] - expect[p]));
    }

    const UnitaryMatrix u = haar_unitary(32, 910);
    const int src[] = {4, 9, 13, 18};
    const std::size_t n = 100000;
    const auto events = spdc_sample(u.matrix(), w, Statistics::indistinguishable, src, 911, n);
    std::array<double, 3> counts{0, 0, 0};
    for (const auto& e : events) {
        counts[e.branch == Branch::b1111 ? 0 : e.branch == Branch::b2002 ? 1 : 2] += 1.0;
    }
    bool within = true;
    double worst_sigma = 0.0;
    for (int b = 0; b < 3; ++b) {
        const double p = w.normalized[b];
        const double sigma = std::sqrt(n * p * (1 - p));
        const double dev = std::abs(counts[b] - n * p) / sigma;
        worst_sigma = std::max(worst_sigma, dev);
        within = within && dev <= 3.0;
    }
    return {exact && worst <= 1e-10 && within, std::string("weights ") + (exact ? "exact" : "inexact") +
                                                  ", mixture diff " + fmt("%.2e", worst) + ", branch dev " +
                                                  fmt("%.2f", worst_sigma) + " sigma"};
}

std::string slurp(const fs::path& p)
{
    std::ifstream in(p, std::ios::binary);
    std::stringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

bool same_tree(const fs::path& a, const fs::path& b, std::size_t& files)
{
    std::vector<fs::path> names;
    for (const auto& e : fs::recursive_directory_iterator(a)) {
        if (e.is_regular_file()) {
            names.push_back(fs::relative(e.path(), a));
        }
    }
    std::size_t other = 0;
    for (const auto& e : fs::recursive_directory_iterator(b)) {
        other += e.is_regular_file();
    }
    if (names.empty() || other != names.size()) {
        return false;
    }
    for (const auto& n : names) {
        if (!fs::exists(b / n) || slurp(a / n) != slurp(b / n)) {
            return false;
        }
        ++files;
    }
    return true;
}

Outcome cli_reproducibility(const std::string& binary)
{
    if (binary.empty()) {
        return {false, "no CLI binary given"};
    }
    const fs::path root = fs::temp_directory_path() / "ccbs_acceptance_cli";
    fs::remove_all(root);
    fs::create_directories(root);
    {
        std::ofstream cfg(root / "config.json");
        cfg << R"({"lattice": {"rows": 2, "cols": 4}, "inputs": [1, 3, 6],)"
            << R"( "heaters": {"per_side": 4}, "propagation": {"n_steps": 256},)"
            << R"( "reconstruction": {"method": "scan", "median_counts": 10000},)"
            << R"( "haar": {"column_pairs": 500}, "validation": {"ensemble": 30}})";
    }
    const std::vector<std::string> commands{"simulate", "sample", "reconstruct", "validate", "haar", "footprint"};
    std::size_t files = 0;
    for (const auto& cmd : commands) {
        for (int run = 0; run < 2; ++run) {
            const fs::path out = root / (cmd + "_" + std::to_string(run));
            std::string line = "\"" + binary + "\" " + cmd + " --config \"" + (root / "config.json").string() +
                               "\" --seed 31 --events 200 --out \"" + out.string() + "\"";
            if (cmd == "haar") {
                line += " --ensemble 3";
            }
            if (std::system(line.c_str()) != 0) {
                return {false, cmd + " exited with an error"};
            }
        }
        if (!same_tree(root / (cmd + "_0"), root / (cmd + "_1"), files)) {
            return {false, cmd + " outputs differ between runs"};
        }
    }
    fs::remove_all(root);
    return {true, "6 subcommands, " + std::to_string(files) + " files byte-identical"};
}

} // namespace

int main(int argc, char** argv)
{
    const std::string binary = argc > 1 ? argv[1] : "";
    const std::vector<std::pair<const char*, std::function<Outcome()>>> criteria{
        {"permanent oracle", permanent_oracle},
        {"unitarity and convergence", unitarity_convergence},
        {"brute-force distribution", brute_force_distribution},
        {"HOM identities", hom_identities},
        {"reconstruction round trip", reconstruction_round_trip},
        {"validation separation", validation_separation},
        {"Haar statistics", haar_statistics},
        {"footprint numbers", footprint_numbers},
        {"SPDC model", spdc_model},
        {"CLI reproducibility", [&] { return cli_reproducibility(binary); }},
    };
    int failures = 0;
    for (std::size_t k = 0; k < criteria.size(); ++k) {
        Outcome o;
        try {
            o = criteria[k].second();
        } catch (const std::exception& e) {
            o = {false, std::string("exception: ") + e.what()};
        }
        failures += !o.pass;
        std::printf("criterion %2zu %-28s %s  %s\n", k + 1, criteria[k].first, o.pass ? "PASS" : "FAIL",
                    o.detail.c_str());
        std::fflush(stdout);
    }
    return failures == 0 ? 0 : 1;
}
