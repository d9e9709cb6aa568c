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

#include <filesystem>
#include <fstream>
#include <sstream>

#include "ccbs/cli.hpp"
#include "ccbs/haarstats.hpp"

using namespace ccbs;
namespace fs = std::filesystem;

namespace {

fs::path scratch(const std::string& name)
{
    const fs::path dir = fs::temp_directory_path() / ("ccbs_unit_" + name);
    fs::remove_all(dir);
    return dir;
}

std::string slurp(const fs::path& p)
{
    std::ifstream in(p, std::ios::binary);
    std::stringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

} // namespace

TEST_CASE("doubles are written in shortest round-trip form")
{
    CHECK(io::format_double(0.1) == "0.1");
    CHECK(io::format_double(-2.5e-17) == "-2.5e-17");
    const double x = 1.0 / 3.0;
    CHECK(std::stod(io::format_double(x)) == x);
}

TEST_CASE("unitary JSON round trip")
{
    const UnitaryMatrix u = haar_unitary(5, 2);
    const io::Json doc = io::unitary_to_json(u.matrix(), {{"seed", 2}});
    CHECK(doc["m"] == 5);
    CHECK(doc["entries"][1][2][0].get<double>() == u(1, 2).real());
    CHECK(doc["provenance"]["seed"] == 2);
    const ComplexMatrix back = io::unitary_from_json(io::Json::parse(doc.dump()));
    CHECK(back == u.matrix());
    io::Json broken = doc;
    broken["entries"][0][0] = "x";
    CHECK_THROWS_AS(io::unitary_from_json(broken), ConfigError);
}

TEST_CASE("dataset, reconstruction and sample round trips")
{
    const UnitaryMatrix u = haar_unitary(8, 3);
    const std::vector<int> inputs{0, 3, 5};
    const HomDataset ds = synthesize_dataset(u.matrix(), inputs, default_input_pairs(inputs), {});
    const HomDataset back = io::dataset_from_json(io::Json::parse(io::dataset_to_json(ds).dump()));
    REQUIRE(back.pairs.size() == ds.pairs.size());
    CHECK(back.pairs[1].entries[4].V == ds.pairs[1].entries[4].V);
    CHECK(back.intensities.has_value() == ds.intensities.has_value());

    const ReconstructedSubmatrix rec = reconstruct(ds);
    const ReconstructedSubmatrix rec_back = io::reconstructed_from_json(io::reconstructed_to_json(rec));
    CHECK(rec_back.phases == rec.phases);
    CHECK(rec_back.moduli == rec.moduli);

    const fs::path dir = scratch("samples");
    io::SampleHeader h;
    h.m = 8;
    h.photons = 3;
    h.statistics = "indistinguishable";
    h.inputs = inputs;
    const auto table = distribution(u.matrix(), FockPattern::from_modes(8, inputs), Statistics::indistinguishable);
    const auto events = sample(table, 4, 20);
    h.count = events.size();
    io::write_text(dir / "s.jsonl", io::samples_to_jsonl(h, events));
    io::SampleHeader h2;
    std::vector<SampleEvent> e2;
    io::read_samples_jsonl(dir / "s.jsonl", h2, e2);
    CHECK(h2.m == 8);
    CHECK(h2.inputs == inputs);
    REQUIRE(e2.size() == events.size());
    CHECK(e2[7].output == events[7].output);

    io::write_text(dir / "empty.jsonl", io::samples_to_jsonl(h, {}));
    io::read_samples_jsonl(dir / "empty.jsonl", h2, e2);
    CHECK(e2.empty());
    const std::string text = slurp(dir / "empty.jsonl");
    CHECK(std::count(text.begin(), text.end(), '\n') == 1);
    fs::remove_all(dir);
}

TEST_CASE("config loading and overrides")
{
    const io::Json doc = io::Json::parse(R"({"seed": 5, "lattice": {"rows": 2, "cols": 4}, "inputs": [0, 3, 6]})");
    cli::Overrides ov;
    ov.seed = 9;
    ov.events = 42;
    const cli::RunConfig c = cli::load_config(doc, ov);
    CHECK(c.seed == 9);
    CHECK(c.device.lattice.seed == 9);
    CHECK(c.photons.events == 42);
    CHECK(c.device.lattice.modes() == 8);
    CHECK(cli::excluded_outputs(c, 8) == std::vector<int>{7});
    CHECK(c.canonical["seed"] == 9);

    CHECK_THROWS_AS(cli::load_config(io::Json::parse(R"({"lattice": {"kind": "hexagonal"}})")), ConfigError);
    CHECK_THROWS_AS(cli::load_config(io::Json::parse(R"({"inputs": [40]})")), ConfigError);
    CHECK_THROWS_AS(cli::load_config(io::Json::parse(R"({"lattice": {"rows": "four"}})")), ConfigError);
    CHECK_THROWS_AS(cli::load_config(io::Json::parse(R"({"photons": {"spdc_R": 1.0}})")), ConfigError);
    const auto spdc = cli::load_config(io::Json::parse(R"({"inputs": [1, 2, 3, 4], "photons": {"spdc_R": 1.5}})"));
    CHECK(cli::excluded_outputs(spdc, 32).empty());
}

TEST_CASE("footprint command writes its tables")
{
    const fs::path dir = scratch("footprint");
    cli::Overrides ov;
    ov.out = dir.string();
    cli::cmd_footprint(cli::load_config(io::Json::object(), ov));
    const std::string csv = slurp(dir / "footprint.csv");
    CHECK(csv.rfind("m,clements_mm", 0) == 0);
    const io::Json summary = io::read_json(dir / "footprint_summary.json");
    CHECK(summary["min_spread_length_mm"].get<double>() == doctest::Approx(2.0 * std::sqrt(32.0) / 4.0));
    CHECK(std::abs(summary["clements_loglog_slope"].get<double>() - 1.0) < 0.02);
    fs::remove_all(dir);
}

TEST_CASE("command-line exit codes")
{
    const fs::path dir = scratch("exit");
    fs::create_directories(dir);
    io::write_text(dir / "bad.json", R"({"lattice": {"kind": "hexagonal"}})");
    const std::string cfg = (dir / "bad.json").string();
    const std::string out = (dir / "out").string();
    std::vector<std::string> args{"ccbs", "footprint", "--config", cfg, "--out", out};
    std::vector<char*> argv;
    for (auto& a : args) {
        argv.push_back(a.data());
    }
    CHECK(cli::run(static_cast<int>(argv.size()), argv.data()) == cli::kExitConfig);

    io::write_text(dir / "ok.json", "{}");
    args[3] = (dir / "ok.json").string();
    argv.clear();
    for (auto& a : args) {
        argv.push_back(a.data());
    }
    CHECK(cli::run(static_cast<int>(argv.size()), argv.data()) == cli::kExitOk);

    std::vector<std::string> bogus{"ccbs", "footprint", "--test", "bayes"};
    argv.clear();
    for (auto& a : bogus) {
        argv.push_back(a.data());
    }
    CHECK(cli::run(static_cast<int>(argv.size()), argv.data()) == cli::kExitConfig);
    fs::remove_all(dir);
}

namespace {

int run_cli(std::vector<std::string> args)
{
    args.insert(args.begin(), "ccbs");
    std::vector<char*> argv;
    for (auto& a : args) {
        argv.push_back(a.data());
    }
    return cli::run(static_cast<int>(argv.size()), argv.data());
}

} // namespace

TEST_CASE("simulate with negligible coupling writes the identity")
{
    const fs::path dir = scratch("identity");
    fs::create_directories(dir);
    io::write_text(dir / "c.json",
                   R"({"lattice": {"rows": 2, "cols": 4, "pitch_um": 400, "max_shift_um": 0}, "inputs": [0, 1, 2],)"
                   R"( "heaters": {"max_power_mW": 0}, "propagation": {"n_steps": 8}})");
    CHECK(run_cli({"simulate", "--config", (dir / "c.json").string(), "--out", (dir / "o").string()}) == 0);
    const ComplexMatrix u = io::unitary_from_json(io::read_json(dir / "o" / "unitary.json"));
    CHECK(u == ComplexMatrix::Identity(8, 8));
    fs::remove_all(dir);
}

TEST_CASE("precondition failures exit with code 2")
{
    const fs::path dir = scratch("preconditions");
    fs::create_directories(dir);
    io::write_text(dir / "pairs.json",
                   R"({"lattice": {"rows": 2, "cols": 4}, "heaters": {"per_side": 4}, "inputs": [0, 3, 6],)"
                   R"( "propagation": {"n_steps": 64}, "reconstruction": {"pairs": [[0, 3]]}})");
    CHECK(run_cli({"reconstruct", "--config", (dir / "pairs.json").string(), "--out", (dir / "r").string()}) ==
          cli::kExitConfig);

    io::SampleHeader h;
    h.m = 6;
    h.photons = 3;
    h.statistics = "indistinguishable";
    h.inputs = {0, 1, 2};
    io::write_text(dir / "s.jsonl", io::samples_to_jsonl(h, {}));
    io::write_text(dir / "validate.json",
                   R"({"lattice": {"rows": 2, "cols": 4}, "heaters": {"per_side": 4}, "inputs": [0, 3, 6],)"
                   R"( "propagation": {"n_steps": 64}, "validation": {"samples": ")" +
                       (dir / "s.jsonl").generic_string() + R"("}})");
    CHECK(run_cli({"validate", "--config", (dir / "validate.json").string(), "--out", (dir / "v").string()}) ==
          cli::kExitConfig);
    CHECK(run_cli({"haar", "--config", (dir / "missing.json").string()}) == cli::kExitConfig);
    fs::remove_all(dir);
}
