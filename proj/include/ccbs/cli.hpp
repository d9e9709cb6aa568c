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


#ifndef CCBS_CLI_HPP
#define CCBS_CLI_HPP

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "ccbs/evolution.hpp"
#include "ccbs/footprint.hpp"
#include "ccbs/interference.hpp"
#include "ccbs/io.hpp"
#include "ccbs/reconstruction.hpp"
#include "ccbs/validation.hpp"

namespace ccbs::cli {

inline constexpr int kExitOk = 0;
inline constexpr int kExitConfig = 2;
inline constexpr int kExitNumerical = 3;

/// Command-line values that take precedence over the config document.
struct Overrides {
    std::optional<std::uint64_t> seed;
    std::optional<std::string> out;
    std::optional<std::size_t> events;
    std::optional<std::string> test;
    std::optional<std::size_t> ensemble;
    std::optional<bool> collision_free;
};

struct PhotonConfig {
    Statistics statistics = Statistics::indistinguishable;
    bool collision_free = true;
    /// Unset: the last output for three-photon fixed inputs, none otherwise.
    std::optional<std::vector<int>> excluded_outputs;
    /// SPDC source ratio; unset means a fixed Fock input.
    std::optional<double> spdc_R;
    std::size_t events = 300;
};

struct ReconstructionConfig {
    std::vector<std::pair<int, int>> pairs;
    SynthesisOptions synthesis;
    std::optional<std::filesystem::path> dataset;
    PhaseOptions phases;
    ModuliOptions moduli;
};

struct ValidationConfig {
    TestKind test = TestKind::uniform;
    std::size_t ensemble = 200;
    BranchScoring scoring = BranchScoring::recorded;
    int bins = kDefaultBins;
    std::optional<std::filesystem::path> samples;
};

struct HaarConfig {
    std::size_t configurations = 20;
    std::size_t column_pairs = 10000;
    int bins = kDefaultBins;
};

struct FootprintConfig {
    footprint::FootprintParams params;
    int m_min = 8;
    int m_max = 1024;
};

struct RunConfig {
    std::uint64_t seed = 0;
    std::filesystem::path out = "ccbs_out";
    DeviceConfig device;
    std::vector<int> inputs{9, 13, 18};
    std::optional<std::filesystem::path> unitary;
    PhotonConfig photons;
    ReconstructionConfig reconstruction;
    ValidationConfig validation;
    HaarConfig haar;
    FootprintConfig footprint;
    /// Canonical JSON of the effective configuration.
    io::Json canonical;
};

RunConfig load_config(const io::Json& doc, const Overrides& overrides = {});

/// Output modes removed from the detection for this configuration and m.
std::vector<int> excluded_outputs(const RunConfig& config, int m);

void cmd_simulate(const RunConfig& config);
void cmd_sample(const RunConfig& config);
void cmd_reconstruct(const RunConfig& config);
void cmd_validate(const RunConfig& config);
void cmd_haar(const RunConfig& config);
void cmd_footprint(const RunConfig& config);

/// Parses argv, runs the subcommand and maps errors to exit codes.
int run(int argc, char** argv);

} // namespace ccbs::cli

#endif
