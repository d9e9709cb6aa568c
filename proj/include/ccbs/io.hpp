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


#ifndef CCBS_IO_HPP
#define CCBS_IO_HPP

#include <filesystem>
#include <string>
#include <vector>

#include <json.hpp>

#include "ccbs/common.hpp"
#include "ccbs/haarstats.hpp"
#include "ccbs/interference.hpp"
#include "ccbs/reconstruction.hpp"

namespace ccbs::io {

using Json = nlohmann::ordered_json;

/// Shortest round-trip decimal form, '.' separator, locale-independent.
std::string format_double(double value);

/// {"m": m, "entries": [[[re, im], ...], ...]} row-major, plus "provenance".
Json unitary_to_json(const ComplexMatrix& u, const Json& provenance = Json::object());
ComplexMatrix unitary_from_json(const Json& doc);

Json dataset_to_json(const HomDataset& dataset);
HomDataset dataset_from_json(const Json& doc);

Json reconstructed_to_json(const ReconstructedSubmatrix& rec);
ReconstructedSubmatrix reconstructed_from_json(const Json& doc);

struct SampleHeader {
    int m = 0;
    int photons = 0;
    std::string statistics;
    std::vector<int> inputs;
    /// "fixed" or "spdc".
    std::string source = "fixed";
    double R = 0.0;
    std::vector<int> excluded_outputs;
    bool collision_free = true;
    std::size_t count = 0;
    std::uint64_t seed = 0;
};

Json event_to_json(const SampleEvent& event);
SampleEvent event_from_json(const Json& doc);

/// Header record first, then one event per line.
std::string samples_to_jsonl(const SampleHeader& header, const std::vector<SampleEvent>& events);
void read_samples_jsonl(const std::filesystem::path& path, SampleHeader& header, std::vector<SampleEvent>& events);

/// edge_low,edge_high,<column names...> rows for histograms sharing edges.
std::string histograms_csv(const std::vector<std::string>& names, const std::vector<const Histogram*>& histograms);

Json read_json(const std::filesystem::path& path);
void write_text(const std::filesystem::path& path, const std::string& text);

/// FNV-1a 64 of the compact dump, hex.
std::string content_hash(const Json& doc);

} // namespace ccbs::io

#endif
