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


#include "ccbs/io.hpp"

#include <charconv>
#include <cstdio>
#include <fstream>
#include <sstream>

namespace ccbs::io {

std::string format_double(double value)
{
    char buf[64];
    const auto res = std::to_chars(buf, buf + sizeof buf, value);
    return std::string(buf, res.ptr);
}

namespace {

template <typename T>
T require(const Json& doc, const char* key)
{
    if (!doc.is_object() || !doc.contains(key)) {
        throw ConfigError(std::string("missing field '") + key + "'");
    }
    try {
        return doc.at(key).get<T>();
    } catch (const nlohmann::json::exception& e) {
        throw ConfigError(std::string("field '") + key + "': " + e.what());
    }
}

Json real_matrix_json(const RealMatrix& a)
{
    Json rows = Json::array();
    for (Eigen::Index r = 0; r < a.rows(); ++r) {
        Json row = Json::array();
        for (Eigen::Index c = 0; c < a.cols(); ++c) {
            row.push_back(a(r, c));
        }
        rows.push_back(std::move(row));
    }
    return rows;
}

RealMatrix real_matrix_from(const Json& rows, const char* what)
{
    if (!rows.is_array() || rows.empty() || !rows[0].is_array()) {
        throw ConfigError(std::string(what) + " must be a non-empty array of rows");
    }
    const auto n = static_cast<Eigen::Index>(rows.size());
    const auto m = static_cast<Eigen::Index>(rows[0].size());
    RealMatrix a(n, m);
    for (Eigen::Index r = 0; r < n; ++r) {
        if (!rows[r].is_array() || static_cast<Eigen::Index>(rows[r].size()) != m) {
            throw ConfigError(std::string(what) + " rows differ in length");
        }
        for (Eigen::Index c = 0; c < m; ++c) {
            if (!rows[r][c].is_number()) {
                throw ConfigError(std::string(what) + " entries must be numbers");
            }
            a(r, c) = rows[r][c].get<double>();
        }
    }
    return a;
}

} // namespace

Json unitary_to_json(const ComplexMatrix& u, const Json& provenance)
{
    Json doc;
    doc["m"] = u.rows();
    Json rows = Json::array();
    for (Eigen::Index i = 0; i < u.rows(); ++i) {
        Json row = Json::array();
        for (Eigen::Index j = 0; j < u.cols(); ++j) {
            row.push_back(Json::array({u(i, j).real(), u(i, j).imag()}));
        }
        rows.push_back(std::move(row));
    }
    doc["entries"] = std::move(rows);
    doc["provenance"] = provenance;
    return doc;
}

ComplexMatrix unitary_from_json(const Json& doc)
{
    const int m = require<int>(doc, "m");
    if (m < 1) {
        throw ConfigError("unitary m must be positive");
    }
    const Json& rows = doc.at("entries");
    if (!rows.is_array() || static_cast<int>(rows.size()) != m) {
        throw ConfigError("unitary entries must have m rows");
    }
    ComplexMatrix u(m, m);
    for (int i = 0; i < m; ++i) {
        if (!rows[i].is_array() || static_cast<int>(rows[i].size()) != m) {
            throw ConfigError("unitary rows must have m entries");
        }
        for (int j = 0; j < m; ++j) {
            const Json& z = rows[i][j];
            if (!z.is_array() || z.size() != 2 || !z[0].is_number() || !z[1].is_number()) {
                throw ConfigError("unitary entries must be [re, im] pairs");
            }
            u(i, j) = Complex(z[0].get<double>(), z[1].get<double>());
        }
    }
    return u;
}

Json dataset_to_json(const HomDataset& dataset)
{
    Json doc;
    doc["m"] = dataset.m;
    doc["inputs"] = dataset.inputs;
    Json pairs = Json::array();
    for (const auto& pd : dataset.pairs) {
        Json p;
        p["h"] = pd.h;
        p["k"] = pd.k;
        Json entries = Json::array();
        for (const auto& e : pd.entries) {
            Json row = Json::array({e.i, e.j, e.a, e.defined ? Json(e.V) : Json(nullptr), e.err_a, e.err_b});
            entries.push_back(std::move(row));
        }
        p["entries"] = std::move(entries);
        pairs.push_back(std::move(p));
    }
    doc["entry_fields"] = Json::array({"i", "j", "a", "V", "err_a", "err_b"});
    doc["pairs"] = std::move(pairs);
    if (dataset.intensities) {
        doc["intensities"] = real_matrix_json(*dataset.intensities);
    }
    return doc;
}

HomDataset dataset_from_json(const Json& doc)
{
    HomDataset ds;
    ds.m = require<int>(doc, "m");
    ds.inputs = require<std::vector<int>>(doc, "inputs");
    if (!doc.contains("pairs") || !doc.at("pairs").is_array()) {
        throw ConfigError("dataset needs a 'pairs' array");
    }
    for (const auto& p : doc.at("pairs")) {
        HomPairData pd;
        pd.h = require<int>(p, "h");
        pd.k = require<int>(p, "k");
        if (!p.contains("entries") || !p.at("entries").is_array()) {
            throw ConfigError("pair needs an 'entries' array");
        }
        for (const auto& row : p.at("entries")) {
            if (!row.is_array() || row.size() != 6) {
                throw ConfigError("dataset entries are [i, j, a, V, err_a, err_b]");
            }
            HomEntry e;
            try {
                e.i = row[0].get<int>();
                e.j = row[1].get<int>();
                e.a = row[2].get<double>();
                e.defined = !row[3].is_null();
                e.V = e.defined ? row[3].get<double>() : 0.0;
                e.err_a = row[4].get<double>();
                e.err_b = row[5].get<double>();
            } catch (const nlohmann::json::exception& ex) {
                throw ConfigError(std::string("bad dataset entry: ") + ex.what());
            }
            pd.entries.push_back(e);
        }
        ds.pairs.push_back(std::move(pd));
    }
    if (doc.contains("intensities")) {
        ds.intensities = real_matrix_from(doc.at("intensities"), "intensities");
    }
    ds.validate();
    return ds;
}

Json reconstructed_to_json(const ReconstructedSubmatrix& rec)
{
    Json doc;
    doc["rows"] = rec.rows();
    doc["cols"] = rec.cols();
    doc["inputs"] = rec.inputs;
    doc["gauge"] = rec.gauge;
    doc["moduli"] = real_matrix_json(rec.moduli);
    doc["phases"] = real_matrix_json(rec.phases);
    doc["chi2"] = rec.chi2;
    doc["chi2_data"] = rec.chi2_data;
    doc["converged"] = rec.converged;
    doc["warning"] = rec.warning;
    return doc;
}

ReconstructedSubmatrix reconstructed_from_json(const Json& doc)
{
    ReconstructedSubmatrix rec;
    rec.inputs = require<std::vector<int>>(doc, "inputs");
    rec.gauge = doc.value("gauge", std::string("row0-col0"));
    rec.moduli = real_matrix_from(doc.at("moduli"), "moduli");
    rec.phases = real_matrix_from(doc.at("phases"), "phases");
    if (rec.moduli.rows() != rec.phases.rows() || rec.moduli.cols() != rec.phases.cols()) {
        throw ConfigError("moduli and phases differ in shape");
    }
    rec.chi2 = doc.value("chi2", 0.0);
    rec.chi2_data = doc.value("chi2_data", 0.0);
    rec.converged = doc.value("converged", true);
    rec.warning = doc.value("warning", std::string());
    return rec;
}

Json event_to_json(const SampleEvent& event)
{
    Json doc;
    doc["index"] = event.index;
    doc["branch"] = std::string(to_string(event.branch));
    doc["output"] = event.output;
    doc["distinguishable"] = event.distinguishable;
    return doc;
}

SampleEvent event_from_json(const Json& doc)
{
    SampleEvent e;
    e.index = require<std::size_t>(doc, "index");
    e.branch = parse_branch(require<std::string>(doc, "branch"));
    e.output = require<std::vector<int>>(doc, "output");
    e.distinguishable = require<bool>(doc, "distinguishable");
    return e;
}

std::string samples_to_jsonl(const SampleHeader& header, const std::vector<SampleEvent>& events)
{
    Json h;
    h["record"] = "header";
    h["m"] = header.m;
    h["photons"] = header.photons;
    h["statistics"] = header.statistics;
    h["inputs"] = header.inputs;
    h["source"] = header.source;
    if (header.source == "spdc") {
        h["R"] = header.R;
    }
    h["excluded_outputs"] = header.excluded_outputs;
    h["collision_free"] = header.collision_free;
    h["count"] = header.count;
    h["seed"] = header.seed;
    std::string out = h.dump() + "\n";
    for (const auto& e : events) {
        out += event_to_json(e).dump();
        out += '\n';
    }
    return out;
}

void read_samples_jsonl(const std::filesystem::path& path, SampleHeader& header, std::vector<SampleEvent>& events)
{
    std::ifstream in(path);
    if (!in) {
        throw ConfigError("cannot open samples file " + path.string());
    }
    std::string line;
    bool have_header = false;
    events.clear();
    std::size_t lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (line.empty()) {
            continue;
        }
        Json doc;
        try {
            doc = Json::parse(line);
        } catch (const nlohmann::json::exception& e) {
            throw ConfigError(path.string() + ":" + std::to_string(lineno) + ": " + e.what());
        }
        if (!have_header) {
            if (doc.value("record", std::string()) != "header") {
                throw ConfigError("samples file must start with a header record");
            }
            header.m = require<int>(doc, "m");
            header.photons = require<int>(doc, "photons");
            header.statistics = require<std::string>(doc, "statistics");
            header.inputs = require<std::vector<int>>(doc, "inputs");
            header.source = doc.value("source", std::string("fixed"));
            header.R = doc.value("R", 0.0);
            header.excluded_outputs = doc.value("excluded_outputs", std::vector<int>{});
            header.collision_free = doc.value("collision_free", true);
            header.count = doc.value("count", std::size_t{0});
            header.seed = doc.value("seed", std::uint64_t{0});
            have_header = true;
            continue;
        }
        events.push_back(event_from_json(doc));
    }
    if (!have_header) {
        throw ConfigError("samples file has no header record");
    }
}

std::string histograms_csv(const std::vector<std::string>& names, const std::vector<const Histogram*>& histograms)
{
    if (names.size() != histograms.size() || histograms.empty()) {
        throw DomainError("histograms_csv: one name per histogram");
    }
    const auto& edges = histograms.front()->edges;
    for (const auto* h : histograms) {
        if (h->edges != edges) {
            throw DomainError("histograms_csv: histograms must share bin edges");
        }
    }
    std::string out = "edge_low,edge_high";
    for (const auto& n : names) {
        out += "," + n;
    }
    out += "\n";
    for (std::size_t b = 0; b + 1 < edges.size(); ++b) {
        out += format_double(edges[b]) + "," + format_double(edges[b + 1]);
        for (const auto* h : histograms) {
            out += "," + format_double(h->masses[b]);
        }
        out += "\n";
    }
    return out;
}

Json read_json(const std::filesystem::path& path)
{
    std::ifstream in(path);
    if (!in) {
        throw ConfigError("cannot open " + path.string());
    }
    try {
        return Json::parse(in);
    } catch (const nlohmann::json::exception& e) {
        throw ConfigError(path.string() + ": " + e.what());
    }
}

void write_text(const std::filesystem::path& path, const std::string& text)
{
    if (path.has_parent_path()) {
        std::filesystem::create_directories(path.parent_path());
    }
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) {
        throw ConfigError("cannot write " + path.string());
    }
    out << text;
    if (!out) {
        throw ConfigError("write failed for " + path.string());
    }
}

std::string content_hash(const Json& doc)
{
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (unsigned char c : doc.dump()) {
        h = (h ^ c) * 0x100000001b3ULL;
    }
    char buf[17];
    std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
    return buf;
}

} // namespace ccbs::io
