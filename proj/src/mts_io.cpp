/*
 * Copyright 2026 the fosl authors
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

#include <charconv>
#include <cstdio>
#include <fstream>
#include <sstream>
#include <system_error>

#include <nlohmann/json.hpp>

#include "fosl/errors.hpp"
#include "fosl/mts.hpp"

namespace fosl {

namespace {

using nlohmann::json;

std::string format_double(double v) {
    char buf[32];
    auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), v);
    if (ec != std::errc{}) { // fallback, still round-trip exact
        std::snprintf(buf, sizeof(buf), "%.17g", v);
        return buf;
    }
    return std::string(buf, ptr);
}

double parse_double(std::string_view field, const std::string& file, Eigen::Index row,
                    Eigen::Index col) {
    double v = 0.0;
    auto [ptr, ec] = std::from_chars(field.data(), field.data() + field.size(), v);
    if (ec != std::errc{} || ptr != field.data() + field.size())
        throw DataError(file + ": unparseable number '" + std::string(field) + "' at data row " +
                        std::to_string(row) + ", column " + std::to_string(col));
    if (!std::isfinite(v))
        throw DataError(file + ": non-finite value at data row " + std::to_string(row) +
                        ", column " + std::to_string(col));
    return v;
}

void write_csv(const MtsSample& s, const std::filesystem::path& file) {
    std::ofstream out(file, std::ios::binary); // binary keeps LF endings everywhere
    if (!out) throw DataError("cannot open " + file.string() + " for writing");
    for (Eigen::Index c = 0; c < s.cols(); ++c) {
        if (c) out << ',';
        out << "ch_" << c;
    }
    out << '\n';
    for (Eigen::Index r = 0; r < s.rows(); ++r) {
        for (Eigen::Index c = 0; c < s.cols(); ++c) {
            if (c) out << ',';
            out << format_double(s.values(r, c));
        }
        out << '\n';
    }
    if (!out) throw DataError("write failed for " + file.string());
}

std::vector<std::string_view> split_fields(std::string_view line, std::vector<std::string_view>& out) {
    out.clear();
    std::size_t start = 0;
    while (true) {
        const std::size_t comma = line.find(',', start);
        if (comma == std::string_view::npos) {
            out.push_back(line.substr(start));
            break;
        }
        out.push_back(line.substr(start, comma - start));
        start = comma + 1;
    }
    return out;
}

// Reads header + data rows. Expected sizes of -1 mean "take what the file
// gives"; otherwise mismatches are data errors naming the file.
Eigen::MatrixXd read_csv(const std::filesystem::path& file, Eigen::Index expect_rows,
                         Eigen::Index expect_cols) {
    std::ifstream in(file, std::ios::binary);
    if (!in) throw DataError("cannot open sample file " + file.string());
    std::string line;
    if (!std::getline(in, line)) throw DataError(file.string() + ": missing header line");
    if (!line.empty() && line.back() == '\r') line.pop_back();
    std::vector<std::string_view> fields;
    split_fields(line, fields);
    const Eigen::Index cols = static_cast<Eigen::Index>(fields.size());
    if (expect_cols >= 0 && cols != expect_cols)
        throw DataError(file.string() + ": header declares " + std::to_string(cols) +
                        " channels, expected P=" + std::to_string(expect_cols));

    std::vector<double> data;
    if (expect_rows > 0) data.reserve(static_cast<std::size_t>(expect_rows * cols));
    Eigen::Index rows = 0;
    while (std::getline(in, line)) {
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty()) continue;
        split_fields(line, fields);
        if (static_cast<Eigen::Index>(fields.size()) != cols)
            throw DataError(file.string() + ": data row " + std::to_string(rows) + " has " +
                            std::to_string(fields.size()) + " fields, expected " +
                            std::to_string(cols));
        for (Eigen::Index c = 0; c < cols; ++c)
            data.push_back(parse_double(fields[static_cast<std::size_t>(c)], file.string(), rows, c));
        ++rows;
    }
    if (expect_rows >= 0 && rows != expect_rows)
        throw DataError(file.string() + ": found " + std::to_string(rows) +
                        " data rows, manifest declares H=" + std::to_string(expect_rows));
    Eigen::MatrixXd m(rows, cols);
    for (Eigen::Index r = 0; r < rows; ++r)
        for (Eigen::Index c = 0; c < cols; ++c)
            m(r, c) = data[static_cast<std::size_t>(r * cols + c)];
    return m;
}

} // namespace

void save_sample_csv(const MtsSample& s, const std::filesystem::path& file) {
    validate_sample(s, file.string());
    write_csv(s, file);
}

MtsSample load_sample_csv(const std::filesystem::path& file) {
    MtsSample s;
    s.values = read_csv(file, -1, -1);
    s.label = kUnknownLabel;
    return s;
}

void save_dataset(const Dataset& ds, const std::filesystem::path& dir) {
    validate_dataset(ds);
    std::filesystem::create_directories(dir);
    json manifest;
    manifest["format"] = "fosl-dataset";
    manifest["version"] = 1;
    manifest["n_classes"] = ds.n_classes;
    manifest["channels_per_gen"] = ds.channels_per_gen;
    json entries = json::array();
    for (std::size_t i = 0; i < ds.samples.size(); ++i) {
        const auto& s = ds.samples[i];
        char name[32];
        std::snprintf(name, sizeof(name), "sample_%06zu.csv", i);
        write_csv(s, dir / name);
        entries.push_back({{"file", name},
                           {"label", s.label},
                           {"scenario_id", s.scenario_id},
                           {"shift_s", s.shift_s},
                           {"seed", s.seed},
                           {"H", s.rows()},
                           {"P", s.cols()},
                           {"rate_hz", s.rate_hz},
                           {"channel_names", s.channel_names}});
    }
    manifest["samples"] = std::move(entries);
    std::ofstream out(dir / "manifest.json", std::ios::binary);
    if (!out) throw DataError("cannot write manifest in " + dir.string());
    out << manifest.dump(1) << '\n';
}

Dataset load_dataset(const std::filesystem::path& dir) {
    const auto manifest_path = dir / "manifest.json";
    std::ifstream in(manifest_path, std::ios::binary);
    if (!in) throw DataError("missing manifest " + manifest_path.string());
    json manifest;
    try {
        in >> manifest;
    } catch (const json::exception& e) {
        throw DataError("malformed manifest " + manifest_path.string() + ": " + e.what());
    }
    Dataset ds;
    try {
        ds.n_classes = manifest.at("n_classes").get<int>();
        ds.channels_per_gen = manifest.at("channels_per_gen").get<int>();
        for (const auto& entry : manifest.at("samples")) {
            MtsSample s;
            const auto file = dir / entry.at("file").get<std::string>();
            s.label = entry.at("label").get<int>();
            s.scenario_id = entry.at("scenario_id").get<int>();
            s.shift_s = entry.at("shift_s").get<double>();
            s.seed = entry.at("seed").get<std::uint64_t>();
            s.rate_hz = entry.at("rate_hz").get<double>();
            s.channel_names = entry.at("channel_names").get<std::vector<std::string>>();
            const auto h = entry.at("H").get<Eigen::Index>();
            const auto p = entry.at("P").get<Eigen::Index>();
            if (static_cast<Eigen::Index>(s.channel_names.size()) != p)
                throw DataError(file.string() + ": manifest channel_names count " +
                                std::to_string(s.channel_names.size()) +
                                " does not match P=" + std::to_string(p));
            s.values = read_csv(file, h, p);
            ds.samples.push_back(std::move(s));
        }
    } catch (const json::exception& e) {
        throw DataError("malformed manifest " + manifest_path.string() + ": " + e.what());
    }
    validate_dataset(ds);
    return ds;
}

} // namespace fosl
