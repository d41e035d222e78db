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

#include "fosl/mts.hpp"

#include <algorithm>
#include <cmath>
#include <set>

#include "fosl/errors.hpp"

namespace fosl {

std::vector<std::string> make_channel_names(int n_gens,
                                            const std::vector<std::string>& quantities) {
    if (n_gens < 1) throw ConfigError("make_channel_names: n_gens must be >= 1");
    std::vector<std::string> names;
    names.reserve(static_cast<std::size_t>(n_gens) * quantities.size());
    for (int g = 1; g <= n_gens; ++g)
        for (const auto& q : quantities) names.push_back("g" + std::to_string(g) + "." + q);
    return names;
}

std::vector<std::string> make_channel_names(int n_gens) {
    std::vector<std::string> all(kQuantityOrder.begin(), kQuantityOrder.end());
    return make_channel_names(n_gens, all);
}

std::string channel_quantity(const std::string& channel_name) {
    auto dot = channel_name.find('.');
    if (dot == std::string::npos || dot + 1 >= channel_name.size())
        throw DataError("channel name '" + channel_name + "' lacks a quantity suffix");
    return channel_name.substr(dot + 1);
}

void validate_sample(const MtsSample& s, const std::string& context) {
    const std::string where = context.empty() ? std::string{} : " in " + context;
    if (!s.channel_names.empty() &&
        static_cast<Eigen::Index>(s.channel_names.size()) != s.cols())
        throw DataError("channel name count " + std::to_string(s.channel_names.size()) +
                        " does not match P=" + std::to_string(s.cols()) + where);
    for (Eigen::Index r = 0; r < s.rows(); ++r)
        for (Eigen::Index c = 0; c < s.cols(); ++c)
            if (!std::isfinite(s.values(r, c)))
                throw DataError("non-finite value at row " + std::to_string(r) + ", column " +
                                std::to_string(c) + where);
}

void validate_dataset(const Dataset& ds) {
    if (ds.samples.empty()) return;
    const auto& first = ds.samples.front();
    for (std::size_t i = 0; i < ds.samples.size(); ++i) {
        const auto& s = ds.samples[i];
        const std::string ctx = "sample " + std::to_string(i);
        validate_sample(s, ctx);
        if (s.rows() != first.rows() || s.cols() != first.cols())
            throw DataError(ctx + ": shape " + std::to_string(s.rows()) + "x" +
                            std::to_string(s.cols()) + " differs from dataset shape " +
                            std::to_string(first.rows()) + "x" + std::to_string(first.cols()));
        if (s.rate_hz != first.rate_hz)
            throw DataError(ctx + ": rate_hz differs from dataset rate");
        if (s.channel_names != first.channel_names)
            throw DataError(ctx + ": channel names differ from dataset layout");
        if (s.label < 1 || s.label > ds.n_classes)
            throw DataError(ctx + ": label " + std::to_string(s.label) + " outside 1.." +
                            std::to_string(ds.n_classes));
    }
}

namespace {

// Maps a time offset to its row index; the offset must sit on the grid.
Eigen::Index grid_index(double t_s, double rate_hz, const char* what) {
    const double exact = t_s * rate_hz;
    const double rounded = std::round(exact);
    if (std::abs(exact - rounded) > 1e-9)
        throw DataError(std::string(what) + " " + std::to_string(t_s) +
                        " s is not aligned to the " + std::to_string(rate_hz) +
                        " Hz sampling grid");
    return static_cast<Eigen::Index>(rounded);
}

} // namespace

MtsSample window_slice(const MtsSample& raw, double t_start_s, double window_s) {
    if (t_start_s < 0) throw DataError("window start must be nonnegative");
    if (raw.rate_hz <= 0) throw DataError("window_slice: sample lacks a sampling rate");
    const Eigen::Index start = grid_index(t_start_s, raw.rate_hz, "window start");
    const Eigen::Index len = grid_index(window_s, raw.rate_hz, "window length");
    if (len < 1) throw DataError("window length must cover at least one sample");
    if (start + len > raw.rows())
        throw DataError("window [" + std::to_string(t_start_s) + ", " +
                        std::to_string(t_start_s + window_s) + ") s exceeds the " +
                        std::to_string(static_cast<double>(raw.rows()) / raw.rate_hz) +
                        " s horizon");
    MtsSample out;
    out.values = raw.values.middleRows(start, len);
    out.label = raw.label;
    out.scenario_id = raw.scenario_id;
    out.shift_s = t_start_s;
    out.rate_hz = raw.rate_hz;
    out.seed = raw.seed;
    out.channel_names = raw.channel_names;
    return out;
}

Dataset build_shifted_training_set(const std::vector<MtsSample>& raw_samples,
                                   const std::vector<double>& shifts_s, double window_s) {
    Dataset out;
    out.samples.reserve(raw_samples.size() * shifts_s.size());
    int max_label = 0;
    for (const auto& raw : raw_samples) {
        for (double shift : shifts_s) out.samples.push_back(window_slice(raw, shift, window_s));
        max_label = std::max(max_label, raw.label);
    }
    out.n_classes = max_label;
    if (!raw_samples.empty()) {
        std::set<std::string> quantities;
        for (const auto& name : raw_samples.front().channel_names)
            quantities.insert(channel_quantity(name));
        out.channels_per_gen = static_cast<int>(quantities.size());
    }
    return out;
}

MtsSample select_quantities(const MtsSample& s, const std::vector<std::string>& quantities) {
    if (s.channel_names.empty())
        throw DataError("select_quantities: sample has no channel names");
    const std::set<std::string> wanted(quantities.begin(), quantities.end());
    std::set<std::string> generators;
    for (const auto& name : s.channel_names)
        generators.insert(name.substr(0, name.find('.')));
    std::vector<Eigen::Index> keep;
    for (Eigen::Index c = 0; c < s.cols(); ++c)
        if (wanted.count(channel_quantity(s.channel_names[static_cast<std::size_t>(c)])))
            keep.push_back(c);
    if (keep.empty() || keep.size() != wanted.size() * generators.size())
        throw DataError("select_quantities: requested quantities not present in every "
                        "generator block");
    MtsSample out = s;
    out.values.resize(s.rows(), static_cast<Eigen::Index>(keep.size()));
    out.channel_names.clear();
    for (std::size_t i = 0; i < keep.size(); ++i) {
        out.values.col(static_cast<Eigen::Index>(i)) = s.values.col(keep[i]);
        out.channel_names.push_back(s.channel_names[static_cast<std::size_t>(keep[i])]);
    }
    return out;
}

Dataset select_quantities(const Dataset& ds, const std::vector<std::string>& quantities) {
    Dataset out;
    out.n_classes = ds.n_classes;
    out.channels_per_gen = static_cast<int>(quantities.size());
    out.samples.reserve(ds.samples.size());
    for (const auto& s : ds.samples) out.samples.push_back(select_quantities(s, quantities));
    return out;
}

} // namespace fosl
