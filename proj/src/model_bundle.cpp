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

#include "fosl/model_bundle.hpp"

#include <fstream>

#include <nlohmann/json.hpp>

#include "fosl/errors.hpp"

namespace fosl {

namespace {

using nlohmann::json;

json metric_to_json(const MetricModel& model) {
    json doc;
    doc["p_dim"] = model.p_dim();
    doc["channel_names"] = model.channel_names();
    std::vector<double> m;
    m.reserve(static_cast<std::size_t>(model.p_dim()) * model.p_dim());
    for (int r = 0; r < model.p_dim(); ++r)
        for (int c = 0; c < model.p_dim(); ++c) m.push_back(model.matrix()(r, c));
    doc["m"] = std::move(m);
    const auto& meta = model.training_meta();
    doc["training_meta"] = {{"cycles_run", meta.cycles_run},
                            {"final_cycle_loss", meta.final_cycle_loss},
                            {"eta", meta.eta_base},
                            {"rho", meta.rho},
                            {"cycle_losses", meta.cycle_losses}};
    return doc;
}

MetricModel metric_from_json(const json& doc) {
    const int p = doc.at("p_dim").get<int>();
    auto names = doc.at("channel_names").get<std::vector<std::string>>();
    auto flat = doc.at("m").get<std::vector<double>>();
    if (flat.size() != static_cast<std::size_t>(p) * static_cast<std::size_t>(p))
        throw DataError("metric entry count does not match p_dim^2");
    Eigen::MatrixXd m(p, p);
    for (int r = 0; r < p; ++r)
        for (int c = 0; c < p; ++c)
            m(r, c) = flat[static_cast<std::size_t>(r) * static_cast<std::size_t>(p) +
                           static_cast<std::size_t>(c)];
    if ((m - m.transpose()).cwiseAbs().maxCoeff() > 1e-10)
        throw NumericError("stored metric is not symmetric");
    TrainingMeta meta;
    if (doc.contains("training_meta")) {
        const auto& tm = doc["training_meta"];
        meta.cycles_run = tm.value("cycles_run", 0);
        meta.final_cycle_loss = tm.value("final_cycle_loss", 0.0);
        meta.eta_base = tm.value("eta", 0.0);
        meta.rho = tm.value("rho", 0.0);
        meta.cycle_losses = tm.value("cycle_losses", std::vector<double>{});
    }
    return MetricModel(std::move(m), std::move(names), std::move(meta));
}

json sample_to_json(const MtsSample& s) {
    std::vector<double> values;
    values.reserve(static_cast<std::size_t>(s.rows() * s.cols()));
    for (Eigen::Index r = 0; r < s.rows(); ++r)
        for (Eigen::Index c = 0; c < s.cols(); ++c) values.push_back(s.values(r, c));
    return {{"label", s.label},       {"scenario_id", s.scenario_id},
            {"shift_s", s.shift_s},   {"rate_hz", s.rate_hz},
            {"seed", s.seed},         {"H", s.rows()},
            {"P", s.cols()},          {"values", std::move(values)}};
}

MtsSample sample_from_json(const json& doc, const std::vector<std::string>& channel_names) {
    MtsSample s;
    s.label = doc.at("label").get<int>();
    s.scenario_id = doc.at("scenario_id").get<int>();
    s.shift_s = doc.at("shift_s").get<double>();
    s.rate_hz = doc.at("rate_hz").get<double>();
    s.seed = doc.at("seed").get<std::uint64_t>();
    const auto h = doc.at("H").get<Eigen::Index>();
    const auto p = doc.at("P").get<Eigen::Index>();
    auto flat = doc.at("values").get<std::vector<double>>();
    if (static_cast<Eigen::Index>(flat.size()) != h * p)
        throw DataError("template sample value count does not match H*P");
    s.values.resize(h, p);
    for (Eigen::Index r = 0; r < h; ++r)
        for (Eigen::Index c = 0; c < p; ++c)
            s.values(r, c) = flat[static_cast<std::size_t>(r * p + c)];
    s.channel_names = channel_names;
    return s;
}

} // namespace

MtsSample ModelBundle::adapt_query(const MtsSample& query) const {
    if (query.cols() == metric.p_dim()) return query;
    const auto full_names = make_channel_names(n_gens);
    if (query.cols() == static_cast<Eigen::Index>(full_names.size())) {
        MtsSample named = query;
        if (named.channel_names.empty()) named.channel_names = full_names;
        return select_quantities(named, quantities);
    }
    throw ShapeError("query has " + std::to_string(query.cols()) +
                     " channels; expected " + std::to_string(metric.p_dim()) +
                     " (selected) or " + std::to_string(full_names.size()) +
                     " (all quantities)");
}

void save_model_bundle(const ModelBundle& bundle, const std::filesystem::path& file) {
    json doc;
    doc["format"] = "fosl-model";
    doc["version"] = 1;
    doc["n_gens"] = bundle.n_gens;
    doc["window_s"] = bundle.window_s;
    doc["rate_hz"] = bundle.rate_hz;
    doc["quantities"] = bundle.quantities;
    if (bundle.selection) {
        doc["selection"] = {{"chosen_quantities", bundle.selection->chosen_quantities},
                            {"step_accuracies", bundle.selection->step_accuracies},
                            {"seed", bundle.selection->seed}};
    } else {
        doc["selection"] = nullptr;
    }
    doc["metric"] = metric_to_json(bundle.metric);
    json classes = json::array();
    for (const auto& [label, entries] : bundle.templates.per_class) {
        json members = json::array();
        for (const auto& e : entries) {
            json m = sample_to_json(e.sample);
            m["c_value"] = e.c_value;
            members.push_back(std::move(m));
        }
        classes.push_back({{"class", label}, {"members", std::move(members)}});
    }
    doc["templates"] = {{"templates_per_class", bundle.templates.templates_per_class},
                        {"classes", std::move(classes)}};
    std::ofstream out(file, std::ios::binary);
    if (!out) throw DataError("cannot write model bundle " + file.string());
    out << doc.dump(1) << '\n';
}

ModelBundle load_model_bundle(const std::filesystem::path& file) {
    std::ifstream in(file, std::ios::binary);
    if (!in) throw DataError("cannot open model bundle " + file.string());
    json doc;
    try {
        in >> doc;
    } catch (const json::exception& e) {
        throw DataError("malformed model bundle " + file.string() + ": " + e.what());
    }
    try {
        if (doc.value("format", std::string{}) != "fosl-model")
            throw DataError(file.string() + " is not a fosl model bundle");
        ModelBundle bundle{
            .n_gens = doc.at("n_gens").get<int>(),
            .window_s = doc.at("window_s").get<double>(),
            .rate_hz = doc.at("rate_hz").get<double>(),
            .quantities = doc.at("quantities").get<std::vector<std::string>>(),
            .selection = std::nullopt,
            .metric = metric_from_json(doc.at("metric")),
            .templates = {},
        };
        if (doc.contains("selection") && !doc["selection"].is_null()) {
            SelectionResult sel;
            sel.chosen_quantities =
                doc["selection"].at("chosen_quantities").get<std::vector<std::string>>();
            sel.step_accuracies =
                doc["selection"].at("step_accuracies").get<std::vector<double>>();
            sel.seed = doc["selection"].at("seed").get<std::uint64_t>();
            bundle.selection = std::move(sel);
        }
        const auto& tj = doc.at("templates");
        bundle.templates.templates_per_class = tj.at("templates_per_class").get<int>();
        for (const auto& cls : tj.at("classes")) {
            const int label = cls.at("class").get<int>();
            auto& entries = bundle.templates.per_class[label];
            for (const auto& m : cls.at("members")) {
                TemplateEntry e;
                e.sample = sample_from_json(m, bundle.metric.channel_names());
                e.c_value = m.at("c_value").get<double>();
                entries.push_back(std::move(e));
            }
        }
        return bundle;
    } catch (const json::exception& e) {
        throw DataError("malformed model bundle " + file.string() + ": " + e.what());
    }
}

} // namespace fosl
