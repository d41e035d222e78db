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

#include "fosl/pipeline.hpp"

#include <algorithm>
#include <fstream>
#include <limits>
#include <map>
#include <set>

#include <nlohmann/json.hpp>

#include "fosl/errors.hpp"
#include "fosl/feature_select.hpp"
#include "fosl/seeding.hpp"

namespace fosl {

namespace {

using nlohmann::json;

GeneratorParams generator_defaults(const json& sc) {
    GeneratorParams g;
    g.t_j = sc.value("t_j", 10.0);
    g.k_d = sc.value("k_d", 2.0);
    g.k_s = sc.value("k_s", 1.0);
    g.rating_mw = sc.value("rating_mw", 100.0);
    return g;
}

ScenarioTemplate scenario_from_json(const json& sc) {
    ScenarioTemplate tmpl;
    GridScenario& base = tmpl.base;
    base.n_gens = sc.value("n_gens", 6);
    const std::string topology = sc.value("topology", std::string("ring"));
    if (sc.contains("stiffness")) {
        const auto rows = sc.at("stiffness").get<std::vector<std::vector<double>>>();
        base.stiffness.resize(static_cast<Eigen::Index>(rows.size()),
                              static_cast<Eigen::Index>(rows.size()));
        for (std::size_t r = 0; r < rows.size(); ++r) {
            if (rows[r].size() != rows.size())
                throw ConfigError("scenario.stiffness must be a square matrix");
            for (std::size_t c = 0; c < rows[r].size(); ++c)
                base.stiffness(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(c)) =
                    rows[r][c];
        }
        if (base.stiffness.rows() != base.n_gens)
            throw ConfigError("scenario.stiffness size does not match n_gens");
    } else if (topology == "ring") {
        base.stiffness = ring_stiffness(base.n_gens, sc.value("ring_stiffness", 1.0));
    } else {
        throw ConfigError("unknown scenario.topology '" + topology +
                          "' (use \"ring\" or give an explicit stiffness matrix)");
    }
    base.gens.assign(static_cast<std::size_t>(base.n_gens), generator_defaults(sc));
    base.source = 1;
    base.fo_amplitude = sc.value("fo_amplitude", 0.01);
    base.fo_omega = sc.value("fo_omega", 0.0);
    base.ou_c = sc.value("ou_c", 0.2);
    base.ou_sigma = sc.value("ou_sigma", 0.01);
    base.load_scale = sc.value("load_scale", 0.1);
    if (sc.contains("snr_db") && sc["snr_db"].is_null())
        base.snr_db = std::numeric_limits<double>::infinity(); // noise disabled
    else
        base.snr_db = sc.value("snr_db", 13.0);
    base.duration_s = sc.value("duration_s", 10.0);
    base.rate_hz = sc.value("rate_hz", 25.0);
    base.internal_dt = sc.value("internal_dt", 1e-3);
    if (sc.contains("t_j_range")) {
        const auto range = sc.at("t_j_range").get<std::vector<double>>();
        if (range.size() != 2) throw ConfigError("scenario.t_j_range must be [lo, hi]");
        tmpl.t_j_range = {range[0], range[1]};
    }
    tmpl.auto_fo_omega = sc.value("auto_fo_omega", base.fo_omega <= 0.0);
    tmpl.zero_source_damping = sc.value("zero_source_damping", true);
    return tmpl;
}

} // namespace

PipelineConfig load_pipeline_config(const std::filesystem::path& file) {
    std::ifstream in(file, std::ios::binary);
    if (!in) throw ConfigError("cannot open config file " + file.string());
    json doc;
    try {
        in >> doc;
    } catch (const json::exception& e) {
        throw ConfigError("malformed config " + file.string() + ": " + e.what());
    }
    try {
        PipelineConfig cfg;
        cfg.seed = doc.value("seed", std::uint64_t{42});
        if (doc.contains("out_dir")) cfg.out_dir = doc.at("out_dir").get<std::string>();
        if (doc.contains("scenario")) cfg.scenario = scenario_from_json(doc["scenario"]);
        else cfg.scenario = scenario_from_json(json::object());
        cfg.train_scenarios_per_class = doc.value("train_scenarios_per_class", 40);
        cfg.test_scenarios_per_class = doc.value("test_scenarios_per_class", 40);
        cfg.shifts_s = doc.value("shifts_s", std::vector<double>{0, 1, 2, 3, 4, 5});
        cfg.window_s = doc.value("window_s", 5.0);
        cfg.test_delays_s = doc.value("test_delays_s", std::vector<double>{0.0, 1.3, 2.8, 3.4});
        if (doc.contains("selection")) {
            cfg.selection_t_target = doc["selection"].value("t_target", 3);
            cfg.selection_folds = doc["selection"].value("folds", 5);
        }
        if (doc.contains("train")) {
            const auto& tr = doc["train"];
            cfg.train.rho = tr.value("rho", 0.0);
            cfg.train.eta_base = tr.value("eta_base", 0.01);
            cfg.train.epsilon = tr.value("epsilon", 1e-3);
            cfg.train.max_cycles = tr.value("max_cycles", 10);
            cfg.train.triplets_per_cycle = tr.value("triplets_per_cycle", 0);
            cfg.train.align_triplets = tr.value("align_triplets", false);
        }
        cfg.templates_per_class = doc.value("templates_per_class", 2);
        cfg.k = doc.value("k", 1);
        cfg.quantities = doc.value("quantities", std::vector<std::string>{"p", "angle", "speed"});
        cfg.train.seed = mix_seed(cfg.seed, "train-metric");
        return cfg;
    } catch (const json::exception& e) {
        throw ConfigError("malformed config " + file.string() + ": " + e.what());
    }
}

SimulateOutput run_simulate(const PipelineConfig& config, bool keep_raw) {
    SimulateOutput out;
    out.train_dir = config.out_dir / "train";
    out.test_dir = config.out_dir / "test";
    std::filesystem::create_directories(config.out_dir);

    ScenarioTemplate train_tmpl = config.scenario;
    train_tmpl.base.seed = mix_seed(config.seed, "train");
    ScenarioTemplate test_tmpl = config.scenario;
    test_tmpl.base.seed = mix_seed(config.seed, "test");

    if (keep_raw) {
        auto raw_train = generate_raw_corpus(train_tmpl, config.train_scenarios_per_class);
        Dataset ds;
        ds.samples = std::move(raw_train);
        ds.n_classes = config.scenario.base.n_gens;
        ds.channels_per_gen = static_cast<int>(kQuantityOrder.size());
        save_dataset(ds, config.out_dir / "raw_train");
        auto raw_test = generate_raw_corpus(test_tmpl, config.test_scenarios_per_class);
        Dataset ds_test;
        ds_test.samples = std::move(raw_test);
        ds_test.n_classes = config.scenario.base.n_gens;
        ds_test.channels_per_gen = static_cast<int>(kQuantityOrder.size());
        save_dataset(ds_test, config.out_dir / "raw_test");
    }

    Dataset train = generate_corpus(train_tmpl, config.train_scenarios_per_class,
                                    config.shifts_s, config.window_s);
    save_dataset(train, out.train_dir);
    Dataset test = generate_corpus(test_tmpl, config.test_scenarios_per_class,
                                   config.test_delays_s, config.window_s);
    save_dataset(test, out.test_dir);
    return out;
}

SelectionResult run_select(const PipelineConfig& config, const std::filesystem::path& corpus_dir,
                           const std::filesystem::path& out_file) {
    Dataset corpus = load_dataset(corpus_dir);
    SelectionResult sel = sequential_select(corpus, config.selection_t_target,
                                            config.selection_folds,
                                            mix_seed(config.seed, "select"));
    if (!out_file.empty()) {
        json doc = {{"chosen_quantities", sel.chosen_quantities},
                    {"step_accuracies", sel.step_accuracies},
                    {"seed", sel.seed}};
        std::ofstream out(out_file, std::ios::binary);
        if (!out) throw DataError("cannot write selection result " + out_file.string());
        out << doc.dump(1) << '\n';
    }
    return sel;
}

namespace {

// Filters the chosen quantities back into canonical column order so the
// training layout matches what adapt_query produces at match time.
std::vector<std::string> canonical_quantities(const std::vector<std::string>& chosen) {
    std::vector<std::string> out;
    for (const char* q : kQuantityOrder)
        if (std::find(chosen.begin(), chosen.end(), q) != chosen.end()) out.push_back(q);
    for (const auto& q : chosen)
        if (std::find(out.begin(), out.end(), q) == out.end()) out.push_back(q);
    return out;
}

} // namespace

ModelBundle run_train(const PipelineConfig& config, const std::filesystem::path& corpus_dir,
                      const std::filesystem::path& model_file, bool skip_select,
                      bool identity_metric) {
    Dataset corpus = load_dataset(corpus_dir);
    if (corpus.samples.empty()) throw DataError("training corpus is empty");

    std::optional<SelectionResult> selection;
    std::vector<std::string> quantities;
    if (skip_select) {
        quantities = canonical_quantities(config.quantities);
    } else {
        selection = sequential_select(corpus, config.selection_t_target, config.selection_folds,
                                      mix_seed(config.seed, "select"));
        quantities = canonical_quantities(selection->chosen_quantities);
    }

    Dataset sliced = select_quantities(corpus, quantities);
    MetricModel metric = identity_metric
                             ? MetricModel::identity(
                                   static_cast<int>(sliced.samples.front().cols()),
                                   sliced.samples.front().channel_names)
                             : train_metric(sliced, config.train);
    TemplateSet templates = build_templates(sliced, metric, config.templates_per_class);

    ModelBundle bundle{
        .n_gens = config.scenario.base.n_gens,
        .window_s = config.window_s,
        .rate_hz = sliced.samples.front().rate_hz,
        .quantities = quantities,
        .selection = std::move(selection),
        .metric = std::move(metric),
        .templates = std::move(templates),
    };
    // Trust the corpus over the config for the generator count.
    if (!sliced.samples.front().channel_names.empty()) {
        std::set<std::string> gens;
        for (const auto& n : sliced.samples.front().channel_names)
            gens.insert(n.substr(0, n.find('.')));
        bundle.n_gens = static_cast<int>(gens.size());
    }
    if (!model_file.empty()) save_model_bundle(bundle, model_file);
    return bundle;
}

ModelBundle run_templates(const std::filesystem::path& model_file,
                          const std::filesystem::path& corpus_dir, int templates_per_class,
                          const std::filesystem::path& out_file) {
    ModelBundle bundle = load_model_bundle(model_file);
    Dataset corpus = load_dataset(corpus_dir);
    Dataset sliced = select_quantities(corpus, bundle.quantities);
    bundle.templates = build_templates(sliced, bundle.metric, templates_per_class);
    if (!out_file.empty()) save_model_bundle(bundle, out_file);
    return bundle;
}

ClassifyOutput run_classify(const std::filesystem::path& model_file,
                            const std::filesystem::path& input_csv, int k) {
    ModelBundle bundle = load_model_bundle(model_file);
    MtsSample query = bundle.adapt_query(load_sample_csv(input_csv));
    ClassifyOutput out;
    out.result = classify(query, bundle.templates, bundle.metric, k);

    json ranking = json::array();
    for (const auto& r : out.result.ranking)
        ranking.push_back({{"class", r.label},
                           {"distance", r.distance},
                           {"scenario_id", r.scenario_id},
                           {"shift_s", r.shift_s}});
    json doc = {{"predicted_class", out.result.predicted},
                {"k", k},
                {"reference_distances", std::move(ranking)}};
    out.json_record = doc.dump(1);
    return out;
}

std::string report_to_json(const EvalReport& report, const std::vector<DelayAccuracy>& per_delay) {
    json per_class = json::array();
    for (const auto& pc : report.per_class)
        per_class.push_back({{"class", pc.class_index},
                             {"accuracy_pct", pc.accuracy_pct},
                             {"count", pc.count}});
    json doc = {{"overall_accuracy_pct", report.overall_accuracy_pct},
                {"per_class", std::move(per_class)},
                {"confusion", report.confusion},
                {"mean_match_time_s", report.mean_match_time_s},
                {"total_time_s", report.total_time_s}};
    if (!per_delay.empty()) {
        json pd = json::array();
        for (const auto& d : per_delay)
            pd.push_back({{"delay_s", d.delay_s},
                          {"accuracy_pct", d.accuracy_pct},
                          {"count", d.count}});
        doc["per_delay"] = std::move(pd);
    }
    return doc.dump(1);
}

EvaluateOutput run_evaluate(const std::filesystem::path& model_file,
                            const std::filesystem::path& testset_dir, int k,
                            bool identity_metric) {
    ModelBundle bundle = load_model_bundle(model_file);
    Dataset testset = load_dataset(testset_dir);
    if (testset.samples.empty()) throw DataError("test set is empty");
    if (testset.samples.front().cols() != bundle.metric.p_dim())
        testset = select_quantities(testset, bundle.quantities);

    const MetricModel metric = identity_metric
                                   ? MetricModel::identity(bundle.metric.p_dim(),
                                                           bundle.metric.channel_names())
                                   : bundle.metric;

    EvaluateOutput out;
    out.report = evaluate(testset, bundle.templates, metric, k);

    // Per-delay breakdown whenever the manifest carries several d values.
    std::map<double, std::pair<int, int>> by_delay; // d -> (correct, total)
    for (const auto& rec : out.report.records) {
        auto& agg = by_delay[rec.shift_s];
        agg.first += (rec.predicted == rec.true_label);
        agg.second += 1;
    }
    if (by_delay.size() > 1)
        for (const auto& [d, agg] : by_delay)
            out.per_delay.push_back(
                {d, 100.0 * agg.first / static_cast<double>(agg.second), agg.second});
    out.json_report = report_to_json(out.report, out.per_delay);
    return out;
}

} // namespace fosl
