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

#include <doctest.h>

#include <fstream>

#include "fosl/errors.hpp"
#include "fosl/pipeline.hpp"
#include "test_util.hpp"

using namespace fosl;
using fosl::test::TempDir;

namespace {

// Desk-scale settings shrunk to seconds of runtime.
std::filesystem::path write_tiny_config(const TempDir& dir) {
    const auto path = dir.path() / "config.json";
    std::ofstream out(path);
    out << R"({
  "seed": 4242,
  "out_dir": ")" << (dir.path() / "run").string() << R"(",
  "scenario": {
    "n_gens": 3,
    "topology": "ring",
    "ring_stiffness": 1.0,
    "k_s": 1.0, "k_d": 2.0, "rating_mw": 100.0,
    "t_j_range": [6.0, 12.0],
    "fo_amplitude": 0.05,
    "ou_c": 0.2, "ou_sigma": 0.01,
    "snr_db": 13.0,
    "duration_s": 6.0, "rate_hz": 25.0
  },
  "train_scenarios_per_class": 4,
  "test_scenarios_per_class": 2,
  "shifts_s": [0, 1],
  "window_s": 3.0,
  "test_delays_s": [0.0, 1.4],
  "selection": {"t_target": 3, "folds": 2},
  "train": {"eta_base": 0.01, "epsilon": 1e-3, "max_cycles": 2},
  "templates_per_class": 2,
  "k": 1,
  "quantities": ["p", "angle", "speed"]
})";
    return path;
}

} // namespace

TEST_CASE("pipeline: simulate, train, classify, evaluate on a tiny corpus") {
    TempDir dir("pipeline");
    const auto config_path = write_tiny_config(dir);
    PipelineConfig cfg = load_pipeline_config(config_path);
    CHECK(cfg.scenario.base.n_gens == 3);
    CHECK(cfg.shifts_s == std::vector<double>{0, 1});

    auto dirs = run_simulate(cfg, /*keep_raw=*/false);
    Dataset train = load_dataset(dirs.train_dir);
    CHECK(train.samples.size() == 3u * 4u * 2u); // N x J x |shifts|
    Dataset test = load_dataset(dirs.test_dir);
    CHECK(test.samples.size() == 3u * 2u * 2u); // N x J_test x |delays|
    CHECK(train.samples.front().rows() == 75);  // 3 s at 25 Hz
    CHECK(train.samples.front().cols() == 15);  // 3 gens x 5 quantities

    SUBCASE("simulate is reproducible byte for byte") {
        TempDir dir2("pipeline_repro");
        PipelineConfig cfg2 = cfg;
        cfg2.out_dir = dir2.path() / "run";
        auto dirs2 = run_simulate(cfg2, false);
        Dataset train2 = load_dataset(dirs2.train_dir);
        REQUIRE(train2.samples.size() == train.samples.size());
        for (std::size_t i = 0; i < train.samples.size(); ++i)
            CHECK(train2.samples[i].values == train.samples[i].values);
    }

    SUBCASE("train with explicit quantities, then classify and evaluate") {
        const auto model_path = dir.path() / "model.json";
        ModelBundle bundle = run_train(cfg, dirs.train_dir, model_path, /*skip_select=*/true);
        CHECK(bundle.metric.p_dim() == 9); // 3 gens x 3 quantities
        CHECK(bundle.templates.total() == 6);
        CHECK(min_eigenvalue(bundle.metric) >= -kPsdTolerance);

        ModelBundle loaded = load_model_bundle(model_path);
        CHECK(loaded.metric.matrix() == bundle.metric.matrix());
        CHECK(loaded.quantities == std::vector<std::string>{"angle", "speed", "p"});
        CHECK(loaded.templates.total() == 6);

        // A stored template classifies back to its own class at distance 0.
        const auto query_path = dir.path() / "query.csv";
        const auto& tpl = bundle.templates.per_class.at(2)[0].sample;
        save_sample_csv(tpl, query_path);
        auto result = run_classify(model_path, query_path, 1);
        CHECK(result.result.predicted == 2);
        CHECK(result.result.ranking.front().distance == doctest::Approx(0.0));
        CHECK(result.json_record.find("predicted_class") != std::string::npos);

        auto eval = run_evaluate(model_path, dirs.test_dir, 1);
        CHECK(eval.report.records.size() == test.samples.size());
        CHECK(eval.per_delay.size() == 2); // d = 0 and d = 1.4
        CHECK(eval.report.confusion.size() == 3);
        // Identity-metric ablation runs through the same surface.
        auto eval_id = run_evaluate(model_path, dirs.test_dir, 1, /*identity=*/true);
        CHECK(eval_id.report.records.size() == test.samples.size());
    }

    SUBCASE("full training path records the sequential selection") {
        // The selection outcome itself ({p, angle, speed}) is asserted on the
        // desk-scale corpus in the acceptance suite; this tiny corpus only
        // checks the wiring.
        const auto model_path = dir.path() / "model_sel.json";
        ModelBundle bundle = run_train(cfg, dirs.train_dir, model_path, /*skip_select=*/false);
        REQUIRE(bundle.selection.has_value());
        CHECK(bundle.selection->chosen_quantities.size() == 3);
        CHECK(bundle.quantities.size() == 3);
        CHECK(bundle.metric.p_dim() == 9);
        ModelBundle again = run_train(cfg, dirs.train_dir, dir.path() / "model_sel2.json",
                                      false);
        CHECK(again.quantities == bundle.quantities);
    }

    SUBCASE("templates subcommand rebuilds with a different count") {
        const auto model_path = dir.path() / "model.json";
        run_train(cfg, dirs.train_dir, model_path, true);
        const auto out_path = dir.path() / "model_1tpl.json";
        ModelBundle rebuilt = run_templates(model_path, dirs.train_dir, 1, out_path);
        CHECK(rebuilt.templates.total() == 3);
        ModelBundle loaded = load_model_bundle(out_path);
        CHECK(loaded.templates.total() == 3);
    }
}

TEST_CASE("pipeline config errors") {
    TempDir dir("pipeline_err");
    SUBCASE("missing config file") {
        CHECK_THROWS_AS(load_pipeline_config(dir.path() / "nope.json"), ConfigError);
    }
    SUBCASE("malformed JSON") {
        const auto path = dir.path() / "bad.json";
        std::ofstream(path) << "{not json";
        CHECK_THROWS_AS(load_pipeline_config(path), ConfigError);
    }
    SUBCASE("unknown topology") {
        const auto path = dir.path() / "topo.json";
        std::ofstream(path) << R"({"scenario": {"topology": "star"}})";
        CHECK_THROWS_AS(load_pipeline_config(path), ConfigError);
    }
}
