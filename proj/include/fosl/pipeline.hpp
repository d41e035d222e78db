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

#ifndef FOSL_PIPELINE_HPP
#define FOSL_PIPELINE_HPP

#include <filesystem>
#include <string>
#include <vector>

#include "fosl/classifier.hpp"
#include "fosl/grid_sim.hpp"
#include "fosl/metric_learning.hpp"
#include "fosl/model_bundle.hpp"

namespace fosl {

/// One config file drives the whole offline-training/online-matching
/// experiment; every random stream derives from `seed`.
struct PipelineConfig {
    ScenarioTemplate scenario;
    int train_scenarios_per_class = 40;
    int test_scenarios_per_class = 40;
    std::vector<double> shifts_s = {0, 1, 2, 3, 4, 5};
    double window_s = 5.0;
    std::vector<double> test_delays_s = {0.0, 1.3, 2.8, 3.4};
    int selection_t_target = 3;
    int selection_folds = 5;
    TrainConfig train;
    int templates_per_class = 2;
    int k = 1;
    std::vector<std::string> quantities = {"p", "angle", "speed"}; // --skip-select fallback
    std::uint64_t seed = 42;
    std::filesystem::path out_dir = "fosl_run";
};

PipelineConfig load_pipeline_config(const std::filesystem::path& file);

/// simulate: train + test corpora with disjoint seed streams; test
/// windows are cut at the configured detection delays. Returns the two
/// dataset directories.
struct SimulateOutput {
    std::filesystem::path train_dir;
    std::filesystem::path test_dir;
};
SimulateOutput run_simulate(const PipelineConfig& config, bool keep_raw);

/// select: sequential feature selection over a stored corpus.
SelectionResult run_select(const PipelineConfig& config, const std::filesystem::path& corpus_dir,
                           const std::filesystem::path& out_file);

/// train: selection (unless skipped), metric learning, template build,
/// one bundle written to model_file.
ModelBundle run_train(const PipelineConfig& config, const std::filesystem::path& corpus_dir,
                      const std::filesystem::path& model_file, bool skip_select,
                      bool identity_metric = false);

/// templates: recompute the template set of an existing model against a
/// corpus, writing an updated bundle.
ModelBundle run_templates(const std::filesystem::path& model_file,
                          const std::filesystem::path& corpus_dir, int templates_per_class,
                          const std::filesystem::path& out_file);

struct ClassifyOutput {
    ClassifyResult result;
    std::string json_record; // all reference distances
};
ClassifyOutput run_classify(const std::filesystem::path& model_file,
                            const std::filesystem::path& input_csv, int k);

struct DelayAccuracy {
    double delay_s = 0.0;
    double accuracy_pct = 0.0;
    int count = 0;
};
struct EvaluateOutput {
    EvalReport report;
    std::vector<DelayAccuracy> per_delay;
    std::string json_report;
};
EvaluateOutput run_evaluate(const std::filesystem::path& model_file,
                            const std::filesystem::path& testset_dir, int k,
                            bool identity_metric = false);

std::string report_to_json(const EvalReport& report, const std::vector<DelayAccuracy>& per_delay);

} // namespace fosl

#endif // FOSL_PIPELINE_HPP
