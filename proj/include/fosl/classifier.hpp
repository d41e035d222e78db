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

#ifndef FOSL_CLASSIFIER_HPP
#define FOSL_CLASSIFIER_HPP

#include <map>
#include <string>
#include <vector>

#include "fosl/metric.hpp"
#include "fosl/mts.hpp"

namespace fosl {

/// One class representative with its intra-class distance sum.
struct TemplateEntry {
    MtsSample sample;
    double c_value = 0.0; // sum of lockstep distances to all same-class members
};

/// Per class, the medoid-ranked representatives (ascending in C).
struct TemplateSet {
    int templates_per_class = 0;
    std::map<int, std::vector<TemplateEntry>> per_class;

    std::size_t total() const;
    std::vector<const MtsSample*> flatten() const; // class-major, rank order
};

/// Ranks every class member by its summed lockstep distance to the rest
/// of the class and keeps the `count` lowest (ties by scenario_id, then
/// dataset order).
TemplateSet build_templates(const Dataset& dataset, const MetricModel& model, int count);

struct RankedReference {
    int reference_index = 0; // position in the flattened reference list
    int label = 0;
    double distance = 0.0;
    int scenario_id = 0;
    double shift_s = 0.0;
};

struct ClassifyResult {
    int predicted = 0;
    std::vector<RankedReference> ranking; // ascending distance
};

/// DTW k-NN over the references: majority label among the k nearest,
/// ties broken by smallest mean distance, then lowest class index.
ClassifyResult classify(const MtsSample& query, const TemplateSet& refs,
                        const MetricModel& model, int k);
ClassifyResult classify(const MtsSample& query, const Dataset& refs, const MetricModel& model,
                        int k);
ClassifyResult classify(const MtsSample& query, const std::vector<const MtsSample*>& refs,
                        const MetricModel& model, int k);

struct PerClassAccuracy {
    int class_index = 0;
    double accuracy_pct = 0.0;
    int count = 0;
};

struct PredictionRecord {
    int sample_index = 0;
    int true_label = 0;
    int predicted = 0;
    double shift_s = 0.0;
    double match_time_s = 0.0;
};

struct EvalReport {
    double overall_accuracy_pct = 0.0;
    std::vector<PerClassAccuracy> per_class;
    std::vector<std::vector<int>> confusion; // rows: true class, cols: predicted
    double mean_match_time_s = 0.0;
    double total_time_s = 0.0; // wall time of the whole matching pass
    std::vector<PredictionRecord> records;
};

/// Classifies every test sample (queries fan out to parallel workers;
/// results merge by sample index so the report is order-independent).
EvalReport evaluate(const Dataset& testset, const TemplateSet& refs, const MetricModel& model,
                    int k);
EvalReport evaluate(const Dataset& testset, const Dataset& refs, const MetricModel& model,
                    int k);
EvalReport evaluate(const Dataset& testset, const std::vector<const MtsSample*>& refs,
                    const MetricModel& model, int k);

/// Human-readable accuracy/confusion table.
std::string format_report(const EvalReport& report);

} // namespace fosl

#endif // FOSL_CLASSIFIER_HPP
