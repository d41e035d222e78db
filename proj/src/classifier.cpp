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

#include "fosl/classifier.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <map>
#include <sstream>

#include "fosl/dtw.hpp"
#include "fosl/errors.hpp"
#include "fosl/parallel.hpp"

namespace fosl {

namespace {

void check_refs(const std::vector<const MtsSample*>& refs, const MetricModel& model, int k) {
    if (refs.empty()) throw ConfigError("classify: reference set is empty");
    if (k < 1 || k > static_cast<int>(refs.size()))
        throw ConfigError("classify: k=" + std::to_string(k) + " outside 1.." +
                          std::to_string(refs.size()));
    for (std::size_t i = 0; i < refs.size(); ++i)
        if (refs[i]->cols() != model.p_dim())
            throw ShapeError("classify: reference " + std::to_string(i) +
                             " does not match the metric dimension P=" +
                             std::to_string(model.p_dim()));
}

int majority_vote(const std::vector<RankedReference>& ranking, int k) {
    // Ties by smallest mean distance among tied classes, then lowest index.
    std::map<int, std::pair<int, double>> votes; // label -> (count, distance sum)
    for (int i = 0; i < k; ++i) {
        auto& v = votes[ranking[static_cast<std::size_t>(i)].label];
        v.first += 1;
        v.second += ranking[static_cast<std::size_t>(i)].distance;
    }
    int best_label = 0, best_count = -1;
    double best_mean = 0.0;
    for (const auto& [label, v] : votes) { // std::map iterates in ascending label order
        const double mean = v.second / v.first;
        if (v.first > best_count || (v.first == best_count && mean < best_mean)) {
            best_label = label;
            best_count = v.first;
            best_mean = mean;
        }
    }
    return best_label;
}

// Serial scan over pre-transformed references; the unit both classify()
// and evaluate() share.
ClassifyResult classify_core(const Eigen::MatrixXd& query_t,
                             const std::vector<const MtsSample*>& refs,
                             const std::vector<Eigen::MatrixXd>& refs_t, int k) {
    ClassifyResult out;
    out.ranking.resize(refs.size());
    for (std::size_t j = 0; j < refs.size(); ++j) {
        // DTW absorbs the unknown detection delay between query and reference.
        const double d = detail::dtw_transformed(query_t, refs_t[j]).distance;
        out.ranking[j] = {static_cast<int>(j), refs[j]->label, d, refs[j]->scenario_id,
                          refs[j]->shift_s};
    }
    // Distance ties resolve on permutation-invariant keys first so the
    // prediction does not depend on reference ordering.
    std::sort(out.ranking.begin(), out.ranking.end(),
              [](const RankedReference& a, const RankedReference& b) {
                  if (a.distance != b.distance) return a.distance < b.distance;
                  if (a.label != b.label) return a.label < b.label;
                  if (a.scenario_id != b.scenario_id) return a.scenario_id < b.scenario_id;
                  if (a.shift_s != b.shift_s) return a.shift_s < b.shift_s;
                  return a.reference_index < b.reference_index;
              });
    out.predicted = majority_vote(out.ranking, k);
    return out;
}

std::vector<Eigen::MatrixXd> transform_refs(const std::vector<const MtsSample*>& refs,
                                            const MetricModel& model) {
    std::vector<Eigen::MatrixXd> out(refs.size());
    parallel_for(refs.size(), [&](std::size_t i) { out[i] = refs[i]->values * model.factor(); });
    return out;
}

std::vector<const MtsSample*> flatten_dataset(const Dataset& ds) {
    std::vector<const MtsSample*> flat;
    flat.reserve(ds.samples.size());
    for (const auto& s : ds.samples) flat.push_back(&s);
    return flat;
}

} // namespace

std::size_t TemplateSet::total() const {
    std::size_t n = 0;
    for (const auto& [label, entries] : per_class) n += entries.size();
    return n;
}

std::vector<const MtsSample*> TemplateSet::flatten() const {
    std::vector<const MtsSample*> out;
    out.reserve(total());
    for (const auto& [label, entries] : per_class)
        for (const auto& e : entries) out.push_back(&e.sample);
    return out;
}

TemplateSet build_templates(const Dataset& dataset, const MetricModel& model, int count) {
    if (count < 1) throw ConfigError("build_templates: count must be >= 1");
    validate_dataset(dataset);
    if (dataset.samples.empty()) throw ConfigError("build_templates: dataset is empty");
    if (dataset.samples.front().cols() != model.p_dim())
        throw ShapeError("build_templates: dataset channels do not match the metric");

    std::map<int, std::vector<int>> members; // label -> dataset indices
    for (int i = 0; i < static_cast<int>(dataset.samples.size()); ++i)
        members[dataset.samples[static_cast<std::size_t>(i)].label].push_back(i);
    for (const auto& [label, idx] : members)
        if (static_cast<int>(idx.size()) < count)
            throw ConfigError("class " + std::to_string(label) + " has " +
                              std::to_string(idx.size()) + " members, fewer than the " +
                              std::to_string(count) + " templates requested");

    TemplateSet out;
    out.templates_per_class = count;
    for (const auto& [label, idx] : members) {
        const std::size_t m = idx.size();
        std::vector<Eigen::MatrixXd> transformed(m);
        parallel_for(m, [&](std::size_t i) {
            transformed[i] =
                dataset.samples[static_cast<std::size_t>(idx[i])].values * model.factor();
        });
        // C_j: summed lockstep distance to every same-class member.
        std::vector<double> c_values(m, 0.0);
        parallel_for(m, [&](std::size_t i) {
            double sum = 0.0;
            for (std::size_t j = 0; j < m; ++j)
                if (i != j) sum += (transformed[i] - transformed[j]).squaredNorm();
            c_values[i] = sum;
        });

        std::vector<std::size_t> order(m);
        for (std::size_t i = 0; i < m; ++i) order[i] = i;
        std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
            if (c_values[a] != c_values[b]) return c_values[a] < c_values[b];
            const auto& sa = dataset.samples[static_cast<std::size_t>(idx[a])];
            const auto& sb = dataset.samples[static_cast<std::size_t>(idx[b])];
            if (sa.scenario_id != sb.scenario_id) return sa.scenario_id < sb.scenario_id;
            return idx[a] < idx[b];
        });

        auto& entries = out.per_class[label];
        entries.reserve(static_cast<std::size_t>(count));
        for (int r = 0; r < count; ++r) {
            const std::size_t i = order[static_cast<std::size_t>(r)];
            entries.push_back({dataset.samples[static_cast<std::size_t>(idx[i])], c_values[i]});
        }
    }
    return out;
}

ClassifyResult classify(const MtsSample& query, const std::vector<const MtsSample*>& refs,
                        const MetricModel& model, int k) {
    check_refs(refs, model, k);
    if (query.cols() != model.p_dim())
        throw ShapeError("classify: query has " + std::to_string(query.cols()) +
                         " channels, model expects " + std::to_string(model.p_dim()));
    const auto refs_t = transform_refs(refs, model);
    return classify_core(query.values * model.factor(), refs, refs_t, k);
}

ClassifyResult classify(const MtsSample& query, const TemplateSet& refs,
                        const MetricModel& model, int k) {
    return classify(query, refs.flatten(), model, k);
}

ClassifyResult classify(const MtsSample& query, const Dataset& refs, const MetricModel& model,
                        int k) {
    return classify(query, flatten_dataset(refs), model, k);
}

EvalReport evaluate(const Dataset& testset, const std::vector<const MtsSample*>& refs,
                    const MetricModel& model, int k) {
    if (testset.samples.empty()) throw ConfigError("evaluate: test set is empty");
    validate_dataset(testset);
    check_refs(refs, model, k);
    if (testset.samples.front().cols() != model.p_dim())
        throw ShapeError("evaluate: test set channels do not match the metric");

    int n_classes = testset.n_classes;
    for (const auto* r : refs) n_classes = std::max(n_classes, r->label);

    const auto refs_t = transform_refs(refs, model);
    EvalReport report;
    report.records.resize(testset.samples.size());
    const auto wall_start = std::chrono::steady_clock::now();
    parallel_for(testset.samples.size(), [&](std::size_t i) {
        const auto& q = testset.samples[i];
        const auto t0 = std::chrono::steady_clock::now();
        const ClassifyResult r = classify_core(q.values * model.factor(), refs, refs_t, k);
        const auto t1 = std::chrono::steady_clock::now();
        report.records[i] = {static_cast<int>(i), q.label, r.predicted, q.shift_s,
                             std::chrono::duration<double>(t1 - t0).count()};
    }, 1);
    const auto wall_end = std::chrono::steady_clock::now();

    report.confusion.assign(static_cast<std::size_t>(n_classes),
                            std::vector<int>(static_cast<std::size_t>(n_classes), 0));
    int correct = 0;
    double time_sum = 0.0;
    for (const auto& rec : report.records) {
        if (rec.predicted >= 1 && rec.predicted <= n_classes)
            ++report.confusion[static_cast<std::size_t>(rec.true_label - 1)]
                              [static_cast<std::size_t>(rec.predicted - 1)];
        correct += (rec.predicted == rec.true_label);
        time_sum += rec.match_time_s;
    }
    report.overall_accuracy_pct = 100.0 * correct / static_cast<double>(testset.samples.size());
    report.mean_match_time_s = time_sum / static_cast<double>(testset.samples.size());
    report.total_time_s = std::chrono::duration<double>(wall_end - wall_start).count();

    for (int c = 1; c <= n_classes; ++c) {
        int total = 0, hits = 0;
        for (const auto& rec : report.records)
            if (rec.true_label == c) {
                ++total;
                hits += (rec.predicted == c);
            }
        report.per_class.push_back(
            {c, total ? 100.0 * hits / static_cast<double>(total) : 0.0, total});
    }
    return report;
}

EvalReport evaluate(const Dataset& testset, const TemplateSet& refs, const MetricModel& model,
                    int k) {
    return evaluate(testset, refs.flatten(), model, k);
}

EvalReport evaluate(const Dataset& testset, const Dataset& refs, const MetricModel& model,
                    int k) {
    return evaluate(testset, flatten_dataset(refs), model, k);
}

std::string format_report(const EvalReport& report) {
    std::ostringstream os;
    os.setf(std::ios::fixed);
    os.precision(2);
    os << "overall accuracy: " << report.overall_accuracy_pct << " %\n";
    os << "class  accuracy%  count\n";
    for (const auto& pc : report.per_class)
        os << "  " << pc.class_index << "      " << pc.accuracy_pct << "      " << pc.count
           << "\n";
    os << "confusion matrix (rows: true, cols: predicted):\n";
    for (const auto& row : report.confusion) {
        os << " ";
        for (int v : row) os << " " << v;
        os << "\n";
    }
    os.precision(6);
    os << "mean match time: " << report.mean_match_time_s << " s, total: "
       << report.total_time_s << " s\n";
    return os.str();
}

} // namespace fosl
