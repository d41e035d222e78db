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

#include "fosl/feature_select.hpp"

#include <algorithm>
#include <limits>
#include <map>
#include <random>
#include <set>

#include "fosl/errors.hpp"
#include "fosl/parallel.hpp"

namespace fosl {

namespace {

// Per-quantity pairwise lockstep distances (identity metric) are additive
// over channels, so they are computed once and candidate subsets score by
// summing matrices instead of re-touching the time series.
struct QuantityDistances {
    std::vector<std::string> quantities;               // present, tie order
    std::vector<Eigen::MatrixXd> dist;                 // one n x n matrix per quantity
};

QuantityDistances per_quantity_distances(const Dataset& corpus) {
    const std::size_t n = corpus.samples.size();
    std::map<std::string, std::vector<Eigen::Index>> columns_by_quantity;
    const auto& names = corpus.samples.front().channel_names;
    for (Eigen::Index c = 0; c < static_cast<Eigen::Index>(names.size()); ++c)
        columns_by_quantity[channel_quantity(names[static_cast<std::size_t>(c)])].push_back(c);

    QuantityDistances out;
    for (const char* q : kSelectionTieOrder)
        if (columns_by_quantity.count(q)) out.quantities.push_back(q);
    // Any nonstandard quantity names come after the known ones.
    for (const auto& [q, cols] : columns_by_quantity)
        if (std::find(out.quantities.begin(), out.quantities.end(), q) == out.quantities.end())
            out.quantities.push_back(q);

    out.dist.assign(out.quantities.size(), Eigen::MatrixXd::Zero(n, n));
    for (std::size_t qi = 0; qi < out.quantities.size(); ++qi) {
        const auto& cols = columns_by_quantity[out.quantities[qi]];
        // Gather this quantity's channels into contiguous blocks first.
        std::vector<Eigen::MatrixXd> blocks(n);
        parallel_for(n, [&](std::size_t i) {
            const auto& v = corpus.samples[i].values;
            Eigen::MatrixXd b(v.rows(), static_cast<Eigen::Index>(cols.size()));
            for (std::size_t c = 0; c < cols.size(); ++c)
                b.col(static_cast<Eigen::Index>(c)) = v.col(cols[c]);
            blocks[i] = std::move(b);
        });
        auto& d = out.dist[qi];
        parallel_for(n, [&](std::size_t i) {
            for (std::size_t j = i + 1; j < n; ++j)
                d(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) =
                    (blocks[i] - blocks[j]).squaredNorm();
        });
        d = d.selfadjointView<Eigen::Upper>();
    }
    return out;
}

// Stratified fold ids: per class, a seeded shuffle dealt round-robin.
std::vector<int> assign_folds(const Dataset& corpus, int folds, std::uint64_t seed) {
    std::map<int, std::vector<std::size_t>> by_class;
    for (std::size_t i = 0; i < corpus.samples.size(); ++i)
        by_class[corpus.samples[i].label].push_back(i);
    std::vector<int> fold(corpus.samples.size(), 0);
    std::mt19937_64 rng(seed);
    for (auto& [label, idx] : by_class) {
        if (static_cast<int>(idx.size()) < folds)
            throw ConfigError("class " + std::to_string(label) + " has " +
                              std::to_string(idx.size()) + " members, fewer than " +
                              std::to_string(folds) + " folds");
        std::shuffle(idx.begin(), idx.end(), rng);
        for (std::size_t r = 0; r < idx.size(); ++r)
            fold[idx[r]] = static_cast<int>(r % static_cast<std::size_t>(folds));
    }
    return fold;
}

// 1-NN cross-validated accuracy with the distance matrix summed over the
// candidate quantity set.
double cv_accuracy(const Dataset& corpus, const QuantityDistances& qd,
                   const std::vector<std::size_t>& subset, const std::vector<int>& fold,
                   int folds) {
    const std::size_t n = corpus.samples.size();
    std::vector<int> hits(n, 0);
    parallel_for(n, [&](std::size_t i) {
        double best = std::numeric_limits<double>::infinity();
        std::size_t best_j = n;
        for (std::size_t j = 0; j < n; ++j) {
            if (fold[j] == fold[i]) continue; // validation fold held out entirely
            double d = 0.0;
            for (std::size_t q : subset)
                d += qd.dist[q](static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j));
            if (d < best || (d == best && j < best_j)) {
                best = d;
                best_j = j;
            }
        }
        hits[i] = best_j < n && corpus.samples[best_j].label == corpus.samples[i].label;
    });
    (void)folds;
    double correct = 0;
    for (int h : hits) correct += h;
    return correct / static_cast<double>(n);
}

} // namespace

SelectionResult sequential_select(const Dataset& corpus, int t_target, int folds,
                                  std::uint64_t seed) {
    validate_dataset(corpus);
    if (corpus.samples.empty()) throw ConfigError("sequential_select: corpus is empty");
    std::set<int> labels;
    for (const auto& s : corpus.samples) labels.insert(s.label);
    if (labels.size() < 2)
        throw ConfigError("sequential_select: corpus has a single class; nothing to separate");
    if (folds < 2) throw ConfigError("sequential_select: folds must be >= 2");

    auto qd = per_quantity_distances(corpus);
    if (t_target < 1 || t_target > static_cast<int>(qd.quantities.size()))
        throw ConfigError("sequential_select: t_target " + std::to_string(t_target) +
                          " outside 1.." + std::to_string(qd.quantities.size()));
    const auto fold = assign_folds(corpus, folds, seed);

    SelectionResult result;
    result.seed = seed;
    std::vector<std::size_t> chosen;
    std::vector<bool> used(qd.quantities.size(), false);
    for (int step = 0; step < t_target; ++step) {
        double best_acc = -1.0;
        std::size_t best_q = qd.quantities.size();
        for (std::size_t q = 0; q < qd.quantities.size(); ++q) {
            if (used[q]) continue;
            std::vector<std::size_t> candidate = chosen;
            candidate.push_back(q);
            const double acc = cv_accuracy(corpus, qd, candidate, fold, folds);
            // Strict > keeps the earlier quantity in tie order on equal scores.
            if (acc > best_acc) {
                best_acc = acc;
                best_q = q;
            }
        }
        used[best_q] = true;
        chosen.push_back(best_q);
        result.chosen_quantities.push_back(qd.quantities[best_q]);
        result.step_accuracies.push_back(best_acc);
    }
    return result;
}

} // namespace fosl
