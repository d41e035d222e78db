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

#ifndef FOSL_DTW_HPP
#define FOSL_DTW_HPP

#include <Eigen/Dense>
#include <optional>
#include <utility>
#include <vector>

#include "fosl/metric.hpp"
#include "fosl/mts.hpp"

namespace fosl {

/// Monotone, continuous, boundary-anchored alignment between the rows of
/// two MTS. Indices are 0-based: first pair (0,0), last (H1-1, H2-1),
/// each step advancing one or both indices by exactly 1.
struct WarpPath {
    std::vector<std::pair<int, int>> pairs;

    std::size_t size() const { return pairs.size(); }
};

/// Throws DataError if the path violates boundary, monotonicity or
/// unit-step continuity for the given lengths.
void validate_warp_path(const WarpPath& path, Eigen::Index h1, Eigen::Index h2);

struct DtwResult {
    double distance = 0.0;
    WarpPath path;
};

/// Dynamic-programming DTW with Mahalanobis local cost
/// d_M(x(h1), y(h2)). Backtracking tie-break prefers diagonal, then
/// vertical (advance in a), then horizontal moves. An optional
/// Sakoe-Chiba band |h1 - h2| <= band makes out-of-band cells
/// infinite-cost; it must be at least |H1 - H2| or no path exists.
DtwResult dtw_distance(const MtsSample& a, const MtsSample& b, const MetricModel& model,
                       std::optional<int> band = std::nullopt);
DtwResult dtw_distance(const Eigen::MatrixXd& a, const Eigen::MatrixXd& b,
                       const MetricModel& model, std::optional<int> band = std::nullopt);

/// Expands both inputs to the path length: row k of the first output is
/// row w1(k) of a, row k of the second is row w2(k) of b.
std::pair<Eigen::MatrixXd, Eigen::MatrixXd> align(const MtsSample& a, const MtsSample& b,
                                                  const WarpPath& path);
std::pair<Eigen::MatrixXd, Eigen::MatrixXd> align(const Eigen::MatrixXd& a,
                                                  const Eigen::MatrixXd& b,
                                                  const WarpPath& path);

/// Optimal-path aligned distance; numerically equal to the dtw_distance
/// scalar.
double aligned_distance(const MtsSample& a, const MtsSample& b, const MetricModel& model);

namespace detail {
/// DTW over rows already mapped into the metric's factored space
/// (x -> x * L), where the local cost is a plain squared Euclidean
/// distance. Lets batch callers transform each series once.
DtwResult dtw_transformed(const Eigen::MatrixXd& ta, const Eigen::MatrixXd& tb,
                          std::optional<int> band = std::nullopt);
} // namespace detail

} // namespace fosl

#endif // FOSL_DTW_HPP
