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

#include "fosl/dtw.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "fosl/errors.hpp"

namespace fosl {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

} // namespace

void validate_warp_path(const WarpPath& path, Eigen::Index h1, Eigen::Index h2) {
    if (path.pairs.empty()) throw DataError("warp path is empty");
    if (path.pairs.front() != std::make_pair(0, 0))
        throw DataError("warp path must start at (0,0)");
    if (path.pairs.back() != std::make_pair(static_cast<int>(h1) - 1, static_cast<int>(h2) - 1))
        throw DataError("warp path must end at (H1-1, H2-1)");
    for (std::size_t k = 1; k < path.pairs.size(); ++k) {
        const int di = path.pairs[k].first - path.pairs[k - 1].first;
        const int dj = path.pairs[k].second - path.pairs[k - 1].second;
        if (di < 0 || dj < 0 || di > 1 || dj > 1 || (di == 0 && dj == 0))
            throw DataError("warp path step " + std::to_string(k) +
                            " violates unit-step monotonicity");
    }
}

namespace detail {

DtwResult dtw_transformed(const Eigen::MatrixXd& ta, const Eigen::MatrixXd& tb,
                          std::optional<int> band) {
    if (ta.cols() != tb.cols()) throw ShapeError("dtw: channel counts differ");
    if (ta.rows() < 1 || tb.rows() < 1) throw ShapeError("dtw: empty series");
    const Eigen::Index h1 = ta.rows(), h2 = tb.rows();
    if (band && *band < std::abs(static_cast<long>(h1 - h2)))
        throw ConfigError("Sakoe-Chiba band " + std::to_string(*band) +
                          " is narrower than the length difference " +
                          std::to_string(std::abs(static_cast<long>(h1 - h2))) +
                          "; no admissible path exists");

    Eigen::MatrixXd acc(h1, h2);
    acc.setConstant(kInf);
    for (Eigen::Index i = 0; i < h1; ++i) {
        Eigen::Index j_lo = 0, j_hi = h2 - 1;
        if (band) {
            j_lo = std::max<Eigen::Index>(0, i - *band);
            j_hi = std::min<Eigen::Index>(h2 - 1, i + *band);
        }
        for (Eigen::Index j = j_lo; j <= j_hi; ++j) {
            const double cost = (ta.row(i) - tb.row(j)).squaredNorm();
            if (i == 0 && j == 0) {
                acc(0, 0) = cost;
                continue;
            }
            double best = kInf;
            if (i > 0 && j > 0) best = acc(i - 1, j - 1);
            if (i > 0) best = std::min(best, acc(i - 1, j));
            if (j > 0) best = std::min(best, acc(i, j - 1));
            acc(i, j) = cost + best;
        }
    }

    // Backtrack; tie-break prefers diagonal, then vertical (advance in a),
    // then horizontal.
    WarpPath path;
    Eigen::Index i = h1 - 1, j = h2 - 1;
    path.pairs.emplace_back(static_cast<int>(i), static_cast<int>(j));
    while (i > 0 || j > 0) {
        Eigen::Index ni = i, nj = j;
        double best = kInf;
        if (i > 0 && j > 0) {
            best = acc(i - 1, j - 1);
            ni = i - 1;
            nj = j - 1;
        }
        if (i > 0 && acc(i - 1, j) < best) {
            best = acc(i - 1, j);
            ni = i - 1;
            nj = j;
        }
        if (j > 0 && acc(i, j - 1) < best) {
            best = acc(i, j - 1);
            ni = i;
            nj = j - 1;
        }
        i = ni;
        j = nj;
        path.pairs.emplace_back(static_cast<int>(i), static_cast<int>(j));
    }
    std::reverse(path.pairs.begin(), path.pairs.end());
    return {acc(h1 - 1, h2 - 1), std::move(path)};
}

} // namespace detail

DtwResult dtw_distance(const Eigen::MatrixXd& a, const Eigen::MatrixXd& b,
                       const MetricModel& model, std::optional<int> band) {
    if (a.cols() != b.cols() || a.cols() != model.p_dim())
        throw ShapeError("dtw_distance: channel counts do not match the metric");
    // Local cost in the factored space: d_M(x, y) = ||(x - y) L||^2.
    return detail::dtw_transformed(a * model.factor(), b * model.factor(), band);
}

DtwResult dtw_distance(const MtsSample& a, const MtsSample& b, const MetricModel& model,
                       std::optional<int> band) {
    return dtw_distance(a.values, b.values, model, band);
}

std::pair<Eigen::MatrixXd, Eigen::MatrixXd> align(const Eigen::MatrixXd& a,
                                                  const Eigen::MatrixXd& b,
                                                  const WarpPath& path) {
    validate_warp_path(path, a.rows(), b.rows());
    const Eigen::Index s = static_cast<Eigen::Index>(path.pairs.size());
    Eigen::MatrixXd ea(s, a.cols()), eb(s, b.cols());
    for (Eigen::Index k = 0; k < s; ++k) {
        const auto& [w1, w2] = path.pairs[static_cast<std::size_t>(k)];
        ea.row(k) = a.row(w1);
        eb.row(k) = b.row(w2);
    }
    return {std::move(ea), std::move(eb)};
}

std::pair<Eigen::MatrixXd, Eigen::MatrixXd> align(const MtsSample& a, const MtsSample& b,
                                                  const WarpPath& path) {
    return align(a.values, b.values, path);
}

double aligned_distance(const MtsSample& a, const MtsSample& b, const MetricModel& model) {
    return dtw_distance(a, b, model).distance;
}

} // namespace fosl
