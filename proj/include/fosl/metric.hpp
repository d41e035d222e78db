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

#ifndef FOSL_METRIC_HPP
#define FOSL_METRIC_HPP

#include <Eigen/Dense>
#include <filesystem>
#include <string>
#include <utility>
#include <vector>

#include "fosl/mts.hpp"

namespace fosl {

/// Tolerance below which a negative eigenvalue still counts as PSD.
inline constexpr double kPsdTolerance = 1e-8;

/// Tolerance for clamping tiny negative quadratic forms to zero.
inline constexpr double kDistanceClamp = 1e-10;

struct TrainingMeta {
    int cycles_run = 0;
    double final_cycle_loss = 0.0;
    double eta_base = 0.0;
    double rho = 0.0;
    std::vector<double> cycle_losses; // L_k per completed cycle
};

/// Smallest eigenvalue of a symmetric matrix (symmetrized before solving).
double min_eigenvalue(const Eigen::MatrixXd& sym);

/// A P x P symmetric PSD matrix defining the squared Mahalanobis form
/// (x-y)^T M (x-y), plus the channel layout it was trained on. Immutable;
/// distance calls are safe to share across threads.
class MetricModel {
public:
    /// Symmetrizes the input, verifies PSD within kPsdTolerance, and caches
    /// a factor L with L L^T ~= M for fast batched distances.
    MetricModel(Eigen::MatrixXd m, std::vector<std::string> channel_names = {},
                TrainingMeta meta = {});

    static MetricModel identity(int p_dim, std::vector<std::string> channel_names = {});

    int p_dim() const { return static_cast<int>(m_.rows()); }
    const Eigen::MatrixXd& matrix() const { return m_; }
    /// Dense factor L (P x P) with L L^T reconstructing M up to clamped
    /// negative eigenvalues; rows of X map to the weighted space as X * L.
    const Eigen::MatrixXd& factor() const { return factor_; }
    const std::vector<std::string>& channel_names() const { return channel_names_; }
    const TrainingMeta& training_meta() const { return training_meta_; }

    double min_eig() const { return min_eig_; }

private:
    Eigen::MatrixXd m_;
    Eigen::MatrixXd factor_;
    std::vector<std::string> channel_names_;
    TrainingMeta training_meta_;
    double min_eig_ = 0.0;
};

/// Squared Mahalanobis distance (x-y)^T M (x-y); tiny negatives from
/// near-singular metrics are clamped to 0.
double row_distance(const Eigen::Ref<const Eigen::VectorXd>& x,
                    const Eigen::Ref<const Eigen::VectorXd>& y,
                    const MetricModel& model);

/// Sum of row_distance over the H aligned rows of two equal-length MTS.
double lockstep_distance(const MtsSample& a, const MtsSample& b, const MetricModel& model);
double lockstep_distance(const Eigen::MatrixXd& a, const Eigen::MatrixXd& b,
                         const MetricModel& model);

/// Eigendecomposition M = U diag(sigma) U^T with sigma sorted descending
/// and negatives within tolerance clamped to 0.
std::pair<Eigen::MatrixXd, Eigen::VectorXd> spectral_factor(const MetricModel& model);

double min_eigenvalue(const MetricModel& model);

// ---- Model file I/O ----
// JSON document {p_dim, channel_names, m, training_meta}; `m` is the
// row-major p_dim^2 matrix at full double precision. Loading re-verifies
// symmetry and PSD.
void save_metric(const MetricModel& model, const std::filesystem::path& file);
MetricModel load_metric(const std::filesystem::path& file);

} // namespace fosl

#endif // FOSL_METRIC_HPP
