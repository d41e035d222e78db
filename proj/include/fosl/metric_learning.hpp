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

#ifndef FOSL_METRIC_LEARNING_HPP
#define FOSL_METRIC_LEARNING_HPP

#include <Eigen/Dense>
#include <cstdint>
#include <limits>

#include "fosl/metric.hpp"
#include "fosl/mts.hpp"

namespace fosl {

/// Indices into a dataset: anchor/positive share a label, negative does not.
struct Triplet {
    int anchor = -1;
    int positive = -1;
    int negative = -1;
};

struct TrainConfig {
    double rho = 0.0;             // targeted margin
    double eta_base = 0.01;       // step parameter; capped at 0.9 * eta_bar per update
    double epsilon = 1e-3;        // relative cycle-loss stop threshold
    int max_cycles = 10;          // I2
    int triplets_per_cycle = 0;   // I1; 0 means dataset size
    std::uint64_t seed = 0;
    bool align_triplets = false;  // DTW-align triplet members before differencing
    bool validate_updates = true; // check symmetry/PSD after every update
};

/// Picks the hardest triplet for the given anchor under the current
/// metric: the farthest same-class member and the nearest other-class
/// member (exact ties resolved to the lowest sample index).
Triplet mine_triplet(const Dataset& dataset, const MetricModel& model, int anchor_index);

/// rho + D_M(anchor, positive) - D_M(anchor, negative).
double triplet_loss(const Dataset& dataset, const Triplet& t, const MetricModel& model,
                    double rho);

/// Difference matrices (P x s) of a triplet: columns are per-row sample
/// differences, DTW-aligned first when align is set.
struct TripletDifferences {
    Eigen::MatrixXd p; // anchor - positive
    Eigen::MatrixXd q; // anchor - negative
};
TripletDifferences triplet_differences(const Dataset& dataset, const Triplet& t, bool align,
                                       const MetricModel& model);

/// Largest eta keeping M^{-1} + eta (P P^T - Q Q^T) PSD; +infinity when
/// the constraint never binds. Singular metrics are regularized by
/// 1e-10 I before inversion.
double eta_upper_bound(const Eigen::MatrixXd& p_diff, const Eigen::MatrixXd& q_diff,
                       const MetricModel& model);
double eta_upper_bound(const Dataset& dataset, const Triplet& t, const MetricModel& model,
                       bool align = false);

/// Two-stage Woodbury update of the metric; equals
/// (M^{-1} + eta (P P^T - Q Q^T))^{-1} and is symmetrized on return.
/// eta must lie in [0, eta_upper_bound).
Eigen::MatrixXd update_metric(const Eigen::MatrixXd& m, const Eigen::MatrixXd& p_diff,
                              const Eigen::MatrixXd& q_diff, double eta);
MetricModel update_metric(const MetricModel& model, const Dataset& dataset, const Triplet& t,
                          double eta, bool align = false);

/// Runs the cycle-based triplet learning loop from the identity metric:
/// mines one triplet per anchor (round-robin over a seed-shuffled order),
/// updates on violations with eta = min(eta_base, 0.9 * eta_bar), and
/// stops on the relative cycle-loss test or the cycle cap.
MetricModel train_metric(const Dataset& dataset, const TrainConfig& config);

/// True when min(D(a,n), D(p,n)) - D(a,p) > rho.
bool triplet_constraint_satisfied(double d_ap, double d_an, double d_pn, double rho);

inline constexpr double kUnboundedEta = std::numeric_limits<double>::infinity();

} // namespace fosl

#endif // FOSL_METRIC_LEARNING_HPP
