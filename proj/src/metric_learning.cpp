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

#include "fosl/metric_learning.hpp"

#include <Eigen/Eigenvalues>
#include <algorithm>
#include <cmath>
#include <map>
#include <numeric>
#include <random>

#include "fosl/dtw.hpp"
#include "fosl/errors.hpp"
#include "fosl/parallel.hpp"

namespace fosl {

namespace {

void check_trainable(const Dataset& dataset) {
    if (dataset.samples.size() < 2) throw DataError("training needs at least two samples");
    const Eigen::Index h = dataset.samples.front().rows();
    for (const auto& s : dataset.samples)
        if (s.rows() != h)
            throw DataError("training samples must share H; align or re-window first");
}

int class_member_count(const Dataset& dataset, int label) {
    int n = 0;
    for (const auto& s : dataset.samples) n += (s.label == label);
    return n;
}

} // namespace

bool triplet_constraint_satisfied(double d_ap, double d_an, double d_pn, double rho) {
    return std::min(d_an, d_pn) - d_ap > rho;
}

Triplet mine_triplet(const Dataset& dataset, const MetricModel& model, int anchor_index) {
    const int n = static_cast<int>(dataset.samples.size());
    if (anchor_index < 0 || anchor_index >= n)
        throw ConfigError("mine_triplet: anchor index out of range");
    const auto& anchor = dataset.samples[static_cast<std::size_t>(anchor_index)];
    if (class_member_count(dataset, anchor.label) < 2)
        throw DataError("class " + std::to_string(anchor.label) +
                        " has a single member; triplet mining needs at least two");

    std::vector<double> dist(static_cast<std::size_t>(n), 0.0);
    const Eigen::MatrixXd anchor_t = anchor.values * model.factor();
    parallel_for(static_cast<std::size_t>(n), [&](std::size_t i) {
        if (static_cast<int>(i) == anchor_index) return;
        dist[i] = (dataset.samples[i].values * model.factor() - anchor_t).squaredNorm();
    });

    Triplet t;
    t.anchor = anchor_index;
    double best_pos = -1.0, best_neg = std::numeric_limits<double>::infinity();
    for (int i = 0; i < n; ++i) {
        if (i == anchor_index) continue;
        const double d = dist[static_cast<std::size_t>(i)];
        if (dataset.samples[static_cast<std::size_t>(i)].label == anchor.label) {
            if (d > best_pos) {
                best_pos = d;
                t.positive = i;
            }
        } else if (d < best_neg) {
            best_neg = d;
            t.negative = i;
        }
    }
    if (t.negative < 0) throw DataError("triplet mining needs at least two classes");
    return t;
}

double triplet_loss(const Dataset& dataset, const Triplet& t, const MetricModel& model,
                    double rho) {
    const auto& a = dataset.samples[static_cast<std::size_t>(t.anchor)];
    const auto& p = dataset.samples[static_cast<std::size_t>(t.positive)];
    const auto& n = dataset.samples[static_cast<std::size_t>(t.negative)];
    return rho + lockstep_distance(a, p, model) - lockstep_distance(a, n, model);
}

TripletDifferences triplet_differences(const Dataset& dataset, const Triplet& t, bool align_mode,
                                       const MetricModel& model) {
    const auto& a = dataset.samples[static_cast<std::size_t>(t.anchor)];
    const auto& p = dataset.samples[static_cast<std::size_t>(t.positive)];
    const auto& n = dataset.samples[static_cast<std::size_t>(t.negative)];
    if (a.label != p.label || a.label == n.label || t.anchor == t.positive)
        throw DataError("triplet labels violate the (same, same, different) constraint");
    TripletDifferences out;
    if (align_mode) {
        auto [ap_a, ap_p] = align(a, p, dtw_distance(a, p, model).path);
        auto [an_a, an_n] = align(a, n, dtw_distance(a, n, model).path);
        out.p = (ap_a - ap_p).transpose();
        out.q = (an_a - an_n).transpose();
    } else {
        out.p = (a.values - p.values).transpose();
        out.q = (a.values - n.values).transpose();
    }
    return out;
}

double eta_upper_bound(const Eigen::MatrixXd& p_diff, const Eigen::MatrixXd& q_diff,
                       const MetricModel& model) {
    const Eigen::Index p = model.p_dim();
    if (p_diff.rows() != p || q_diff.rows() != p)
        throw ShapeError("eta_upper_bound: difference matrices must have P rows");
    // PSD condition M^{-1} - eta A >= 0 with A = Q Q^T - P P^T, which by
    // congruence with M^{1/2} becomes eta * lambda_max(M^{1/2} A M^{1/2}) <= 1.
    Eigen::MatrixXd a = q_diff * q_diff.transpose() - p_diff * p_diff.transpose();
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es_m(model.matrix());
    if (es_m.info() != Eigen::Success) throw NumericError("eta_upper_bound: eigensolver failed");
    Eigen::VectorXd lambda = es_m.eigenvalues().cwiseMax(0.0);
    // Singular metrics get the same tiny ridge the inverse-based update uses.
    for (Eigen::Index i = 0; i < p; ++i)
        if (lambda(i) < 1e-10) lambda(i) += 1e-10;
    const Eigen::MatrixXd sqrt_m =
        es_m.eigenvectors() * lambda.cwiseSqrt().asDiagonal() * es_m.eigenvectors().transpose();
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(sqrt_m * a * sqrt_m);
    if (es.info() != Eigen::Success) throw NumericError("eta_upper_bound: eigensolver failed");
    const double lambda_max = es.eigenvalues().maxCoeff();
    if (lambda_max <= 0) return kUnboundedEta;
    return 1.0 / lambda_max;
}

double eta_upper_bound(const Dataset& dataset, const Triplet& t, const MetricModel& model,
                       bool align_mode) {
    auto d = triplet_differences(dataset, t, align_mode, model);
    return eta_upper_bound(d.p, d.q, model);
}

Eigen::MatrixXd update_metric(const Eigen::MatrixXd& m, const Eigen::MatrixXd& p_diff,
                              const Eigen::MatrixXd& q_diff, double eta) {
    const Eigen::Index p = m.rows();
    if (p_diff.rows() != p || q_diff.rows() != p)
        throw ShapeError("update_metric: difference matrices must have P rows");
    if (eta < 0) throw ConfigError("update_metric: eta must be nonnegative");
    if (eta == 0) return m;

    // Stage 1: Omega = (M^{-1} + eta P P^T)^{-1} via Woodbury.
    const Eigen::Index s1 = p_diff.cols();
    const Eigen::MatrixXd mp = m * p_diff; // P x s
    Eigen::MatrixXd inner1 =
        Eigen::MatrixXd::Identity(s1, s1) + eta * (p_diff.transpose() * mp);
    Eigen::LLT<Eigen::MatrixXd> llt(inner1); // I + eta P^T M P is SPD for PSD M
    if (llt.info() != Eigen::Success)
        throw NumericError("update_metric: first inner solve is not positive definite");
    Eigen::MatrixXd omega = m - eta * mp * llt.solve(mp.transpose());
    omega = 0.5 * (omega + omega.transpose());

    // Stage 2: M' = (Omega^{-1} - eta Q Q^T)^{-1} via Woodbury.
    const Eigen::Index s2 = q_diff.cols();
    const Eigen::MatrixXd oq = omega * q_diff;
    Eigen::MatrixXd inner2 =
        Eigen::MatrixXd::Identity(s2, s2) - eta * (q_diff.transpose() * oq);
    Eigen::FullPivLU<Eigen::MatrixXd> lu(inner2);
    if (!lu.isInvertible())
        throw NumericError("update_metric: inner solve singular; eta is at or beyond the "
                           "PSD feasibility bound");
    Eigen::MatrixXd next = omega + eta * oq * lu.solve(oq.transpose());
    return 0.5 * (next + next.transpose());
}

MetricModel update_metric(const MetricModel& model, const Dataset& dataset, const Triplet& t,
                          double eta, bool align_mode) {
    auto d = triplet_differences(dataset, t, align_mode, model);
    const double bound = eta_upper_bound(d.p, d.q, model);
    if (eta < 0 || eta >= bound)
        throw ConfigError("update_metric: eta " + std::to_string(eta) +
                          " outside the feasible range [0, " + std::to_string(bound) + ")");
    return MetricModel(update_metric(model.matrix(), d.p, d.q, eta), model.channel_names(),
                       model.training_meta());
}

namespace {

// Distance bookkeeping for the training loop: every sample pre-transformed
// by the current metric factor, refreshed only when M changes.
class TransformCache {
public:
    explicit TransformCache(const Dataset& dataset) : dataset_(dataset) {
        transformed_.resize(dataset.samples.size());
    }

    void refresh(const Eigen::MatrixXd& factor) {
        parallel_for(transformed_.size(), [&](std::size_t i) {
            transformed_[i] = dataset_.samples[i].values * factor;
        });
    }

    double distance(int i, int j) const {
        return (transformed_[static_cast<std::size_t>(i)] -
                transformed_[static_cast<std::size_t>(j)])
            .squaredNorm();
    }

    // Hardest triplet for the anchor under the cached transform; identical
    // tie-breaks to mine_triplet (lowest index wins exact ties).
    Triplet mine(int anchor_index, std::vector<double>& scratch) const {
        const int n = static_cast<int>(transformed_.size());
        scratch.assign(static_cast<std::size_t>(n), 0.0);
        const auto& anchor_t = transformed_[static_cast<std::size_t>(anchor_index)];
        parallel_for(static_cast<std::size_t>(n), [&](std::size_t i) {
            if (static_cast<int>(i) == anchor_index) return;
            scratch[i] = (transformed_[i] - anchor_t).squaredNorm();
        });
        const int anchor_label = dataset_.samples[static_cast<std::size_t>(anchor_index)].label;
        Triplet t;
        t.anchor = anchor_index;
        double best_pos = -1.0, best_neg = std::numeric_limits<double>::infinity();
        for (int i = 0; i < n; ++i) {
            if (i == anchor_index) continue;
            const double d = scratch[static_cast<std::size_t>(i)];
            if (dataset_.samples[static_cast<std::size_t>(i)].label == anchor_label) {
                if (d > best_pos) {
                    best_pos = d;
                    t.positive = i;
                }
            } else if (d < best_neg) {
                best_neg = d;
                t.negative = i;
            }
        }
        return t;
    }

private:
    const Dataset& dataset_;
    std::vector<Eigen::MatrixXd> transformed_;
};

} // namespace

MetricModel train_metric(const Dataset& dataset, const TrainConfig& config) {
    check_trainable(dataset);
    if (config.rho < 0) throw ConfigError("train_metric: rho must be >= 0");
    if (config.eta_base <= 0) throw ConfigError("train_metric: eta_base must be > 0");
    if (config.epsilon <= 0) throw ConfigError("train_metric: epsilon must be > 0");
    if (config.max_cycles < 1) throw ConfigError("train_metric: max_cycles must be >= 1");

    std::map<int, int> class_sizes;
    for (const auto& s : dataset.samples) ++class_sizes[s.label];
    if (class_sizes.size() < 2) throw DataError("train_metric: need at least two classes");
    for (const auto& [label, count] : class_sizes)
        if (count < 2)
            throw DataError("class " + std::to_string(label) +
                            " has a single member; triplet mining needs at least two");

    const int n = static_cast<int>(dataset.samples.size());
    const int p = static_cast<int>(dataset.samples.front().cols());
    const int triplets_per_cycle =
        config.triplets_per_cycle > 0 ? config.triplets_per_cycle : n;

    // One seed-shuffled anchor order, fixed for the whole run.
    std::vector<int> order(static_cast<std::size_t>(n));
    std::iota(order.begin(), order.end(), 0);
    std::mt19937_64 rng(config.seed);
    std::shuffle(order.begin(), order.end(), rng);

    Eigen::MatrixXd m = Eigen::MatrixXd::Identity(p, p);
    MetricModel model(m, dataset.samples.front().channel_names);
    TransformCache cache(dataset);
    if (!config.align_triplets) cache.refresh(model.factor());

    TrainingMeta meta;
    meta.eta_base = config.eta_base;
    meta.rho = config.rho;

    std::vector<double> scratch;
    double prev_loss = std::numeric_limits<double>::quiet_NaN();
    bool converged = false;
    for (int cycle = 1; cycle <= config.max_cycles && !converged; ++cycle) {
        double cycle_loss = 0.0;
        for (int it = 0; it < triplets_per_cycle; ++it) {
            const int anchor = order[static_cast<std::size_t>(it % n)];
            Triplet t;
            double d_ap, d_an, d_pn;
            if (config.align_triplets) {
                t = mine_triplet(dataset, model, anchor);
                d_ap = aligned_distance(dataset.samples[static_cast<std::size_t>(t.anchor)],
                                        dataset.samples[static_cast<std::size_t>(t.positive)],
                                        model);
                d_an = aligned_distance(dataset.samples[static_cast<std::size_t>(t.anchor)],
                                        dataset.samples[static_cast<std::size_t>(t.negative)],
                                        model);
                d_pn = aligned_distance(dataset.samples[static_cast<std::size_t>(t.positive)],
                                        dataset.samples[static_cast<std::size_t>(t.negative)],
                                        model);
            } else {
                t = cache.mine(anchor, scratch);
                d_ap = scratch[static_cast<std::size_t>(t.positive)];
                d_an = scratch[static_cast<std::size_t>(t.negative)];
                d_pn = cache.distance(t.positive, t.negative);
            }
            if (triplet_constraint_satisfied(d_ap, d_an, d_pn, config.rho)) continue;

            cycle_loss += config.rho + d_ap - d_an;
            auto diffs = triplet_differences(dataset, t, config.align_triplets, model);
            const double bound = eta_upper_bound(diffs.p, diffs.q, model);
            const double eta =
                std::isfinite(bound) ? std::min(config.eta_base, 0.9 * bound) : config.eta_base;
            Eigen::MatrixXd next = update_metric(model.matrix(), diffs.p, diffs.q, eta);
            if (config.validate_updates) {
                const double asym = (next - next.transpose()).cwiseAbs().maxCoeff();
                if (asym > 1e-10)
                    throw NumericError("train_metric: update asymmetry " + std::to_string(asym));
                const double min_eig = min_eigenvalue(next);
                if (min_eig < -kPsdTolerance)
                    throw NumericError("train_metric: update lost PSD (min eigenvalue " +
                                       std::to_string(min_eig) + ")");
            }
            model = MetricModel(std::move(next), model.channel_names());
            if (!config.align_triplets) cache.refresh(model.factor());
        }

        meta.cycle_losses.push_back(cycle_loss);
        meta.cycles_run = cycle;
        meta.final_cycle_loss = cycle_loss;
        if (cycle_loss == 0.0) {
            converged = true; // every constraint held; the metric is a fixed point now
        } else if (cycle > 1) {
            const double denom = std::abs(prev_loss);
            if (denom == 0.0)
                converged = (cycle_loss == 0.0);
            else
                converged = std::abs(cycle_loss - prev_loss) / denom < config.epsilon;
        }
        prev_loss = cycle_loss;
    }

    return MetricModel(model.matrix(), dataset.samples.front().channel_names, std::move(meta));
}

} // namespace fosl
