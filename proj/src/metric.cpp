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

#include "fosl/metric.hpp"

#include <Eigen/Eigenvalues>
#include <cmath>
#include <fstream>

#include <nlohmann/json.hpp>

#include "fosl/errors.hpp"

namespace fosl {

namespace {

using nlohmann::json;

Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> solve_sym(const Eigen::MatrixXd& m) {
    Eigen::MatrixXd sym = 0.5 * (m + m.transpose());
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(sym);
    if (es.info() != Eigen::Success)
        throw NumericError("symmetric eigensolver failed to converge");
    return es;
}

double clamp_distance(double d) {
    if (d >= 0) return d;
    if (d >= -kDistanceClamp) return 0.0;
    throw NumericError("quadratic form returned " + std::to_string(d) +
                       "; metric is not PSD");
}

} // namespace

double min_eigenvalue(const Eigen::MatrixXd& sym) {
    if (sym.rows() != sym.cols()) throw ShapeError("min_eigenvalue requires a square matrix");
    return solve_sym(sym).eigenvalues().minCoeff();
}

MetricModel::MetricModel(Eigen::MatrixXd m, std::vector<std::string> channel_names,
                         TrainingMeta meta)
    : channel_names_(std::move(channel_names)), training_meta_(std::move(meta)) {
    if (m.rows() != m.cols() || m.rows() < 1)
        throw ShapeError("metric matrix must be square and nonempty");
    if (!channel_names_.empty() &&
        static_cast<Eigen::Index>(channel_names_.size()) != m.rows())
        throw ShapeError("metric channel name count does not match p_dim");
    if (!m.allFinite()) throw DataError("metric matrix contains non-finite entries");
    m_ = 0.5 * (m + m.transpose());
    auto es = solve_sym(m_);
    min_eig_ = es.eigenvalues().minCoeff();
    if (min_eig_ < -kPsdTolerance)
        throw NumericError("metric matrix is not PSD (min eigenvalue " +
                           std::to_string(min_eig_) + ")");
    // L = U sqrt(max(lambda, 0)); rows transform as x^T L.
    Eigen::VectorXd lambda = es.eigenvalues().cwiseMax(0.0);
    factor_ = es.eigenvectors() * lambda.cwiseSqrt().asDiagonal();
}

MetricModel MetricModel::identity(int p_dim, std::vector<std::string> channel_names) {
    return MetricModel(Eigen::MatrixXd::Identity(p_dim, p_dim), std::move(channel_names));
}

double row_distance(const Eigen::Ref<const Eigen::VectorXd>& x,
                    const Eigen::Ref<const Eigen::VectorXd>& y, const MetricModel& model) {
    if (x.size() != y.size() || x.size() != model.p_dim())
        throw ShapeError("row_distance: vector lengths " + std::to_string(x.size()) + "/" +
                         std::to_string(y.size()) + " do not match P=" +
                         std::to_string(model.p_dim()));
    if (!x.allFinite() || !y.allFinite())
        throw DataError("row_distance: non-finite input");
    const Eigen::VectorXd d = x - y;
    return clamp_distance(d.dot(model.matrix() * d));
}

double lockstep_distance(const Eigen::MatrixXd& a, const Eigen::MatrixXd& b,
                         const MetricModel& model) {
    if (a.cols() != b.cols() || a.cols() != model.p_dim())
        throw ShapeError("lockstep_distance: channel counts do not match the metric");
    if (a.rows() != b.rows())
        throw ShapeError("lockstep_distance requires equal lengths (H " +
                         std::to_string(a.rows()) + " vs " + std::to_string(b.rows()) +
                         "); align unequal series with DTW first");
    // sum_h (a_h - b_h)^T M (a_h - b_h) as a Frobenius norm in the factored space
    const Eigen::MatrixXd diff = a - b;
    return clamp_distance((diff * model.factor()).squaredNorm());
}

double lockstep_distance(const MtsSample& a, const MtsSample& b, const MetricModel& model) {
    return lockstep_distance(a.values, b.values, model);
}

std::pair<Eigen::MatrixXd, Eigen::VectorXd> spectral_factor(const MetricModel& model) {
    auto es = solve_sym(model.matrix());
    const Eigen::Index p = model.p_dim();
    // SelfAdjointEigenSolver sorts ascending; flip to descending.
    Eigen::VectorXd sigma(p);
    Eigen::MatrixXd u(p, p);
    for (Eigen::Index i = 0; i < p; ++i) {
        sigma(i) = std::max(es.eigenvalues()(p - 1 - i), 0.0);
        u.col(i) = es.eigenvectors().col(p - 1 - i);
    }
    return {u, sigma};
}

double min_eigenvalue(const MetricModel& model) { return min_eigenvalue(model.matrix()); }

void save_metric(const MetricModel& model, const std::filesystem::path& file) {
    json doc;
    doc["p_dim"] = model.p_dim();
    if (model.channel_names().empty()) {
        std::vector<std::string> names;
        for (int i = 0; i < model.p_dim(); ++i) names.push_back("ch_" + std::to_string(i));
        doc["channel_names"] = names;
    } else {
        doc["channel_names"] = model.channel_names();
    }
    std::vector<double> m;
    m.reserve(static_cast<std::size_t>(model.p_dim()) * model.p_dim());
    for (int r = 0; r < model.p_dim(); ++r)
        for (int c = 0; c < model.p_dim(); ++c) m.push_back(model.matrix()(r, c));
    doc["m"] = std::move(m);
    const auto& meta = model.training_meta();
    doc["training_meta"] = {{"cycles_run", meta.cycles_run},
                            {"final_cycle_loss", meta.final_cycle_loss},
                            {"eta", meta.eta_base},
                            {"rho", meta.rho},
                            {"cycle_losses", meta.cycle_losses}};
    std::ofstream out(file, std::ios::binary);
    if (!out) throw DataError("cannot write metric model " + file.string());
    out << doc.dump(1) << '\n';
}

MetricModel load_metric(const std::filesystem::path& file) {
    std::ifstream in(file, std::ios::binary);
    if (!in) throw DataError("cannot open metric model " + file.string());
    json doc;
    try {
        in >> doc;
    } catch (const json::exception& e) {
        throw DataError("malformed metric model " + file.string() + ": " + e.what());
    }
    try {
        const int p = doc.at("p_dim").get<int>();
        auto names = doc.at("channel_names").get<std::vector<std::string>>();
        auto flat = doc.at("m").get<std::vector<double>>();
        if (flat.size() != static_cast<std::size_t>(p) * static_cast<std::size_t>(p))
            throw DataError(file.string() + ": metric entry count does not match p_dim^2");
        Eigen::MatrixXd m(p, p);
        for (int r = 0; r < p; ++r)
            for (int c = 0; c < p; ++c)
                m(r, c) = flat[static_cast<std::size_t>(r) * static_cast<std::size_t>(p) +
                               static_cast<std::size_t>(c)];
        // Loading enforces the stored matrix really is symmetric, not just
        // symmetrizable.
        if ((m - m.transpose()).cwiseAbs().maxCoeff() > 1e-10)
            throw NumericError(file.string() + ": stored metric is not symmetric");
        TrainingMeta meta;
        if (doc.contains("training_meta")) {
            const auto& tm = doc["training_meta"];
            meta.cycles_run = tm.value("cycles_run", 0);
            meta.final_cycle_loss = tm.value("final_cycle_loss", 0.0);
            meta.eta_base = tm.value("eta", 0.0);
            meta.rho = tm.value("rho", 0.0);
            meta.cycle_losses = tm.value("cycle_losses", std::vector<double>{});
        }
        return MetricModel(std::move(m), std::move(names), std::move(meta));
    } catch (const json::exception& e) {
        throw DataError("malformed metric model " + file.string() + ": " + e.what());
    }
}

} // namespace fosl
