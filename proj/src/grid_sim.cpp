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

#include "fosl/grid_sim.hpp"

#include <Eigen/Eigenvalues>
#include <cmath>
#include <random>
#include <vector>

#include "fosl/errors.hpp"
#include "fosl/parallel.hpp"
#include "fosl/seeding.hpp"

namespace fosl {

namespace {

constexpr double kPi = 3.14159265358979323846;

void validate_generator(const GeneratorParams& g, const std::string& ctx) {
    if (!(g.t_j > 0)) throw ConfigError(ctx + ": inertia time constant must be positive");
    if (g.k_d < 0) throw ConfigError(ctx + ": damping factor must be nonnegative");
    if (!(g.k_s > 0)) throw ConfigError(ctx + ": synchronizing coefficient must be positive");
}

void validate_scenario(const GridScenario& s) {
    if (s.n_gens < 1) throw ConfigError("scenario: n_gens must be >= 1");
    if (static_cast<int>(s.gens.size()) != s.n_gens)
        throw ConfigError("scenario: generator parameter count does not match n_gens");
    if (s.stiffness.rows() != s.n_gens || s.stiffness.cols() != s.n_gens)
        throw ConfigError("scenario: stiffness matrix must be n_gens x n_gens");
    if ((s.stiffness - s.stiffness.transpose()).cwiseAbs().maxCoeff() > 1e-12)
        throw ConfigError("scenario: stiffness matrix must be symmetric");
    for (int i = 0; i < s.n_gens; ++i)
        for (int j = 0; j < s.n_gens; ++j)
            if (i != j && s.stiffness(i, j) < 0)
                throw ConfigError("scenario: off-diagonal stiffness must be nonnegative");
    // Connectivity over nonzero couplings: one synchronous area.
    std::vector<int> component(static_cast<std::size_t>(s.n_gens), -1);
    std::vector<int> stack = {0};
    component[0] = 0;
    while (!stack.empty()) {
        const int u = stack.back();
        stack.pop_back();
        for (int v = 0; v < s.n_gens; ++v)
            if (v != u && s.stiffness(u, v) > 0 && component[static_cast<std::size_t>(v)] < 0) {
                component[static_cast<std::size_t>(v)] = 0;
                stack.push_back(v);
            }
    }
    for (int v = 0; v < s.n_gens; ++v)
        if (component[static_cast<std::size_t>(v)] < 0)
            throw ConfigError("scenario: stiffness graph is disconnected (generator " +
                              std::to_string(v + 1) + " is isolated from generator 1)");
    for (int i = 0; i < s.n_gens; ++i)
        validate_generator(s.gens[static_cast<std::size_t>(i)],
                           "generator " + std::to_string(i + 1));
    if (s.source < 1 || s.source > s.n_gens)
        throw ConfigError("scenario: source index " + std::to_string(s.source) +
                          " outside 1.." + std::to_string(s.n_gens));
    if (s.fo_amplitude < 0) throw ConfigError("scenario: forcing amplitude must be >= 0");
    if (!(s.ou_c > 0)) throw ConfigError("scenario: ou_c must be positive");
    if (s.ou_sigma < 0) throw ConfigError("scenario: ou_sigma must be >= 0");
    if (!(s.duration_s > 0) || !(s.rate_hz > 0))
        throw ConfigError("scenario: duration and rate must be positive");
    const double n_samples = s.duration_s * s.rate_hz;
    if (std::abs(n_samples - std::round(n_samples)) > 1e-9)
        throw ConfigError("scenario: duration_s * rate_hz must be integral");
    if (!(s.internal_dt > 0)) throw ConfigError("scenario: internal_dt must be positive");
}

// Laplacian of the inter-machine coupling graph; the stored diagonal is
// ignored (zero-row-sum completion).
Eigen::MatrixXd coupling_laplacian(const GridScenario& s) {
    Eigen::MatrixXd lap = Eigen::MatrixXd::Zero(s.n_gens, s.n_gens);
    for (int i = 0; i < s.n_gens; ++i) {
        double row_sum = 0.0;
        for (int j = 0; j < s.n_gens; ++j) {
            if (i == j) continue;
            lap(i, j) = -s.stiffness(i, j);
            row_sum += s.stiffness(i, j);
        }
        lap(i, i) = row_sum;
    }
    return lap;
}

} // namespace

std::pair<double, double> natural_frequency(const GeneratorParams& g) {
    validate_generator(g, "natural_frequency");
    const double omega_n = std::sqrt(kOmega0 * g.k_s / g.t_j);
    const double xi = g.k_d / (2.0 * std::sqrt(kOmega0 * g.k_s * g.t_j));
    return {omega_n, xi};
}

double smib_forced_amplitude(const GeneratorParams& g, double fo_amplitude, double fo_omega) {
    auto [omega_n, xi] = natural_frequency(g);
    const double r = fo_omega / omega_n;
    const double denom_sq = (1.0 - r * r) * (1.0 - r * r) + (2.0 * xi * r) * (2.0 * xi * r);
    if (denom_sq <= 0)
        throw NumericError("smib_forced_amplitude: undamped exact resonance has no "
                           "steady-state amplitude; set a damping factor > 0");
    return (fo_amplitude / g.k_s) / std::sqrt(denom_sq);
}

Eigen::VectorXd network_mode_frequencies(const GridScenario& s) {
    validate_scenario(s);
    // Undamped small-signal modes of (T/w0) dd'' = -(Ks + L) dd, made
    // symmetric by the D^{1/2} similarity transform.
    Eigen::MatrixXd k = coupling_laplacian(s);
    Eigen::VectorXd inv_t(s.n_gens);
    for (int i = 0; i < s.n_gens; ++i) {
        k(i, i) += s.gens[static_cast<std::size_t>(i)].k_s;
        inv_t(i) = std::sqrt(kOmega0 / s.gens[static_cast<std::size_t>(i)].t_j);
    }
    const Eigen::MatrixXd b = inv_t.asDiagonal() * k * inv_t.asDiagonal();
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(b);
    if (es.info() != Eigen::Success)
        throw NumericError("network_mode_frequencies: eigensolver failed");
    return es.eigenvalues().cwiseMax(0.0).cwiseSqrt();
}

double dominant_mode_omega(const GridScenario& s) {
    return network_mode_frequencies(s)(0);
}

std::vector<double> generate_load_noise(double ou_c, double ou_sigma, double dt, int steps,
                                        std::uint64_t seed) {
    if (!(ou_c > 0)) throw ConfigError("generate_load_noise: ou_c must be positive");
    if (!(dt > 0)) throw ConfigError("generate_load_noise: dt must be positive");
    if (steps < 0) throw ConfigError("generate_load_noise: steps must be >= 0");
    std::vector<double> u(static_cast<std::size_t>(steps) + 1, 0.0);
    if (ou_sigma == 0.0) return u;
    const double decay = std::exp(-ou_c * dt);
    const double scale = ou_sigma * std::sqrt((1.0 - std::exp(-2.0 * ou_c * dt)) / (2.0 * ou_c));
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> gauss(0.0, 1.0);
    for (std::size_t n = 1; n < u.size(); ++n) u[n] = u[n - 1] * decay + scale * gauss(rng);
    return u;
}

MtsSample simulate_scenario(const GridScenario& s) {
    validate_scenario(s);
    const int n = s.n_gens;
    const Eigen::MatrixXd lap = coupling_laplacian(s);

    const double sample_dt = 1.0 / s.rate_hz;
    const int n_samples = static_cast<int>(std::round(s.duration_s * s.rate_hz));
    const int substeps = std::max(1, static_cast<int>(std::ceil(sample_dt / s.internal_dt - 1e-12)));
    const double dt = sample_dt / substeps;
    const int total_steps = n_samples * substeps;

    // OU load fluctuation per generator, sampled on the half-step grid so
    // all four RK4 stages see exact-discretization values.
    std::vector<std::vector<double>> ou(static_cast<std::size_t>(n));
    for (int g = 0; g < n; ++g)
        ou[static_cast<std::size_t>(g)] = generate_load_noise(
            s.ou_c, s.ou_sigma, dt / 2.0, 2 * total_steps,
            mix_seed(mix_seed(s.seed, "ou"), static_cast<std::uint64_t>(g)));

    Eigen::VectorXd k_s(n), k_d(n), gain(n), rating(n);
    for (int i = 0; i < n; ++i) {
        const auto& g = s.gens[static_cast<std::size_t>(i)];
        k_s(i) = g.k_s;
        k_d(i) = g.k_d;
        gain(i) = kOmega0 / g.t_j;
        rating(i) = g.rating_mw;
    }

    Eigen::VectorXd delta = Eigen::VectorXd::Zero(n); // rad
    Eigen::VectorXd speed = Eigen::VectorXd::Zero(n); // rad/s

    // d(delta)/dt = v
    // dv/dt = (w0/Tj) (Pm - (Kd/w0) v - Ks delta - L delta)
    Eigen::VectorXd pm(n), accel(n);
    auto eval_accel = [&](const Eigen::VectorXd& d, const Eigen::VectorXd& v, int half_step,
                          double t, Eigen::VectorXd& out) {
        for (int i = 0; i < n; ++i)
            pm(i) = -s.load_scale * ou[static_cast<std::size_t>(i)][static_cast<std::size_t>(half_step)];
        if (s.fo_amplitude != 0.0)
            pm(s.source - 1) += s.fo_amplitude * std::sin(s.fo_omega * t);
        out = gain.asDiagonal() *
              (pm - (k_d / kOmega0).cwiseProduct(v) - k_s.cwiseProduct(d) - lap * d);
    };

    MtsSample sample;
    sample.values.resize(n_samples, 5 * n);
    sample.label = s.source;
    sample.scenario_id = s.scenario_id;
    sample.shift_s = 0.0;
    sample.rate_hz = s.rate_hz;
    sample.seed = s.seed;
    sample.channel_names = make_channel_names(n);

    auto record = [&](int row) {
        for (int i = 0; i < n; ++i) {
            const double p_e = k_s(i) * delta(i) + lap.row(i).dot(delta); // pu
            sample.values(row, 5 * i + 0) = delta(i) * 180.0 / kPi;       // angle, deg
            sample.values(row, 5 * i + 1) = 60.0 + speed(i) / (2.0 * kPi); // speed, Hz
            sample.values(row, 5 * i + 2) = p_e * rating(i);               // active power, MW
            sample.values(row, 5 * i + 3) = 0.0;                           // reactive power
            sample.values(row, 5 * i + 4) = 1.0;                           // voltage, pu
        }
    };

    Eigen::VectorXd k1d(n), k1v(n), k2d(n), k2v(n), k3d(n), k3v(n), k4d(n), k4v(n);
    int step = 0;
    for (int row = 0; row < n_samples; ++row) {
        record(row);
        for (int sub = 0; sub < substeps; ++sub, ++step) {
            const double t = step * dt;
            const int h = 2 * step;
            k1d = speed;
            eval_accel(delta, speed, h, t, k1v);
            k2d = speed + 0.5 * dt * k1v;
            eval_accel(delta + 0.5 * dt * k1d, k2d, h + 1, t + 0.5 * dt, k2v);
            k3d = speed + 0.5 * dt * k2v;
            eval_accel(delta + 0.5 * dt * k2d, k3d, h + 1, t + 0.5 * dt, k3v);
            k4d = speed + dt * k3v;
            eval_accel(delta + dt * k3d, k4d, h + 2, t + dt, k4v);
            delta += (dt / 6.0) * (k1d + 2.0 * k2d + 2.0 * k3d + k4d);
            speed += (dt / 6.0) * (k1v + 2.0 * k2v + 2.0 * k3v + k4v);
            if (delta.cwiseAbs().maxCoeff() > 10.0)
                throw NumericError("simulate_scenario: angle deviation exceeded 10 rad "
                                   "(instability) in scenario " +
                                   std::to_string(s.scenario_id) + ", source " +
                                   std::to_string(s.source));
        }
    }
    return sample;
}

MtsSample add_measurement_noise(const MtsSample& raw, double snr_db, std::uint64_t seed) {
    validate_sample(raw, "add_measurement_noise");
    if (std::isinf(snr_db) && snr_db > 0) return raw;
    MtsSample out = raw;
    const Eigen::Index h = raw.rows();
    if (h < 2) return out;
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> gauss(0.0, 1.0);
    const double snr_linear = std::pow(10.0, snr_db / 10.0);
    for (Eigen::Index c = 0; c < raw.cols(); ++c) {
        // Constant channels carry no AC power and stay untouched; the exact
        // min/max check avoids the ~1e-16 variance a float mean introduces.
        if (raw.values.col(c).minCoeff() == raw.values.col(c).maxCoeff()) continue;
        const double mean = raw.values.col(c).mean();
        const double ac_power =
            (raw.values.col(c).array() - mean).square().sum() / static_cast<double>(h);
        if (ac_power == 0.0) continue;
        const double noise_std = std::sqrt(ac_power / snr_linear);
        for (Eigen::Index r = 0; r < h; ++r) out.values(r, c) += noise_std * gauss(rng);
    }
    return out;
}

GridScenario instantiate_scenario(const ScenarioTemplate& tmpl, int source, int condition) {
    GridScenario s = tmpl.base;
    s.source = source;
    s.scenario_id = condition;
    s.seed = mix_seed(tmpl.base.seed, static_cast<std::uint64_t>(source),
                      static_cast<std::uint64_t>(condition));
    std::mt19937_64 rng(mix_seed(s.seed, "params"));
    std::uniform_real_distribution<double> t_j_draw(tmpl.t_j_range.first, tmpl.t_j_range.second);
    if (tmpl.t_j_range.second > tmpl.t_j_range.first)
        for (auto& g : s.gens) g.t_j = t_j_draw(rng);
    if (tmpl.zero_source_damping) s.gens[static_cast<std::size_t>(source - 1)].k_d = 0.0;
    if (tmpl.auto_fo_omega || s.fo_omega <= 0.0) s.fo_omega = dominant_mode_omega(s);
    return s;
}

std::vector<MtsSample> generate_raw_corpus(const ScenarioTemplate& tmpl,
                                           int n_scenarios_per_class) {
    if (n_scenarios_per_class < 1)
        throw ConfigError("generate_raw_corpus: scenarios per class must be >= 1");
    if (!(tmpl.t_j_range.first > 0) || tmpl.t_j_range.second < tmpl.t_j_range.first)
        throw ConfigError("generate_raw_corpus: inertia range must satisfy 0 < lo <= hi");
    validate_scenario(tmpl.base);
    const int n = tmpl.base.n_gens;
    std::vector<MtsSample> raw(static_cast<std::size_t>(n) *
                               static_cast<std::size_t>(n_scenarios_per_class));
    parallel_for(raw.size(), [&](std::size_t idx) {
        const int source = static_cast<int>(idx) / n_scenarios_per_class + 1;
        const int condition = static_cast<int>(idx) % n_scenarios_per_class + 1;
        GridScenario s = instantiate_scenario(tmpl, source, condition);
        try {
            raw[idx] = simulate_scenario(s);
        } catch (const Error& e) {
            throw NumericError("scenario (source " + std::to_string(source) + ", condition " +
                               std::to_string(condition) + "): " + e.what());
        }
    }, 1);
    return raw;
}

Dataset generate_corpus(const ScenarioTemplate& tmpl, int n_scenarios_per_class,
                        const std::vector<double>& shifts_s, double window_s) {
    if (shifts_s.empty()) throw ConfigError("generate_corpus: need at least one shift");
    auto raw = generate_raw_corpus(tmpl, n_scenarios_per_class);
    parallel_for(raw.size(), [&](std::size_t idx) {
        raw[idx] = add_measurement_noise(raw[idx], tmpl.base.snr_db,
                                         mix_seed(raw[idx].seed, "noise"));
    }, 1);
    Dataset ds = build_shifted_training_set(raw, shifts_s, window_s);
    ds.n_classes = tmpl.base.n_gens;
    ds.channels_per_gen = static_cast<int>(kQuantityOrder.size());
    return ds;
}

Eigen::MatrixXd ring_stiffness(int n_gens, double coupling) {
    if (n_gens < 1) throw ConfigError("ring_stiffness: n_gens must be >= 1");
    Eigen::MatrixXd k = Eigen::MatrixXd::Zero(n_gens, n_gens);
    if (n_gens == 1) return k;
    for (int i = 0; i < n_gens; ++i) {
        const int next = (i + 1) % n_gens;
        k(i, next) = coupling;
        k(next, i) = coupling;
    }
    return k;
}

} // namespace fosl
