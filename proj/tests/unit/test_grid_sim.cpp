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

#include <doctest.h>

#include <cmath>
#include <numeric>
#include <random>

#include "fosl/errors.hpp"
#include "fosl/grid_sim.hpp"
#include "test_util.hpp"

using namespace fosl;

namespace {

constexpr double kPi = 3.14159265358979323846;

GridScenario smib_scenario(double xi, double fo_omega_ratio, double fo_amplitude = 0.01) {
    GridScenario s;
    s.n_gens = 1;
    s.stiffness = Eigen::MatrixXd::Zero(1, 1);
    GeneratorParams g;
    g.t_j = 10.0;
    g.k_s = 1.0;
    g.k_d = 2.0 * xi * std::sqrt(kOmega0 * g.k_s * g.t_j);
    s.gens = {g};
    s.source = 1;
    s.fo_amplitude = fo_amplitude;
    s.fo_omega = fo_omega_ratio * natural_frequency(g).first;
    s.ou_sigma = 0.0;
    s.snr_db = std::numeric_limits<double>::infinity();
    s.duration_s = 60.0;
    s.rate_hz = 200.0;
    s.seed = 1234;
    return s;
}

// Steady-state amplitude off the tail of a simulated angle channel
// (channel is in degrees; returns radians).
double tail_amplitude_rad(const MtsSample& sample, double tail_s) {
    const auto tail = static_cast<Eigen::Index>(tail_s * sample.rate_hz);
    const auto angle = sample.values.col(0).tail(tail);
    return 0.5 * (angle.maxCoeff() - angle.minCoeff()) * kPi / 180.0;
}

// Independent single-machine oracle: plain RK4 on
//   dd'' = F sin(w t) - 2 xi wn dd' - wn^2 dd
// written without touching the simulator, measuring the tail peak-to-peak.
double integrate_smib_amplitude(double t_j, double k_s, double xi, double fo_amplitude,
                                double fo_omega) {
    const double omega_n = std::sqrt(kOmega0 * k_s / t_j);
    const double force = kOmega0 * fo_amplitude / t_j;
    const double dt = 5e-4;
    const double total = 60.0, tail_from = 40.0;
    auto accel = [&](double d, double w, double t) {
        return force * std::sin(fo_omega * t) - 2.0 * xi * omega_n * w - omega_n * omega_n * d;
    };
    double delta = 0.0, v = 0.0;
    double hi = -1e300, lo = 1e300;
    const int steps = static_cast<int>(std::round(total / dt));
    for (int i = 0; i < steps; ++i) {
        const double t = i * dt;
        const double k1d = v;
        const double k1v = accel(delta, v, t);
        const double k2d = v + 0.5 * dt * k1v;
        const double k2v = accel(delta + 0.5 * dt * k1d, k2d, t + 0.5 * dt);
        const double k3d = v + 0.5 * dt * k2v;
        const double k3v = accel(delta + 0.5 * dt * k2d, k3d, t + 0.5 * dt);
        const double k4d = v + dt * k3v;
        const double k4v = accel(delta + dt * k3d, k4d, t + dt);
        delta += dt / 6.0 * (k1d + 2 * k2d + 2 * k3d + k4d);
        v += dt / 6.0 * (k1v + 2 * k2v + 2 * k3v + k4v);
        if (t >= tail_from) {
            hi = std::max(hi, delta);
            lo = std::min(lo, delta);
        }
    }
    return 0.5 * (hi - lo);
}

} // namespace

TEST_CASE("natural_frequency") {
    GeneratorParams g;
    g.t_j = 10.0;
    g.k_s = 1.0;
    g.k_d = 0.0;
    auto [omega_n, xi] = natural_frequency(g);
    CHECK(omega_n == doctest::Approx(6.1400).epsilon(1e-4));
    CHECK(xi == 0.0);

    GeneratorParams g4 = g;
    g4.t_j = 40.0;
    CHECK(natural_frequency(g4).first == doctest::Approx(0.5 * omega_n).epsilon(1e-12));

    g.k_d = 6.0;
    CHECK(natural_frequency(g).second ==
          doctest::Approx(6.0 / (2.0 * std::sqrt(kOmega0 * 10.0))).epsilon(1e-12));
}

TEST_CASE("smib_forced_amplitude") {
    GeneratorParams g;
    g.t_j = 10.0;
    g.k_s = 2.0;
    g.k_d = 2.0 * 0.05 * std::sqrt(kOmega0 * g.k_s * g.t_j); // xi = 0.05

    SUBCASE("low-frequency limit is the static deflection") {
        CHECK(smib_forced_amplitude(g, 0.04, 1e-9) ==
              doctest::Approx(0.04 / g.k_s).epsilon(1e-6));
    }
    SUBCASE("resonance maximizes the response over a frequency sweep") {
        const double omega_n = natural_frequency(g).first;
        const double at_half = smib_forced_amplitude(g, 0.01, 0.5 * omega_n);
        const double at_res = smib_forced_amplitude(g, 0.01, omega_n);
        const double at_150 = smib_forced_amplitude(g, 0.01, 1.5 * omega_n);
        CHECK(at_res > at_half);
        CHECK(at_res > at_150);
    }
    SUBCASE("matches an independently integrated steady state within 2%") {
        std::mt19937_64 rng(41);
        for (int trial = 0; trial < 4; ++trial) {
            const double t_j = 6.0 + 6.0 * (trial % 2);
            const double k_s = 0.8 + 0.2 * trial;
            const double xi = 0.05 + 0.03 * trial;
            GeneratorParams gp;
            gp.t_j = t_j;
            gp.k_s = k_s;
            gp.k_d = 2.0 * xi * std::sqrt(kOmega0 * k_s * t_j);
            const double ratio = 0.5 + 0.5 * trial; // 0.5, 1.0, 1.5, 2.0
            const double fo_omega = ratio * natural_frequency(gp).first;
            const double predicted = smib_forced_amplitude(gp, 0.01, fo_omega);
            const double simulated = integrate_smib_amplitude(t_j, k_s, xi, 0.01, fo_omega);
            CHECK(predicted == doctest::Approx(simulated).epsilon(0.02));
        }
    }
    SUBCASE("undamped exact resonance is a numeric failure") {
        GeneratorParams bad = g;
        bad.k_d = 0.0;
        CHECK_THROWS_AS(smib_forced_amplitude(bad, 0.01, natural_frequency(bad).first),
                        NumericError);
    }
}

TEST_CASE("simulate_scenario preserves the zero-input equilibrium") {
    GridScenario s = smib_scenario(0.05, 1.0, 0.0); // no forcing
    s.rate_hz = 25.0;
    MtsSample out = simulate_scenario(s);
    REQUIRE(out.rows() == 1500);
    for (Eigen::Index c = 0; c < out.cols(); ++c) {
        CHECK(std::abs(out.values.col(c).maxCoeff() - out.values.col(c).minCoeff()) <= 1e-9);
    }
}

TEST_CASE("simulated SMIB amplitude matches the analytic response") {
    for (double ratio : {0.5, 1.0, 1.5}) {
        GridScenario s = smib_scenario(0.05, ratio);
        MtsSample out = simulate_scenario(s);
        const double measured = tail_amplitude_rad(out, 20.0);
        const double predicted =
            smib_forced_amplitude(s.gens[0], s.fo_amplitude, s.fo_omega);
        CHECK(measured == doctest::Approx(predicted).epsilon(0.02));
    }
}

TEST_CASE("steady-state spectral peak sits at the forcing frequency") {
    GridScenario s = smib_scenario(0.10, 0.7);
    MtsSample out = simulate_scenario(s);
    // DFT magnitudes over the final 25 s computed directly in the test.
    const auto tail = static_cast<Eigen::Index>(25.0 * s.rate_hz);
    Eigen::VectorXd x = out.values.col(0).tail(tail);
    x.array() -= x.mean();
    const Eigen::Index n = x.size();
    const double df = s.rate_hz / static_cast<double>(n);
    Eigen::Index best_bin = 0;
    double best_mag = -1.0;
    for (Eigen::Index bin = 1; bin <= n / 2; ++bin) {
        double re = 0.0, im = 0.0;
        for (Eigen::Index t = 0; t < n; ++t) {
            const double w = 2.0 * kPi * static_cast<double>(bin) * static_cast<double>(t) /
                             static_cast<double>(n);
            re += x(t) * std::cos(w);
            im -= x(t) * std::sin(w);
        }
        const double mag = re * re + im * im;
        if (mag > best_mag) {
            best_mag = mag;
            best_bin = bin;
        }
    }
    const double f_fo = s.fo_omega / (2.0 * kPi);
    CHECK(std::abs(best_bin * df - f_fo) <= df);
}

TEST_CASE("generate_load_noise") {
    SUBCASE("zero sigma gives the zero series") {
        auto u = generate_load_noise(0.2, 0.0, 0.01, 1000, 5);
        CHECK(*std::max_element(u.begin(), u.end()) == 0.0);
        CHECK(u.size() == 1001);
    }
    SUBCASE("fixed seed reproduces the series bit for bit") {
        auto a = generate_load_noise(0.2, 0.01, 0.01, 5000, 77);
        auto b = generate_load_noise(0.2, 0.01, 0.01, 5000, 77);
        CHECK(a == b);
        auto c = generate_load_noise(0.2, 0.01, 0.01, 5000, 78);
        CHECK(a != c);
    }
    SUBCASE("long-run standard deviation approaches sigma/sqrt(2C)") {
        const double c = 0.5, sigma = 0.02, dt = 0.02;
        auto u = generate_load_noise(c, sigma, dt, 400000, 13);
        const double mean = std::accumulate(u.begin(), u.end(), 0.0) / u.size();
        double var = 0.0;
        for (double v : u) var += (v - mean) * (v - mean);
        var /= static_cast<double>(u.size());
        const double expected = sigma / std::sqrt(2.0 * c);
        CHECK(std::sqrt(var) == doctest::Approx(expected).epsilon(0.05));
    }
}

TEST_CASE("add_measurement_noise") {
    std::mt19937_64 rng(42);
    SUBCASE("hits the requested SNR on a sinusoidal channel") {
        const Eigen::Index n = 100000;
        MtsSample clean;
        clean.values.resize(n, 1);
        for (Eigen::Index i = 0; i < n; ++i)
            clean.values(i, 0) = 3.0 * std::sin(0.01 * static_cast<double>(i)) + 7.0;
        clean.rate_hz = 25.0;
        clean.channel_names = {"g1.p"};
        MtsSample noisy = add_measurement_noise(clean, 13.0, 99);
        const double mean = clean.values.col(0).mean();
        const double sig_power =
            (clean.values.col(0).array() - mean).square().sum() / static_cast<double>(n);
        const double noise_power =
            (noisy.values.col(0) - clean.values.col(0)).squaredNorm() / static_cast<double>(n);
        const double snr_db = 10.0 * std::log10(sig_power / noise_power);
        CHECK(snr_db == doctest::Approx(13.0).epsilon(0.023)); // +-0.3 dB
    }
    SUBCASE("infinite SNR disables noise") {
        MtsSample clean = fosl::test::make_sample(Eigen::MatrixXd::Random(50, 3));
        MtsSample out =
            add_measurement_noise(clean, std::numeric_limits<double>::infinity(), 1);
        CHECK(out.values == clean.values);
    }
    SUBCASE("constant channels stay constant") {
        MtsSample clean;
        clean.values = Eigen::MatrixXd::Zero(100, 2);
        clean.values.col(0).setConstant(4.2);
        for (Eigen::Index i = 0; i < 100; ++i)
            clean.values(i, 1) = std::sin(0.3 * static_cast<double>(i));
        clean.rate_hz = 25.0;
        clean.channel_names = {"g1.q", "g1.p"};
        MtsSample out = add_measurement_noise(clean, 13.0, 7);
        CHECK(out.values.col(0) == clean.values.col(0));
        CHECK(out.values.col(1) != clean.values.col(1));
    }
}

TEST_CASE("network modes and corpus generation") {
    ScenarioTemplate tmpl;
    tmpl.base.n_gens = 3;
    tmpl.base.stiffness = ring_stiffness(3, 1.0);
    tmpl.base.gens.assign(3, GeneratorParams{});
    tmpl.base.fo_amplitude = 0.01;
    tmpl.base.duration_s = 10.0;
    tmpl.base.rate_hz = 25.0;
    tmpl.base.seed = 2024;
    tmpl.t_j_range = {6.0, 12.0};

    SUBCASE("SMIB dominant mode equals the machine's natural frequency") {
        GridScenario s = smib_scenario(0.05, 1.0);
        CHECK(dominant_mode_omega(s) ==
              doctest::Approx(natural_frequency(s.gens[0]).first).epsilon(1e-9));
    }
    SUBCASE("corpus size is N x J x |shifts| with class-major order") {
        Dataset ds = generate_corpus(tmpl, 4, {0.0, 1.0, 2.0}, 5.0);
        CHECK(ds.samples.size() == 3u * 4u * 3u);
        CHECK(ds.n_classes == 3);
        CHECK(ds.samples.front().label == 1);
        CHECK(ds.samples.back().label == 3);
        CHECK(ds.samples[1].shift_s == 1.0);
    }
    SUBCASE("J=1 with one shift yields one sample per class") {
        Dataset ds = generate_corpus(tmpl, 1, {0.0}, 5.0);
        CHECK(ds.samples.size() == 3);
        for (std::size_t i = 0; i < 3; ++i)
            CHECK(ds.samples[i].label == static_cast<int>(i) + 1);
    }
    SUBCASE("the same base seed reproduces the corpus bit for bit") {
        Dataset a = generate_corpus(tmpl, 2, {0.0, 1.0}, 5.0);
        Dataset b = generate_corpus(tmpl, 2, {0.0, 1.0}, 5.0);
        REQUIRE(a.samples.size() == b.samples.size());
        for (std::size_t i = 0; i < a.samples.size(); ++i)
            CHECK(a.samples[i].values == b.samples[i].values);
    }
    SUBCASE("source damping is zeroed and inertia is redrawn per scenario") {
        GridScenario s1 = instantiate_scenario(tmpl, 2, 1);
        CHECK(s1.gens[1].k_d == 0.0);
        CHECK(s1.gens[0].k_d == doctest::Approx(2.0));
        GridScenario s2 = instantiate_scenario(tmpl, 2, 2);
        CHECK(s1.gens[0].t_j != s2.gens[0].t_j);
        CHECK(s1.gens[0].t_j >= 6.0);
        CHECK(s1.gens[0].t_j <= 12.0);
        CHECK(s1.fo_omega == doctest::Approx(dominant_mode_omega(s1)));
    }
    SUBCASE("runaway forcing is reported as instability with context") {
        ScenarioTemplate hot = tmpl;
        hot.base.fo_amplitude = 1e7;
        // Every scenario blows up; whichever worker trips first carries the
        // (source, condition) context.
        CHECK_THROWS_WITH_AS(generate_corpus(hot, 1, {0.0}, 5.0),
                             doctest::Contains("instability"), NumericError);
    }
    SUBCASE("disconnected stiffness graphs are rejected") {
        ScenarioTemplate split = tmpl;
        split.base.stiffness = Eigen::MatrixXd::Zero(3, 3);
        split.base.stiffness(0, 1) = split.base.stiffness(1, 0) = 1.0; // gen 3 isolated
        CHECK_THROWS_AS(generate_corpus(split, 1, {0.0}, 5.0), ConfigError);
    }
}
