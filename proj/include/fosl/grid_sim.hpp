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

#ifndef FOSL_GRID_SIM_HPP
#define FOSL_GRID_SIM_HPP

#include <Eigen/Dense>
#include <cstdint>
#include <utility>
#include <vector>

#include "fosl/mts.hpp"

namespace fosl {

/// System reference angular frequency (60 Hz base).
inline constexpr double kOmega0 = 2.0 * 3.14159265358979323846 * 60.0;

struct GeneratorParams {
    double t_j = 10.0;       // inertia time constant, s
    double k_d = 2.0;        // damping factor, pu torque per pu speed
    double k_s = 1.0;        // synchronizing coefficient to the network, pu/rad
    double rating_mw = 100.0;
};

/// Full configuration of one simulation run. The stiffness matrix holds
/// the symmetric inter-machine coupling; only off-diagonal entries enter
/// the dynamics (the diagonal is the zero-row-sum completion).
struct GridScenario {
    int n_gens = 1;
    Eigen::MatrixXd stiffness;          // n x n symmetric, off-diagonal >= 0
    std::vector<GeneratorParams> gens;  // size n
    int source = 1;                     // forced generator, 1-based
    double fo_amplitude = 0.0;          // pu mechanical power
    double fo_omega = 0.0;              // rad/s
    double ou_c = 0.2;                  // inverse correlation time, 1/s
    double ou_sigma = 0.01;
    double load_scale = 0.1;            // S0: pu load modulated by the OU process
    double snr_db = 13.0;               // +inf disables measurement noise
    double duration_s = 10.0;
    double rate_hz = 25.0;
    double internal_dt = 1e-3;          // integrator step upper bound
    std::uint64_t seed = 0;
    int scenario_id = 0;
};

/// omega_n = sqrt(omega0 Ks / Tj) and xi = Kd / (2 sqrt(omega0 Ks Tj)).
std::pair<double, double> natural_frequency(const GeneratorParams& g);

/// Steady-state forced angle amplitude of the single-machine system, in
/// radians: (dPmax / Ks) / sqrt([1 - r^2]^2 + (2 xi r)^2) with
/// r = fo_omega / omega_n.
double smib_forced_amplitude(const GeneratorParams& g, double fo_amplitude, double fo_omega);

/// Undamped electromechanical mode frequencies (rad/s), ascending.
Eigen::VectorXd network_mode_frequencies(const GridScenario& s);

/// Lowest mode; used as the default forcing frequency.
double dominant_mode_omega(const GridScenario& s);

/// Exact-discretization Ornstein-Uhlenbeck series u_0 = 0,
/// u_{n+1} = u_n e^{-C dt} + sigma sqrt((1 - e^{-2 C dt}) / (2C)) zeta_n.
std::vector<double> generate_load_noise(double ou_c, double ou_sigma, double dt, int steps,
                                        std::uint64_t seed);

/// Integrates the coupled linearized swing equations with RK4 and emits
/// the 5 channels per generator (angle deg, speed Hz, active power MW,
/// reactive power, voltage). Measurement noise is NOT added here.
MtsSample simulate_scenario(const GridScenario& s);

/// Adds white Gaussian noise per channel, scaled so the channel's AC
/// power over the window sits at snr_db above the noise; zero-variance
/// channels stay untouched.
MtsSample add_measurement_noise(const MtsSample& raw, double snr_db, std::uint64_t seed);

/// Corpus generation policy: the base scenario plus the per-scenario
/// randomization applied on top of it.
struct ScenarioTemplate {
    GridScenario base;
    std::pair<double, double> t_j_range = {6.0, 12.0}; // uniform redraw per generator
    bool auto_fo_omega = true;      // force at the scenario's dominant mode
    bool zero_source_damping = true;
};

/// For each source class i and condition j: re-seed, redraw inertias,
/// simulate, add noise, window at every shift. Sample order is
/// class-major, then condition, then shift. Fully deterministic in
/// (template, seed).
Dataset generate_corpus(const ScenarioTemplate& tmpl, int n_scenarios_per_class,
                        const std::vector<double>& shifts_s, double window_s);

/// The un-noised, un-windowed traces behind generate_corpus (same seeds).
std::vector<MtsSample> generate_raw_corpus(const ScenarioTemplate& tmpl,
                                           int n_scenarios_per_class);

/// Resolves the concrete scenario generate_corpus would simulate for
/// (source i, condition j).
GridScenario instantiate_scenario(const ScenarioTemplate& tmpl, int source, int condition);

/// Uniform ring topology helper for desk-scale experiments.
Eigen::MatrixXd ring_stiffness(int n_gens, double coupling);

} // namespace fosl

#endif // FOSL_GRID_SIM_HPP
