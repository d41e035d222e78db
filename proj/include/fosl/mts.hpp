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

#ifndef FOSL_MTS_HPP
#define FOSL_MTS_HPP

#include <Eigen/Dense>
#include <array>
#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

namespace fosl {

/// Label value for query samples whose source is not known yet.
inline constexpr int kUnknownLabel = 0;

/// Per-PMU quantities in canonical column order. A generator's block of
/// columns is laid out in this order; generators are the major axis.
inline constexpr std::array<const char*, 5> kQuantityOrder = {"angle", "speed", "p", "q", "v"};

/// One multivariate time-series window: H synchronized snapshots of P
/// channels, plus the class label and provenance it was generated with.
/// Treated as immutable after construction.
struct MtsSample {
    Eigen::MatrixXd values;                  // H x P
    int label = kUnknownLabel;               // source generator, 1..N
    int scenario_id = 0;
    double shift_s = 0.0;                    // window start offset from event onset
    double rate_hz = 0.0;
    std::uint64_t seed = 0;
    std::vector<std::string> channel_names;  // size P, "g<gen>.<quantity>"

    Eigen::Index rows() const { return values.rows(); }
    Eigen::Index cols() const { return values.cols(); }
};

/// An ordered collection of samples sharing one channel layout.
struct Dataset {
    std::vector<MtsSample> samples;
    int n_classes = 0;
    int channels_per_gen = 0;

    std::size_t size() const { return samples.size(); }
    bool empty() const { return samples.empty(); }
};

/// Canonical channel names for n_gens generators and the given quantities
/// (generator-major, quantity-minor in kQuantityOrder).
std::vector<std::string> make_channel_names(int n_gens,
                                            const std::vector<std::string>& quantities);
std::vector<std::string> make_channel_names(int n_gens);

/// Throws DataError if the sample violates its structural invariants
/// (finite values, name count matching P).
void validate_sample(const MtsSample& s, const std::string& context = {});

/// Throws DataError unless every sample shares H, P, rate and channel
/// layout, and all labels lie in 1..n_classes.
void validate_dataset(const Dataset& ds);

/// Cuts the rows [t_start*rate, t_start*rate + window_s*rate) out of a
/// longer record. t_start must sit on the sampling grid (1e-9 tolerance).
MtsSample window_slice(const MtsSample& raw, double t_start_s, double window_s);

/// One window per (raw sample, shift); sample order is raw-major.
Dataset build_shifted_training_set(const std::vector<MtsSample>& raw_samples,
                                   const std::vector<double>& shifts_s,
                                   double window_s);

/// Restricts every sample to the named quantities, keeping canonical
/// column order within each generator block.
Dataset select_quantities(const Dataset& ds, const std::vector<std::string>& quantities);
MtsSample select_quantities(const MtsSample& s, const std::vector<std::string>& quantities);

/// Quantity suffix of a channel name ("g3.speed" -> "speed").
std::string channel_quantity(const std::string& channel_name);

// ---- Dataset directory I/O ----
// Layout: <dir>/manifest.json plus one CSV per sample. The CSV carries a
// header line `ch_0,...,ch_{P-1}` followed by exactly H rows of P decimal
// fields at full double precision, LF line endings.

void save_dataset(const Dataset& ds, const std::filesystem::path& dir);
Dataset load_dataset(const std::filesystem::path& dir);

/// Writes/reads one sample as a standalone CSV (no manifest); used for
/// query inputs to the classifier. Loaded samples carry unknown label.
void save_sample_csv(const MtsSample& s, const std::filesystem::path& file);
MtsSample load_sample_csv(const std::filesystem::path& file);

} // namespace fosl

#endif // FOSL_MTS_HPP
