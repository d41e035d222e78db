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

#ifndef FOSL_TEST_UTIL_HPP
#define FOSL_TEST_UTIL_HPP

#include <Eigen/Dense>
#include <atomic>
#include <filesystem>
#include <random>
#include <string>
#include <unistd.h>

#include "fosl/mts.hpp"

namespace fosl::test {

inline MtsSample make_sample(Eigen::MatrixXd values, int label = 1, int scenario_id = 0,
                             double rate_hz = 25.0, double shift_s = 0.0) {
    MtsSample s;
    s.values = std::move(values);
    s.label = label;
    s.scenario_id = scenario_id;
    s.rate_hz = rate_hz;
    s.shift_s = shift_s;
    for (Eigen::Index c = 0; c < s.values.cols(); ++c)
        s.channel_names.push_back("g" + std::to_string(c + 1) + ".p");
    return s;
}

inline Eigen::MatrixXd random_matrix(std::mt19937_64& rng, Eigen::Index rows,
                                     Eigen::Index cols, double scale = 1.0) {
    std::normal_distribution<double> gauss(0.0, scale);
    Eigen::MatrixXd m(rows, cols);
    for (Eigen::Index r = 0; r < rows; ++r)
        for (Eigen::Index c = 0; c < cols; ++c) m(r, c) = gauss(rng);
    return m;
}

/// Random PSD matrix A^T A (+ ridge for strictly PD).
inline Eigen::MatrixXd random_psd(std::mt19937_64& rng, Eigen::Index p, double ridge = 0.0) {
    const Eigen::MatrixXd a = random_matrix(rng, p + 2, p);
    return a.transpose() * a + ridge * Eigen::MatrixXd::Identity(p, p);
}

/// Fresh scratch directory under the system temp root.
class TempDir {
public:
    explicit TempDir(const std::string& tag) {
        static std::atomic<int> counter{0};
        path_ = std::filesystem::temp_directory_path() /
                ("fosl_test_" + tag + "_" + std::to_string(counter.fetch_add(1)) + "_" +
                 std::to_string(::getpid()));
        std::filesystem::create_directories(path_);
    }
    ~TempDir() {
        std::error_code ec;
        std::filesystem::remove_all(path_, ec);
    }
    const std::filesystem::path& path() const { return path_; }

private:
    std::filesystem::path path_;
};

} // namespace fosl::test

#endif // FOSL_TEST_UTIL_HPP
