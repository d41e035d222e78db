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

#include <fstream>
#include <random>

#include "fosl/errors.hpp"
#include "fosl/mts.hpp"
#include "test_util.hpp"

using namespace fosl;
using fosl::test::TempDir;
using fosl::test::make_sample;
using fosl::test::random_matrix;

namespace {

Dataset tiny_dataset(int n_samples, int h, int p, std::uint64_t seed) {
    std::mt19937_64 rng(seed);
    Dataset ds;
    ds.n_classes = 2;
    ds.channels_per_gen = 1;
    for (int i = 0; i < n_samples; ++i) {
        auto s = make_sample(random_matrix(rng, h, p, 3.0), (i % 2) + 1, i);
        // Exercise extreme exponents through the round-trip.
        s.values(0, 0) = 1.2345678901234567e-300;
        s.values(h - 1, p - 1) = -9.876543210987654e+250;
        s.seed = seed + static_cast<std::uint64_t>(i);
        s.shift_s = 0.5 * i;
        ds.samples.push_back(std::move(s));
    }
    return ds;
}

} // namespace

TEST_CASE("dataset save/load round-trips values, labels and provenance exactly") {
    TempDir dir("roundtrip");
    Dataset ds = tiny_dataset(3, 7, 4, 99);
    save_dataset(ds, dir.path());
    Dataset back = load_dataset(dir.path());

    REQUIRE(back.samples.size() == ds.samples.size());
    CHECK(back.n_classes == ds.n_classes);
    CHECK(back.channels_per_gen == ds.channels_per_gen);
    for (std::size_t i = 0; i < ds.samples.size(); ++i) {
        const auto& a = ds.samples[i];
        const auto& b = back.samples[i];
        CHECK(a.values == b.values); // bit-exact round trip
        CHECK(a.label == b.label);
        CHECK(a.scenario_id == b.scenario_id);
        CHECK(a.shift_s == b.shift_s);
        CHECK(a.seed == b.seed);
        CHECK(a.rate_hz == b.rate_hz);
        CHECK(a.channel_names == b.channel_names);
    }
}

TEST_CASE("load_dataset rejects shape mismatches naming the file") {
    TempDir dir("mismatch");
    Dataset ds = tiny_dataset(2, 5, 3, 7);
    save_dataset(ds, dir.path());

    SUBCASE("row count differs from manifest H") {
        // Drop the last data row of sample 0.
        const auto file = dir.path() / "sample_000000.csv";
        std::ifstream in(file);
        std::string contents, line;
        std::vector<std::string> lines;
        while (std::getline(in, line)) lines.push_back(line);
        in.close();
        std::ofstream out(file, std::ios::binary);
        for (std::size_t i = 0; i + 1 < lines.size(); ++i) out << lines[i] << '\n';
        out.close();
        CHECK_THROWS_WITH_AS(load_dataset(dir.path()),
                             doctest::Contains("sample_000000.csv"), DataError);
    }
    SUBCASE("header channel count differs from manifest P") {
        const auto file = dir.path() / "sample_000001.csv";
        std::ifstream in(file);
        std::vector<std::string> lines;
        std::string line;
        while (std::getline(in, line)) lines.push_back(line);
        in.close();
        lines[0] += ",ch_extra";
        std::ofstream out(file, std::ios::binary);
        for (const auto& l : lines) out << l << '\n';
        out.close();
        CHECK_THROWS_AS(load_dataset(dir.path()), DataError);
    }
    SUBCASE("non-finite value reports row and column") {
        const auto file = dir.path() / "sample_000000.csv";
        std::ifstream in(file);
        std::vector<std::string> lines;
        std::string line;
        while (std::getline(in, line)) lines.push_back(line);
        in.close();
        lines[2] = "nan," + lines[2].substr(lines[2].find(',') + 1);
        std::ofstream out(file, std::ios::binary);
        for (const auto& l : lines) out << l << '\n';
        out.close();
        CHECK_THROWS_WITH_AS(load_dataset(dir.path()), doctest::Contains("row 1"), DataError);
    }
    SUBCASE("missing manifest") {
        std::filesystem::remove(dir.path() / "manifest.json");
        CHECK_THROWS_AS(load_dataset(dir.path()), DataError);
    }
}

TEST_CASE("window_slice selects the right rows") {
    std::mt19937_64 rng(1);
    auto raw = make_sample(random_matrix(rng, 250, 3), 2, 5); // 10 s at 25 Hz

    SUBCASE("5 s window at 25 Hz has 125 rows") {
        auto w = window_slice(raw, 0.0, 5.0);
        CHECK(w.rows() == 125);
        CHECK(w.cols() == 3);
        CHECK(w.label == 2);
        CHECK(w.scenario_id == 5);
        CHECK(w.shift_s == 0.0);
    }
    SUBCASE("t_start 3.4 s maps to raw row 85") {
        auto w = window_slice(raw, 3.4, 5.0);
        CHECK(w.values.row(0) == raw.values.row(85));
        CHECK(w.shift_s == 3.4);
    }
    SUBCASE("full-horizon slice is the identity") {
        auto w = window_slice(raw, 0.0, 10.0);
        CHECK(w.values == raw.values);
    }
    SUBCASE("window past the horizon is a range error") {
        CHECK_THROWS_AS(window_slice(raw, 6.0, 5.0), DataError);
    }
    SUBCASE("off-grid start is an alignment error") {
        CHECK_THROWS_AS(window_slice(raw, 0.013, 5.0), DataError);
    }
}

TEST_CASE("build_shifted_training_set multiplies raw samples by shifts") {
    std::mt19937_64 rng(2);
    std::vector<MtsSample> raw;
    for (int i = 0; i < 8; ++i)
        raw.push_back(make_sample(random_matrix(rng, 250, 2), (i % 4) + 1, i));

    SUBCASE("count is |raw| x |shifts|") {
        auto ds = build_shifted_training_set(raw, {0, 1, 2, 3, 4, 5}, 5.0);
        CHECK(ds.samples.size() == 48);
        CHECK(ds.samples[1].shift_s == 1.0);
        CHECK(ds.samples[6].label == raw[1].label);
    }
    SUBCASE("single zero shift keeps the raw count") {
        auto ds = build_shifted_training_set(raw, {0}, 5.0);
        CHECK(ds.samples.size() == raw.size());
    }
    SUBCASE("shift past the horizon propagates the range error") {
        std::vector<MtsSample> short_raw = {make_sample(random_matrix(rng, 150, 2))}; // 6 s
        CHECK_THROWS_AS(build_shifted_training_set(short_raw, {0, 2}, 5.0), DataError);
    }
}

TEST_CASE("select_quantities keeps canonical order and all generators") {
    MtsSample s;
    s.values.resize(2, 10); // 2 generators x 5 quantities
    for (Eigen::Index c = 0; c < 10; ++c) s.values.col(c).setConstant(double(c));
    s.rate_hz = 25.0;
    s.channel_names = make_channel_names(2);

    auto cut = select_quantities(s, {"p", "angle", "speed"});
    REQUIRE(cut.cols() == 6);
    CHECK(cut.channel_names ==
          std::vector<std::string>{"g1.angle", "g1.speed", "g1.p", "g2.angle", "g2.speed",
                                   "g2.p"});
    CHECK(cut.values(0, 2) == 2.0);  // g1.p was column 2
    CHECK(cut.values(0, 3) == 5.0);  // g2.angle was column 5

    CHECK_THROWS_AS(select_quantities(s, {"bogus"}), DataError);
}

TEST_CASE("standalone sample CSV round-trip") {
    TempDir dir("csv");
    std::mt19937_64 rng(3);
    auto s = make_sample(random_matrix(rng, 9, 4), 3);
    const auto file = dir.path() / "query.csv";
    save_sample_csv(s, file);
    auto back = load_sample_csv(file);
    CHECK(back.values == s.values);
    CHECK(back.label == kUnknownLabel);
}
