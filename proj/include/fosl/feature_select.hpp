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

#ifndef FOSL_FEATURE_SELECT_HPP
#define FOSL_FEATURE_SELECT_HPP

#include <array>
#include <cstdint>
#include <string>
#include <vector>

#include "fosl/mts.hpp"

namespace fosl {

/// Tie-break preference when candidate quantities score equally.
inline constexpr std::array<const char*, 5> kSelectionTieOrder = {"p", "angle", "speed", "q", "v"};

struct SelectionResult {
    std::vector<std::string> chosen_quantities; // in selection order
    std::vector<double> step_accuracies;        // CV accuracy after each step
    std::uint64_t seed = 0;
};

/// Greedy forward selection over quantity names (each quantity toggles
/// for all generators at once). Scoring is stratified k-fold CV accuracy
/// of a 1-NN lockstep classifier with the identity metric on the
/// candidate channel subset; fold assignment is seeded.
SelectionResult sequential_select(const Dataset& corpus, int t_target, int folds,
                                  std::uint64_t seed);

} // namespace fosl

#endif // FOSL_FEATURE_SELECT_HPP
