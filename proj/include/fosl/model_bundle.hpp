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

#ifndef FOSL_MODEL_BUNDLE_HPP
#define FOSL_MODEL_BUNDLE_HPP

#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "fosl/classifier.hpp"
#include "fosl/feature_select.hpp"
#include "fosl/metric.hpp"

namespace fosl {

/// Everything online matching needs in one self-describing file: the
/// learned metric, the class templates, and the channel selection that
/// maps raw 5-quantity records onto the metric's P columns.
struct ModelBundle {
    int n_gens = 0;
    double window_s = 0.0;
    double rate_hz = 0.0;
    std::vector<std::string> quantities; // canonical order subset
    std::optional<SelectionResult> selection;
    MetricModel metric;
    TemplateSet templates;

    /// Slices a raw all-quantity query down to the bundle's channel
    /// layout; a query already matching p_dim passes through unchanged.
    MtsSample adapt_query(const MtsSample& query) const;
};

void save_model_bundle(const ModelBundle& bundle, const std::filesystem::path& file);
ModelBundle load_model_bundle(const std::filesystem::path& file);

} // namespace fosl

#endif // FOSL_MODEL_BUNDLE_HPP
