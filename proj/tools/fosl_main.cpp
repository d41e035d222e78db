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

#include <fstream>
#include <iostream>
#include <optional>
#include <string>

#include <CLI11.hpp>

#include "fosl/errors.hpp"
#include "fosl/pipeline.hpp"
#include "fosl/seeding.hpp"

namespace {

constexpr int kExitOk = 0;
constexpr int kExitUsage = 1;
constexpr int kExitData = 2;
constexpr int kExitNumeric = 3;

fosl::PipelineConfig load_config(const std::string& path, std::optional<std::uint64_t> seed) {
    auto cfg = fosl::load_pipeline_config(path);
    if (seed) {
        cfg.seed = *seed;
        cfg.train.seed = fosl::mix_seed(cfg.seed, "train-metric");
    }
    return cfg;
}

void write_text(const std::string& path, const std::string& text) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw fosl::DataError("cannot write " + path);
    out << text << '\n';
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"forced-oscillation source localization pipeline"};
    app.require_subcommand(1);

    std::string config_path, out_path, model_path, corpus_path, input_path, testset_path;
    std::optional<std::uint64_t> seed;
    int k = 0; // 0: take the config value
    int templates = 0;
    bool skip_select = false, keep_raw = false, identity_metric = false;

    auto* sim = app.add_subcommand("simulate", "generate labeled train/test corpora");
    sim->add_option("--config", config_path, "pipeline config JSON")->required();
    sim->add_option("--out", out_path, "output directory (overrides config out_dir)");
    sim->add_option("--seed", seed, "override the global seed");
    sim->add_flag("--keep-raw", keep_raw, "also store un-noised, un-windowed traces");

    auto* sel = app.add_subcommand("select", "sequential forward feature selection");
    sel->add_option("--config", config_path, "pipeline config JSON")->required();
    sel->add_option("--corpus", corpus_path, "training corpus directory");
    sel->add_option("--out", out_path, "selection result JSON file");
    sel->add_option("--seed", seed, "override the global seed");

    auto* train = app.add_subcommand("train", "feature selection + metric learning + templates");
    train->add_option("--config", config_path, "pipeline config JSON")->required();
    train->add_option("--corpus", corpus_path, "training corpus directory");
    train->add_option("--out", out_path, "model bundle file")->required();
    train->add_option("--templates", templates, "templates per class (overrides config)");
    train->add_option("--seed", seed, "override the global seed");
    train->add_flag("--skip-select", skip_select, "use the configured quantities directly");
    train->add_flag("--identity-metric", identity_metric,
                    "skip metric learning and keep M = I (ablation baseline)");

    auto* tpl = app.add_subcommand("templates", "rebuild the template set of a model");
    tpl->add_option("--model", model_path, "existing model bundle")->required();
    tpl->add_option("--corpus", corpus_path, "training corpus directory")->required();
    tpl->add_option("--templates", templates, "templates per class")->required();
    tpl->add_option("--out", out_path, "output model bundle file")->required();

    auto* cls = app.add_subcommand("classify", "locate the source of one query window");
    cls->add_option("--model", model_path, "model bundle file")->required();
    cls->add_option("--input", input_path, "query sample CSV")->required();
    cls->add_option("--k", k, "nearest neighbors (default 1)");
    cls->add_option("--out", out_path, "write the JSON record here as well");

    auto* eval = app.add_subcommand("evaluate", "accuracy/confusion report on a labeled set");
    eval->add_option("--model", model_path, "model bundle file")->required();
    eval->add_option("--testset", testset_path, "labeled dataset directory")->required();
    eval->add_option("--k", k, "nearest neighbors (default 1)");
    eval->add_option("--out", out_path, "report JSON file");
    eval->add_flag("--identity-metric", identity_metric,
                   "evaluate with M = I instead of the trained metric");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        return app.exit(e) == 0 ? kExitOk : kExitUsage;
    }

    try {
        if (sim->parsed()) {
            auto cfg = load_config(config_path, seed);
            if (!out_path.empty()) cfg.out_dir = out_path;
            auto dirs = fosl::run_simulate(cfg, keep_raw);
            std::cout << "train corpus: " << dirs.train_dir.string() << "\n"
                      << "test corpus:  " << dirs.test_dir.string() << "\n";
        } else if (sel->parsed()) {
            auto cfg = load_config(config_path, seed);
            const auto corpus = corpus_path.empty() ? cfg.out_dir / "train"
                                                    : std::filesystem::path(corpus_path);
            auto result = fosl::run_select(cfg, corpus, out_path);
            std::cout << "selected quantities:";
            for (const auto& q : result.chosen_quantities) std::cout << " " << q;
            std::cout << "\n";
        } else if (train->parsed()) {
            auto cfg = load_config(config_path, seed);
            if (templates > 0) cfg.templates_per_class = templates;
            const auto corpus = corpus_path.empty() ? cfg.out_dir / "train"
                                                    : std::filesystem::path(corpus_path);
            auto bundle = fosl::run_train(cfg, corpus, out_path, skip_select, identity_metric);
            std::cout << "model written to " << out_path << " (P=" << bundle.metric.p_dim()
                      << ", " << bundle.templates.total() << " templates)\n";
        } else if (tpl->parsed()) {
            auto bundle = fosl::run_templates(model_path, corpus_path, templates, out_path);
            std::cout << "model written to " << out_path << " ("
                      << bundle.templates.total() << " templates)\n";
        } else if (cls->parsed()) {
            auto out = fosl::run_classify(model_path, input_path, k > 0 ? k : 1);
            std::cout << "predicted source: generator " << out.result.predicted << "\n";
            const int shown = static_cast<int>(std::min(out.result.ranking.size(),
                                                        static_cast<std::size_t>(k > 0 ? k : 1)));
            for (int i = 0; i < shown; ++i) {
                const auto& r = out.result.ranking[static_cast<std::size_t>(i)];
                std::cout << "  rank " << (i + 1) << ": class " << r.label << ", distance "
                          << r.distance << "\n";
            }
            std::cout << out.json_record << "\n";
            if (!out_path.empty()) write_text(out_path, out.json_record);
        } else if (eval->parsed()) {
            auto cfg_k = k > 0 ? k : 1;
            auto out = fosl::run_evaluate(model_path, testset_path, cfg_k, identity_metric);
            std::cout << fosl::format_report(out.report);
            if (!out.per_delay.empty()) {
                std::cout << "per-delay accuracy:\n";
                for (const auto& d : out.per_delay)
                    std::cout << "  d=" << d.delay_s << " s: " << d.accuracy_pct << " % ("
                              << d.count << " samples)\n";
            }
            if (!out_path.empty()) write_text(out_path, out.json_report);
        }
    } catch (const fosl::NumericError& e) {
        std::cerr << "numeric failure: " << e.what() << "\n";
        return kExitNumeric;
    } catch (const fosl::Error& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitData;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitData;
    }
    return kExitOk;
}
