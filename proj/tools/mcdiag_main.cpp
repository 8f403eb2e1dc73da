// mcdiag: diagnose why a binary classifier got individual points wrong.
//
// Pipeline verbs:
//   clean      iterative cross-training cleanup -> easy sets
//   genlabels  weak-model / mixed-data label generation -> profile pools
//   trainmeta  train + evaluate the three-class meta-tree
//   diagnose   label new misclassified points with a trained meta-tree
//   ablate     feature-muting ablation of the meta-tree
//
// Exit codes: 0 ok, 2 config validation, 3 underfit-guard refusal,
// 4 runtime failure.

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "json.hpp"

#include "mcdiag/configurations.hpp"
#include "mcdiag/experiment.hpp"
#include "mcdiag/pipeline.hpp"

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

struct GlobalOpts {
    std::string config_path;
    std::string out_dir_override;
    std::string seed_list;
    bool verbose = false;
};

std::vector<std::uint64_t> parse_seed_list(const std::string& s) {
    std::vector<std::uint64_t> seeds;
    for (const auto& part : mcdiag::split(s, ',')) {
        const std::string t = mcdiag::trim(part);
        if (t.empty()) continue;
        seeds.push_back(std::stoull(t));
    }
    if (seeds.empty()) throw mcdiag::ConfigError("--seed-list contains no seeds");
    return seeds;
}

mcdiag::ExperimentConfig load_config(const GlobalOpts& g) {
    if (g.config_path.empty()) throw mcdiag::ConfigError("--config is required");
    mcdiag::ExperimentConfig cfg = mcdiag::load_experiment(g.config_path);
    if (!g.out_dir_override.empty()) cfg.out_dir = g.out_dir_override;
    if (!g.seed_list.empty()) cfg.seeds = parse_seed_list(g.seed_list);
    cfg.validate_files();
    return cfg;
}

std::string csv_with_hash(const std::string& body, const std::string& hash) {
    return "# config_hash=" + hash + "\n" + body;
}

void write_json(const fs::path& path, json j, const std::string& hash) {
    j["config_hash"] = hash;
    mcdiag::write_file_atomic(path, j.dump(2) + "\n");
}

std::vector<std::pair<const mcdiag::DatasetPlan*, mcdiag::ModelFamily>> select_targets(
    const mcdiag::ExperimentConfig& cfg, const std::string& dataset_filter,
    const std::string& family_filter) {
    std::vector<std::pair<const mcdiag::DatasetPlan*, mcdiag::ModelFamily>> targets;
    for (const auto& plan : cfg.datasets) {
        if (!dataset_filter.empty() && plan.name != dataset_filter) continue;
        for (const auto& [family, fp] : plan.families) {
            if (!family_filter.empty() && family_filter != "both" &&
                mcdiag::to_string(family) != family_filter)
                continue;
            targets.emplace_back(&plan, family);
        }
    }
    if (targets.empty())
        throw mcdiag::ConfigError("no (dataset, family) targets match the given filters");
    return targets;
}

std::string stem(const mcdiag::DatasetPlan& plan, mcdiag::ModelFamily family) {
    return plan.name + "_" + mcdiag::to_string(family);
}

int cmd_clean(const GlobalOpts& g, const std::string& dataset_filter,
              const std::string& family_filter) {
    mcdiag::ExperimentConfig cfg = load_config(g);
    fs::create_directories(cfg.out_dir);
    for (const auto& [plan, family] : select_targets(cfg, dataset_filter, family_filter)) {
        if (g.verbose)
            std::cerr << "cleaning " << plan->name << " (" << mcdiag::to_string(family) << ")\n";
        mcdiag::CleanOutput out = mcdiag::run_clean(cfg, *plan, family, cfg.seeds.front());
        const std::string base = stem(*plan, family);
        mcdiag::write_file_atomic(
            cfg.out_dir / (base + "_easy.csv"),
            csv_with_hash(out.report.final_dataset.to_csv(), cfg.config_hash));
        mcdiag::write_file_atomic(cfg.out_dir / (base + "_cleaning.csv"),
                                  csv_with_hash(out.report.to_csv(), cfg.config_hash));
        json rounds = json::array();
        for (const auto& r : out.report.rounds)
            rounds.push_back({{"round", r.round},
                              {"size_before", r.size_before},
                              {"size_after", r.size_after},
                              {"acc_c1", r.acc_c1},
                              {"acc_c2", r.acc_c2}});
        write_json(cfg.out_dir / (base + "_cleaning.json"),
                   {{"dataset", plan->name},
                    {"family", mcdiag::to_string(family)},
                    {"rounds", rounds},
                    {"converged", out.report.converged},
                    {"rows_in", rounds.empty() ? 0 : rounds.front().at("size_before").get<std::size_t>()},
                    {"rows_retained", out.report.final_dataset.rows()},
                    {"scaler", out.scaler.to_json()},
                    {"seed", cfg.seeds.front()}},
                   cfg.config_hash);
        std::cout << base << ": retained " << out.report.final_dataset.rows() << " rows in "
                  << out.report.rounds.size() << " round(s)"
                  << (out.report.converged ? "" : " [max rounds reached]") << "\n";
    }
    return 0;
}

int cmd_genlabels(const GlobalOpts& g, const std::string& dataset_filter,
                  const std::string& family_filter) {
    mcdiag::ExperimentConfig cfg = load_config(g);
    fs::create_directories(cfg.out_dir);
    for (const auto& [plan, family] : select_targets(cfg, dataset_filter, family_filter)) {
        const std::string base = stem(*plan, family);
        const fs::path easy_path = cfg.out_dir / (base + "_easy.csv");
        if (!fs::exists(easy_path))
            throw mcdiag::ConfigError("easy set not found (run `clean` first): " +
                                      easy_path.string());
        mcdiag::Dataset easy = mcdiag::load_csv(easy_path, "label").data;
        if (g.verbose)
            std::cerr << "generating labels for " << base << " over " << easy.rows()
                      << " rows\n";
        try {
            mcdiag::GenLabelsOutput out =
                mcdiag::run_genlabels(cfg, *plan, family, easy, cfg.seeds.front());
            mcdiag::write_file_atomic(cfg.out_dir / (base + "_profiles.csv"),
                                      csv_with_hash(out.pool.to_csv(), cfg.config_hash));
            mcdiag::write_file_atomic(cfg.out_dir / (base + "_curve.csv"),
                                      csv_with_hash(mcdiag::curve_to_csv(out.curve),
                                                    cfg.config_hash));
            json prov = json::array();
            for (const auto& p : out.pool.provenance) prov.push_back(p.to_json());
            const auto counts = out.pool.class_counts();
            write_json(cfg.out_dir / (base + "_provenance.json"),
                       {{"dataset", plan->name},
                        {"family", mcdiag::to_string(family)},
                        {"counts",
                         {{"GoodPrediction", counts[0]},
                          {"WeakModel", counts[1]},
                          {"DataMixedUp", counts[2]}}},
                        {"dropped_variance_fraction", out.dropped_variance_fraction},
                        {"warnings", out.warnings},
                        {"profiles", prov}},
                       cfg.config_hash);
            write_json(cfg.out_dir / (base + "_weak_model.json"),
                       out.weak_artifact->to_json(), cfg.config_hash);
            write_json(cfg.out_dir / (base + "_cut_model.json"), out.cut_artifact->to_json(),
                       cfg.config_hash);
            for (const auto& w : out.warnings) std::cerr << "warning: " << base << ": " << w << "\n";
            std::cout << base << ": " << out.pool.size() << " profiles (Good " << counts[0]
                      << ", WeakModel " << counts[1] << ", DataMixedUp " << counts[2] << ")\n";
        } catch (const mcdiag::GuardError& e) {
            mcdiag::write_file_atomic(cfg.out_dir / (base + "_curve.csv"),
                                      csv_with_hash(mcdiag::curve_to_csv(e.curve()),
                                                    cfg.config_hash));
            write_json(cfg.out_dir / (base + "_guard_refusal.json"),
                       {{"dataset", plan->name},
                        {"family", mcdiag::to_string(family)},
                        {"error", e.what()},
                        {"gap", e.result().gap},
                        {"train_drop", e.result().train_drop},
                        {"curve_csv", (base + "_curve.csv")}},
                       cfg.config_hash);
            throw;
        }
    }
    return 0;
}

mcdiag::LabeledPool load_pool_csv(const fs::path& path) {
    std::ifstream in(path);
    if (!in) throw mcdiag::ConfigError("cannot open pool file: " + path.string());
    return mcdiag::LabeledPool::from_csv(in);
}

std::vector<mcdiag::KeyedPool> load_all_pools(const mcdiag::ExperimentConfig& cfg) {
    std::vector<mcdiag::KeyedPool> pools;
    for (const auto& plan : cfg.datasets) {
        for (const auto& [family, fp] : plan.families) {
            const fs::path path = cfg.out_dir / (stem(plan, family) + "_profiles.csv");
            if (!fs::exists(path))
                throw mcdiag::ConfigError("pool not found (run `genlabels` first): " +
                                          path.string());
            pools.push_back({plan.name, family, load_pool_csv(path)});
        }
    }
    return pools;
}

void write_trainmeta_outputs(const mcdiag::ExperimentConfig& cfg, const std::string& name,
                             const mcdiag::RunOutput& out) {
    const mcdiag::MetaTree& tree = out.runs.front().tree;
    write_json(cfg.out_dir / ("trainmeta_" + name + "_tree.json"), tree.to_json(),
               cfg.config_hash);

    std::ostringstream rules_txt;
    for (const auto& rule : mcdiag::extract_rules(tree, 5))
        rules_txt << rule.format() << "   [support " << rule.support << ", confidence "
                  << mcdiag::format_double(rule.confidence) << "]\n";
    mcdiag::write_file_atomic(cfg.out_dir / ("trainmeta_" + name + "_rules.txt"),
                              rules_txt.str());

    const auto importance = mcdiag::feature_importance(tree);
    std::ostringstream imp_csv;
    imp_csv << "feature,importance\n";
    for (std::size_t f = 0; f < importance.size(); ++f)
        imp_csv << mcdiag::ProfileVector::feature_names()[f] << ','
                << mcdiag::format_double(importance[f]) << '\n';
    mcdiag::write_file_atomic(cfg.out_dir / ("trainmeta_" + name + "_importance.csv"),
                              csv_with_hash(imp_csv.str(), cfg.config_hash));

    json runs = json::array();
    for (const auto& run : out.runs)
        runs.push_back({{"description", run.description}, {"report", run.report.to_json()}});
    write_json(cfg.out_dir / ("trainmeta_" + name + "_eval.json"),
               {{"configuration", name}, {"summary", out.summary.to_json()}, {"runs", runs}},
               cfg.config_hash);

    std::ostringstream eval_csv;
    eval_csv << "metric,GoodPrediction,WeakModel,DataMixedUp\n";
    auto row = [&](const std::string& metric, const std::array<double, 3>& v) {
        eval_csv << metric;
        for (double x : v) eval_csv << ',' << mcdiag::format_double(x);
        eval_csv << '\n';
    };
    row("precision_mean", out.summary.precision_mean);
    row("precision_std", out.summary.precision_std);
    row("recall_mean", out.summary.recall_mean);
    row("recall_std", out.summary.recall_std);
    eval_csv << "accuracy_mean," << mcdiag::format_double(out.summary.accuracy_mean) << ",,\n";
    mcdiag::write_file_atomic(cfg.out_dir / ("trainmeta_" + name + "_eval.csv"),
                              csv_with_hash(eval_csv.str(), cfg.config_hash));
}

int cmd_trainmeta(const GlobalOpts& g, const std::string& configuration,
                  const std::string& holdout) {
    mcdiag::ExperimentConfig cfg = load_config(g);
    fs::create_directories(cfg.out_dir);
    std::vector<mcdiag::KeyedPool> pools = load_all_pools(cfg);

    mcdiag::RunSpec spec;
    spec.kind = mcdiag::configuration_from_string(configuration);
    spec.seeds = cfg.seeds;
    spec.tree = cfg.tree;
    if (spec.kind == mcdiag::MetaConfigurationKind::CrossDatasetSmall) {
        if (holdout.empty())
            throw mcdiag::ConfigError("cross_dataset_small requires --holdout DATASET");
        spec.test_datasets = {holdout};
    }
    mcdiag::RunOutput out = mcdiag::run_configuration(pools, spec);
    write_trainmeta_outputs(cfg, configuration, out);

    std::cout << configuration << ": accuracy " << mcdiag::format_double(out.summary.accuracy_mean)
              << " +/- " << mcdiag::format_double(out.summary.accuracy_std) << " over "
              << out.summary.n_reports << " run(s)\n";
    for (std::size_t c = 0; c < 3; ++c) {
        const auto label = static_cast<mcdiag::DiagnosisLabel>(c);
        std::cout << "  " << mcdiag::to_string(label) << ": precision "
                  << mcdiag::format_double(out.summary.precision_mean[c]) << " +/- "
                  << mcdiag::format_double(out.summary.precision_std[c]) << ", recall "
                  << mcdiag::format_double(out.summary.recall_mean[c]) << " +/- "
                  << mcdiag::format_double(out.summary.recall_std[c]) << "\n";
    }
    return 0;
}

int cmd_diagnose(const GlobalOpts& g, const std::string& tree_path, const std::string& model_path,
                 const std::string& data_path, const std::string& label_column,
                 const std::string& rows_arg, const std::string& out_path, double k_fraction,
                 int k_min) {
    std::ifstream tree_in(tree_path);
    if (!tree_in) throw mcdiag::ConfigError("cannot open tree file: " + tree_path);
    mcdiag::MetaTree tree = mcdiag::MetaTree::from_json(json::parse(tree_in));

    std::ifstream model_in(model_path);
    if (!model_in) throw mcdiag::ConfigError("cannot open model file: " + model_path);
    mcdiag::ModelArtifact artifact = mcdiag::ModelArtifact::from_json(json::parse(model_in));

    mcdiag::Dataset data = mcdiag::load_csv(data_path, label_column).data;
    if (artifact.model.train_fingerprint() != artifact.preprocess(data).fingerprint() &&
        g.verbose)
        std::cerr << "note: dataset fingerprint differs from the model's training set\n";

    std::vector<mcdiag::RowId> ids;
    if (!rows_arg.empty())
        for (const auto& part : mcdiag::split(rows_arg, ','))
            if (!mcdiag::trim(part).empty()) ids.push_back(std::stoll(mcdiag::trim(part)));

    auto entries = mcdiag::diagnose_rows(tree, artifact, data, ids, k_fraction, k_min);
    json report = json::array();
    for (const auto& e : entries) report.push_back(e.to_json());
    const std::string text = json({{"queries", report}}).dump(2) + "\n";
    if (!out_path.empty()) mcdiag::write_file_atomic(out_path, text);
    std::cout << text;
    return 0;
}

int cmd_ablate(const GlobalOpts& g) {
    mcdiag::ExperimentConfig cfg = load_config(g);
    fs::create_directories(cfg.out_dir);
    std::vector<mcdiag::KeyedPool> pools = load_all_pools(cfg);
    mcdiag::LabeledPool all;
    for (const auto& kp : pools) all.append(kp.pool);
    auto steps = mcdiag::ablation(all, cfg.seeds, cfg.tree);
    mcdiag::write_file_atomic(cfg.out_dir / "ablation.csv",
                              csv_with_hash(mcdiag::ablation_to_csv(steps), cfg.config_hash));
    std::cout << "ablation: " << steps.size() << " steps written to "
              << (cfg.out_dir / "ablation.csv").string() << "\n";
    return 0;
}

int fail(const GlobalOpts& g, const std::exception& e, int code) {
    json err = {{"error", e.what()}, {"exit_code", code}};
    std::cerr << err.dump() << "\n";
    if (!g.out_dir_override.empty()) {
        try {
            mcdiag::write_file_atomic(fs::path(g.out_dir_override) / "error.json",
                                      err.dump(2) + "\n");
        } catch (...) {
        }
    }
    return code;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"diagnose misclassified points of an underfitted binary classifier"};
    app.require_subcommand(1);

    GlobalOpts g;
    app.add_option("--config", g.config_path, "experiment config (TOML)");
    app.add_option("--out", g.out_dir_override, "output directory override");
    app.add_option("--seed-list", g.seed_list, "comma-separated seeds override");
    app.add_flag("--verbose", g.verbose, "chatty progress on stderr");

    std::string dataset_filter;
    std::string family_filter;
    auto* clean = app.add_subcommand("clean", "cross-training cleanup -> easy sets");
    clean->add_option("--dataset", dataset_filter, "restrict to one dataset");
    clean->add_option("--family", family_filter, "gbt, mlp or both");

    auto* genlabels = app.add_subcommand("genlabels", "generate diagnosis-labeled profiles");
    genlabels->add_option("--dataset", dataset_filter, "restrict to one dataset");
    genlabels->add_option("--family", family_filter, "gbt, mlp or both");

    std::string configuration;
    std::string holdout;
    auto* trainmeta = app.add_subcommand("trainmeta", "train + evaluate the meta-classifier");
    trainmeta->add_option("--configuration", configuration,
                          "cross_dataset_small | cross_dataset_random | cross_family | "
                          "pooled_split")
        ->required();
    trainmeta->add_option("--holdout", holdout, "held-out dataset for cross_dataset_small");

    std::string tree_path, model_path, data_path, rows_arg, out_path;
    std::string label_column = "label";
    double k_fraction = 0.05;
    int k_min = 5;
    auto* diagnose = app.add_subcommand("diagnose", "diagnose query points");
    diagnose->add_option("--tree", tree_path, "meta-tree JSON")->required();
    diagnose->add_option("--model", model_path, "investigated model JSON")->required();
    diagnose->add_option("--data", data_path, "dataset CSV the model was trained on")->required();
    diagnose->add_option("--label-column", label_column, "label column name");
    diagnose->add_option("--rows", rows_arg, "comma-separated query row_ids");
    diagnose->add_option("--report", out_path, "write the JSON report here");
    diagnose->add_option("--k-fraction", k_fraction, "neighborhood size fraction");
    diagnose->add_option("--k-min", k_min, "neighborhood size floor");

    auto* ablate = app.add_subcommand("ablate", "feature-muting ablation");
    (void)ablate;

    CLI11_PARSE(app, argc, argv);

    try {
        if (clean->parsed()) return cmd_clean(g, dataset_filter, family_filter);
        if (genlabels->parsed()) return cmd_genlabels(g, dataset_filter, family_filter);
        if (trainmeta->parsed()) return cmd_trainmeta(g, configuration, holdout);
        if (diagnose->parsed())
            return cmd_diagnose(g, tree_path, model_path, data_path, label_column, rows_arg,
                                out_path, k_fraction, k_min);
        if (ablate->parsed()) return cmd_ablate(g);
    } catch (const mcdiag::ConfigError& e) {
        return fail(g, e, 2);
    } catch (const mcdiag::GuardError& e) {
        return fail(g, e, 3);
    } catch (const std::exception& e) {
        return fail(g, e, 4);
    }
    return 0;
}
