#pragma once

#include <filesystem>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "json.hpp"

#include "mcdiag/configurations.hpp"
#include "mcdiag/experiment.hpp"
#include "mcdiag/label_gen.hpp"
#include "mcdiag/synthetic.hpp"

namespace mcdiag {

struct CleanOutput {
    CleaningReport report;
    Scaler scaler; // fitted on the raw dataset before cleaning
};

/// clean stage for one (dataset, family): load, standardize, cross-clean
/// with the family's strong config.
inline CleanOutput run_clean(const ExperimentConfig& cfg, const DatasetPlan& plan,
                             ModelFamily family, std::uint64_t seed) {
    auto it = plan.families.find(family);
    if (it == plan.families.end())
        throw ConfigError("dataset '" + plan.name + "' has no plan for family " +
                          to_string(family));
    CsvLoadResult loaded = load_csv(plan.csv, plan.label_column);
    auto [standardized, scaler] = standardize(loaded.data);
    CleanParams params{cfg.acc_threshold, cfg.max_rounds, cfg.min_rows, seed};
    CleaningReport report = clean_dataset(standardized, it->second.clean_cfg, params);
    return {std::move(report), std::move(scaler)};
}

struct GenLabelsOutput {
    LabeledPool pool; // weak + cut contributions for one (dataset, family)
    std::vector<CurvePoint> curve;
    std::vector<std::string> warnings;
    std::optional<ModelArtifact> weak_artifact;
    std::optional<ModelArtifact> cut_artifact;
    double dropped_variance_fraction = 0.0;
};

/// genlabels stage: weak run + cut run over a cleaned (easy) set.
inline GenLabelsOutput run_genlabels(const ExperimentConfig& cfg, const DatasetPlan& plan,
                                     ModelFamily family, const Dataset& easy,
                                     std::uint64_t seed) {
    auto it = plan.families.find(family);
    if (it == plan.families.end())
        throw ConfigError("dataset '" + plan.name + "' has no plan for family " +
                          to_string(family));
    const FamilyPlan& fam = it->second;

    GenLabelsOutput out;
    LabelGenParams weak_params{cfg.k_fraction, cfg.k_min, seed};
    WeakGenResult weak = gen_weak_labels(easy, plan.name, fam.base_cfg, fam.weak_cfg, weak_params);
    out.warnings = weak.warnings;
    out.weak_artifact = std::move(weak.weak_artifact);

    MixedGenParams mixed_params{cfg.k_fraction, cfg.k_min, seed, cfg.gap_max, cfg.drop_min};
    MixedGenResult mixed =
        gen_mixed_labels(easy, plan.name, fam.cut_model(), fam.n_drop, mixed_params);
    out.curve = std::move(mixed.curve);
    out.cut_artifact = std::move(mixed.cut_artifact);
    out.dropped_variance_fraction = mixed.dropped_variance_fraction;

    out.pool.append(weak.pool);
    out.pool.append(mixed.pool);
    return out;
}

/// Convenience for tests and trainmeta: build pools for every (dataset,
/// family) pair in the config. Requires the easy sets, keyed like the pools.
struct EasySet {
    std::string dataset;
    ModelFamily family = ModelFamily::Gbt;
    Dataset easy;
};

inline std::vector<KeyedPool> build_all_pools(const ExperimentConfig& cfg,
                                              const std::vector<EasySet>& easy_sets,
                                              std::uint64_t seed) {
    std::vector<KeyedPool> pools;
    for (const auto& es : easy_sets) {
        const DatasetPlan& plan = cfg.dataset(es.dataset);
        GenLabelsOutput out = run_genlabels(cfg, plan, es.family, es.easy, seed);
        pools.push_back({es.dataset, es.family, std::move(out.pool)});
    }
    return pools;
}

// ---- diagnosis of new queries ----

struct DiagnosisEntry {
    RowId row_id = 0;
    int true_label = 0;
    int predicted_label = 0;
    double prob_class0 = 0.0;
    DiagnosisLabel diagnosis = DiagnosisLabel::GoodPrediction;
    std::string fired_rule;
    ProfileVector profile;

    nlohmann::json to_json() const {
        return {{"row_id", row_id},
                {"true_label", true_label},
                {"predicted_label", predicted_label},
                {"prob_class0", prob_class0},
                {"diagnosis", to_string(diagnosis)},
                {"fired_rule", fired_rule},
                {"profile", profile_to_json(profile)}};
    }
};

/// Diagnoses query rows of a raw dataset against an investigated model: the
/// artifact's preprocessing maps raw rows into the model's space, profiles
/// are extracted there and routed through the meta-tree.
inline std::vector<DiagnosisEntry> diagnose_rows(const MetaTree& tree,
                                                 const ModelArtifact& artifact,
                                                 const Dataset& raw_train,
                                                 const std::vector<RowId>& query_ids,
                                                 double k_fraction = 0.05, int k_min = 5) {
    std::vector<DiagnosisEntry> out;
    if (query_ids.empty()) return out;

    Dataset train = artifact.preprocess(raw_train);
    const int k = KnnIndex::default_k(train.rows(), k_fraction, k_min);
    ProfileExtractor extractor(train, artifact.model, k);

    auto rules = extract_rules(tree, 1);
    std::map<std::size_t, const DecisionRule*> by_leaf;
    for (const auto& r : rules) by_leaf[r.leaf] = &r;

    for (RowId id : query_ids) {
        auto row = raw_train.find_row(id);
        if (!row) throw DataError("query row_id not found in dataset: " + std::to_string(id));
        std::vector<double> x = artifact.preprocess_row(raw_train.row(*row));
        DiagnosisEntry e;
        e.row_id = id;
        e.true_label = raw_train.label(*row);
        e.prob_class0 = artifact.model.predict_proba(x);
        e.predicted_label = artifact.model.predict_label(x);
        e.profile = extractor.extract(x, e.true_label, id);
        e.diagnosis = tree.predict(e.profile);
        const std::size_t leaf = tree.route(e.profile.as_array());
        if (auto it = by_leaf.find(leaf); it != by_leaf.end()) e.fired_rule = it->second->format();
        out.push_back(std::move(e));
    }
    return out;
}

// ---- desk-scale inputs (surrogate CSVs + default experiment config) ----

inline std::string default_experiment_toml() {
    return R"(# Desk-scale experiment: three benchmark-shaped surrogate sets plus two
# synthetic generators, both model families. Capacity choices per dataset.

[experiment]
out_dir = "out"
seeds = [1, 2, 3, 4, 5]
k_fraction = 0.05
k_min = 5
acc_threshold = 0.999
max_rounds = 5
min_rows = 50
gap_max = 0.05
drop_min = 0.02
meta_max_depth = 18
meta_min_leaf = 5
datasets = ["banknote", "diabetes", "water", "moons", "rings"]

[banknote]
csv = "../data/banknote.csv"
label_column = "label"

[banknote.gbt]
clean_trees = 200
clean_depth = 6
base_trees = 50
base_depth = 3
weak_trees = 10
weak_depth = 2
n_drop = 2

[banknote.mlp]
clean_hidden = 64
clean_iters = 1500
base_hidden = 40
base_iters = 1000
weak_hidden = 5
weak_iters = 60
n_drop = 2

[diabetes]
csv = "../data/diabetes.csv"
label_column = "label"

[diabetes.gbt]
clean_trees = 200
clean_depth = 6
base_trees = 25
base_depth = 3
weak_trees = 10
weak_depth = 1
n_drop = 3

[diabetes.mlp]
clean_hidden = 64
clean_iters = 1200
base_hidden = 50
base_iters = 200
weak_hidden = 5
weak_iters = 100
n_drop = 3

[water]
csv = "../data/water_potability.csv"
label_column = "label"

[water.gbt]
clean_trees = 200
clean_depth = 6
base_trees = 20
base_depth = 4
weak_trees = 10
weak_depth = 1
n_drop = 5

[water.mlp]
clean_hidden = 64
clean_iters = 1000
base_hidden = 50
base_iters = 1000
weak_hidden = 10
weak_iters = 50
n_drop = 5

[moons]
csv = "../data/moons.csv"
label_column = "label"

[moons.gbt]
clean_trees = 200
clean_depth = 6
base_trees = 50
base_depth = 3
weak_trees = 4
weak_depth = 1
cut_trees = 12
cut_depth = 2
n_drop = 1

[moons.mlp]
clean_hidden = 64
clean_iters = 2000
base_hidden = 32
base_iters = 1500
weak_hidden = 1
weak_iters = 100
cut_hidden = 8
cut_iters = 400
n_drop = 1

[rings]
csv = "../data/rings.csv"
label_column = "label"

[rings.gbt]
clean_trees = 200
clean_depth = 6
base_trees = 60
base_depth = 4
weak_trees = 5
weak_depth = 2
cut_trees = 12
cut_depth = 2
n_drop = 1

[rings.mlp]
clean_hidden = 64
clean_iters = 2500
base_hidden = 32
base_iters = 2000
weak_hidden = 2
weak_iters = 150
cut_hidden = 8
cut_iters = 400
n_drop = 1
)";
}

/// Writes data/*.csv and configs/experiment.toml under root. The CSVs are
/// deterministic surrogates shaped like the three benchmark sets plus the
/// two synthetic generators.
inline void write_desk_inputs(const std::filesystem::path& root) {
    namespace fs = std::filesystem;
    fs::create_directories(root / "data");
    fs::create_directories(root / "configs");
    write_file_atomic(root / "data" / "banknote.csv", make_banknote_like().to_csv());
    write_file_atomic(root / "data" / "diabetes.csv", make_diabetes_like().to_csv());
    write_file_atomic(root / "data" / "water_potability.csv", make_water_like().to_csv());
    write_file_atomic(root / "data" / "moons.csv", make_moons(1600, 0.18, 20240804).to_csv());
    write_file_atomic(root / "data" / "rings.csv",
                      make_rings(2000, 0.35, 20240805).data.to_csv());
    write_file_atomic(root / "configs" / "experiment.toml", default_experiment_toml());
}

} // namespace mcdiag
