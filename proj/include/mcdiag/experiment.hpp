#pragma once

#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "mcdiag/common.hpp"
#include "mcdiag/meta_tree.hpp"
#include "mcdiag/model.hpp"
#include "mcdiag/toml_lite.hpp"

namespace mcdiag {

/// Per-(dataset, family) capacity plan: the strong cleaning model, the base
/// model whose capacity anchors weakening, the weak model, and the cut-run
/// model (base unless overridden) with its component-drop count.
struct FamilyPlan {
    ModelConfig clean_cfg;
    ModelConfig base_cfg;
    ModelConfig weak_cfg;
    std::optional<ModelConfig> cut_cfg;
    std::size_t n_drop = 1;

    const ModelConfig& cut_model() const { return cut_cfg ? *cut_cfg : base_cfg; }
};

struct DatasetPlan {
    std::string name;
    std::filesystem::path csv;
    std::string label_column = "label";
    std::map<ModelFamily, FamilyPlan> families;
};

struct ExperimentConfig {
    std::filesystem::path out_dir = "out";
    std::vector<std::uint64_t> seeds = {1, 2, 3, 4, 5};
    double k_fraction = 0.05;
    int k_min = 5;
    double acc_threshold = 0.999;
    int max_rounds = 5;
    std::size_t min_rows = 50;
    double gap_max = 0.05;
    double drop_min = 0.02;
    MetaTreeConfig tree;
    std::vector<DatasetPlan> datasets;
    std::string config_hash;

    const DatasetPlan& dataset(const std::string& name) const {
        for (const auto& d : datasets)
            if (d.name == name) return d;
        throw ConfigError("dataset not found in config: " + name);
    }

    void validate_files() const {
        if (seeds.empty()) throw ConfigError("config must list at least one seed");
        for (const auto& d : datasets)
            if (!std::filesystem::exists(d.csv))
                throw ConfigError("dataset file does not exist: " + d.csv.string() +
                                  " (dataset '" + d.name + "')");
    }
};

namespace detail {

inline GbtConfig gbt_from_table(const toml::Table& t, const std::string& prefix,
                                const GbtConfig& fallback) {
    GbtConfig c;
    c.n_trees = t.get_or<int>(prefix + "_trees", fallback.n_trees);
    c.max_depth = t.get_or<int>(prefix + "_depth", fallback.max_depth);
    c.learning_rate = t.get_or<double>(prefix + "_lr", fallback.learning_rate);
    c.seed = t.get_or<std::uint64_t>(prefix + "_seed", fallback.seed);
    c.validate();
    return c;
}

inline MlpConfig mlp_from_table(const toml::Table& t, const std::string& prefix,
                                const MlpConfig& fallback) {
    MlpConfig c;
    c.hidden_size = t.get_or<int>(prefix + "_hidden", fallback.hidden_size);
    c.n_iterations = t.get_or<int>(prefix + "_iters", fallback.n_iterations);
    c.learning_rate = t.get_or<double>(prefix + "_lr", fallback.learning_rate);
    c.seed = t.get_or<std::uint64_t>(prefix + "_seed", fallback.seed);
    c.validate();
    return c;
}

inline FamilyPlan family_plan_from_table(const toml::Table& t, ModelFamily family) {
    FamilyPlan plan;
    if (family == ModelFamily::Gbt) {
        GbtConfig defaults;
        plan.clean_cfg = gbt_from_table(t, "clean", GbtConfig{200, 6, 0.3, 0});
        plan.base_cfg = gbt_from_table(t, "base", defaults);
        plan.weak_cfg = gbt_from_table(t, "weak", GbtConfig{10, 1, 0.3, 0});
        if (t.contains("cut_trees") || t.contains("cut_depth") || t.contains("cut_lr"))
            plan.cut_cfg = gbt_from_table(t, "cut", std::get<GbtConfig>(plan.base_cfg));
    } else {
        MlpConfig defaults;
        plan.clean_cfg = mlp_from_table(t, "clean", MlpConfig{64, 1500, 0.5, 0});
        plan.base_cfg = mlp_from_table(t, "base", defaults);
        plan.weak_cfg = mlp_from_table(t, "weak", MlpConfig{2, 100, 0.5, 0});
        if (t.contains("cut_hidden") || t.contains("cut_iters") || t.contains("cut_lr"))
            plan.cut_cfg = mlp_from_table(t, "cut", std::get<MlpConfig>(plan.base_cfg));
    }
    plan.n_drop = t.get<std::size_t>("n_drop");
    return plan;
}

inline std::string file_contents(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw ConfigError("cannot open file: " + path.string());
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

} // namespace detail

/// Loads an experiment description. Relative dataset paths are resolved
/// against the config file's directory.
inline ExperimentConfig load_experiment(const std::filesystem::path& path) {
    const std::string raw = detail::file_contents(path);
    std::istringstream in(raw);
    toml::Document doc = toml::parse(in);

    ExperimentConfig cfg;
    cfg.config_hash = hash_hex(fnv1a(raw));
    const std::filesystem::path base_dir =
        path.has_parent_path() ? path.parent_path() : std::filesystem::path(".");
    const toml::Table& exp = doc.table("experiment");
    std::filesystem::path out_dir = exp.get_or<std::string>("out_dir", "out");
    cfg.out_dir = out_dir.is_absolute() ? out_dir : base_dir / out_dir;
    cfg.seeds = exp.get_or<std::vector<std::uint64_t>>("seeds", {1, 2, 3, 4, 5});
    cfg.k_fraction = exp.get_or<double>("k_fraction", 0.05);
    cfg.k_min = exp.get_or<int>("k_min", 5);
    cfg.acc_threshold = exp.get_or<double>("acc_threshold", 0.999);
    cfg.max_rounds = exp.get_or<int>("max_rounds", 5);
    cfg.min_rows = exp.get_or<std::size_t>("min_rows", 50);
    cfg.gap_max = exp.get_or<double>("gap_max", 0.05);
    cfg.drop_min = exp.get_or<double>("drop_min", 0.02);
    cfg.tree.max_depth = exp.get_or<int>("meta_max_depth", 18);
    cfg.tree.min_leaf = exp.get_or<int>("meta_min_leaf", 5);
    cfg.tree.validate();

    const auto dataset_names = exp.get<std::vector<std::string>>("datasets");
    for (const auto& name : dataset_names) {
        DatasetPlan plan;
        plan.name = name;
        const toml::Table& dt = doc.table(name);
        std::filesystem::path csv = dt.get<std::string>("csv");
        plan.csv = csv.is_absolute() ? csv : base_dir / csv;
        plan.label_column = dt.get_or<std::string>("label_column", "label");
        if (doc.has_table(name + ".gbt"))
            plan.families[ModelFamily::Gbt] =
                detail::family_plan_from_table(doc.table(name + ".gbt"), ModelFamily::Gbt);
        if (doc.has_table(name + ".mlp"))
            plan.families[ModelFamily::Mlp] =
                detail::family_plan_from_table(doc.table(name + ".mlp"), ModelFamily::Mlp);
        if (plan.families.empty())
            throw ConfigError("dataset '" + name + "' has no [" + name + ".gbt] or [" + name +
                              ".mlp] section");
        cfg.datasets.push_back(std::move(plan));
    }
    if (cfg.datasets.empty()) throw ConfigError("config lists no datasets");
    return cfg;
}

} // namespace mcdiag
