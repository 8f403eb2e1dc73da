#pragma once

#include <algorithm>
#include <random>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "mcdiag/label_gen.hpp"
#include "mcdiag/meta_tree.hpp"

namespace mcdiag {

struct KeyedPool {
    std::string dataset;
    ModelFamily family = ModelFamily::Gbt;
    LabeledPool pool;
};

enum class MetaConfigurationKind {
    CrossDatasetSmall,  // train on all datasets except the named holdouts
    CrossDatasetRandom, // per seed: train on a random subset of datasets
    CrossFamily,        // train on one family's vectors, test on the other, both ways
    PooledSplit         // union of everything, random train/test split
};

inline MetaConfigurationKind configuration_from_string(const std::string& s) {
    if (s == "cross_dataset_small") return MetaConfigurationKind::CrossDatasetSmall;
    if (s == "cross_dataset_random") return MetaConfigurationKind::CrossDatasetRandom;
    if (s == "cross_family") return MetaConfigurationKind::CrossFamily;
    if (s == "pooled_split") return MetaConfigurationKind::PooledSplit;
    throw ConfigError("unknown configuration name: " + s +
                      " (expected cross_dataset_small, cross_dataset_random, cross_family or "
                      "pooled_split)");
}

inline std::string to_string(MetaConfigurationKind k) {
    switch (k) {
        case MetaConfigurationKind::CrossDatasetSmall: return "cross_dataset_small";
        case MetaConfigurationKind::CrossDatasetRandom: return "cross_dataset_random";
        case MetaConfigurationKind::CrossFamily: return "cross_family";
        case MetaConfigurationKind::PooledSplit: return "pooled_split";
    }
    return "?";
}

struct RunSpec {
    MetaConfigurationKind kind = MetaConfigurationKind::PooledSplit;
    std::vector<std::uint64_t> seeds = {1};
    MetaTreeConfig tree;
    std::vector<std::string> test_datasets; // CrossDatasetSmall holdouts
    std::size_t n_train_datasets = 4;       // CrossDatasetRandom
    double test_fraction = 0.25;            // PooledSplit
};

struct ConfiguredRun {
    std::string description;
    EvalReport report;
    MetaTree tree;
};

struct RunOutput {
    std::vector<ConfiguredRun> runs;
    EvalSummary summary;
};

namespace detail {

inline LabeledPool merge_pools(const std::vector<const LabeledPool*>& parts) {
    LabeledPool out;
    for (const auto* p : parts) out.append(*p);
    return out;
}

inline ConfiguredRun train_and_eval(const LabeledPool& train, const LabeledPool& test,
                                    const MetaTreeConfig& tree_cfg, std::uint64_t seed,
                                    std::string description) {
    LabeledPool balanced = rebalance(train, seed);
    MetaTreeConfig cfg = tree_cfg;
    cfg.seed = seed;
    MetaTree tree = MetaTree::train(balanced, cfg);
    EvalReport report = evaluate(tree, test);
    return {std::move(description), std::move(report), std::move(tree)};
}

} // namespace detail

/// Assembles train/test pools for one named configuration and runs
/// rebalance -> train -> evaluate per seed.
inline RunOutput run_configuration(const std::vector<KeyedPool>& pools, const RunSpec& spec) {
    if (pools.empty()) throw ConfigError("run_configuration: no pools supplied");

    std::set<std::string> dataset_names;
    std::set<ModelFamily> families;
    for (const auto& kp : pools) {
        dataset_names.insert(kp.dataset);
        families.insert(kp.family);
    }

    RunOutput out;
    std::vector<EvalReport> reports;

    switch (spec.kind) {
        case MetaConfigurationKind::CrossDatasetSmall: {
            if (spec.test_datasets.empty())
                throw ConfigError("cross_dataset_small requires test_datasets");
            std::vector<const LabeledPool*> train_parts;
            std::vector<const LabeledPool*> test_parts;
            for (const auto& kp : pools) {
                const bool held_out = std::find(spec.test_datasets.begin(),
                                                spec.test_datasets.end(),
                                                kp.dataset) != spec.test_datasets.end();
                (held_out ? test_parts : train_parts).push_back(&kp.pool);
            }
            if (train_parts.empty() || test_parts.empty())
                throw ConfigError("cross_dataset_small: partition leaves an empty side");
            LabeledPool train = detail::merge_pools(train_parts);
            LabeledPool test = detail::merge_pools(test_parts);
            for (std::uint64_t seed : spec.seeds) {
                auto run = detail::train_and_eval(train, test, spec.tree, seed,
                                                  "holdout=" + join(spec.test_datasets));
                reports.push_back(run.report);
                out.runs.push_back(std::move(run));
            }
            break;
        }
        case MetaConfigurationKind::CrossDatasetRandom: {
            std::vector<std::string> names(dataset_names.begin(), dataset_names.end());
            if (names.size() < 2)
                throw ConfigError("cross_dataset_random needs at least 2 datasets");
            const std::size_t n_train = std::min(spec.n_train_datasets, names.size() - 1);
            for (std::uint64_t seed : spec.seeds) {
                std::vector<std::string> order = names;
                std::mt19937_64 rng(seed);
                std::shuffle(order.begin(), order.end(), rng);
                std::set<std::string> train_names(order.begin(),
                                                  order.begin() +
                                                      static_cast<std::ptrdiff_t>(n_train));
                std::vector<const LabeledPool*> train_parts;
                std::vector<const LabeledPool*> test_parts;
                for (const auto& kp : pools)
                    (train_names.count(kp.dataset) > 0 ? train_parts : test_parts)
                        .push_back(&kp.pool);
                LabeledPool train = detail::merge_pools(train_parts);
                LabeledPool test = detail::merge_pools(test_parts);
                std::string desc = "train=" +
                                   join(std::vector<std::string>(train_names.begin(),
                                                                 train_names.end()));
                auto run = detail::train_and_eval(train, test, spec.tree, seed, std::move(desc));
                reports.push_back(run.report);
                out.runs.push_back(std::move(run));
            }
            break;
        }
        case MetaConfigurationKind::CrossFamily: {
            if (families.size() < 2)
                throw ConfigError("cross_family requires pools from both model families");
            for (ModelFamily train_family : {ModelFamily::Gbt, ModelFamily::Mlp}) {
                std::vector<const LabeledPool*> train_parts;
                std::vector<const LabeledPool*> test_parts;
                for (const auto& kp : pools)
                    (kp.family == train_family ? train_parts : test_parts).push_back(&kp.pool);
                LabeledPool train = detail::merge_pools(train_parts);
                LabeledPool test = detail::merge_pools(test_parts);
                for (std::uint64_t seed : spec.seeds) {
                    auto run = detail::train_and_eval(
                        train, test, spec.tree, seed,
                        "train_family=" + to_string(train_family));
                    reports.push_back(run.report);
                    out.runs.push_back(std::move(run));
                }
            }
            break;
        }
        case MetaConfigurationKind::PooledSplit: {
            std::vector<const LabeledPool*> parts;
            for (const auto& kp : pools) parts.push_back(&kp.pool);
            LabeledPool all = detail::merge_pools(parts);
            for (std::uint64_t seed : spec.seeds) {
                std::vector<std::size_t> order(all.size());
                std::iota(order.begin(), order.end(), 0);
                std::mt19937_64 rng(seed);
                std::shuffle(order.begin(), order.end(), rng);
                const auto n_test = static_cast<std::size_t>(
                    std::floor(spec.test_fraction * static_cast<double>(all.size())));
                std::vector<std::size_t> test_idx(order.begin(),
                                                  order.begin() +
                                                      static_cast<std::ptrdiff_t>(n_test));
                std::vector<std::size_t> train_idx(
                    order.begin() + static_cast<std::ptrdiff_t>(n_test), order.end());
                std::sort(test_idx.begin(), test_idx.end());
                std::sort(train_idx.begin(), train_idx.end());
                LabeledPool train = all.select(train_idx);
                LabeledPool test = all.select(test_idx);
                auto run = detail::train_and_eval(train, test, spec.tree, seed,
                                                  "pooled 75/25 seed=" + std::to_string(seed));
                reports.push_back(run.report);
                out.runs.push_back(std::move(run));
            }
            break;
        }
    }

    out.summary = summarize(reports);
    return out;
}

struct AblationStep {
    std::size_t n_muted = 0;
    std::size_t n_remaining = ProfileVector::kNumFeatures;
    std::string last_muted; // empty for the full-feature baseline
    EvalSummary summary;
};

/// Mute features (set to constant zero in train and test) in increasing
/// reference-importance order, retraining the meta-tree after each step.
inline std::vector<AblationStep> ablation(const LabeledPool& pool,
                                          const std::vector<std::uint64_t>& seeds,
                                          const MetaTreeConfig& tree_cfg,
                                          double test_fraction = 0.25) {
    if (seeds.empty()) throw ConfigError("ablation: need at least one seed");

    // importance order from a reference tree trained on the full pool
    MetaTreeConfig ref_cfg = tree_cfg;
    ref_cfg.seed = seeds.front();
    MetaTree reference = MetaTree::train(rebalance(pool, seeds.front()), ref_cfg);
    const auto importance = feature_importance(reference);
    std::vector<std::size_t> order(ProfileVector::kNumFeatures);
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
        return importance[a] < importance[b];
    });

    std::vector<AblationStep> steps;
    std::vector<bool> muted(ProfileVector::kNumFeatures, false);
    for (std::size_t step = 0; step <= ProfileVector::kNumFeatures; ++step) {
        std::string last;
        if (step > 0) {
            muted[order[step - 1]] = true;
            last = std::string(ProfileVector::feature_names()[order[step - 1]]);
        }
        LabeledPool muted_pool = pool;
        for (auto& p : muted_pool.profiles)
            for (std::size_t f = 0; f < ProfileVector::kNumFeatures; ++f)
                if (muted[f]) p.set_feature(f, 0.0);

        std::vector<EvalReport> reports;
        for (std::uint64_t seed : seeds) {
            std::vector<std::size_t> idx(muted_pool.size());
            std::iota(idx.begin(), idx.end(), 0);
            std::mt19937_64 rng(seed);
            std::shuffle(idx.begin(), idx.end(), rng);
            const auto n_test = static_cast<std::size_t>(
                std::floor(test_fraction * static_cast<double>(muted_pool.size())));
            std::vector<std::size_t> test_idx(idx.begin(),
                                              idx.begin() + static_cast<std::ptrdiff_t>(n_test));
            std::vector<std::size_t> train_idx(idx.begin() + static_cast<std::ptrdiff_t>(n_test),
                                               idx.end());
            std::sort(test_idx.begin(), test_idx.end());
            std::sort(train_idx.begin(), train_idx.end());
            MetaTreeConfig cfg = tree_cfg;
            cfg.seed = seed;
            MetaTree tree = MetaTree::train(rebalance(muted_pool.select(train_idx), seed), cfg);
            reports.push_back(evaluate(tree, muted_pool.select(test_idx)));
        }
        steps.push_back({step, ProfileVector::kNumFeatures - step, std::move(last),
                         summarize(reports)});
    }
    return steps;
}

inline std::string ablation_to_csv(const std::vector<AblationStep>& steps) {
    std::ostringstream out;
    out << "n_muted,n_remaining,last_muted,accuracy_mean,accuracy_std";
    for (std::size_t c = 0; c < kNumDiagnosisClasses; ++c) {
        const std::string name = to_string(static_cast<DiagnosisLabel>(c));
        out << ",precision_" << name << ",recall_" << name;
    }
    out << '\n';
    for (const auto& s : steps) {
        out << s.n_muted << ',' << s.n_remaining << ',' << s.last_muted << ','
            << format_double(s.summary.accuracy_mean) << ','
            << format_double(s.summary.accuracy_std);
        for (std::size_t c = 0; c < kNumDiagnosisClasses; ++c)
            out << ',' << format_double(s.summary.precision_mean[c]) << ','
                << format_double(s.summary.recall_mean[c]);
        out << '\n';
    }
    return out.str();
}

} // namespace mcdiag
