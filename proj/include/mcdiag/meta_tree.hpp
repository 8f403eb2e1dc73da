#pragma once

#include <algorithm>
#include <array>
#include <cstdio>
#include <map>
#include <numeric>
#include <optional>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "json.hpp"

#include "mcdiag/label_gen.hpp"
#include "mcdiag/meta_features.hpp"

namespace mcdiag {

/// Undersample majority classes to the minority count.
inline LabeledPool rebalance(const LabeledPool& pool, std::uint64_t seed) {
    const auto counts = pool.class_counts();
    for (std::size_t c = 0; c < kNumDiagnosisClasses; ++c)
        if (counts[c] == 0)
            throw DataError("rebalance: class " + to_string(static_cast<DiagnosisLabel>(c)) +
                            " absent");
    const std::size_t target = *std::min_element(counts.begin(), counts.end());

    std::array<std::vector<std::size_t>, kNumDiagnosisClasses> by_class;
    for (std::size_t i = 0; i < pool.size(); ++i)
        by_class[static_cast<std::size_t>(*pool.profiles[i].diagnosis)].push_back(i);

    std::mt19937_64 rng(seed);
    std::vector<std::size_t> chosen;
    for (auto& members : by_class) {
        std::shuffle(members.begin(), members.end(), rng);
        members.resize(target);
        chosen.insert(chosen.end(), members.begin(), members.end());
    }
    std::sort(chosen.begin(), chosen.end());
    return pool.select(chosen);
}

struct MetaTreeConfig {
    int max_depth = 18;
    int min_leaf = 5;
    std::uint64_t seed = 0;

    void validate() const {
        if (max_depth < 1) throw ConfigError("MetaTreeConfig: max_depth must be >= 1");
        if (min_leaf < 1) throw ConfigError("MetaTreeConfig: min_leaf must be >= 1");
    }
};

struct MetaTreeNode {
    int feature = -1; // -1 marks a leaf
    double threshold = 0.0;
    int left = -1;
    int right = -1;
    std::array<std::size_t, kNumDiagnosisClasses> class_counts{};
    DiagnosisLabel leaf_label = DiagnosisLabel::GoodPrediction;

    bool is_leaf() const { return feature < 0; }
};

namespace detail {

inline double gini(const std::array<double, kNumDiagnosisClasses>& counts, double total) {
    if (total <= 0.0) return 0.0;
    double g = 1.0;
    for (double c : counts) {
        const double p = c / total;
        g -= p * p;
    }
    return g;
}

/// Leaf label = argmax of the class distribution; ties go to the
/// lexicographically first label name (DataMixedUp < GoodPrediction <
/// WeakModel).
inline DiagnosisLabel majority_label(const std::array<std::size_t, kNumDiagnosisClasses>& counts) {
    static const std::array<DiagnosisLabel, 3> lexicographic = {
        DiagnosisLabel::DataMixedUp, DiagnosisLabel::GoodPrediction, DiagnosisLabel::WeakModel};
    DiagnosisLabel best = lexicographic[0];
    std::size_t best_count = counts[static_cast<std::size_t>(lexicographic[0])];
    for (std::size_t i = 1; i < lexicographic.size(); ++i) {
        const std::size_t c = counts[static_cast<std::size_t>(lexicographic[i])];
        if (c > best_count) {
            best = lexicographic[i];
            best_count = c;
        }
    }
    return best;
}

} // namespace detail

/// Three-class CART over profile vectors: greedy Gini splits, depth /
/// min-leaf / purity stopping. Values equal to a split threshold route left
/// (the <= branch). Training is deterministic; the seed is recorded
/// metadata.
class MetaTree {
public:
    static MetaTree train(const LabeledPool& pool, const MetaTreeConfig& cfg) {
        cfg.validate();
        if (pool.empty()) throw DataError("cannot train a meta-tree on an empty pool");

        MetaTree t;
        t.cfg_ = cfg;
        std::vector<std::array<double, ProfileVector::kNumFeatures>> rows;
        rows.reserve(pool.size());
        std::vector<int> labels;
        labels.reserve(pool.size());
        for (const auto& p : pool.profiles) {
            if (!p.diagnosis) throw DataError("unlabeled profile in training pool");
            rows.push_back(p.as_array());
            labels.push_back(static_cast<int>(*p.diagnosis));
        }
        std::vector<std::size_t> all(rows.size());
        std::iota(all.begin(), all.end(), 0);
        t.build(rows, labels, all, 0);
        return t;
    }

    DiagnosisLabel predict(const std::array<double, ProfileVector::kNumFeatures>& z) const {
        const MetaTreeNode& leaf = nodes_[route(z)];
        return leaf.leaf_label;
    }

    DiagnosisLabel predict(const ProfileVector& p) const { return predict(p.as_array()); }

    /// Leaf node index reached by a profile.
    std::size_t route(const std::array<double, ProfileVector::kNumFeatures>& z) const {
        std::size_t i = 0;
        while (!nodes_[i].is_leaf()) {
            const auto& n = nodes_[i];
            i = static_cast<std::size_t>(z[static_cast<std::size_t>(n.feature)] <= n.threshold
                                             ? n.left
                                             : n.right);
        }
        return i;
    }

    const std::vector<MetaTreeNode>& nodes() const { return nodes_; }
    int depth() const { return depth_; }
    std::size_t leaf_count() const { return leaf_count_; }
    const MetaTreeConfig& config() const { return cfg_; }

    nlohmann::json to_json() const {
        nlohmann::json node_arr = nlohmann::json::array();
        for (const auto& n : nodes_) {
            nlohmann::json jn = {{"feature", n.feature},
                                 {"threshold", n.threshold},
                                 {"left", n.left},
                                 {"right", n.right},
                                 {"counts", n.class_counts},
                                 {"label", to_string(n.leaf_label)}};
            node_arr.push_back(std::move(jn));
        }
        return {{"format_version", 1},
                {"feature_names", ProfileVector::feature_names()},
                {"max_depth", cfg_.max_depth},
                {"min_leaf", cfg_.min_leaf},
                {"seed", cfg_.seed},
                {"depth", depth_},
                {"leaf_count", leaf_count_},
                {"nodes", node_arr}};
    }

    static MetaTree from_json(const nlohmann::json& j) {
        MetaTree t;
        t.cfg_.max_depth = j.at("max_depth").get<int>();
        t.cfg_.min_leaf = j.at("min_leaf").get<int>();
        t.cfg_.seed = j.at("seed").get<std::uint64_t>();
        t.depth_ = j.at("depth").get<int>();
        t.leaf_count_ = j.at("leaf_count").get<std::size_t>();
        for (const auto& jn : j.at("nodes")) {
            MetaTreeNode n;
            n.feature = jn.at("feature").get<int>();
            n.threshold = jn.at("threshold").get<double>();
            n.left = jn.at("left").get<int>();
            n.right = jn.at("right").get<int>();
            n.class_counts = jn.at("counts").get<std::array<std::size_t, 3>>();
            n.leaf_label = diagnosis_from_string(jn.at("label").get<std::string>());
            t.nodes_.push_back(n);
        }
        return t;
    }

private:
    using Row = std::array<double, ProfileVector::kNumFeatures>;

    void build(const std::vector<Row>& rows, const std::vector<int>& labels,
               const std::vector<std::size_t>& idx, int depth) {
        const auto node_id = nodes_.size();
        nodes_.emplace_back();
        depth_ = std::max(depth_, depth);

        std::array<std::size_t, kNumDiagnosisClasses> counts{};
        for (std::size_t i : idx) ++counts[static_cast<std::size_t>(labels[i])];
        nodes_[node_id].class_counts = counts;
        nodes_[node_id].leaf_label = detail::majority_label(counts);

        const bool pure = std::count(counts.begin(), counts.end(), std::size_t{0}) ==
                          kNumDiagnosisClasses - 1;
        if (depth >= cfg_.max_depth || pure ||
            idx.size() < 2 * static_cast<std::size_t>(cfg_.min_leaf)) {
            ++leaf_count_;
            return;
        }

        const auto split = find_split(rows, labels, idx);
        if (!split.found) {
            ++leaf_count_;
            return;
        }

        std::vector<std::size_t> left;
        std::vector<std::size_t> right;
        for (std::size_t i : idx) {
            if (rows[i][static_cast<std::size_t>(split.feature)] <= split.threshold)
                left.push_back(i);
            else
                right.push_back(i);
        }
        nodes_[node_id].feature = split.feature;
        nodes_[node_id].threshold = split.threshold;
        nodes_[node_id].left = static_cast<int>(nodes_.size());
        build(rows, labels, left, depth + 1);
        nodes_[node_id].right = static_cast<int>(nodes_.size());
        build(rows, labels, right, depth + 1);
    }

    struct Split {
        bool found = false;
        int feature = -1;
        double threshold = 0.0;
        double gain = 0.0;
    };

    Split find_split(const std::vector<Row>& rows, const std::vector<int>& labels,
                     const std::vector<std::size_t>& idx) const {
        Split best;
        const double n = static_cast<double>(idx.size());
        std::array<double, kNumDiagnosisClasses> total{};
        for (std::size_t i : idx) total[static_cast<std::size_t>(labels[i])] += 1.0;
        const double parent_gini = detail::gini(total, n);

        std::vector<std::pair<double, int>> order(idx.size());
        for (std::size_t f = 0; f < ProfileVector::kNumFeatures; ++f) {
            for (std::size_t k = 0; k < idx.size(); ++k)
                order[k] = {rows[idx[k]][f], labels[idx[k]]};
            std::sort(order.begin(), order.end());
            std::array<double, kNumDiagnosisClasses> left{};
            for (std::size_t k = 0; k + 1 < order.size(); ++k) {
                left[static_cast<std::size_t>(order[k].second)] += 1.0;
                if (order[k].first == order[k + 1].first) continue;
                const double nl = static_cast<double>(k + 1);
                const double nr = n - nl;
                if (nl < cfg_.min_leaf || nr < cfg_.min_leaf) continue;
                std::array<double, kNumDiagnosisClasses> right{};
                for (std::size_t c = 0; c < kNumDiagnosisClasses; ++c)
                    right[c] = total[c] - left[c];
                const double gain = parent_gini - (nl / n) * detail::gini(left, nl) -
                                    (nr / n) * detail::gini(right, nr);
                if (gain > best.gain + 1e-12) {
                    best.found = true;
                    best.feature = static_cast<int>(f);
                    best.threshold = order[k].first + 0.5 * (order[k + 1].first - order[k].first);
                    best.gain = gain;
                }
            }
        }
        return best;
    }

    std::vector<MetaTreeNode> nodes_;
    MetaTreeConfig cfg_;
    int depth_ = 0;
    std::size_t leaf_count_ = 0;
};

struct RuleCondition {
    std::size_t feature = 0;
    bool greater = false; // false: feature <= threshold, true: feature > threshold
    double threshold = 0.0;
};

inline std::string format_threshold(double v) {
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%.3g", v);
    return std::string(buf);
}

struct DecisionRule {
    std::vector<RuleCondition> conditions;
    DiagnosisLabel label = DiagnosisLabel::GoodPrediction;
    std::size_t support = 0;  // training samples at the leaf
    double confidence = 0.0;  // majority fraction at the leaf
    std::size_t leaf = 0;     // node index of the leaf

    bool matches(const std::array<double, ProfileVector::kNumFeatures>& z) const {
        for (const auto& c : conditions) {
            const double v = z[c.feature];
            if (c.greater ? !(v > c.threshold) : !(v <= c.threshold)) return false;
        }
        return true;
    }

    std::string format() const {
        std::ostringstream out;
        out << rule_code(label) << ": ";
        for (std::size_t i = 0; i < conditions.size(); ++i) {
            if (i > 0) out << '&';
            const auto& c = conditions[i];
            out << '(' << ProfileVector::feature_names()[c.feature]
                << (c.greater ? ">" : "<=") << format_threshold(c.threshold) << ')';
        }
        return out.str();
    }
};

/// One rule per leaf: the root-to-leaf conjunction with per-feature interval
/// merging, sorted by support (descending).
inline std::vector<DecisionRule> extract_rules(const MetaTree& tree, std::size_t min_support = 1) {
    std::vector<DecisionRule> rules;
    struct Frame {
        std::size_t node;
        std::vector<RuleCondition> path;
    };
    std::vector<Frame> stack;
    stack.push_back({0, {}});
    while (!stack.empty()) {
        Frame fr = std::move(stack.back());
        stack.pop_back();
        const auto& n = tree.nodes()[fr.node];
        if (n.is_leaf()) {
            const std::size_t support =
                std::accumulate(n.class_counts.begin(), n.class_counts.end(), std::size_t{0});
            if (support < min_support) continue;

            // merge per-feature intervals: tightest upper bound for <=,
            // tightest lower bound for >
            std::map<std::size_t, std::pair<std::optional<double>, std::optional<double>>> bounds;
            std::vector<std::size_t> first_seen;
            for (const auto& c : fr.path) {
                auto& [lower, upper] = bounds[c.feature];
                if (std::find(first_seen.begin(), first_seen.end(), c.feature) ==
                    first_seen.end())
                    first_seen.push_back(c.feature);
                if (c.greater)
                    lower = lower ? std::max(*lower, c.threshold) : c.threshold;
                else
                    upper = upper ? std::min(*upper, c.threshold) : c.threshold;
            }
            DecisionRule rule;
            for (std::size_t f : first_seen) {
                const auto& [lower, upper] = bounds[f];
                if (lower) rule.conditions.push_back({f, true, *lower});
                if (upper) rule.conditions.push_back({f, false, *upper});
            }
            rule.label = n.leaf_label;
            rule.support = support;
            rule.confidence =
                support > 0 ? static_cast<double>(
                                  n.class_counts[static_cast<std::size_t>(n.leaf_label)]) /
                                  static_cast<double>(support)
                            : 0.0;
            rule.leaf = fr.node;
            rules.push_back(std::move(rule));
            continue;
        }
        Frame right{static_cast<std::size_t>(n.right), fr.path};
        right.path.push_back({static_cast<std::size_t>(n.feature), true, n.threshold});
        stack.push_back(std::move(right));
        Frame left{static_cast<std::size_t>(n.left), std::move(fr.path)};
        left.path.push_back({static_cast<std::size_t>(n.feature), false, n.threshold});
        stack.push_back(std::move(left));
    }
    std::stable_sort(rules.begin(), rules.end(),
                     [](const DecisionRule& a, const DecisionRule& b) {
                         return a.support > b.support;
                     });
    return rules;
}

/// Total Gini impurity decrease contributed by each feature, normalized to
/// sum to one.
inline std::array<double, ProfileVector::kNumFeatures> feature_importance(const MetaTree& tree) {
    std::array<double, ProfileVector::kNumFeatures> imp{};
    const auto& nodes = tree.nodes();
    if (nodes.empty()) return imp;
    const double n_root = static_cast<double>(
        std::accumulate(nodes[0].class_counts.begin(), nodes[0].class_counts.end(),
                        std::size_t{0}));
    for (const auto& n : nodes) {
        if (n.is_leaf()) continue;
        auto weight_gini = [](const MetaTreeNode& node) {
            std::array<double, kNumDiagnosisClasses> c{};
            double total = 0.0;
            for (std::size_t i = 0; i < kNumDiagnosisClasses; ++i) {
                c[i] = static_cast<double>(node.class_counts[i]);
                total += c[i];
            }
            return std::pair<double, double>(detail::gini(c, total), total);
        };
        auto [g_parent, n_parent] = weight_gini(n);
        auto [g_left, n_left] = weight_gini(nodes[static_cast<std::size_t>(n.left)]);
        auto [g_right, n_right] = weight_gini(nodes[static_cast<std::size_t>(n.right)]);
        const double gain = g_parent - (n_left / n_parent) * g_left -
                            (n_right / n_parent) * g_right;
        imp[static_cast<std::size_t>(n.feature)] += (n_parent / n_root) * gain;
    }
    const double total = std::accumulate(imp.begin(), imp.end(), 0.0);
    if (total > 0.0)
        for (auto& v : imp) v /= total;
    return imp;
}

struct EvalReport {
    std::array<double, kNumDiagnosisClasses> precision{};
    std::array<double, kNumDiagnosisClasses> recall{};
    std::array<std::array<std::size_t, kNumDiagnosisClasses>, kNumDiagnosisClasses>
        confusion{}; // [truth][predicted]
    double accuracy = 0.0;
    std::size_t n_test = 0;

    nlohmann::json to_json() const {
        return {{"precision", precision}, {"recall", recall},   {"confusion", confusion},
                {"accuracy", accuracy},   {"n_test", n_test}};
    }
};

inline EvalReport evaluate(const MetaTree& tree, const LabeledPool& test) {
    if (test.empty()) throw DataError("evaluate: empty test pool");
    EvalReport r;
    r.n_test = test.size();
    for (const auto& p : test.profiles) {
        if (!p.diagnosis) throw DataError("evaluate: unlabeled test profile");
        const auto truth = static_cast<std::size_t>(*p.diagnosis);
        const auto pred = static_cast<std::size_t>(tree.predict(p));
        ++r.confusion[truth][pred];
    }
    std::size_t correct = 0;
    for (std::size_t c = 0; c < kNumDiagnosisClasses; ++c) {
        correct += r.confusion[c][c];
        std::size_t pred_total = 0;
        std::size_t truth_total = 0;
        for (std::size_t o = 0; o < kNumDiagnosisClasses; ++o) {
            pred_total += r.confusion[o][c];
            truth_total += r.confusion[c][o];
        }
        r.precision[c] = pred_total > 0
                             ? static_cast<double>(r.confusion[c][c]) /
                                   static_cast<double>(pred_total)
                             : 0.0;
        r.recall[c] = truth_total > 0
                          ? static_cast<double>(r.confusion[c][c]) /
                                static_cast<double>(truth_total)
                          : 0.0;
    }
    r.accuracy = static_cast<double>(correct) / static_cast<double>(r.n_test);
    return r;
}

struct EvalSummary {
    std::array<double, kNumDiagnosisClasses> precision_mean{};
    std::array<double, kNumDiagnosisClasses> precision_std{};
    std::array<double, kNumDiagnosisClasses> recall_mean{};
    std::array<double, kNumDiagnosisClasses> recall_std{};
    double accuracy_mean = 0.0;
    double accuracy_std = 0.0;
    std::size_t n_reports = 0;

    nlohmann::json to_json() const {
        return {{"precision_mean", precision_mean}, {"precision_std", precision_std},
                {"recall_mean", recall_mean},       {"recall_std", recall_std},
                {"accuracy_mean", accuracy_mean},   {"accuracy_std", accuracy_std},
                {"n_reports", n_reports}};
    }
};

inline EvalSummary summarize(const std::vector<EvalReport>& reports) {
    if (reports.empty()) throw DataError("summarize: no reports");
    EvalSummary s;
    s.n_reports = reports.size();
    std::vector<double> acc;
    for (std::size_t c = 0; c < kNumDiagnosisClasses; ++c) {
        std::vector<double> prec;
        std::vector<double> rec;
        for (const auto& r : reports) {
            prec.push_back(r.precision[c]);
            rec.push_back(r.recall[c]);
        }
        s.precision_mean[c] = mean_of(prec);
        s.precision_std[c] = stdev_of(prec);
        s.recall_mean[c] = mean_of(rec);
        s.recall_std[c] = stdev_of(rec);
    }
    for (const auto& r : reports) acc.push_back(r.accuracy);
    s.accuracy_mean = mean_of(acc);
    s.accuracy_std = stdev_of(acc);
    return s;
}

} // namespace mcdiag
