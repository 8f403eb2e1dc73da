#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <numeric>
#include <span>
#include <vector>

#include "json.hpp"

#include "mcdiag/dataset.hpp"

namespace mcdiag {

struct GbtConfig {
    int n_trees = 50;
    int max_depth = 3;
    double learning_rate = 0.3;
    std::uint64_t seed = 0;

    void validate() const {
        if (n_trees < 1) throw ConfigError("GbtConfig: n_trees must be >= 1");
        if (max_depth < 1) throw ConfigError("GbtConfig: max_depth must be >= 1");
        if (!(learning_rate > 0.0)) throw ConfigError("GbtConfig: learning_rate must be > 0");
    }

    std::string describe() const {
        return std::to_string(n_trees) + " trees, depth " + std::to_string(max_depth);
    }

    nlohmann::json to_json() const {
        return {{"n_trees", n_trees},
                {"max_depth", max_depth},
                {"learning_rate", learning_rate},
                {"seed", seed}};
    }

    static GbtConfig from_json(const nlohmann::json& j) {
        GbtConfig c;
        c.n_trees = j.at("n_trees").get<int>();
        c.max_depth = j.at("max_depth").get<int>();
        c.learning_rate = j.at("learning_rate").get<double>();
        c.seed = j.at("seed").get<std::uint64_t>();
        return c;
    }
};

struct RegressionTreeNode {
    int feature = -1; // -1 marks a leaf
    double threshold = 0.0;
    int left = -1;
    int right = -1;
    double value = 0.0;

    bool is_leaf() const { return feature < 0; }
};

/// One least-squares regression tree over gradient residuals. Splits are
/// exact greedy (midpoints between consecutive distinct values), ties broken
/// by lowest feature index then lowest threshold.
class RegressionTree {
public:
    std::vector<RegressionTreeNode> nodes;

    int leaf_index(std::span<const double> x) const {
        int i = 0;
        while (!nodes[static_cast<std::size_t>(i)].is_leaf()) {
            const auto& n = nodes[static_cast<std::size_t>(i)];
            i = x[static_cast<std::size_t>(n.feature)] <= n.threshold ? n.left : n.right;
        }
        return i;
    }

    double predict(std::span<const double> x) const {
        return nodes[static_cast<std::size_t>(leaf_index(x))].value;
    }

    nlohmann::json to_json() const {
        nlohmann::json arr = nlohmann::json::array();
        for (const auto& n : nodes)
            arr.push_back({{"f", n.feature},
                           {"t", n.threshold},
                           {"l", n.left},
                           {"r", n.right},
                           {"v", n.value}});
        return arr;
    }

    static RegressionTree from_json(const nlohmann::json& j) {
        RegressionTree t;
        for (const auto& e : j) {
            RegressionTreeNode n;
            n.feature = e.at("f").get<int>();
            n.threshold = e.at("t").get<double>();
            n.left = e.at("l").get<int>();
            n.right = e.at("r").get<int>();
            n.value = e.at("v").get<double>();
            t.nodes.push_back(n);
        }
        return t;
    }
};

namespace detail {

// Minimum rows per leaf: keeps isolated label-noise points from being
// memorized into single-point islands, which would poison the iterative
// cleaning procedure's cross-accuracies.
inline constexpr std::size_t kGbtMinLeaf = 2;

struct GbtSplit {
    bool found = false;
    int feature = -1;
    double threshold = 0.0;
    double sse = std::numeric_limits<double>::infinity();
};

inline GbtSplit find_best_split(const Dataset& d, const std::vector<double>& target,
                                const std::vector<std::size_t>& idx) {
    GbtSplit best;
    const std::size_t n = idx.size();
    if (n < 2 * kGbtMinLeaf) return best;

    double total = 0.0;
    double total_sq = 0.0;
    for (std::size_t i : idx) {
        total += target[i];
        total_sq += target[i] * target[i];
    }

    std::vector<std::pair<double, std::size_t>> order(n);
    for (std::size_t c = 0; c < d.cols(); ++c) {
        for (std::size_t k = 0; k < n; ++k) order[k] = {d.at(idx[k], c), idx[k]};
        std::sort(order.begin(), order.end());
        double left_sum = 0.0;
        for (std::size_t k = 0; k + 1 < n; ++k) {
            left_sum += target[order[k].second];
            if (order[k].first == order[k + 1].first) continue;
            if (k + 1 < kGbtMinLeaf || n - k - 1 < kGbtMinLeaf) continue;
            const double nl = static_cast<double>(k + 1);
            const double nr = static_cast<double>(n - k - 1);
            const double right_sum = total - left_sum;
            // SSE = total_sq - sum_l^2/n_l - sum_r^2/n_r (constant total_sq
            // kept so comparisons stay in absolute terms)
            const double sse = total_sq - left_sum * left_sum / nl - right_sum * right_sum / nr;
            if (sse < best.sse - 1e-12) {
                best.found = true;
                best.feature = static_cast<int>(c);
                best.threshold = order[k].first + 0.5 * (order[k + 1].first - order[k].first);
                best.sse = sse;
            }
        }
    }
    return best;
}

} // namespace detail

/// Gradient boosting on logistic loss: first-order residual fitting with
/// Newton-style per-leaf output values, no subsampling.
class GbtModel {
public:
    static GbtModel train(const Dataset& d, const GbtConfig& cfg) {
        cfg.validate();
        if (d.empty()) throw DataError("cannot train on an empty dataset");
        if (!d.has_both_classes()) throw DataError("single-class dataset");

        GbtModel m;
        m.cfg_ = cfg;
        m.n_features_ = d.cols();

        const std::size_t n = d.rows();
        const double pos = static_cast<double>(d.count_label(1));
        const double prior = pos / static_cast<double>(n);
        m.base_score_ = std::log(prior / (1.0 - prior));

        std::vector<double> score(n, m.base_score_);
        std::vector<double> residual(n);
        std::vector<double> hessian(n);

        for (int t = 0; t < cfg.n_trees; ++t) {
            for (std::size_t i = 0; i < n; ++i) {
                const double p = 1.0 / (1.0 + std::exp(-score[i]));
                residual[i] = static_cast<double>(d.label(i)) - p;
                hessian[i] = std::max(p * (1.0 - p), 1e-12);
            }
            RegressionTree tree;
            std::vector<std::size_t> all(n);
            std::iota(all.begin(), all.end(), 0);
            build_node(tree, d, residual, hessian, all, 0, cfg.max_depth);
            for (std::size_t i = 0; i < n; ++i)
                score[i] += cfg.learning_rate * tree.predict(d.row(i));
            m.trees_.push_back(std::move(tree));
        }
        return m;
    }

    double raw_score(std::span<const double> x) const {
        check_dim(x.size());
        double s = base_score_;
        for (const auto& t : trees_) s += cfg_.learning_rate * t.predict(x);
        return s;
    }

    double prob_class0(std::span<const double> x) const {
        return 1.0 - 1.0 / (1.0 + std::exp(-raw_score(x)));
    }

    int leaf_of(std::size_t tree, std::span<const double> x) const {
        check_dim(x.size());
        return trees_[tree].leaf_index(x);
    }

    std::size_t n_trees() const { return trees_.size(); }
    std::size_t n_features() const { return n_features_; }
    const GbtConfig& config() const { return cfg_; }
    const std::vector<RegressionTree>& trees() const { return trees_; }

    nlohmann::json to_json() const {
        nlohmann::json trees = nlohmann::json::array();
        for (const auto& t : trees_) trees.push_back(t.to_json());
        return {{"config", cfg_.to_json()},
                {"n_features", n_features_},
                {"base_score", base_score_},
                {"trees", trees}};
    }

    static GbtModel from_json(const nlohmann::json& j) {
        GbtModel m;
        m.cfg_ = GbtConfig::from_json(j.at("config"));
        m.n_features_ = j.at("n_features").get<std::size_t>();
        m.base_score_ = j.at("base_score").get<double>();
        for (const auto& t : j.at("trees")) m.trees_.push_back(RegressionTree::from_json(t));
        return m;
    }

private:
    void check_dim(std::size_t got) const {
        if (got != n_features_)
            throw DataError("feature dimension mismatch: expected " + std::to_string(n_features_) +
                            ", got " + std::to_string(got));
    }

    static void build_node(RegressionTree& tree, const Dataset& d,
                           const std::vector<double>& residual, const std::vector<double>& hessian,
                           const std::vector<std::size_t>& idx, int depth, int max_depth) {
        const int node_id = static_cast<int>(tree.nodes.size());
        tree.nodes.emplace_back();

        detail::GbtSplit split;
        if (depth < max_depth) split = detail::find_best_split(d, residual, idx);

        if (!split.found) {
            double g = 0.0;
            double h = 0.0;
            for (std::size_t i : idx) {
                g += residual[i];
                h += hessian[i];
            }
            tree.nodes[static_cast<std::size_t>(node_id)].value =
                std::clamp(g / std::max(h, 1e-12), -8.0, 8.0);
            return;
        }

        std::vector<std::size_t> left;
        std::vector<std::size_t> right;
        for (std::size_t i : idx) {
            if (d.at(i, static_cast<std::size_t>(split.feature)) <= split.threshold)
                left.push_back(i);
            else
                right.push_back(i);
        }
        tree.nodes[static_cast<std::size_t>(node_id)].feature = split.feature;
        tree.nodes[static_cast<std::size_t>(node_id)].threshold = split.threshold;
        const int left_id = static_cast<int>(tree.nodes.size());
        tree.nodes[static_cast<std::size_t>(node_id)].left = left_id;
        build_node(tree, d, residual, hessian, left, depth + 1, max_depth);
        const int right_id = static_cast<int>(tree.nodes.size());
        tree.nodes[static_cast<std::size_t>(node_id)].right = right_id;
        build_node(tree, d, residual, hessian, right, depth + 1, max_depth);
    }

    GbtConfig cfg_;
    std::size_t n_features_ = 0;
    double base_score_ = 0.0;
    std::vector<RegressionTree> trees_;
};

} // namespace mcdiag
