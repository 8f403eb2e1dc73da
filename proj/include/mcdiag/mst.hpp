#pragma once

#include <algorithm>
#include <limits>
#include <numeric>
#include <random>
#include <span>
#include <sstream>
#include <vector>

#include "mcdiag/dataset.hpp"
#include "mcdiag/knn.hpp"

namespace mcdiag {

struct MstEdge {
    std::size_t a = 0;
    std::size_t b = 0;
    double weight = 0.0;
};

namespace detail {

class DisjointSet {
public:
    explicit DisjointSet(std::size_t n) : parent_(n), rank_(n, 0) {
        std::iota(parent_.begin(), parent_.end(), 0);
    }

    std::size_t find(std::size_t x) {
        while (parent_[x] != x) {
            parent_[x] = parent_[parent_[x]];
            x = parent_[x];
        }
        return x;
    }

    bool unite(std::size_t a, std::size_t b) {
        a = find(a);
        b = find(b);
        if (a == b) return false;
        if (rank_[a] < rank_[b]) std::swap(a, b);
        parent_[b] = a;
        if (rank_[a] == rank_[b]) ++rank_[a];
        return true;
    }

private:
    std::vector<std::size_t> parent_;
    std::vector<std::size_t> rank_;
};

} // namespace detail

/// Euclidean minimum spanning tree over the training rows. Datasets larger
/// than kMaxExactRows are built on a seeded uniform subsample (node indices
/// then refer to the sampled rows via node_rows()).
class MstGraph {
public:
    static constexpr std::size_t kMaxExactRows = 20000;

    static MstGraph build_prim(const Dataset& d, std::uint64_t subsample_seed = 0) {
        MstGraph g = init(d, subsample_seed);
        const std::size_t n = g.node_rows_.size();
        if (n < 2) throw DataError("MST needs at least 2 rows");

        std::vector<double> best(n, std::numeric_limits<double>::infinity());
        std::vector<std::size_t> best_from(n, 0);
        std::vector<bool> in_tree(n, false);
        in_tree[0] = true;
        for (std::size_t v = 1; v < n; ++v) {
            best[v] = squared_distance(d.row(g.node_rows_[0]), d.row(g.node_rows_[v]));
            best_from[v] = 0;
        }
        for (std::size_t step = 1; step < n; ++step) {
            std::size_t pick = n;
            double pick_cost = std::numeric_limits<double>::infinity();
            for (std::size_t v = 0; v < n; ++v)
                if (!in_tree[v] && best[v] < pick_cost) {
                    pick_cost = best[v];
                    pick = v;
                }
            in_tree[pick] = true;
            g.add_edge(pick, best_from[pick], std::sqrt(pick_cost));
            for (std::size_t v = 0; v < n; ++v) {
                if (in_tree[v]) continue;
                const double c =
                    squared_distance(d.row(g.node_rows_[pick]), d.row(g.node_rows_[v]));
                if (c < best[v]) {
                    best[v] = c;
                    best_from[v] = pick;
                }
            }
        }
        g.finish();
        return g;
    }

    /// Greedy-edge construction; same contract as build_prim, used as the
    /// second algebraic route for weight cross-checks.
    static MstGraph build_kruskal(const Dataset& d, std::uint64_t subsample_seed = 0) {
        MstGraph g = init(d, subsample_seed);
        const std::size_t n = g.node_rows_.size();
        if (n < 2) throw DataError("MST needs at least 2 rows");

        std::vector<MstEdge> all;
        all.reserve(n * (n - 1) / 2);
        for (std::size_t i = 0; i < n; ++i)
            for (std::size_t j = i + 1; j < n; ++j)
                all.push_back(
                    {i, j, squared_distance(d.row(g.node_rows_[i]), d.row(g.node_rows_[j]))});
        std::sort(all.begin(), all.end(), [](const MstEdge& a, const MstEdge& b) {
            if (a.weight != b.weight) return a.weight < b.weight;
            if (a.a != b.a) return a.a < b.a;
            return a.b < b.b;
        });
        detail::DisjointSet ds(n);
        for (const auto& e : all) {
            if (ds.unite(e.a, e.b)) {
                g.add_edge(e.a, e.b, std::sqrt(e.weight));
                if (g.edges_.size() == n - 1) break;
            }
        }
        g.finish();
        return g;
    }

    std::size_t n_nodes() const { return node_rows_.size(); }
    const std::vector<MstEdge>& edges() const { return edges_; }
    const std::vector<std::size_t>& node_rows() const { return node_rows_; }
    bool subsampled() const { return subsampled_; }

    double total_weight() const {
        double w = 0.0;
        for (const auto& e : edges_) w += e.weight;
        return w;
    }

    /// Adjacency of a member row: (dataset row, edge weight) pairs.
    const std::vector<std::pair<std::size_t, double>>& neighbors_of_row(std::size_t row) const {
        auto it = row_to_node_.find(row);
        if (it == row_to_node_.end()) throw DataError("row not part of the MST node set");
        return adj_[it->second];
    }

    /// Fraction of MST neighbors of a member row with the opposite label.
    double opponent_fraction(const std::vector<int>& labels, std::size_t row) const {
        const auto& nbrs = neighbors_of_row(row);
        std::size_t opp = 0;
        for (const auto& [other_row, w] : nbrs)
            if (labels[other_row] != labels[row]) ++opp;
        return static_cast<double>(opp) / static_cast<double>(nbrs.size());
    }

    /// MST adjacency of an external query point x in MST(nodes ∪ {x}): the
    /// augmented tree is contained in the old tree edges plus the star of x,
    /// so 2n-1 candidate edges suffice for an exact answer.
    std::vector<std::pair<std::size_t, double>> attach_query(const Dataset& d,
                                                             std::span<const double> x) const {
        const std::size_t n = node_rows_.size();
        const std::size_t qnode = n;
        struct Cand {
            std::size_t a, b;
            double w2;
        };
        std::vector<Cand> cands;
        cands.reserve(2 * n - 1);
        for (const auto& e : edges_) cands.push_back({e.a, e.b, e.weight * e.weight});
        for (std::size_t v = 0; v < n; ++v)
            cands.push_back({v, qnode, squared_distance(d.row(node_rows_[v]), x)});
        std::sort(cands.begin(), cands.end(), [](const Cand& a, const Cand& b) {
            if (a.w2 != b.w2) return a.w2 < b.w2;
            if (a.a != b.a) return a.a < b.a;
            return a.b < b.b;
        });
        detail::DisjointSet ds(n + 1);
        std::vector<std::pair<std::size_t, double>> out;
        std::size_t accepted = 0;
        for (const auto& c : cands) {
            if (!ds.unite(c.a, c.b)) continue;
            ++accepted;
            if (c.b == qnode) out.emplace_back(node_rows_[c.a], std::sqrt(c.w2));
            if (accepted == n) break;
        }
        return out;
    }

    /// Opposite-label fraction among the augmented-MST neighbors of an
    /// external point with reference label y.
    double query_opponent_fraction(const Dataset& d, std::span<const double> x, int y) const {
        auto nbrs = attach_query(d, x);
        std::size_t opp = 0;
        for (const auto& [row, w] : nbrs)
            if (d.label(row) != y) ++opp;
        return static_cast<double>(opp) / static_cast<double>(nbrs.size());
    }

    std::string to_edge_csv(const Dataset& d) const {
        std::ostringstream out;
        out << "row_id_a,row_id_b,distance\n";
        for (const auto& e : edges_)
            out << d.row_id(node_rows_[e.a]) << ',' << d.row_id(node_rows_[e.b]) << ','
                << format_double(e.weight) << '\n';
        return out.str();
    }

private:
    static MstGraph init(const Dataset& d, std::uint64_t subsample_seed) {
        MstGraph g;
        const std::size_t n = d.rows();
        if (n <= kMaxExactRows) {
            g.node_rows_.resize(n);
            std::iota(g.node_rows_.begin(), g.node_rows_.end(), 0);
        } else {
            std::vector<std::size_t> all(n);
            std::iota(all.begin(), all.end(), 0);
            std::mt19937_64 rng(subsample_seed);
            std::shuffle(all.begin(), all.end(), rng);
            all.resize(kMaxExactRows);
            std::sort(all.begin(), all.end());
            g.node_rows_ = std::move(all);
            g.subsampled_ = true;
        }
        for (std::size_t i = 0; i < g.node_rows_.size(); ++i) g.row_to_node_[g.node_rows_[i]] = i;
        return g;
    }

    void add_edge(std::size_t a, std::size_t b, double w) { edges_.push_back({a, b, w}); }

    void finish() {
        adj_.assign(node_rows_.size(), {});
        for (const auto& e : edges_) {
            adj_[e.a].emplace_back(node_rows_[e.b], e.weight);
            adj_[e.b].emplace_back(node_rows_[e.a], e.weight);
        }
    }

    std::vector<std::size_t> node_rows_; // dataset row per MST node
    std::unordered_map<std::size_t, std::size_t> row_to_node_;
    std::vector<MstEdge> edges_;
    std::vector<std::vector<std::pair<std::size_t, double>>> adj_;
    bool subsampled_ = false;
};

} // namespace mcdiag
