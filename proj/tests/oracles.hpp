#pragma once

// Independent reference implementations used as test oracles. These must not
// share code paths with the library: the KNN scan is a plain stable sort,
// the MST minimum is an exhaustive search over spanning trees, and the
// eigensolver is a cyclic Jacobi iteration.

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <random>
#include <vector>

#include "mcdiag/dataset.hpp"

namespace oracle {

inline double dist(std::span<const double> a, std::span<const double> b) {
    double acc = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) acc += (a[i] - b[i]) * (a[i] - b[i]);
    return std::sqrt(acc);
}

struct ScoredRow {
    std::size_t row;
    mcdiag::RowId id;
    double distance;
};

inline std::vector<ScoredRow> knn_scan(const mcdiag::Dataset& d, std::span<const double> x,
                                       std::size_t k,
                                       std::optional<mcdiag::RowId> exclude = std::nullopt) {
    std::vector<ScoredRow> all;
    for (std::size_t r = 0; r < d.rows(); ++r) {
        if (exclude && d.row_id(r) == *exclude) continue;
        all.push_back({r, d.row_id(r), dist(x, d.row(r))});
    }
    std::sort(all.begin(), all.end(), [](const ScoredRow& a, const ScoredRow& b) {
        if (a.distance != b.distance) return a.distance < b.distance;
        return a.id < b.id;
    });
    if (all.size() > k) all.resize(k);
    return all;
}

// Exhaustive MST weight: try every edge subset of size n-1 and keep the
// cheapest one that spans the points. Only feasible for small n.
inline double exhaustive_mst_weight(const std::vector<std::vector<double>>& points) {
    const std::size_t n = points.size();
    struct Edge {
        std::size_t a, b;
        double w;
    };
    std::vector<Edge> edges;
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = i + 1; j < n; ++j)
            edges.push_back({i, j, dist(points[i], points[j])});

    const std::size_t m = edges.size();
    const std::size_t pick = n - 1;
    std::vector<std::size_t> comb(pick);
    std::iota(comb.begin(), comb.end(), 0);
    double best = std::numeric_limits<double>::infinity();

    auto spans = [&](const std::vector<std::size_t>& chosen) {
        std::vector<std::size_t> parent(n);
        std::iota(parent.begin(), parent.end(), 0);
        auto find = [&](std::size_t x) {
            while (parent[x] != x) x = parent[x] = parent[parent[x]];
            return x;
        };
        std::size_t united = 0;
        for (std::size_t ei : chosen) {
            auto ra = find(edges[ei].a);
            auto rb = find(edges[ei].b);
            if (ra == rb) return false; // cycle, cannot span with n-1 edges
            parent[ra] = rb;
            ++united;
        }
        return united == n - 1;
    };

    auto next_combination = [&]() {
        std::size_t i = pick;
        while (i-- > 0) {
            if (comb[i] < m - pick + i) {
                ++comb[i];
                for (std::size_t j = i + 1; j < pick; ++j) comb[j] = comb[j - 1] + 1;
                return true;
            }
        }
        return false;
    };

    do {
        if (spans(comb)) {
            double w = 0.0;
            for (std::size_t ei : comb) w += edges[ei].w;
            best = std::min(best, w);
        }
    } while (next_combination());
    return best;
}

// Cyclic Jacobi eigenvalue iteration for a symmetric matrix; returns
// eigenvalues sorted descending.
inline std::vector<double> jacobi_eigenvalues(std::vector<std::vector<double>> a,
                                              int sweeps = 100) {
    const std::size_t n = a.size();
    for (int sweep = 0; sweep < sweeps; ++sweep) {
        double off = 0.0;
        for (std::size_t p = 0; p < n; ++p)
            for (std::size_t q = p + 1; q < n; ++q) off += a[p][q] * a[p][q];
        if (off < 1e-24) break;
        for (std::size_t p = 0; p < n; ++p) {
            for (std::size_t q = p + 1; q < n; ++q) {
                if (std::abs(a[p][q]) < 1e-18) continue;
                const double theta = (a[q][q] - a[p][p]) / (2.0 * a[p][q]);
                const double t = (theta >= 0 ? 1.0 : -1.0) /
                                 (std::abs(theta) + std::sqrt(theta * theta + 1.0));
                const double c = 1.0 / std::sqrt(t * t + 1.0);
                const double s = t * c;
                for (std::size_t i = 0; i < n; ++i) {
                    const double aip = a[i][p];
                    const double aiq = a[i][q];
                    a[i][p] = c * aip - s * aiq;
                    a[i][q] = s * aip + c * aiq;
                }
                for (std::size_t i = 0; i < n; ++i) {
                    const double api = a[p][i];
                    const double aqi = a[q][i];
                    a[p][i] = c * api - s * aqi;
                    a[q][i] = s * api + c * aqi;
                }
            }
        }
    }
    std::vector<double> ev(n);
    for (std::size_t i = 0; i < n; ++i) ev[i] = a[i][i];
    std::sort(ev.rbegin(), ev.rend());
    return ev;
}

inline std::vector<std::vector<double>> sample_covariance(const mcdiag::Dataset& d) {
    const std::size_t n = d.rows();
    const std::size_t m = d.cols();
    std::vector<double> mean(m, 0.0);
    for (std::size_t r = 0; r < n; ++r)
        for (std::size_t c = 0; c < m; ++c) mean[c] += d.at(r, c);
    for (auto& v : mean) v /= static_cast<double>(n);
    std::vector<std::vector<double>> cov(m, std::vector<double>(m, 0.0));
    for (std::size_t r = 0; r < n; ++r)
        for (std::size_t i = 0; i < m; ++i)
            for (std::size_t j = 0; j < m; ++j)
                cov[i][j] += (d.at(r, i) - mean[i]) * (d.at(r, j) - mean[j]);
    const double denom = n > 1 ? static_cast<double>(n - 1) : 1.0;
    for (auto& row : cov)
        for (auto& v : row) v /= denom;
    return cov;
}

// Small random dataset helper for oracle comparisons.
inline mcdiag::Dataset random_dataset(std::size_t n, std::size_t dim, std::uint64_t seed,
                                      double label_balance = 0.5) {
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> gauss(0.0, 1.0);
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    std::vector<double> vals;
    std::vector<int> labels;
    std::vector<mcdiag::RowId> ids;
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t c = 0; c < dim; ++c) vals.push_back(gauss(rng));
        labels.push_back(unit(rng) < label_balance ? 1 : 0);
        ids.push_back(static_cast<mcdiag::RowId>(i));
    }
    std::vector<std::string> names;
    for (std::size_t c = 0; c < dim; ++c) names.push_back("x" + std::to_string(c));
    return mcdiag::Dataset(std::move(vals), dim, std::move(labels), std::move(ids),
                           std::move(names));
}

} // namespace oracle
