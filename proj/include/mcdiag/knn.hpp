#pragma once

#include <algorithm>
#include <cmath>
#include <optional>
#include <span>
#include <vector>

#include "mcdiag/dataset.hpp"

namespace mcdiag {

inline double squared_distance(std::span<const double> a, std::span<const double> b) {
    double acc = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        const double diff = a[i] - b[i];
        acc += diff * diff;
    }
    return acc;
}

inline double euclidean(std::span<const double> a, std::span<const double> b) {
    return std::sqrt(squared_distance(a, b));
}

struct Neighbor {
    std::size_t row = 0; // index into the indexed dataset
    RowId id = 0;
    double distance = 0.0;
};

struct NeighborSet {
    std::vector<Neighbor> items; // ascending (distance, row_id)
    int k_requested = 0;

    std::size_t size() const { return items.size(); }
    bool empty() const { return items.empty(); }
};

/// Exact K-nearest-neighbor queries by linear scan over an immutable
/// dataset. Distance ties are broken by ascending row_id; a member query
/// point is excluded by passing its row_id.
class KnnIndex {
public:
    explicit KnnIndex(const Dataset& d) : data_(&d) {
        if (d.empty()) throw DataError("cannot index an empty dataset");
    }

    const Dataset& data() const { return *data_; }

    NeighborSet query(std::span<const double> x, int k,
                      std::optional<RowId> exclude = std::nullopt) const {
        if (k < 1) throw ConfigError("K must be >= 1");
        if (x.size() != data_->cols()) throw DataError("query dimension mismatch");

        std::vector<std::pair<double, std::size_t>> scored; // (squared distance, row)
        scored.reserve(data_->rows());
        for (std::size_t r = 0; r < data_->rows(); ++r) {
            if (exclude && data_->row_id(r) == *exclude) continue;
            scored.emplace_back(squared_distance(x, data_->row(r)), r);
        }
        auto cmp = [this](const auto& a, const auto& b) {
            if (a.first != b.first) return a.first < b.first;
            return data_->row_id(a.second) < data_->row_id(b.second);
        };
        const std::size_t take = std::min(static_cast<std::size_t>(k), scored.size());
        std::partial_sort(scored.begin(), scored.begin() + static_cast<std::ptrdiff_t>(take),
                          scored.end(), cmp);

        NeighborSet out;
        out.k_requested = k;
        out.items.reserve(take);
        for (std::size_t i = 0; i < take; ++i)
            out.items.push_back({scored[i].second, data_->row_id(scored[i].second),
                                 std::sqrt(scored[i].first)});
        return out;
    }

    /// K policy: floor(fraction * train size), with a floor so confusion
    /// rates stay meaningful on tiny datasets.
    static int default_k(std::size_t train_rows, double fraction = 0.05, int k_min = 5) {
        const int k = static_cast<int>(std::floor(fraction * static_cast<double>(train_rows)));
        return std::max(k, k_min);
    }

private:
    const Dataset* data_;
};

} // namespace mcdiag
