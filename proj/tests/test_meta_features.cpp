#include <gtest/gtest.h>

#include <random>

#include "mcdiag/meta_features.hpp"
#include "mcdiag/synthetic.hpp"
#include "oracles.hpp"

using namespace mcdiag;

namespace {

Dataset labeled_points(const std::vector<std::vector<double>>& rows,
                       const std::vector<int>& labels) {
    std::vector<double> vals;
    std::vector<RowId> ids;
    const std::size_t dim = rows.front().size();
    for (std::size_t i = 0; i < rows.size(); ++i) {
        vals.insert(vals.end(), rows[i].begin(), rows[i].end());
        ids.push_back(static_cast<RowId>(i));
    }
    std::vector<std::string> names;
    for (std::size_t c = 0; c < dim; ++c) names.push_back("x" + std::to_string(c));
    return Dataset(std::move(vals), dim, labels, std::move(ids), std::move(names));
}

NeighborSet fake_neighbors(const std::vector<std::size_t>& rows,
                           const std::vector<double>& distances, const Dataset& d) {
    NeighborSet ns;
    ns.k_requested = static_cast<int>(rows.size());
    for (std::size_t i = 0; i < rows.size(); ++i)
        ns.items.push_back({rows[i], d.row_id(rows[i]), distances[i]});
    return ns;
}

} // namespace

TEST(Confidence, AnalyticValues) {
    EXPECT_DOUBLE_EQ(confidence(0.5), 0.0);
    EXPECT_DOUBLE_EQ(confidence(1.0), 1.0);
    EXPECT_DOUBLE_EQ(confidence(0.0), 1.0);
    EXPECT_DOUBLE_EQ(confidence(0.9), 0.8);
    EXPECT_THROW(confidence(1.5), DataError);
}

TEST(Confidence, FormulaPropertyOverRandomInputs) {
    std::mt19937_64 rng(2718);
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    for (int i = 0; i < 1000; ++i) {
        const double y_hat = unit(rng);
        EXPECT_LT(std::abs(confidence(y_hat) - std::abs(y_hat - 0.5) / 0.5), 1e-12);
    }
}

TEST(LocalConfusion, PureAndConstantCases) {
    Dataset d = labeled_points({{0, 0}, {1, 0}, {2, 0}, {3, 0}}, {1, 1, 0, 0});
    NeighborSet all = fake_neighbors({0, 1, 2, 3}, {1, 1, 1, 1}, d);

    // perfect predictions
    ConfusionRates perfect = local_confusion(all, d.labels(), {1, 1, 0, 0});
    EXPECT_DOUBLE_EQ(perfect.r_tp, 0.5);
    EXPECT_DOUBLE_EQ(perfect.r_tn, 0.5);
    EXPECT_DOUBLE_EQ(perfect.local_accuracy, 1.0);

    // constant class-0 prediction on a balanced neighborhood
    ConfusionRates constant = local_confusion(all, d.labels(), {0, 0, 0, 0});
    EXPECT_DOUBLE_EQ(constant.r_tn, 0.5);
    EXPECT_DOUBLE_EQ(constant.r_fn, 0.5);
    EXPECT_DOUBLE_EQ(constant.r_tp, 0.0);
    EXPECT_DOUBLE_EQ(constant.local_accuracy, 0.5);

    // all-class-1 neighborhood predicted correctly
    Dataset ones = labeled_points({{0, 0}, {1, 0}}, {1, 1});
    NeighborSet both = fake_neighbors({0, 1}, {1, 1}, ones);
    ConfusionRates pure = local_confusion(both, ones.labels(), {1, 1});
    EXPECT_DOUBLE_EQ(pure.r_tp, 1.0);
    EXPECT_DOUBLE_EQ(pure.local_accuracy, 1.0);
}

TEST(LocalConfusion, MatchesHandCountOnRandomNeighborhood) {
    std::mt19937_64 rng(13);
    std::uniform_int_distribution<int> coin(0, 1);
    Dataset d = oracle::random_dataset(20, 2, 5);
    std::vector<int> preds(20);
    for (auto& p : preds) p = coin(rng);
    std::vector<std::size_t> rows(20);
    std::iota(rows.begin(), rows.end(), 0);
    NeighborSet ns = fake_neighbors(rows, std::vector<double>(20, 1.0), d);
    ConfusionRates r = local_confusion(ns, d.labels(), preds);

    double tp = 0, tn = 0, fp = 0, fn = 0;
    for (std::size_t i = 0; i < 20; ++i) {
        if (d.label(i) == 1 && preds[i] == 1) tp += 1;
        if (d.label(i) == 0 && preds[i] == 0) tn += 1;
        if (d.label(i) == 0 && preds[i] == 1) fp += 1;
        if (d.label(i) == 1 && preds[i] == 0) fn += 1;
    }
    EXPECT_DOUBLE_EQ(r.r_tp, tp / 20);
    EXPECT_DOUBLE_EQ(r.r_tn, tn / 20);
    EXPECT_DOUBLE_EQ(r.r_fp, fp / 20);
    EXPECT_DOUBLE_EQ(r.r_fn, fn / 20);
    EXPECT_NEAR(r.r_tp + r.r_tn + r.r_fp + r.r_fn, 1.0, 1e-9);
}

TEST(AllyOpponentDistances, AnalyticCases) {
    Dataset d = labeled_points({{0, 0}, {1, 0}, {2, 0}}, {1, 1, 0});

    // all allies at distance 1
    NeighborSet allies = fake_neighbors({0, 1}, {1.0, 1.0}, d);
    auto [da1, do1] = ally_opponent_distances(1, allies, d.labels());
    EXPECT_DOUBLE_EQ(da1, 1.0);
    EXPECT_TRUE(is_absent(do1));

    // one ally at 0.5, one opponent at 1.5
    NeighborSet mixed = fake_neighbors({0, 2}, {0.5, 1.5}, d);
    auto [da2, do2] = ally_opponent_distances(1, mixed, d.labels());
    EXPECT_DOUBLE_EQ(da2, 0.5);
    EXPECT_DOUBLE_EQ(do2, 1.5);
}

TEST(AllyOpponentDistances, MatchesBruteForcePartition) {
    std::mt19937_64 rng(17);
    std::uniform_real_distribution<double> unit(0.1, 3.0);
    Dataset d = oracle::random_dataset(30, 2, 23);
    std::vector<std::size_t> rows(30);
    std::iota(rows.begin(), rows.end(), 0);
    std::vector<double> dists(30);
    for (auto& x : dists) x = unit(rng);
    NeighborSet ns = fake_neighbors(rows, dists, d);
    auto [da, dopp] = ally_opponent_distances(1, ns, d.labels());

    double ally_sum = 0, opp_sum = 0;
    int ally_n = 0, opp_n = 0;
    for (std::size_t i = 0; i < 30; ++i) {
        if (d.label(i) == 1) {
            ally_sum += dists[i];
            ++ally_n;
        } else {
            opp_sum += dists[i];
            ++opp_n;
        }
    }
    EXPECT_NEAR(da, ally_sum / ally_n, 1e-12);
    EXPECT_NEAR(dopp, opp_sum / opp_n, 1e-12);
}

TEST(RateDist, SentinelAndAnalyticCases) {
    EXPECT_DOUBLE_EQ(rate_dist(2.0, 2.0), 0.5);
    EXPECT_DOUBLE_EQ(rate_dist(0.0, 1.0), 0.0);
    EXPECT_DOUBLE_EQ(rate_dist(kAbsentFeature, 1.0), 1.0); // no allies: worst case
    EXPECT_DOUBLE_EQ(rate_dist(1.0, kAbsentFeature), 0.0); // no opponents: best case
    EXPECT_THROW(rate_dist(kAbsentFeature, kAbsentFeature), DataError);
}

TEST(LocalSetCardinality, AnalyticCases) {
    // nearest point overall is an opponent -> empty local set
    Dataset d = labeled_points({{0.1, 0}, {1, 0}, {2, 0}}, {0, 1, 1});
    const std::vector<double> q{0.0, 0.0};
    LscResult nearest_opp = local_set_cardinality(q, 1, d, d.labels());
    EXPECT_DOUBLE_EQ(nearest_opp.value, 0.0);
    EXPECT_FALSE(nearest_opp.no_opponent);

    // no opponents at all
    LscResult mono = local_set_cardinality(q, 0, d, {0, 0, 0});
    EXPECT_DOUBLE_EQ(mono.value, 1.0);
    EXPECT_TRUE(mono.no_opponent);
}

TEST(LocalSetCardinality, MatchesBruteForceOnBlobs) {
    Dataset d = make_blobs(200, 2, 6.0, 0.0, 31).data;
    std::vector<int> preds(d.labels()); // pretend a perfect model
    std::mt19937_64 rng(7);
    std::normal_distribution<double> gauss(0.0, 1.0);
    for (int t = 0; t < 50; ++t) {
        const int ref = t % 2;
        std::vector<double> q{(ref == 0 ? -3.0 : 3.0) + gauss(rng), gauss(rng)};
        LscResult got = local_set_cardinality(q, ref, d, preds);

        double nearest_opp = 1e300;
        for (std::size_t r = 0; r < d.rows(); ++r)
            if (preds[r] != ref)
                nearest_opp = std::min(nearest_opp, oracle::dist(q, d.row(r)));
        std::size_t inside = 0;
        for (std::size_t r = 0; r < d.rows(); ++r)
            if (oracle::dist(q, d.row(r)) < nearest_opp) ++inside;
        EXPECT_DOUBLE_EQ(got.value, static_cast<double>(inside) / 200.0);
    }
}

TEST(Proximity, SelfAndDisjointCases) {
    Dataset d = make_blobs(300, 2, 6.0, 0.0, 41).data;
    TrainedModel m = TrainedModel::train_gbt(d, {20, 3, 0.3, 0});
    KnnIndex idx(d);

    // sole neighbor is an exact duplicate of the query
    NeighborSet self_only;
    self_only.k_requested = 1;
    self_only.items.push_back({0, d.row_id(0), 0.0});
    EXPECT_DOUBLE_EQ(proximity_mean(m, d.row(0), self_only, d), 1.0);

    // absent for MLP models
    TrainedModel mlp = TrainedModel::train_mlp(d, {4, 60, 0.5, 1});
    EXPECT_TRUE(is_absent(proximity_mean(mlp, d.row(0), self_only, d)));
}

TEST(Proximity, MatchesDirectTraversalAverage) {
    Dataset d = make_blobs(300, 2, 4.0, 0.0, 43).data;
    TrainedModel m = TrainedModel::train_gbt(d, {12, 3, 0.3, 0});
    KnnIndex idx(d);
    std::mt19937_64 rng(3);
    std::normal_distribution<double> gauss(0.0, 1.5);
    for (int t = 0; t < 50; ++t) {
        std::vector<double> q{gauss(rng), gauss(rng)};
        NeighborSet ns = idx.query(q, 10);
        const double got = proximity_mean(m, q, ns, d);

        // oracle: walk the stored trees directly
        const GbtModel& g = m.gbt();
        auto leaf_walk = [&](std::span<const double> x, const RegressionTree& tree) {
            int node = 0;
            while (!tree.nodes[static_cast<std::size_t>(node)].is_leaf()) {
                const auto& nd = tree.nodes[static_cast<std::size_t>(node)];
                node = x[static_cast<std::size_t>(nd.feature)] <= nd.threshold ? nd.left
                                                                               : nd.right;
            }
            return node;
        };
        double acc = 0.0;
        for (const auto& nb : ns.items) {
            int shared = 0;
            for (const auto& tree : g.trees())
                if (leaf_walk(q, tree) == leaf_walk(d.row(nb.row), tree)) ++shared;
            acc += static_cast<double>(shared) / static_cast<double>(g.trees().size());
        }
        EXPECT_NEAR(got, acc / static_cast<double>(ns.size()), 1e-12);
    }
}

TEST(ExtractProfile, DeepInteriorPointLooksGood) {
    Dataset d = make_blobs(600, 2, 6.0, 0.0, 51).data;
    TrainedModel m = TrainedModel::train_gbt(d, {40, 3, 0.3, 0});
    ProfileExtractor ex(d, m, 30);
    const std::vector<double> deep{-3.2, 0.1}; // far inside class 0
    ProfileVector p = ex.extract(deep, 0);
    EXPECT_GT(p.local_accuracy, 0.95);
    EXPECT_LT(p.mst_frac_gt, 0.05);
    EXPECT_LT(p.rate_dist_gt, 0.5);
    EXPECT_GT(p.conf, 0.8);
    EXPECT_NEAR(p.r_tp + p.r_tn + p.r_fp + p.r_fn, 1.0, 1e-9);
}

TEST(ExtractProfile, MixedRegionShowsMixedSignature) {
    RingsResult rings = make_rings(1200, 0.5, 61);
    auto [d, scaler] = standardize(rings.data);
    TrainedModel m = TrainedModel::train_gbt(d, {40, 4, 0.3, 0});
    ProfileExtractor ex(d, m, 60);

    // average the MST fraction over known in-band points
    double frac_sum = 0.0;
    int n_band = 0;
    for (std::size_t r = 0; r < d.rows() && n_band < 60; ++r) {
        if (!rings.ambiguous[r]) continue;
        ProfileVector p = ex.extract(d.row(r), d.label(r), d.row_id(r));
        frac_sum += p.mst_frac_gt;
        ++n_band;
    }
    const double mean_frac = frac_sum / n_band;
    EXPECT_GT(mean_frac, 0.25);
    EXPECT_LT(mean_frac, 0.75);
}

TEST(ExtractProfile, RowOrderPermutationInvariance) {
    Dataset d = make_blobs(150, 2, 3.0, 0.1, 71).data;
    TrainedModel m = TrainedModel::train_gbt(d, {15, 3, 0.3, 0});

    std::vector<std::size_t> perm(d.rows());
    std::iota(perm.begin(), perm.end(), 0);
    std::mt19937_64 rng(8);
    std::shuffle(perm.begin(), perm.end(), rng);
    Dataset shuffled = d.subset(perm);

    ProfileExtractor ex_a(d, m, 12);
    ProfileExtractor ex_b(shuffled, m, 12);
    std::normal_distribution<double> gauss(0.0, 1.5);
    for (int t = 0; t < 10; ++t) {
        std::vector<double> q{gauss(rng), gauss(rng)};
        const auto pa = ex_a.extract(q, t % 2).as_array();
        const auto pb = ex_b.extract(q, t % 2).as_array();
        for (std::size_t f = 0; f < pa.size(); ++f) EXPECT_NEAR(pa[f], pb[f], 1e-9);
    }
}

TEST(ExtractProfile, UniformScalingLeavesRatiosUnchanged) {
    Dataset d = make_blobs(200, 2, 4.0, 0.05, 81).data;
    std::vector<double> scaled_vals = d.values();
    for (auto& v : scaled_vals) v *= 3.7;
    Dataset scaled(std::move(scaled_vals), d.cols(), d.labels(), d.row_ids(),
                   d.feature_names());

    TrainedModel m = TrainedModel::train_gbt(d, {15, 3, 0.3, 0});
    TrainedModel ms = TrainedModel::train_gbt(scaled, {15, 3, 0.3, 0});
    ProfileExtractor ex(d, m, 15);
    ProfileExtractor exs(scaled, ms, 15);

    std::mt19937_64 rng(5);
    std::normal_distribution<double> gauss(0.0, 1.5);
    for (int t = 0; t < 10; ++t) {
        std::vector<double> q{gauss(rng), gauss(rng)};
        std::vector<double> qs{q[0] * 3.7, q[1] * 3.7};
        ProfileVector p = ex.extract(q, t % 2);
        ProfileVector ps = exs.extract(qs, t % 2);
        EXPECT_NEAR(p.rate_dist_gt, ps.rate_dist_gt, 1e-9);
        EXPECT_NEAR(p.rate_dist_pred, ps.rate_dist_pred, 1e-9);
        EXPECT_NEAR(p.mst_frac_gt, ps.mst_frac_gt, 1e-9);
    }
}

TEST(ExtractProfile, EveryEntryFiniteOrAbsent) {
    Dataset d = make_blobs(100, 2, 2.0, 0.2, 91).data;
    TrainedModel m = TrainedModel::train_mlp(d, {6, 150, 0.5, 2});
    ProfileExtractor ex(d, m, 8);
    for (std::size_t r = 0; r < 20; ++r) {
        const auto arr = ex.extract(d.row(r), d.label(r), d.row_id(r)).as_array();
        for (double v : arr) EXPECT_TRUE(std::isfinite(v));
    }
}
