#include <gtest/gtest.h>

#include "mcdiag/model.hpp"
#include "mcdiag/synthetic.hpp"

using namespace mcdiag;

TEST(MlpConfig, Validation) {
    EXPECT_THROW((MlpConfig{0, 100, 0.5, 0}).validate(), ConfigError);
    EXPECT_THROW((MlpConfig{8, 0, 0.5, 0}).validate(), ConfigError);
    EXPECT_THROW((MlpConfig{8, 100, -1.0, 0}).validate(), ConfigError);
}

TEST(TrainMlp, SeparableBlobsFitWell) {
    auto [d, flipped] = make_blobs(400, 2, 6.0, 0.0, 3);
    TrainedModel m = TrainedModel::train_mlp(d, {50, 300, 0.5, 1});
    EXPECT_GE(m.accuracy(d), 0.99);
}

TEST(TrainMlp, TinyHiddenLayerUnderfitsRings) {
    RingsResult rings = make_rings(800, 0.0, 11);
    auto [std_data, scaler] = standardize(rings.data);
    TrainedModel small = TrainedModel::train_mlp(std_data, {1, 400, 0.5, 1});
    TrainedModel big = TrainedModel::train_mlp(std_data, {50, 2500, 0.5, 1});
    EXPECT_GT(big.accuracy(std_data), small.accuracy(std_data) + 0.1);
}

TEST(TrainMlp, DeterministicUnderSameSeed) {
    auto [d, flipped] = make_blobs(200, 3, 3.0, 0.05, 5);
    TrainedModel a = TrainedModel::train_mlp(d, {16, 200, 0.5, 42});
    TrainedModel b = TrainedModel::train_mlp(d, {16, 200, 0.5, 42});
    for (std::size_t r = 0; r < d.rows(); ++r)
        EXPECT_DOUBLE_EQ(a.predict_proba(d.row(r)), b.predict_proba(d.row(r)));
}

TEST(TrainMlp, SingleClassRejected) {
    auto [d, flipped] = make_blobs(60, 2, 3.0, 0.0, 7);
    std::vector<std::size_t> ones;
    for (std::size_t r = 0; r < d.rows(); ++r)
        if (d.label(r) == 1) ones.push_back(r);
    EXPECT_THROW(TrainedModel::train_mlp(d.subset(ones), {8, 100, 0.5, 0}), DataError);
}

TEST(TrainMlp, ProbabilityConventionMatchesGbt) {
    // class-0 probability on a deep class-0 point must be high for both families
    auto [d, flipped] = make_blobs(600, 2, 6.0, 0.0, 9);
    TrainedModel m = TrainedModel::train_mlp(d, {32, 400, 0.5, 2});
    const std::vector<double> deep0{-3.5, 0.0};
    const std::vector<double> deep1{3.5, 0.0};
    EXPECT_GT(m.predict_proba(deep0), 0.9);
    EXPECT_LT(m.predict_proba(deep1), 0.1);
    EXPECT_EQ(m.predict_label(deep0), 0);
    EXPECT_EQ(m.predict_label(deep1), 1);
}

TEST(MlpModel, JsonRoundTripPredictsIdentically) {
    auto [d, flipped] = make_blobs(150, 3, 3.0, 0.0, 13);
    TrainedModel m = TrainedModel::train_mlp(d, {12, 150, 0.5, 3});
    TrainedModel back = TrainedModel::from_json(m.to_json());
    for (std::size_t r = 0; r < d.rows(); ++r)
        EXPECT_DOUBLE_EQ(back.predict_proba(d.row(r)), m.predict_proba(d.row(r)));
}
