#include <gtest/gtest.h>

#include <random>

#include "mcdiag/pca.hpp"
#include "mcdiag/synthetic.hpp"
#include "oracles.hpp"

using namespace mcdiag;

namespace {

Dataset line_dataset() {
    // points on y = x with a hint of thickness removed: exactly rank 1
    std::vector<double> vals;
    std::vector<int> labels;
    std::vector<RowId> ids;
    for (int i = 0; i < 50; ++i) {
        const double t = -2.0 + 4.0 * i / 49.0;
        vals.push_back(t);
        vals.push_back(t);
        labels.push_back(i % 2);
        ids.push_back(i);
    }
    return Dataset(std::move(vals), 2, std::move(labels), std::move(ids), {"x", "y"});
}

} // namespace

TEST(PcaFit, RankOneLine) {
    PcaModel m = pca_fit(line_dataset());
    const double inv_sqrt2 = 1.0 / std::sqrt(2.0);
    EXPECT_NEAR(std::abs(m.component(0, 0)), inv_sqrt2, 1e-9);
    EXPECT_NEAR(std::abs(m.component(0, 1)), inv_sqrt2, 1e-9);
    EXPECT_NEAR(m.explained_variance()[1], 0.0, 1e-9);
}

TEST(PcaFit, OrthonormalComponents) {
    Dataset d = oracle::random_dataset(300, 5, 123);
    PcaModel m = pca_fit(d);
    for (std::size_t a = 0; a < 5; ++a) {
        for (std::size_t b = 0; b < 5; ++b) {
            double dot = 0.0;
            for (std::size_t j = 0; j < 5; ++j) dot += m.component(a, j) * m.component(b, j);
            EXPECT_NEAR(dot, a == b ? 1.0 : 0.0, 1e-8);
        }
    }
}

TEST(PcaFit, EigenvaluesMatchJacobiOracle) {
    Dataset d = oracle::random_dataset(400, 4, 99);
    PcaModel m = pca_fit(d);
    auto oracle_ev = oracle::jacobi_eigenvalues(oracle::sample_covariance(d));
    ASSERT_EQ(oracle_ev.size(), 4u);
    for (std::size_t k = 0; k < 4; ++k)
        EXPECT_NEAR(m.explained_variance()[k], oracle_ev[k], 1e-9);
}

TEST(PcaFit, IsotropicGaussianHasFlatSpectrum) {
    Dataset d = oracle::random_dataset(6000, 3, 2024);
    PcaModel m = pca_fit(d);
    auto oracle_ev = oracle::jacobi_eigenvalues(oracle::sample_covariance(d));
    for (std::size_t k = 0; k < 3; ++k)
        EXPECT_NEAR(m.explained_variance()[k], oracle_ev[k], 1e-9);
    EXPECT_LT(m.explained_variance()[0] / m.explained_variance()[2], 1.15);
}

TEST(PcaFit, RoundTripReconstruction) {
    Dataset d = oracle::random_dataset(120, 4, 7);
    PcaModel m = pca_fit(d);
    for (std::size_t r = 0; r < d.rows(); ++r) {
        auto z = m.project_row(d.row(r), 0);
        auto back = m.reconstruct_row(z);
        for (std::size_t c = 0; c < d.cols(); ++c) EXPECT_NEAR(back[c], d.at(r, c), 1e-6);
    }
}

TEST(PcaDropTop, RangeChecks) {
    Dataset d = oracle::random_dataset(50, 3, 5);
    PcaModel m = pca_fit(d);
    EXPECT_THROW(pca_drop_top(m, d, 0), ConfigError);
    EXPECT_THROW(pca_drop_top(m, d, 3), ConfigError);
}

TEST(PcaDropTop, DroppedFractionAgainstOracle) {
    Dataset d = oracle::random_dataset(500, 3, 31);
    PcaModel m = pca_fit(d);
    auto oracle_ev = oracle::jacobi_eigenvalues(oracle::sample_covariance(d));
    const double total = oracle_ev[0] + oracle_ev[1] + oracle_ev[2];

    auto [reduced, fraction] = pca_drop_top(m, d, 2);
    EXPECT_EQ(reduced.cols(), 1u);
    EXPECT_NEAR(fraction, (oracle_ev[0] + oracle_ev[1]) / total, 1e-9);
}

TEST(PcaDropTop, FractionMonotoneInDropCount) {
    Dataset d = oracle::random_dataset(300, 5, 61);
    PcaModel m = pca_fit(d);
    double prev = 0.0;
    for (std::size_t n_drop = 1; n_drop < 5; ++n_drop) {
        auto [reduced, fraction] = pca_drop_top(m, d, n_drop);
        EXPECT_GE(fraction, prev);
        EXPECT_LT(fraction, 1.0);
        EXPECT_EQ(reduced.cols(), 5 - n_drop);
        prev = fraction;
    }
}

TEST(PcaModel, JsonRoundTrip) {
    Dataset d = oracle::random_dataset(80, 3, 17);
    PcaModel m = pca_fit(d);
    PcaModel back = PcaModel::from_json(m.to_json());
    for (std::size_t k = 0; k < 3; ++k) {
        EXPECT_DOUBLE_EQ(back.explained_variance()[k], m.explained_variance()[k]);
        for (std::size_t j = 0; j < 3; ++j)
            EXPECT_DOUBLE_EQ(back.component(k, j), m.component(k, j));
    }
}
