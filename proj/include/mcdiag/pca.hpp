#pragma once

#include <Eigen/Dense>

#include <cmath>
#include <span>
#include <vector>

#include "json.hpp"

#include "mcdiag/dataset.hpp"

namespace mcdiag {

/// Full-rank PCA model. components_ is stored row-major with one component
/// per row, ordered by decreasing explained variance (sample covariance
/// eigenvalues, 1/(n-1) normalization).
class PcaModel {
public:
    PcaModel() = default;

    PcaModel(std::vector<double> mean, std::vector<double> components,
             std::vector<double> explained_variance)
        : mean_(std::move(mean)),
          components_(std::move(components)),
          explained_variance_(std::move(explained_variance)) {
        const std::size_t d = mean_.size();
        if (components_.size() != d * d || explained_variance_.size() != d)
            throw DataError("pca model shape mismatch");
        for (std::size_t k = 1; k < d; ++k)
            if (explained_variance_[k] > explained_variance_[k - 1] + 1e-12)
                throw DataError("explained variance must be non-increasing");
    }

    std::size_t n_features() const { return mean_.size(); }
    const std::vector<double>& mean() const { return mean_; }
    const std::vector<double>& explained_variance() const { return explained_variance_; }

    double component(std::size_t k, std::size_t j) const {
        return components_[k * n_features() + j];
    }

    /// Coordinates of x on components [first_component, n_features).
    std::vector<double> project_row(std::span<const double> x, std::size_t first_component) const {
        const std::size_t d = n_features();
        std::vector<double> z(d - first_component, 0.0);
        for (std::size_t k = first_component; k < d; ++k) {
            double acc = 0.0;
            for (std::size_t j = 0; j < d; ++j) acc += (x[j] - mean_[j]) * component(k, j);
            z[k - first_component] = acc;
        }
        return z;
    }

    /// Inverse map for a full-component projection (first_component = 0).
    std::vector<double> reconstruct_row(std::span<const double> z) const {
        const std::size_t d = n_features();
        std::vector<double> x(mean_);
        for (std::size_t k = 0; k < d; ++k)
            for (std::size_t j = 0; j < d; ++j) x[j] += z[k] * component(k, j);
        return x;
    }

    double total_variance() const {
        double t = 0.0;
        for (double v : explained_variance_) t += v;
        return t;
    }

    nlohmann::json to_json() const {
        return {{"format_version", 1},
                {"mean", mean_},
                {"components", components_},
                {"explained_variance", explained_variance_}};
    }

    static PcaModel from_json(const nlohmann::json& j) {
        return PcaModel(j.at("mean").get<std::vector<double>>(),
                        j.at("components").get<std::vector<double>>(),
                        j.at("explained_variance").get<std::vector<double>>());
    }

private:
    std::vector<double> mean_;
    std::vector<double> components_; // row-major, one component per row
    std::vector<double> explained_variance_;
};

inline PcaModel pca_fit(const Dataset& d) {
    if (d.empty()) throw DataError("cannot fit PCA on an empty dataset");
    const std::size_t n = d.rows();
    const std::size_t m = d.cols();

    Eigen::MatrixXd x(n, m);
    for (std::size_t r = 0; r < n; ++r)
        for (std::size_t c = 0; c < m; ++c) x(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(c)) = d.at(r, c);

    Eigen::RowVectorXd mu = x.colwise().mean();
    Eigen::MatrixXd centered = x.rowwise() - mu;
    const double denom = n > 1 ? static_cast<double>(n - 1) : 1.0;
    Eigen::MatrixXd cov = (centered.transpose() * centered) / denom;

    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> solver(cov);
    if (solver.info() != Eigen::Success) throw Error("eigendecomposition failed in pca_fit");

    // Eigen returns ascending eigenvalues; reverse to decreasing order and
    // fix each component's sign so the largest-magnitude entry is positive.
    std::vector<double> mean(m);
    for (std::size_t j = 0; j < m; ++j) mean[j] = mu(static_cast<Eigen::Index>(j));
    std::vector<double> comps(m * m);
    std::vector<double> evs(m);
    for (std::size_t k = 0; k < m; ++k) {
        const auto src = static_cast<Eigen::Index>(m - 1 - k);
        evs[k] = std::max(0.0, solver.eigenvalues()(src));
        Eigen::VectorXd v = solver.eigenvectors().col(src);
        Eigen::Index imax = 0;
        v.cwiseAbs().maxCoeff(&imax);
        if (v(imax) < 0.0) v = -v;
        for (std::size_t j = 0; j < m; ++j) comps[k * m + j] = v(static_cast<Eigen::Index>(j));
    }
    return PcaModel(std::move(mean), std::move(comps), std::move(evs));
}

/// Projects d onto components [n_drop, n_features). Returns the reduced
/// dataset and the fraction of total variance carried by the dropped
/// leading components.
inline std::pair<Dataset, double> pca_drop_top(const PcaModel& m, const Dataset& d,
                                               std::size_t n_drop) {
    const std::size_t dim = m.n_features();
    if (d.cols() != dim) throw DataError("pca model/dataset column mismatch");
    if (n_drop < 1 || n_drop >= dim)
        throw ConfigError("n_drop must be in [1, n_features); got " + std::to_string(n_drop));

    std::vector<double> vals;
    vals.reserve(d.rows() * (dim - n_drop));
    for (std::size_t r = 0; r < d.rows(); ++r) {
        auto z = m.project_row(d.row(r), n_drop);
        vals.insert(vals.end(), z.begin(), z.end());
    }
    std::vector<std::string> names;
    for (std::size_t k = n_drop; k < dim; ++k) names.push_back("pc" + std::to_string(k));

    double dropped = 0.0;
    for (std::size_t k = 0; k < n_drop; ++k) dropped += m.explained_variance()[k];
    const double total = m.total_variance();
    const double fraction = total > 0.0 ? dropped / total : 0.0;
    return {Dataset(std::move(vals), dim - n_drop, d.labels(), d.row_ids(), std::move(names)),
            fraction};
}

/// Rotation onto all components (no truncation); used for round-trip checks
/// and as the variance_removed = 0 baseline of accuracy curves.
inline Dataset pca_project_full(const PcaModel& m, const Dataset& d) {
    const std::size_t dim = m.n_features();
    if (d.cols() != dim) throw DataError("pca model/dataset column mismatch");
    std::vector<double> vals;
    vals.reserve(d.rows() * dim);
    for (std::size_t r = 0; r < d.rows(); ++r) {
        auto z = m.project_row(d.row(r), 0);
        vals.insert(vals.end(), z.begin(), z.end());
    }
    std::vector<std::string> names;
    for (std::size_t k = 0; k < dim; ++k) names.push_back("pc" + std::to_string(k));
    return Dataset(std::move(vals), dim, d.labels(), d.row_ids(), std::move(names));
}

} // namespace mcdiag
