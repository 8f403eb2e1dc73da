#pragma once

#include <optional>
#include <span>
#include <string>
#include <variant>

#include "json.hpp"

#include "mcdiag/dataset.hpp"
#include "mcdiag/gbt.hpp"
#include "mcdiag/mlp.hpp"
#include "mcdiag/pca.hpp"

namespace mcdiag {

enum class ModelFamily { Gbt, Mlp };

inline std::string to_string(ModelFamily f) { return f == ModelFamily::Gbt ? "gbt" : "mlp"; }

inline ModelFamily family_from_string(const std::string& s) {
    if (s == "gbt") return ModelFamily::Gbt;
    if (s == "mlp") return ModelFamily::Mlp;
    throw ConfigError("unknown model family: " + s);
}

using ModelConfig = std::variant<GbtConfig, MlpConfig>;

inline ModelFamily family_of(const ModelConfig& c) {
    return std::holds_alternative<GbtConfig>(c) ? ModelFamily::Gbt : ModelFamily::Mlp;
}

inline std::string describe(const ModelConfig& c) {
    return std::visit([](const auto& cfg) { return cfg.describe(); }, c);
}

/// Immutable fitted binary classifier. Probability convention throughout the
/// library: predict_proba returns the probability of class 0, and the
/// predicted label is 0 iff that probability exceeds 0.5 (a tie goes to
/// class 1).
class TrainedModel {
public:
    static TrainedModel train_gbt(const Dataset& d, const GbtConfig& cfg) {
        TrainedModel m(GbtModel::train(d, cfg));
        m.train_fingerprint_ = d.fingerprint();
        return m;
    }

    static TrainedModel train_mlp(const Dataset& d, const MlpConfig& cfg) {
        TrainedModel m(MlpModel::train(d, cfg));
        m.train_fingerprint_ = d.fingerprint();
        return m;
    }

    static TrainedModel train(const Dataset& d, const ModelConfig& cfg) {
        if (family_of(cfg) == ModelFamily::Gbt) return train_gbt(d, std::get<GbtConfig>(cfg));
        return train_mlp(d, std::get<MlpConfig>(cfg));
    }

    ModelFamily family() const {
        return std::holds_alternative<GbtModel>(impl_) ? ModelFamily::Gbt : ModelFamily::Mlp;
    }

    std::size_t n_features() const {
        return std::visit([](const auto& m) { return m.n_features(); }, impl_);
    }

    /// Probability of class 0.
    double predict_proba(std::span<const double> x) const {
        return std::visit([&](const auto& m) { return m.prob_class0(x); }, impl_);
    }

    int predict_label(std::span<const double> x) const {
        return predict_proba(x) > 0.5 ? 0 : 1;
    }

    double accuracy(const Dataset& d) const {
        if (d.empty()) throw DataError("accuracy over an empty dataset");
        std::size_t correct = 0;
        for (std::size_t r = 0; r < d.rows(); ++r)
            if (predict_label(d.row(r)) == d.label(r)) ++correct;
        return static_cast<double>(correct) / static_cast<double>(d.rows());
    }

    /// Number of trees whose leaf contains both points; GBT only.
    int leaf_comembership(std::span<const double> xi, std::span<const double> xj) const {
        const auto* g = std::get_if<GbtModel>(&impl_);
        if (g == nullptr)
            throw Error("leaf_comembership is only defined for tree-ensemble models");
        int count = 0;
        for (std::size_t t = 0; t < g->n_trees(); ++t)
            if (g->leaf_of(t, xi) == g->leaf_of(t, xj)) ++count;
        return count;
    }

    std::size_t n_trees() const {
        const auto* g = std::get_if<GbtModel>(&impl_);
        if (g == nullptr) throw Error("n_trees is only defined for tree-ensemble models");
        return g->n_trees();
    }

    const GbtModel& gbt() const {
        const auto* g = std::get_if<GbtModel>(&impl_);
        if (g == nullptr) throw Error("not a tree-ensemble model");
        return *g;
    }

    std::uint64_t train_fingerprint() const { return train_fingerprint_; }

    std::string config_description() const {
        if (family() == ModelFamily::Gbt) return std::get<GbtModel>(impl_).config().describe();
        return std::get<MlpModel>(impl_).config().describe();
    }

    nlohmann::json to_json() const {
        nlohmann::json j = {{"format_version", 1},
                            {"family", to_string(family())},
                            {"train_fingerprint", train_fingerprint_}};
        if (family() == ModelFamily::Gbt)
            j["gbt"] = std::get<GbtModel>(impl_).to_json();
        else
            j["mlp"] = std::get<MlpModel>(impl_).to_json();
        return j;
    }

    static TrainedModel from_json(const nlohmann::json& j) {
        const auto fam = family_from_string(j.at("family").get<std::string>());
        TrainedModel m = fam == ModelFamily::Gbt
                             ? TrainedModel(GbtModel::from_json(j.at("gbt")))
                             : TrainedModel(MlpModel::from_json(j.at("mlp")));
        m.train_fingerprint_ = j.at("train_fingerprint").get<std::uint64_t>();
        return m;
    }

private:
    explicit TrainedModel(GbtModel m) : impl_(std::move(m)) {}
    explicit TrainedModel(MlpModel m) : impl_(std::move(m)) {}

    std::variant<GbtModel, MlpModel> impl_;
    std::uint64_t train_fingerprint_ = 0;
};

/// Model file bundling the classifier with the preprocessing that produced
/// its input space, so a saved model can be applied to raw CSV rows.
struct ModelArtifact {
    TrainedModel model;
    Scaler pre_scaler;                 // applied to raw features first
    std::optional<PcaModel> pca;       // then optional projection
    std::size_t pca_drop = 0;          // components dropped from the top
    std::optional<Scaler> post_scaler; // re-standardization in projected space

    std::vector<double> preprocess_row(std::span<const double> raw) const {
        std::vector<double> x = pre_scaler.transform_row(raw);
        if (pca) {
            x = pca->project_row(x, pca_drop);
            if (post_scaler) x = post_scaler->transform_row(x);
        }
        return x;
    }

    Dataset preprocess(const Dataset& d) const {
        std::vector<double> vals;
        std::size_t out_cols = 0;
        for (std::size_t r = 0; r < d.rows(); ++r) {
            auto x = preprocess_row(d.row(r));
            out_cols = x.size();
            vals.insert(vals.end(), x.begin(), x.end());
        }
        std::vector<std::string> names;
        for (std::size_t c = 0; c < out_cols; ++c) names.push_back("x" + std::to_string(c));
        return Dataset(std::move(vals), out_cols, d.labels(), d.row_ids(), std::move(names));
    }

    nlohmann::json to_json() const {
        nlohmann::json j = {{"format_version", 1},
                            {"model", model.to_json()},
                            {"pre_scaler", pre_scaler.to_json()},
                            {"pca_drop", pca_drop}};
        if (pca) j["pca"] = pca->to_json();
        if (post_scaler) j["post_scaler"] = post_scaler->to_json();
        return j;
    }

    static ModelArtifact from_json(const nlohmann::json& j) {
        ModelArtifact a{TrainedModel::from_json(j.at("model")),
                        Scaler::from_json(j.at("pre_scaler")),
                        std::nullopt,
                        j.at("pca_drop").get<std::size_t>(),
                        std::nullopt};
        if (j.contains("pca")) a.pca = PcaModel::from_json(j.at("pca"));
        if (j.contains("post_scaler")) a.post_scaler = Scaler::from_json(j.at("post_scaler"));
        return a;
    }
};

} // namespace mcdiag
