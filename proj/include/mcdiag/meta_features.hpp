#pragma once

#include <array>
#include <optional>
#include <span>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

#include "json.hpp"

#include "mcdiag/dataset.hpp"
#include "mcdiag/knn.hpp"
#include "mcdiag/model.hpp"
#include "mcdiag/mst.hpp"

namespace mcdiag {

enum class DiagnosisLabel { GoodPrediction = 0, WeakModel = 1, DataMixedUp = 2 };

inline constexpr std::size_t kNumDiagnosisClasses = 3;

inline std::string to_string(DiagnosisLabel l) {
    switch (l) {
        case DiagnosisLabel::GoodPrediction: return "GoodPrediction";
        case DiagnosisLabel::WeakModel: return "WeakModel";
        case DiagnosisLabel::DataMixedUp: return "DataMixedUp";
    }
    return "?";
}

/// Short codes used in rule listings: C / WM / MD.
inline std::string rule_code(DiagnosisLabel l) {
    switch (l) {
        case DiagnosisLabel::GoodPrediction: return "C";
        case DiagnosisLabel::WeakModel: return "WM";
        case DiagnosisLabel::DataMixedUp: return "MD";
    }
    return "?";
}

inline DiagnosisLabel diagnosis_from_string(const std::string& s) {
    if (s == "GoodPrediction") return DiagnosisLabel::GoodPrediction;
    if (s == "WeakModel") return DiagnosisLabel::WeakModel;
    if (s == "DataMixedUp") return DiagnosisLabel::DataMixedUp;
    throw DataError("unknown diagnosis label: " + s);
}

/// Encoded value for features that do not exist for a profile (proximity on
/// non-tree models, ally/opponent distance over an empty subset). Sits below
/// every legitimate value, so a decision tree can route on it.
inline constexpr double kAbsentFeature = -1.0;

inline bool is_absent(double v) { return v == kAbsentFeature; }

/// The meta-representation of one point: local statistics of the classifier
/// and the data geometry around it. Field order here is the canonical CSV
/// column order.
struct ProfileVector {
    double local_accuracy = 0.0;
    double r_tp = 0.0;
    double r_tn = 0.0;
    double r_fp = 0.0;
    double r_fn = 0.0;
    double conf = 0.0;
    double knn_pred_conf = 0.0;
    double d_ally_gt = kAbsentFeature;
    double d_opp_gt = kAbsentFeature;
    double rate_dist_gt = 0.0;
    double d_ally_pred = kAbsentFeature;
    double d_opp_pred = kAbsentFeature;
    double rate_dist_pred = 0.0;
    double mst_frac_gt = 0.0;
    double proximity = kAbsentFeature;
    double local_set_cardinality = 0.0;

    std::optional<DiagnosisLabel> diagnosis;

    static constexpr std::size_t kNumFeatures = 16;

    static const std::array<std::string_view, kNumFeatures>& feature_names() {
        static const std::array<std::string_view, kNumFeatures> names = {
            "local accuracy", "rTP",           "rTN",
            "rFP",            "rFN",           "conf",
            "knn pred conf",  "D ally gt",     "D opp gt",
            "rate dist gt",   "D ally pred",   "D opp pred",
            "rate dist pred", "MST frac gt",   "proximity",
            "local set cardinality pred"};
        return names;
    }

    std::array<double, kNumFeatures> as_array() const {
        return {local_accuracy, r_tp,        r_tn,          r_fp,
                r_fn,           conf,        knn_pred_conf, d_ally_gt,
                d_opp_gt,       rate_dist_gt, d_ally_pred,  d_opp_pred,
                rate_dist_pred, mst_frac_gt, proximity,     local_set_cardinality};
    }

    void set_feature(std::size_t i, double v) {
        double* fields[kNumFeatures] = {
            &local_accuracy, &r_tp,        &r_tn,          &r_fp,
            &r_fn,           &conf,        &knn_pred_conf, &d_ally_gt,
            &d_opp_gt,       &rate_dist_gt, &d_ally_pred,  &d_opp_pred,
            &rate_dist_pred, &mst_frac_gt, &proximity,     &local_set_cardinality};
        *fields[i] = v;
    }
};

/// Conf(x) = |y_hat - 0.5| / 0.5 for a class-0 probability y_hat.
inline double confidence(double y_hat) {
    if (!(y_hat >= 0.0 && y_hat <= 1.0))
        throw DataError("confidence input outside [0,1]: " + format_double(y_hat));
    return std::abs(y_hat - 0.5) / 0.5;
}

struct ConfusionRates {
    double r_tp = 0.0;
    double r_tn = 0.0;
    double r_fp = 0.0;
    double r_fn = 0.0;
    double local_accuracy = 0.0;
};

/// Confusion rates (class 1 positive) of the model over the neighbor set,
/// ground truth vs model prediction, counts normalized by the neighborhood
/// size. The query's own correctness is deliberately not part of this.
inline ConfusionRates local_confusion(const NeighborSet& neighbors,
                                      const std::vector<int>& gt_labels,
                                      const std::vector<int>& pred_labels) {
    if (neighbors.empty()) throw DataError("confusion rates over an empty neighborhood");
    ConfusionRates r;
    const double k = static_cast<double>(neighbors.size());
    for (const auto& nb : neighbors.items) {
        const int truth = gt_labels[nb.row];
        const int pred = pred_labels[nb.row];
        if (truth == 1 && pred == 1) r.r_tp += 1.0;
        if (truth == 0 && pred == 0) r.r_tn += 1.0;
        if (truth == 0 && pred == 1) r.r_fp += 1.0;
        if (truth == 1 && pred == 0) r.r_fn += 1.0;
    }
    r.r_tp /= k;
    r.r_tn /= k;
    r.r_fp /= k;
    r.r_fn /= k;
    r.local_accuracy = r.r_tp + r.r_tn;
    return r;
}

/// Mean distances to allies / opponents of the reference label within the
/// neighborhood; an empty subset yields the absent marker.
inline std::pair<double, double> ally_opponent_distances(int ref_label,
                                                         const NeighborSet& neighbors,
                                                         const std::vector<int>& labels) {
    if (neighbors.empty()) throw DataError("ally/opponent distances over an empty neighborhood");
    double ally_sum = 0.0;
    double opp_sum = 0.0;
    std::size_t allies = 0;
    std::size_t opps = 0;
    for (const auto& nb : neighbors.items) {
        if (labels[nb.row] == ref_label) {
            ally_sum += nb.distance;
            ++allies;
        } else {
            opp_sum += nb.distance;
            ++opps;
        }
    }
    const double d_ally = allies > 0 ? ally_sum / static_cast<double>(allies) : kAbsentFeature;
    const double d_opp = opps > 0 ? opp_sum / static_cast<double>(opps) : kAbsentFeature;
    return {d_ally, d_opp};
}

/// D_ally / (D_ally + D_opp), bounded in [0,1]. Missing allies map to the
/// worst case 1.0, missing opponents to 0.0.
inline double rate_dist(double d_ally, double d_opp) {
    if (is_absent(d_ally) && is_absent(d_opp))
        throw DataError("rate_dist: both distance inputs are absent");
    if (is_absent(d_ally)) return 1.0;
    if (is_absent(d_opp)) return 0.0;
    const double denom = d_ally + d_opp;
    if (denom <= 0.0) return 0.5; // coincident duplicates on both sides
    return d_ally / denom;
}

struct LscResult {
    double value = 0.0;
    bool no_opponent = false;
};

/// Local set cardinality under a label assignment: the fraction of reference
/// rows strictly closer to x than its nearest opposite-label row.
inline LscResult local_set_cardinality(std::span<const double> x, int ref_label,
                                       const Dataset& d, const std::vector<int>& labels,
                                       std::optional<RowId> exclude = std::nullopt) {
    if (d.empty()) throw DataError("local set cardinality over an empty dataset");
    double nearest_opp = std::numeric_limits<double>::infinity();
    bool has_opp = false;
    for (std::size_t r = 0; r < d.rows(); ++r) {
        if (exclude && d.row_id(r) == *exclude) continue;
        if (labels[r] != ref_label) {
            has_opp = true;
            nearest_opp = std::min(nearest_opp, squared_distance(x, d.row(r)));
        }
    }
    if (!has_opp) return {1.0, true};
    std::size_t inside = 0;
    std::size_t total = 0;
    for (std::size_t r = 0; r < d.rows(); ++r) {
        if (exclude && d.row_id(r) == *exclude) continue;
        ++total;
        if (squared_distance(x, d.row(r)) < nearest_opp) ++inside;
    }
    return {static_cast<double>(inside) / static_cast<double>(total), false};
}

/// Tree-space prototype measure averaged over the neighborhood: mean shared
/// leaf count with the query, normalized by the ensemble size.
inline double proximity_mean(const TrainedModel& model, std::span<const double> x,
                             const NeighborSet& neighbors, const Dataset& d) {
    if (model.family() != ModelFamily::Gbt) return kAbsentFeature;
    if (neighbors.empty()) throw DataError("proximity over an empty neighborhood");
    const double n_trees = static_cast<double>(model.n_trees());
    double acc = 0.0;
    for (const auto& nb : neighbors.items)
        acc += static_cast<double>(model.leaf_comembership(x, d.row(nb.row))) / n_trees;
    return acc / static_cast<double>(neighbors.size());
}

/// Computes profile vectors for query points against one (training set,
/// model) pair. Model predictions over the training rows are cached once;
/// extraction itself is a pure function of immutable state.
class ProfileExtractor {
public:
    ProfileExtractor(const Dataset& train, const TrainedModel& model, int k)
        : train_(&train), model_(&model), knn_(train), mst_(MstGraph::build_prim(train)), k_(k) {
        if (k < 1) throw ConfigError("K must be >= 1");
        cache_predictions();
    }

    ProfileExtractor(const Dataset& train, const TrainedModel& model, int k, MstGraph mst)
        : train_(&train), model_(&model), knn_(train), mst_(std::move(mst)), k_(k) {
        if (k < 1) throw ConfigError("K must be >= 1");
        cache_predictions();
    }

    int k() const { return k_; }
    const KnnIndex& knn() const { return knn_; }
    const MstGraph& mst() const { return mst_; }
    const std::vector<int>& train_predictions() const { return pred_labels_; }

    ProfileVector extract(std::span<const double> x, int y,
                          std::optional<RowId> exclude = std::nullopt) const {
        NeighborSet nb = knn_.query(x, k_, exclude);
        if (nb.empty()) throw DataError("empty neighborhood while extracting a profile");

        ProfileVector p;
        const ConfusionRates cr = local_confusion(nb, train_->labels(), pred_labels_);
        p.local_accuracy = cr.local_accuracy;
        p.r_tp = cr.r_tp;
        p.r_tn = cr.r_tn;
        p.r_fp = cr.r_fp;
        p.r_fn = cr.r_fn;

        p.conf = confidence(model_->predict_proba(x));
        double conf_sum = 0.0;
        for (const auto& item : nb.items) conf_sum += pred_conf_[item.row];
        p.knn_pred_conf = conf_sum / static_cast<double>(nb.size());

        auto [da_gt, do_gt] = ally_opponent_distances(y, nb, train_->labels());
        p.d_ally_gt = da_gt;
        p.d_opp_gt = do_gt;
        p.rate_dist_gt = rate_dist(da_gt, do_gt);

        const int pred_label = model_->predict_label(x);
        auto [da_pr, do_pr] = ally_opponent_distances(pred_label, nb, pred_labels_);
        p.d_ally_pred = da_pr;
        p.d_opp_pred = do_pr;
        p.rate_dist_pred = rate_dist(da_pr, do_pr);

        if (exclude && train_->find_row(*exclude))
            p.mst_frac_gt = mst_.opponent_fraction(train_->labels(), *train_->find_row(*exclude));
        else
            p.mst_frac_gt = mst_.query_opponent_fraction(*train_, x, y);

        p.proximity = proximity_mean(*model_, x, nb, *train_);
        p.local_set_cardinality =
            local_set_cardinality(x, pred_label, *train_, pred_labels_, exclude).value;
        return p;
    }

private:
    void cache_predictions() {
        pred_labels_.resize(train_->rows());
        pred_conf_.resize(train_->rows());
        for (std::size_t r = 0; r < train_->rows(); ++r) {
            const double p0 = model_->predict_proba(train_->row(r));
            pred_labels_[r] = p0 > 0.5 ? 0 : 1;
            pred_conf_[r] = confidence(p0);
        }
    }

    const Dataset* train_;
    const TrainedModel* model_;
    KnnIndex knn_;
    MstGraph mst_;
    int k_;
    std::vector<int> pred_labels_;
    std::vector<double> pred_conf_;
};

// ---- profile serialization ----

inline std::string profile_csv_header(bool with_provenance) {
    std::ostringstream out;
    if (with_provenance) out << "dataset,family,generator,row_id,";
    const auto& names = ProfileVector::feature_names();
    for (std::size_t i = 0; i < names.size(); ++i) {
        if (i > 0) out << ',';
        out << names[i];
    }
    out << ",diagnosis\n";
    return out.str();
}

inline void append_profile_csv_row(std::ostringstream& out, const ProfileVector& p) {
    const auto arr = p.as_array();
    for (std::size_t i = 0; i < arr.size(); ++i) {
        if (i > 0) out << ',';
        out << format_double(arr[i]);
    }
    out << ',' << (p.diagnosis ? to_string(*p.diagnosis) : "") << '\n';
}

inline nlohmann::json profile_to_json(const ProfileVector& p) {
    nlohmann::json j;
    const auto arr = p.as_array();
    const auto& names = ProfileVector::feature_names();
    for (std::size_t i = 0; i < arr.size(); ++i) j[std::string(names[i])] = arr[i];
    if (p.diagnosis) j["diagnosis"] = to_string(*p.diagnosis);
    return j;
}

} // namespace mcdiag
