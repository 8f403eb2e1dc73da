#pragma once

#include <array>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "json.hpp"

#include "mcdiag/dataset.hpp"
#include "mcdiag/meta_features.hpp"
#include "mcdiag/model.hpp"
#include "mcdiag/pca.hpp"

namespace mcdiag {

struct CleanRound {
    int round = 0;
    std::size_t size_before = 0;
    std::size_t size_after = 0;
    double acc_c1 = 0.0; // accuracy of C1 on the half it did not see
    double acc_c2 = 0.0;
};

struct CleaningReport {
    std::vector<CleanRound> rounds;
    Dataset final_dataset;
    bool converged = false;

    std::string to_csv() const {
        std::ostringstream out;
        out << "round,size_before,size_after,acc_c1,acc_c2\n";
        for (const auto& r : rounds)
            out << r.round << ',' << r.size_before << ',' << r.size_after << ','
                << format_double(r.acc_c1) << ',' << format_double(r.acc_c2) << '\n';
        return out.str();
    }
};

class CleaningCollapseError : public Error {
public:
    CleaningCollapseError(CleaningReport report, std::size_t floor)
        : Error("cleaning collapsed the dataset below " + std::to_string(floor) + " rows"),
          report_(std::move(report)) {}
    const CleaningReport& report() const { return report_; }

private:
    CleaningReport report_;
};

struct CleanParams {
    double acc_threshold = 0.999;
    int max_rounds = 5;
    std::size_t min_rows = 50;
    std::uint64_t seed = 1;
};

/// Iterative cross-training cleanup: split in half, train a strong model on
/// each half, drop the rows the opposite model gets wrong, merge, repeat
/// until both cross-accuracies reach the threshold. The surviving rows are
/// certified classifiable by a high-capacity model.
inline CleaningReport clean_dataset(const Dataset& d, const ModelConfig& strong_cfg,
                                    const CleanParams& params) {
    if (!d.has_both_classes()) throw DataError("cleaning needs both classes present");
    if (!(params.acc_threshold > 0.5 && params.acc_threshold <= 1.0))
        throw ConfigError("acc_threshold must be in (0.5, 1]");

    CleaningReport report;
    Dataset current = d;
    for (int round = 1; round <= params.max_rounds; ++round) {
        if (current.rows() < params.min_rows || !current.has_both_classes()) {
            report.final_dataset = std::move(current);
            throw CleaningCollapseError(std::move(report), params.min_rows);
        }
        SplitPair halves =
            split_random(current, 0.5, params.seed + static_cast<std::uint64_t>(round));
        TrainedModel c1 = TrainedModel::train(halves.part_a, strong_cfg);
        TrainedModel c2 = TrainedModel::train(halves.part_b, strong_cfg);
        const double acc_c1 = c1.accuracy(halves.part_b);
        const double acc_c2 = c2.accuracy(halves.part_a);

        CleanRound r;
        r.round = round;
        r.size_before = current.rows();
        r.acc_c1 = acc_c1;
        r.acc_c2 = acc_c2;

        if (acc_c1 >= params.acc_threshold && acc_c2 >= params.acc_threshold) {
            r.size_after = current.rows();
            report.rounds.push_back(r);
            report.converged = true;
            break;
        }

        std::vector<std::size_t> keep_a;
        for (std::size_t i = 0; i < halves.part_a.rows(); ++i)
            if (c2.predict_label(halves.part_a.row(i)) == halves.part_a.label(i))
                keep_a.push_back(i);
        std::vector<std::size_t> keep_b;
        for (std::size_t i = 0; i < halves.part_b.rows(); ++i)
            if (c1.predict_label(halves.part_b.row(i)) == halves.part_b.label(i))
                keep_b.push_back(i);

        Dataset kept_a = halves.part_a.subset(keep_a);
        Dataset kept_b = halves.part_b.subset(keep_b);

        // merge kept halves back into one dataset, original row order
        std::vector<RowId> kept_ids;
        kept_ids.reserve(kept_a.rows() + kept_b.rows());
        for (RowId id : kept_a.row_ids()) kept_ids.push_back(id);
        for (RowId id : kept_b.row_ids()) kept_ids.push_back(id);
        std::sort(kept_ids.begin(), kept_ids.end());
        std::vector<std::size_t> keep_rows;
        keep_rows.reserve(kept_ids.size());
        for (RowId id : kept_ids) keep_rows.push_back(*current.find_row(id));
        current = current.subset(keep_rows);

        r.size_after = current.rows();
        report.rounds.push_back(r);
    }
    report.final_dataset = std::move(current);
    return report;
}

struct Provenance {
    std::string dataset;
    ModelFamily family = ModelFamily::Gbt;
    std::string generator; // "weak" or "cut"
    std::string config_desc;
    std::uint64_t seed = 0;
    RowId row = 0;

    nlohmann::json to_json() const {
        return {{"dataset", dataset},    {"family", to_string(family)}, {"generator", generator},
                {"config", config_desc}, {"seed", seed},                {"row_id", row}};
    }
};

struct LabeledPool {
    std::vector<ProfileVector> profiles;
    std::vector<Provenance> provenance;

    std::size_t size() const { return profiles.size(); }
    bool empty() const { return profiles.empty(); }

    std::array<std::size_t, kNumDiagnosisClasses> class_counts() const {
        std::array<std::size_t, kNumDiagnosisClasses> counts{};
        for (const auto& p : profiles) {
            if (!p.diagnosis) throw DataError("pool profile without a diagnosis label");
            ++counts[static_cast<std::size_t>(*p.diagnosis)];
        }
        return counts;
    }

    void append(const LabeledPool& other) {
        profiles.insert(profiles.end(), other.profiles.begin(), other.profiles.end());
        provenance.insert(provenance.end(), other.provenance.begin(), other.provenance.end());
    }

    LabeledPool select(const std::vector<std::size_t>& idx) const {
        LabeledPool out;
        out.profiles.reserve(idx.size());
        out.provenance.reserve(idx.size());
        for (std::size_t i : idx) {
            out.profiles.push_back(profiles[i]);
            out.provenance.push_back(provenance[i]);
        }
        return out;
    }

    std::string to_csv() const {
        std::ostringstream out;
        out << profile_csv_header(true);
        for (std::size_t i = 0; i < profiles.size(); ++i) {
            const auto& pv = provenance[i];
            out << pv.dataset << ',' << to_string(pv.family) << ',' << pv.generator << ','
                << pv.row << ',';
            append_profile_csv_row(out, profiles[i]);
        }
        return out.str();
    }

    static LabeledPool from_csv(std::istream& in) {
        LabeledPool pool;
        std::string line;
        bool header = true;
        while (std::getline(in, line)) {
            if (!line.empty() && line.back() == '\r') line.pop_back();
            if (trim(line).empty() || line[0] == '#') continue;
            if (header) {
                header = false;
                continue;
            }
            auto fields = split(line, ',');
            if (fields.size() != 4 + ProfileVector::kNumFeatures + 1)
                throw DataError("malformed profile CSV row: " + line);
            Provenance pv;
            pv.dataset = fields[0];
            pv.family = family_from_string(fields[1]);
            pv.generator = fields[2];
            pv.row = std::stoll(fields[3]);
            ProfileVector p;
            for (std::size_t i = 0; i < ProfileVector::kNumFeatures; ++i)
                p.set_feature(i, std::stod(fields[4 + i]));
            p.diagnosis = diagnosis_from_string(fields[4 + ProfileVector::kNumFeatures]);
            pool.profiles.push_back(p);
            pool.provenance.push_back(std::move(pv));
        }
        return pool;
    }
};

struct LabelGenParams {
    double k_fraction = 0.05;
    int k_min = 5;
    std::uint64_t seed = 1;
};

struct WeakGenResult {
    LabeledPool pool;
    std::vector<std::string> warnings;
    std::optional<ModelArtifact> weak_artifact;
    double base_test_accuracy = 0.0;
    double weak_test_accuracy = 0.0;
};

namespace detail {

inline bool strictly_lower_capacity(const ModelConfig& weak, const ModelConfig& base) {
    if (family_of(weak) != family_of(base)) return false;
    if (family_of(weak) == ModelFamily::Gbt) {
        const auto& w = std::get<GbtConfig>(weak);
        const auto& b = std::get<GbtConfig>(base);
        return w.n_trees <= b.n_trees && w.max_depth <= b.max_depth &&
               (w.n_trees < b.n_trees || w.max_depth < b.max_depth);
    }
    const auto& w = std::get<MlpConfig>(weak);
    const auto& b = std::get<MlpConfig>(base);
    return w.hidden_size <= b.hidden_size && w.n_iterations <= b.n_iterations &&
           (w.hidden_size < b.hidden_size || w.n_iterations < b.n_iterations);
}

} // namespace detail

/// Weak-model labeling: train a lower-capacity model on half of the cleaned
/// set; its test-half errors become WeakModel profiles, the rest
/// GoodPrediction. Profiles are computed against the weak model itself.
inline WeakGenResult gen_weak_labels(const Dataset& easy, const std::string& dataset_name,
                                     const ModelConfig& base_cfg, const ModelConfig& weak_cfg,
                                     const LabelGenParams& params) {
    if (!detail::strictly_lower_capacity(weak_cfg, base_cfg))
        throw ConfigError("weak config must have strictly lower capacity than the base config");

    SplitPair halves = split_random(easy, 0.5, params.seed);
    Scaler scaler = fit_scaler(halves.part_a);
    Dataset train = scaler.transform(halves.part_a);
    Dataset test = scaler.transform(halves.part_b);

    TrainedModel base = TrainedModel::train(train, base_cfg);
    TrainedModel weak = TrainedModel::train(train, weak_cfg);

    WeakGenResult result;
    result.base_test_accuracy = base.accuracy(test);
    result.weak_test_accuracy = weak.accuracy(test);
    if (result.weak_test_accuracy >= result.base_test_accuracy)
        result.warnings.push_back("weakening had no effect: weak test accuracy " +
                                  format_double(result.weak_test_accuracy) + " >= base " +
                                  format_double(result.base_test_accuracy));

    const int k = KnnIndex::default_k(train.rows(), params.k_fraction, params.k_min);
    ProfileExtractor extractor(train, weak, k);
    for (std::size_t i = 0; i < test.rows(); ++i) {
        ProfileVector p = extractor.extract(test.row(i), test.label(i));
        const bool wrong = weak.predict_label(test.row(i)) != test.label(i);
        p.diagnosis = wrong ? DiagnosisLabel::WeakModel : DiagnosisLabel::GoodPrediction;
        result.pool.profiles.push_back(std::move(p));
        result.pool.provenance.push_back({dataset_name, family_of(weak_cfg), "weak",
                                          describe(weak_cfg), params.seed, test.row_id(i)});
    }
    result.weak_artifact = ModelArtifact{weak, std::move(scaler), std::nullopt, 0, std::nullopt};
    return result;
}

struct CurvePoint {
    double variance_removed = 0.0;
    double train_acc = 0.0;
    double test_acc = 0.0;
};

inline std::string curve_to_csv(const std::vector<CurvePoint>& curve) {
    std::ostringstream out;
    out << "variance_removed,train_acc,test_acc\n";
    for (const auto& p : curve)
        out << format_double(p.variance_removed) << ',' << format_double(p.train_acc) << ','
            << format_double(p.test_acc) << '\n';
    return out.str();
}

struct UnderfitResult {
    bool passed = false;
    double gap = 0.0;        // train - test at the operating point
    double train_drop = 0.0; // baseline train accuracy minus operating train accuracy
    std::string diagnosis;
};

/// Fig.2-style check at the last curve point: underfitting means train and
/// test accuracy fell together (small gap, real train drop); a persistent
/// train/test gap means the model overfits the projected space and a weaker
/// base model should be used.
inline UnderfitResult underfit_check(const std::vector<CurvePoint>& curve, double gap_max,
                                     double drop_min) {
    if (curve.size() < 2) throw DataError("underfit check needs at least 2 curve points");
    if (curve.front().variance_removed != 0.0)
        throw DataError("curve must start at variance_removed = 0");
    for (std::size_t i = 1; i < curve.size(); ++i)
        if (curve[i].variance_removed <= curve[i - 1].variance_removed)
            throw DataError("curve variance axis must be strictly increasing");

    const CurvePoint& op = curve.back();
    UnderfitResult r;
    r.gap = op.train_acc - op.test_acc;
    r.train_drop = curve.front().train_acc - op.train_acc;
    if (r.gap > gap_max) {
        r.diagnosis = "overfitting: train/test gap " + format_double(r.gap) + " exceeds " +
                      format_double(gap_max) + "; choose a weaker base model";
    } else if (r.train_drop < drop_min) {
        r.diagnosis = "no information loss: train accuracy dropped only " +
                      format_double(r.train_drop) + " (need >= " + format_double(drop_min) + ")";
    } else {
        r.passed = true;
        r.diagnosis = "underfitting confirmed: gap " + format_double(r.gap) + ", train drop " +
                      format_double(r.train_drop);
    }
    return r;
}

/// Refusal carrying the measured curve, so callers can attach it to the
/// error report.
class GuardError : public Error {
public:
    GuardError(UnderfitResult result, std::vector<CurvePoint> curve)
        : Error("underfit guard refused the cut configuration: " + result.diagnosis),
          result_(std::move(result)),
          curve_(std::move(curve)) {}

    const UnderfitResult& result() const { return result_; }
    const std::vector<CurvePoint>& curve() const { return curve_; }

private:
    UnderfitResult result_;
    std::vector<CurvePoint> curve_;
};

struct MixedGenParams {
    double k_fraction = 0.05;
    int k_min = 5;
    std::uint64_t seed = 1;
    double gap_max = 0.05;
    double drop_min = 0.02;
};

struct MixedGenResult {
    LabeledPool pool;
    std::vector<CurvePoint> curve; // full sweep over n_drop = 0..d-1
    UnderfitResult guard;
    std::optional<ModelArtifact> cut_artifact;
    double dropped_variance_fraction = 0.0;
};

/// Mixed-data labeling: project the cleaned set past its leading principal
/// components, train the (non-overfit) model there, and label its test-half
/// errors DataMixedUp. Refuses with the measured curve when the accuracy
/// sweep shows the Fig.2 overfitting pattern.
inline MixedGenResult gen_mixed_labels(const Dataset& easy, const std::string& dataset_name,
                                       const ModelConfig& cut_cfg, std::size_t n_drop,
                                       const MixedGenParams& params) {
    if (n_drop < 1 || n_drop >= easy.cols())
        throw ConfigError("n_drop must be in [1, n_features)");

    auto [std_easy, pre_scaler] = standardize(easy);
    PcaModel pca = pca_fit(std_easy);

    MixedGenResult result;

    // Accuracy sweep over the number of dropped components; a shared split
    // seed keeps train/test membership aligned across sweep points.
    struct Stage {
        Dataset train;
        Dataset test;
        Scaler scaler;
        TrainedModel model;
        double dropped_fraction;
    };
    std::optional<Stage> operating;
    for (std::size_t drop = 0; drop < easy.cols(); ++drop) {
        Dataset projected =
            drop == 0 ? pca_project_full(pca, std_easy) : pca_drop_top(pca, std_easy, drop).first;
        double fraction = 0.0;
        if (drop > 0) {
            double dropped = 0.0;
            for (std::size_t kk = 0; kk < drop; ++kk) dropped += pca.explained_variance()[kk];
            fraction = pca.total_variance() > 0.0 ? dropped / pca.total_variance() : 0.0;
        }
        SplitPair halves = split_random(projected, 0.5, params.seed);
        Scaler scaler = fit_scaler(halves.part_a);
        Dataset train = scaler.transform(halves.part_a);
        Dataset test = scaler.transform(halves.part_b);
        TrainedModel model = TrainedModel::train(train, cut_cfg);
        CurvePoint point{fraction, model.accuracy(train), model.accuracy(test)};
        result.curve.push_back(point);
        if (drop == n_drop)
            operating = Stage{std::move(train), std::move(test), std::move(scaler),
                              std::move(model), fraction};
    }

    std::vector<CurvePoint> up_to_operating(
        result.curve.begin(), result.curve.begin() + static_cast<std::ptrdiff_t>(n_drop + 1));
    result.guard = underfit_check(up_to_operating, params.gap_max, params.drop_min);
    if (!result.guard.passed) throw GuardError(result.guard, result.curve);

    Stage& stage = *operating;
    result.dropped_variance_fraction = stage.dropped_fraction;
    const int k = KnnIndex::default_k(stage.train.rows(), params.k_fraction, params.k_min);
    ProfileExtractor extractor(stage.train, stage.model, k);
    for (std::size_t i = 0; i < stage.test.rows(); ++i) {
        ProfileVector p = extractor.extract(stage.test.row(i), stage.test.label(i));
        const bool wrong = stage.model.predict_label(stage.test.row(i)) != stage.test.label(i);
        p.diagnosis = wrong ? DiagnosisLabel::DataMixedUp : DiagnosisLabel::GoodPrediction;
        result.pool.profiles.push_back(std::move(p));
        result.pool.provenance.push_back({dataset_name, family_of(cut_cfg), "cut",
                                          describe(cut_cfg) + ", drop " + std::to_string(n_drop),
                                          params.seed, stage.test.row_id(i)});
    }
    result.cut_artifact = ModelArtifact{stage.model, pre_scaler, std::move(pca), n_drop,
                                        std::move(stage.scaler)};
    return result;
}

/// Merge contributions into one training pool; every diagnosis class must be
/// represented or meta-training would be degenerate.
inline LabeledPool build_pool(const std::vector<LabeledPool>& contributions) {
    if (contributions.empty()) throw DataError("build_pool: no contributions");
    LabeledPool pool;
    for (const auto& c : contributions) pool.append(c);
    const auto counts = pool.class_counts();
    for (std::size_t c = 0; c < kNumDiagnosisClasses; ++c)
        if (counts[c] == 0)
            throw DataError("diagnosis class " + to_string(static_cast<DiagnosisLabel>(c)) +
                            " is absent from the pool");
    return pool;
}

} // namespace mcdiag
