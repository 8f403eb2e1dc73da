#pragma once

#include <algorithm>
#include <charconv>
#include <cstdint>
#include <fstream>
#include <optional>
#include <random>
#include <span>
#include <sstream>
#include <string>
#include <unordered_map>
#include <unordered_set>
#include <vector>

#include "json.hpp"

#include "mcdiag/common.hpp"

namespace mcdiag {

using RowId = std::int64_t;

/// Immutable feature matrix with binary labels and stable row identifiers.
/// Row ids survive subsetting, so points can be traced through splits,
/// cleaning rounds and pool provenance.
class Dataset {
public:
    Dataset() = default;

    Dataset(std::vector<double> values, std::size_t n_cols, std::vector<int> labels,
            std::vector<RowId> row_ids, std::vector<std::string> feature_names)
        : values_(std::move(values)),
          n_cols_(n_cols),
          labels_(std::move(labels)),
          row_ids_(std::move(row_ids)),
          feature_names_(std::move(feature_names)) {
        if (n_cols_ == 0) throw DataError("dataset needs at least one feature column");
        if (values_.size() % n_cols_ != 0) throw DataError("feature matrix shape mismatch");
        const std::size_t n = values_.size() / n_cols_;
        if (labels_.size() != n || row_ids_.size() != n)
            throw DataError("rows, labels and row_ids must have equal length");
        if (feature_names_.size() != n_cols_)
            throw DataError("feature_names length must equal column count");
        for (int y : labels_)
            if (y != 0 && y != 1) throw DataError("non-binary label");
        for (double v : values_)
            if (!std::isfinite(v)) throw DataError("non-finite feature value");
        id_to_row_.reserve(n);
        for (std::size_t i = 0; i < n; ++i) {
            if (!id_to_row_.emplace(row_ids_[i], i).second)
                throw DataError("duplicate row_id " + std::to_string(row_ids_[i]));
        }
    }

    std::size_t rows() const { return labels_.size(); }
    std::size_t cols() const { return n_cols_; }
    bool empty() const { return labels_.empty(); }

    double at(std::size_t r, std::size_t c) const { return values_[r * n_cols_ + c]; }

    std::span<const double> row(std::size_t r) const {
        return {values_.data() + r * n_cols_, n_cols_};
    }

    const std::vector<double>& values() const { return values_; }
    const std::vector<int>& labels() const { return labels_; }
    int label(std::size_t r) const { return labels_[r]; }
    const std::vector<RowId>& row_ids() const { return row_ids_; }
    RowId row_id(std::size_t r) const { return row_ids_[r]; }
    const std::vector<std::string>& feature_names() const { return feature_names_; }

    std::optional<std::size_t> find_row(RowId id) const {
        auto it = id_to_row_.find(id);
        if (it == id_to_row_.end()) return std::nullopt;
        return it->second;
    }

    std::size_t count_label(int y) const {
        return static_cast<std::size_t>(std::count(labels_.begin(), labels_.end(), y));
    }

    bool has_both_classes() const { return count_label(0) > 0 && count_label(1) > 0; }

    Dataset subset(const std::vector<std::size_t>& keep) const {
        std::vector<double> vals;
        vals.reserve(keep.size() * n_cols_);
        std::vector<int> labs;
        labs.reserve(keep.size());
        std::vector<RowId> ids;
        ids.reserve(keep.size());
        for (std::size_t r : keep) {
            auto rv = row(r);
            vals.insert(vals.end(), rv.begin(), rv.end());
            labs.push_back(labels_[r]);
            ids.push_back(row_ids_[r]);
        }
        return Dataset(std::move(vals), n_cols_, std::move(labs), std::move(ids), feature_names_);
    }

    std::uint64_t fingerprint() const {
        std::uint64_t h = fnv1a_init();
        h = fnv1a_step(h, &n_cols_, sizeof(n_cols_));
        h = fnv1a_step(h, values_.data(), values_.size() * sizeof(double));
        h = fnv1a_step(h, labels_.data(), labels_.size() * sizeof(int));
        h = fnv1a_step(h, row_ids_.data(), row_ids_.size() * sizeof(RowId));
        return h;
    }

    std::string to_csv() const {
        std::ostringstream out;
        out << "row_id";
        for (const auto& n : feature_names_) out << ',' << n;
        out << ",label\n";
        for (std::size_t r = 0; r < rows(); ++r) {
            out << row_ids_[r];
            for (std::size_t c = 0; c < n_cols_; ++c) out << ',' << format_double(at(r, c));
            out << ',' << labels_[r] << '\n';
        }
        return out.str();
    }

private:
    std::vector<double> values_; // row-major rows() x cols()
    std::size_t n_cols_ = 0;
    std::vector<int> labels_;
    std::vector<RowId> row_ids_;
    std::vector<std::string> feature_names_;
    std::unordered_map<RowId, std::size_t> id_to_row_;
};

struct CsvLoadResult {
    Dataset data;
    std::size_t rows_dropped_missing = 0;
};

namespace detail {

inline std::optional<double> parse_field(const std::string& raw) {
    std::string s = trim(raw);
    if (s.empty()) return std::nullopt;
    const char* begin = s.data();
    const char* end = begin + s.size();
    double v = 0.0;
    auto [ptr, ec] = std::from_chars(begin, end, v);
    if (ec != std::errc() || ptr != end) return std::nullopt;
    if (!std::isfinite(v)) return std::nullopt;
    return v;
}

} // namespace detail

/// Reads a comma-separated file with a header row. Rows with missing or
/// non-numeric feature fields are dropped and counted; a label outside {0,1}
/// is a hard error.
inline CsvLoadResult load_csv(const std::filesystem::path& path, const std::string& label_column) {
    std::ifstream in(path);
    if (!in) throw DataError("cannot open CSV file: " + path.string());

    std::string header;
    do {
        if (!std::getline(in, header)) throw DataError("empty CSV file: " + path.string());
        if (!header.empty() && header.back() == '\r') header.pop_back();
    } while (trim(header).empty() || header[0] == '#');

    std::vector<std::string> cols = split(header, ',');
    for (auto& c : cols) c = trim(c);
    std::ptrdiff_t label_idx = -1;
    std::vector<std::string> feature_names;
    std::vector<std::size_t> feature_cols;
    for (std::size_t i = 0; i < cols.size(); ++i) {
        if (cols[i] == label_column) {
            if (label_idx >= 0) throw DataError("duplicate label column: " + label_column);
            label_idx = static_cast<std::ptrdiff_t>(i);
        } else if (cols[i] != "row_id") {
            feature_names.push_back(cols[i]);
            feature_cols.push_back(i);
        }
    }
    std::ptrdiff_t id_idx = -1;
    for (std::size_t i = 0; i < cols.size(); ++i)
        if (cols[i] == "row_id") id_idx = static_cast<std::ptrdiff_t>(i);
    if (label_idx < 0) throw DataError("label column not found: " + label_column);
    if (feature_names.empty()) throw DataError("no feature columns besides the label");

    std::vector<double> values;
    std::vector<int> labels;
    std::vector<RowId> ids;
    std::size_t dropped = 0;
    std::string line;
    RowId data_row = 0;
    while (std::getline(in, line)) {
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (trim(line).empty() || line[0] == '#') continue;
        const RowId this_id_default = data_row++;
        std::vector<std::string> fields = split(line, ',');
        if (fields.size() != cols.size()) {
            ++dropped;
            continue;
        }
        auto label_raw = detail::parse_field(fields[static_cast<std::size_t>(label_idx)]);
        if (!label_raw) {
            ++dropped;
            continue;
        }
        if (*label_raw != 0.0 && *label_raw != 1.0)
            throw DataError("non-binary label value '" +
                            trim(fields[static_cast<std::size_t>(label_idx)]) + "' in " +
                            path.string());
        std::vector<double> rowvals;
        rowvals.reserve(feature_cols.size());
        bool ok = true;
        for (std::size_t c : feature_cols) {
            auto v = detail::parse_field(fields[c]);
            if (!v) {
                ok = false;
                break;
            }
            rowvals.push_back(*v);
        }
        if (!ok) {
            ++dropped;
            continue;
        }
        RowId id = this_id_default;
        if (id_idx >= 0) {
            auto v = detail::parse_field(fields[static_cast<std::size_t>(id_idx)]);
            if (!v) {
                ++dropped;
                continue;
            }
            id = static_cast<RowId>(*v);
        }
        values.insert(values.end(), rowvals.begin(), rowvals.end());
        labels.push_back(static_cast<int>(*label_raw));
        ids.push_back(id);
    }
    if (labels.empty()) throw DataError("all rows dropped while loading " + path.string());
    const std::size_t n_features = feature_names.size();
    return {Dataset(std::move(values), n_features, std::move(labels), std::move(ids),
                    std::move(feature_names)),
            dropped};
}

/// Per-feature z-scoring parameters (population variance). Constant columns
/// map to zero and are flagged instead of dividing by ~0.
struct Scaler {
    std::vector<double> means;
    std::vector<double> stds; // 1.0 where zero_variance
    std::vector<bool> zero_variance;

    std::size_t cols() const { return means.size(); }

    void transform_row(std::span<const double> in, std::span<double> out) const {
        for (std::size_t c = 0; c < means.size(); ++c)
            out[c] = zero_variance[c] ? 0.0 : (in[c] - means[c]) / stds[c];
    }

    std::vector<double> transform_row(std::span<const double> in) const {
        std::vector<double> out(means.size());
        transform_row(in, out);
        return out;
    }

    Dataset transform(const Dataset& d) const {
        if (d.cols() != cols()) throw DataError("scaler/dataset column mismatch");
        std::vector<double> vals(d.values().size());
        for (std::size_t r = 0; r < d.rows(); ++r)
            transform_row(d.row(r), std::span<double>(vals.data() + r * d.cols(), d.cols()));
        return Dataset(std::move(vals), d.cols(), d.labels(), d.row_ids(), d.feature_names());
    }

    nlohmann::json to_json() const {
        return {{"means", means}, {"stds", stds}, {"zero_variance", zero_variance}};
    }

    static Scaler from_json(const nlohmann::json& j) {
        Scaler s;
        s.means = j.at("means").get<std::vector<double>>();
        s.stds = j.at("stds").get<std::vector<double>>();
        s.zero_variance = j.at("zero_variance").get<std::vector<bool>>();
        return s;
    }
};

inline Scaler fit_scaler(const Dataset& d) {
    if (d.empty()) throw DataError("cannot standardize an empty dataset");
    const std::size_t n = d.rows();
    const std::size_t m = d.cols();
    Scaler s;
    s.means.assign(m, 0.0);
    s.stds.assign(m, 1.0);
    s.zero_variance.assign(m, false);
    for (std::size_t c = 0; c < m; ++c) {
        double acc = 0.0;
        for (std::size_t r = 0; r < n; ++r) acc += d.at(r, c);
        s.means[c] = acc / static_cast<double>(n);
        double var = 0.0;
        for (std::size_t r = 0; r < n; ++r) {
            double delta = d.at(r, c) - s.means[c];
            var += delta * delta;
        }
        var /= static_cast<double>(n);
        if (var <= 1e-24) {
            s.zero_variance[c] = true;
        } else {
            s.stds[c] = std::sqrt(var);
        }
    }
    return s;
}

inline std::pair<Dataset, Scaler> standardize(const Dataset& d) {
    Scaler s = fit_scaler(d);
    return {s.transform(d), std::move(s)};
}

struct SplitPair {
    Dataset part_a;
    Dataset part_b;
    std::uint64_t seed = 0;
};

/// Random disjoint partition; part_a receives floor(fraction * rows).
inline SplitPair split_random(const Dataset& d, double fraction, std::uint64_t seed) {
    if (!(fraction > 0.0 && fraction < 1.0)) throw ConfigError("split fraction must be in (0,1)");
    if (d.rows() < 2) throw DataError("need at least 2 rows to split");
    std::vector<std::size_t> order(d.rows());
    std::iota(order.begin(), order.end(), 0);
    std::mt19937_64 rng(seed);
    std::shuffle(order.begin(), order.end(), rng);
    const auto size_a =
        static_cast<std::size_t>(std::floor(fraction * static_cast<double>(d.rows())));
    std::vector<std::size_t> a(order.begin(), order.begin() + static_cast<std::ptrdiff_t>(size_a));
    std::vector<std::size_t> b(order.begin() + static_cast<std::ptrdiff_t>(size_a), order.end());
    std::sort(a.begin(), a.end());
    std::sort(b.begin(), b.end());
    return {d.subset(a), d.subset(b), seed};
}

} // namespace mcdiag
