#pragma once

#include <cmath>
#include <cstdint>
#include <numbers>
#include <random>
#include <vector>

#include "mcdiag/dataset.hpp"

namespace mcdiag {

namespace detail {

inline Dataset assemble(std::vector<double> vals, std::size_t n_cols, std::vector<int> labels,
                        std::vector<std::string> names) {
    std::vector<RowId> ids(labels.size());
    std::iota(ids.begin(), ids.end(), 0);
    return Dataset(std::move(vals), n_cols, std::move(labels), std::move(ids), std::move(names));
}

} // namespace detail

struct BlobsResult {
    Dataset data;
    std::vector<std::size_t> flipped_rows; // rows whose label was noise-flipped
};

/// Two isotropic Gaussian blobs at +/- separation/2 along the first axis,
/// optionally with a fraction of labels flipped at random.
inline BlobsResult make_blobs(std::size_t n, std::size_t dim, double separation,
                              double label_noise, std::uint64_t seed) {
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> gauss(0.0, 1.0);
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    std::vector<double> vals;
    vals.reserve(n * dim);
    std::vector<int> labels;
    labels.reserve(n);
    std::vector<std::size_t> flipped;
    for (std::size_t i = 0; i < n; ++i) {
        const int y = i % 2 == 0 ? 0 : 1;
        const double center = (y == 0 ? -0.5 : 0.5) * separation;
        vals.push_back(center + gauss(rng));
        for (std::size_t c = 1; c < dim; ++c) vals.push_back(gauss(rng));
        int out = y;
        if (label_noise > 0.0 && unit(rng) < label_noise) {
            out = 1 - y;
            flipped.push_back(i);
        }
        labels.push_back(out);
    }
    std::vector<std::string> names;
    for (std::size_t c = 0; c < dim; ++c) names.push_back("x" + std::to_string(c));
    return {detail::assemble(std::move(vals), dim, std::move(labels), std::move(names)),
            std::move(flipped)};
}

/// Two interleaving half-moons with Gaussian jitter; a clean curved boundary
/// that low-capacity models cannot follow.
inline Dataset make_moons(std::size_t n, double noise_sigma, std::uint64_t seed) {
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> gauss(0.0, noise_sigma);
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    std::vector<double> vals;
    vals.reserve(n * 2);
    std::vector<int> labels;
    labels.reserve(n);
    for (std::size_t i = 0; i < n; ++i) {
        const int y = i % 2 == 0 ? 0 : 1;
        const double t = unit(rng) * std::numbers::pi;
        double x0 = 0.0;
        double x1 = 0.0;
        if (y == 0) {
            x0 = std::cos(t);
            x1 = std::sin(t);
        } else {
            x0 = 1.0 - std::cos(t);
            x1 = 0.5 - std::sin(t);
        }
        vals.push_back(x0 + gauss(rng));
        vals.push_back(x1 + gauss(rng));
        labels.push_back(y);
    }
    return detail::assemble(std::move(vals), 2, std::move(labels), {"x0", "x1"});
}

struct RingsResult {
    Dataset data;
    std::vector<bool> ambiguous; // inside the 50/50 band around the boundary circle
    double boundary_radius = 0.0;
    double band_half_width = 0.0;
};

/// Controllable-overlap generator: points uniform in a disk, labeled by
/// radius against a boundary circle. Inside |r - boundary| < band the label
/// is a fair coin, which makes the band the exact Bayes-ambiguous region.
inline RingsResult make_rings(std::size_t n, double band_half_width, std::uint64_t seed,
                              double boundary_radius = 1.6, double outer_radius = 2.6) {
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    std::vector<double> vals;
    vals.reserve(n * 2);
    std::vector<int> labels;
    labels.reserve(n);
    std::vector<bool> amb;
    amb.reserve(n);
    for (std::size_t i = 0; i < n; ++i) {
        const double r = outer_radius * std::sqrt(unit(rng));
        const double theta = 2.0 * std::numbers::pi * unit(rng);
        vals.push_back(r * std::cos(theta));
        vals.push_back(r * std::sin(theta));
        const bool in_band = std::abs(r - boundary_radius) < band_half_width;
        int y = r > boundary_radius ? 1 : 0;
        if (in_band) y = unit(rng) < 0.5 ? 0 : 1;
        labels.push_back(y);
        amb.push_back(in_band);
    }
    return {detail::assemble(std::move(vals), 2, std::move(labels), {"x0", "x1"}), std::move(amb),
            boundary_radius, band_half_width};
}

/// 3-D set whose class signal lives in the top-variance principal direction
/// (two correlated carriers), so dropping the first component removes the
/// signal entirely.
inline Dataset make_axis_signal(std::size_t n, std::uint64_t seed) {
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> gauss(0.0, 1.0);
    std::vector<double> vals;
    vals.reserve(n * 3);
    std::vector<int> labels;
    labels.reserve(n);
    for (std::size_t i = 0; i < n; ++i) {
        const int y = i % 2 == 0 ? 0 : 1;
        const double s = y == 0 ? -1.6 : 1.6;
        vals.push_back(s + 0.8 * gauss(rng));
        vals.push_back(s + 0.8 * gauss(rng));
        vals.push_back(gauss(rng));
        labels.push_back(y);
    }
    return detail::assemble(std::move(vals), 3, std::move(labels), {"x0", "x1", "x2"});
}

// ---- Surrogates for the three small tabular benchmark sets ----
//
// The real files are not redistributable here, so these reproduce the
// published shape (row count, class balance, feature count) with a synthetic
// joint distribution whose difficulty is tuned to behave similarly under the
// pipeline: a near-separable set, a moderately noisy set, and a weak-signal
// set. Column names follow the originals so real CSVs can be dropped in.

/// 1371 rows, 761 / 610, 4 features. The class boundary is a step function
/// of the first feature (axis-aligned, so a deep tree ensemble separates it
/// exactly) with an empty margin band and ~1.2% of rows placed on the wrong
/// side; low-capacity models miss the finer steps.
inline Dataset make_banknote_like(std::uint64_t seed = 20240801) {
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> gauss(0.0, 1.0);
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    const std::size_t n0 = 761;
    const std::size_t n1 = 610;
    const double steps[8] = {-1.4, 0.8, -0.2, 1.6, -1.0, 0.4, -1.8, 1.2}; // per x0 octile
    std::vector<double> vals;
    vals.reserve((n0 + n1) * 4);
    std::vector<int> labels;
    labels.reserve(n0 + n1);
    for (std::size_t i = 0; i < n0 + n1; ++i) {
        const int y = i < n0 ? 0 : 1;
        // keep a small empty margin around the step edges in x0 as well
        double x0 = 0.0;
        do {
            x0 = -4.0 + 8.0 * unit(rng);
        } while (std::abs(x0 - std::round(x0)) < 0.10 && std::round(x0) > -4.0 &&
                 std::round(x0) < 4.0);
        const double threshold = steps[std::min(7, static_cast<int>(x0 + 4.0))];
        // ~1.2% of rows sit slightly past the boundary on the wrong side,
        // inside the otherwise empty band: unambiguously misclassified by a
        // strong model, so the cleaning procedure removes them early
        double offset = unit(rng) < 0.012 ? -(0.05 + 0.25 * unit(rng))
                                          : std::abs(1.1 * gauss(rng)) + 0.35;
        const double x1 = y == 0 ? threshold + offset : threshold - offset;
        const double x2 = 0.7 * x1 + 1.1 * gauss(rng);
        const double x3 = 0.7 * x0 + 1.1 * gauss(rng);
        vals.insert(vals.end(), {x0, x1, x2, x3});
        labels.push_back(y);
    }
    return detail::assemble(std::move(vals), 4, std::move(labels),
                            {"variance", "skewness", "curtosis", "entropy"});
}

/// 767 rows, 500 / 267, 8 features; moderate class overlap on three signal
/// dimensions plus nuisance columns.
inline Dataset make_diabetes_like(std::uint64_t seed = 20240802) {
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> gauss(0.0, 1.0);
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    const std::size_t n0 = 500;
    const std::size_t n1 = 267;
    std::vector<double> vals;
    vals.reserve((n0 + n1) * 8);
    std::vector<int> labels;
    labels.reserve(n0 + n1);
    for (std::size_t i = 0; i < n0 + n1; ++i) {
        const int y = i < n0 ? 0 : 1;
        double base[3];
        if (y == 0) {
            base[0] = gauss(rng);
            base[1] = gauss(rng);
            base[2] = gauss(rng);
        } else if (unit(rng) < 0.7) {
            base[0] = 1.4 + gauss(rng);
            base[1] = 1.1 + gauss(rng);
            base[2] = 0.9 + gauss(rng);
        } else {
            base[0] = -0.9 + 0.8 * gauss(rng);
            base[1] = 1.6 + 0.8 * gauss(rng);
            base[2] = -0.5 + 0.8 * gauss(rng);
        }
        vals.insert(vals.end(),
                    {base[0], base[1], base[2], 0.5 * base[0] + 0.9 * gauss(rng), gauss(rng),
                     gauss(rng), 0.4 * base[1] + gauss(rng), gauss(rng)});
        labels.push_back(y);
    }
    return detail::assemble(std::move(vals), 8, std::move(labels),
                            {"Pregnancies", "Glucose", "BloodPressure", "SkinThickness", "Insulin",
                             "BMI", "DiabetesPedigreeFunction", "Age"});
}

/// 3276 rows, 1998 / 1278, 9 features; weak signal buried in noise.
inline Dataset make_water_like(std::uint64_t seed = 20240803) {
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> gauss(0.0, 1.0);
    const std::size_t n0 = 1998;
    const std::size_t n1 = 1278;
    std::vector<double> vals;
    vals.reserve((n0 + n1) * 9);
    std::vector<int> labels;
    labels.reserve(n0 + n1);
    for (std::size_t i = 0; i < n0 + n1; ++i) {
        const int y = i < n0 ? 0 : 1;
        const double shift = y == 0 ? 0.0 : 0.75;
        const double a = shift + gauss(rng);
        const double b = shift * 0.8 + gauss(rng);
        const double c = shift * 0.6 + gauss(rng);
        vals.insert(vals.end(), {a, b, c, gauss(rng), gauss(rng), gauss(rng),
                                 0.3 * a + gauss(rng), gauss(rng), gauss(rng)});
        labels.push_back(y);
    }
    return detail::assemble(std::move(vals), 9, std::move(labels),
                            {"ph", "Hardness", "Solids", "Chloramines", "Sulfate", "Conductivity",
                             "Organic_carbon", "Trihalomethanes", "Turbidity"});
}

} // namespace mcdiag
