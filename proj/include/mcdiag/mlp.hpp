#pragma once

#include <cmath>
#include <cstdint>
#include <random>
#include <span>
#include <vector>

#include "json.hpp"

#include "mcdiag/dataset.hpp"

namespace mcdiag {

struct MlpConfig {
    int hidden_size = 32;
    int n_iterations = 500;
    double learning_rate = 0.5;
    std::uint64_t seed = 0;

    void validate() const {
        if (hidden_size < 1) throw ConfigError("MlpConfig: hidden_size must be >= 1");
        if (n_iterations < 1) throw ConfigError("MlpConfig: n_iterations must be >= 1");
        if (!(learning_rate > 0.0)) throw ConfigError("MlpConfig: learning_rate must be > 0");
    }

    std::string describe() const {
        return std::to_string(n_iterations) + " iter, (" + std::to_string(hidden_size) + ",)hl";
    }

    nlohmann::json to_json() const {
        return {{"hidden_size", hidden_size},
                {"n_iterations", n_iterations},
                {"learning_rate", learning_rate},
                {"seed", seed}};
    }

    static MlpConfig from_json(const nlohmann::json& j) {
        MlpConfig c;
        c.hidden_size = j.at("hidden_size").get<int>();
        c.n_iterations = j.at("n_iterations").get<int>();
        c.learning_rate = j.at("learning_rate").get<double>();
        c.seed = j.at("seed").get<std::uint64_t>();
        return c;
    }
};

/// One-hidden-layer perceptron (tanh hidden, logistic output) trained by
/// full-batch gradient descent with classical momentum on log loss.
class MlpModel {
public:
    static constexpr double kMomentum = 0.9;

    static MlpModel train(const Dataset& d, const MlpConfig& cfg) {
        cfg.validate();
        if (d.empty()) throw DataError("cannot train on an empty dataset");
        if (!d.has_both_classes()) throw DataError("single-class dataset");

        MlpModel m;
        m.cfg_ = cfg;
        m.n_features_ = d.cols();
        const std::size_t h = static_cast<std::size_t>(cfg.hidden_size);
        const std::size_t dim = d.cols();
        const std::size_t n = d.rows();

        std::mt19937_64 rng(cfg.seed);
        const double bound1 = std::sqrt(6.0 / static_cast<double>(dim + h));
        const double bound2 = std::sqrt(6.0 / static_cast<double>(h + 1));
        std::uniform_real_distribution<double> u1(-bound1, bound1);
        std::uniform_real_distribution<double> u2(-bound2, bound2);
        m.w1_.resize(h * dim);
        for (auto& w : m.w1_) w = u1(rng);
        m.b1_.assign(h, 0.0);
        m.w2_.resize(h);
        for (auto& w : m.w2_) w = u2(rng);
        m.b2_ = 0.0;

        std::vector<double> g_w1(h * dim);
        std::vector<double> g_b1(h);
        std::vector<double> g_w2(h);
        std::vector<double> v_w1(h * dim, 0.0);
        std::vector<double> v_b1(h, 0.0);
        std::vector<double> v_w2(h, 0.0);
        double g_b2 = 0.0;
        double v_b2 = 0.0;
        std::vector<double> hidden(h);

        for (int it = 0; it < cfg.n_iterations; ++it) {
            std::fill(g_w1.begin(), g_w1.end(), 0.0);
            std::fill(g_b1.begin(), g_b1.end(), 0.0);
            std::fill(g_w2.begin(), g_w2.end(), 0.0);
            g_b2 = 0.0;
            double loss = 0.0;

            for (std::size_t r = 0; r < n; ++r) {
                auto x = d.row(r);
                for (std::size_t k = 0; k < h; ++k) {
                    double a = m.b1_[k];
                    const double* wrow = m.w1_.data() + k * dim;
                    for (std::size_t j = 0; j < dim; ++j) a += wrow[j] * x[j];
                    hidden[k] = std::tanh(a);
                }
                double z = m.b2_;
                for (std::size_t k = 0; k < h; ++k) z += m.w2_[k] * hidden[k];
                const double p1 = 1.0 / (1.0 + std::exp(-z));
                const double y = static_cast<double>(d.label(r));
                loss -= y * std::log(std::max(p1, 1e-15)) +
                        (1.0 - y) * std::log(std::max(1.0 - p1, 1e-15));
                const double dz = p1 - y;
                g_b2 += dz;
                for (std::size_t k = 0; k < h; ++k) {
                    g_w2[k] += dz * hidden[k];
                    const double dh = dz * m.w2_[k] * (1.0 - hidden[k] * hidden[k]);
                    g_b1[k] += dh;
                    double* grow = g_w1.data() + k * dim;
                    for (std::size_t j = 0; j < dim; ++j) grow[j] += dh * x[j];
                }
            }

            if (!std::isfinite(loss))
                throw Error("mlp training diverged at iteration " + std::to_string(it) +
                            " (loss non-finite; lr=" + format_double(cfg.learning_rate) +
                            ", hidden=" + std::to_string(cfg.hidden_size) + ")");

            const double scale = cfg.learning_rate / static_cast<double>(n);
            for (std::size_t i = 0; i < h * dim; ++i) {
                v_w1[i] = kMomentum * v_w1[i] - scale * g_w1[i];
                m.w1_[i] += v_w1[i];
            }
            for (std::size_t k = 0; k < h; ++k) {
                v_b1[k] = kMomentum * v_b1[k] - scale * g_b1[k];
                m.b1_[k] += v_b1[k];
                v_w2[k] = kMomentum * v_w2[k] - scale * g_w2[k];
                m.w2_[k] += v_w2[k];
            }
            v_b2 = kMomentum * v_b2 - scale * g_b2;
            m.b2_ += v_b2;
        }
        return m;
    }

    double prob_class0(std::span<const double> x) const {
        if (x.size() != n_features_)
            throw DataError("feature dimension mismatch: expected " + std::to_string(n_features_) +
                            ", got " + std::to_string(x.size()));
        const std::size_t h = w2_.size();
        double z = b2_;
        for (std::size_t k = 0; k < h; ++k) {
            double a = b1_[k];
            const double* wrow = w1_.data() + k * n_features_;
            for (std::size_t j = 0; j < n_features_; ++j) a += wrow[j] * x[j];
            z += w2_[k] * std::tanh(a);
        }
        return 1.0 - 1.0 / (1.0 + std::exp(-z));
    }

    std::size_t n_features() const { return n_features_; }
    const MlpConfig& config() const { return cfg_; }

    nlohmann::json to_json() const {
        return {{"config", cfg_.to_json()}, {"n_features", n_features_}, {"w1", w1_},
                {"b1", b1_},                {"w2", w2_},                 {"b2", b2_}};
    }

    static MlpModel from_json(const nlohmann::json& j) {
        MlpModel m;
        m.cfg_ = MlpConfig::from_json(j.at("config"));
        m.n_features_ = j.at("n_features").get<std::size_t>();
        m.w1_ = j.at("w1").get<std::vector<double>>();
        m.b1_ = j.at("b1").get<std::vector<double>>();
        m.w2_ = j.at("w2").get<std::vector<double>>();
        m.b2_ = j.at("b2").get<double>();
        return m;
    }

private:
    MlpConfig cfg_;
    std::size_t n_features_ = 0;
    std::vector<double> w1_; // hidden x features, row-major
    std::vector<double> b1_;
    std::vector<double> w2_;
    double b2_ = 0.0;
};

} // namespace mcdiag
