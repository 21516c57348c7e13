#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <random>
#include <span>
#include <string>
#include <vector>

#include "evadelab/core.hpp"

#include <json.hpp>

namespace evadelab {

inline constexpr std::size_t kHidden1 = 25;
inline constexpr std::size_t kHidden2 = 10;

/// Fully connected k -> 25 (ReLU) -> 10 (tanh) -> 1 (sigmoid) classifier.
/// Weight matrices are row-major (fan_out x fan_in).
struct MlpModel {
    std::size_t input_size = 0;
    Matrix w1, w2, w3;
    std::vector<double> b1, b2, b3;
    std::int64_t train_step_count = 0;

    std::vector<std::size_t> layer_sizes() const { return {input_size, kHidden1, kHidden2, 1}; }
};

struct TrainConfig {
    double learning_rate = 0.001;
    double dropout = 0.5;
    int epochs = 20;
    int batch_size = 16;
    std::int64_t seed = 0;
};

struct TrainLog {
    struct Epoch {
        double mean_loss = 0.0;
        double train_accuracy = 0.0;
    };
    std::vector<Epoch> epochs;
    double final_loss = 0.0;
};

struct TrainResult {
    MlpModel model;
    TrainLog log;
};

inline double sigmoid(double z) { return 1.0 / (1.0 + std::exp(-z)); }

/// Glorot-uniform weights, zero biases.
inline MlpModel init_model(std::size_t k, std::int64_t seed) {
    if (k < 1) throw std::invalid_argument("init_model: input size must be >= 1");
    MlpModel m;
    m.input_size = k;
    m.w1 = Matrix(kHidden1, k);
    m.w2 = Matrix(kHidden2, kHidden1);
    m.w3 = Matrix(1, kHidden2);
    m.b1.assign(kHidden1, 0.0);
    m.b2.assign(kHidden2, 0.0);
    m.b3.assign(1, 0.0);

    std::mt19937_64 rng(static_cast<std::uint64_t>(seed));
    auto fill = [&rng](Matrix& w) {
        const double limit = std::sqrt(6.0 / static_cast<double>(w.rows + w.cols));
        std::uniform_real_distribution<double> dist(-limit, limit);
        for (double& v : w.data) v = dist(rng);
    };
    fill(m.w1);
    fill(m.w2);
    fill(m.w3);
    return m;
}

namespace detail {

struct ForwardTrace {
    std::vector<double> h1;  // post-ReLU (and post-dropout during training)
    std::vector<double> h2;  // post-tanh (and post-dropout during training)
    double p = 0.0;
};

// Inference-mode forward; no dropout.
inline ForwardTrace forward_trace(const MlpModel& m, std::span<const double> x) {
    ForwardTrace t;
    t.h1.resize(kHidden1);
    t.h2.resize(kHidden2);
    for (std::size_t i = 0; i < kHidden1; ++i) {
        double z = m.b1[i];
        const double* row = m.w1.row(i);
        for (std::size_t j = 0; j < m.input_size; ++j) z += row[j] * x[j];
        t.h1[i] = z > 0.0 ? z : 0.0;
    }
    for (std::size_t i = 0; i < kHidden2; ++i) {
        double z = m.b2[i];
        const double* row = m.w2.row(i);
        for (std::size_t j = 0; j < kHidden1; ++j) z += row[j] * t.h1[j];
        t.h2[i] = std::tanh(z);
    }
    double z3 = m.b3[0];
    for (std::size_t j = 0; j < kHidden2; ++j) z3 += m.w3.row(0)[j] * t.h2[j];
    t.p = sigmoid(z3);
    return t;
}

inline double clamped_bce(double p, int y) {
    constexpr double eps = 1e-12;
    const double q = std::clamp(p, eps, 1.0 - eps);
    return y == 1 ? -std::log(q) : -std::log(1.0 - q);
}

}  // namespace detail

/// Malicious-class probability; dropout is never applied at inference.
inline double forward(const MlpModel& m, std::span<const double> x) {
    if (x.size() != m.input_size) throw std::invalid_argument("forward: input length mismatch");
    return detail::forward_trace(m, x).p;
}

/// Ties at exactly 0.5 classify as malicious.
inline int predict(const MlpModel& m, std::span<const double> x) {
    return forward(m, x) >= 0.5 ? 1 : 0;
}

inline std::vector<int> predict_batch(const MlpModel& m, const Matrix& X) {
    if (X.cols != m.input_size) throw std::invalid_argument("predict_batch: width mismatch");
    std::vector<int> out(X.rows);
    for (std::size_t i = 0; i < X.rows; ++i)
        out[i] = predict(m, std::span<const double>(X.row(i), X.cols));
    return out;
}

/// Gradient of the binary cross-entropy w.r.t. the input, dropout
/// disabled; the output-layer term is p - y exactly.
inline std::vector<double> input_gradient(const MlpModel& m, std::span<const double> x, int y) {
    if (x.size() != m.input_size)
        throw std::invalid_argument("input_gradient: input length mismatch");
    const auto t = detail::forward_trace(m, x);
    const double dz3 = t.p - static_cast<double>(y);

    std::vector<double> dz2(kHidden2);
    for (std::size_t i = 0; i < kHidden2; ++i)
        dz2[i] = m.w3.row(0)[i] * dz3 * (1.0 - t.h2[i] * t.h2[i]);

    std::vector<double> dz1(kHidden1);
    for (std::size_t i = 0; i < kHidden1; ++i) {
        if (t.h1[i] <= 0.0) {
            dz1[i] = 0.0;
            continue;
        }
        double acc = 0.0;
        for (std::size_t j = 0; j < kHidden2; ++j) acc += m.w2(j, i) * dz2[j];
        dz1[i] = acc;
    }

    std::vector<double> dx(m.input_size, 0.0);
    for (std::size_t i = 0; i < kHidden1; ++i) {
        if (dz1[i] == 0.0) continue;
        const double* row = m.w1.row(i);
        for (std::size_t j = 0; j < m.input_size; ++j) dx[j] += row[j] * dz1[i];
    }
    return dx;
}

/// Mini-batch gradient descent on mean binary cross-entropy with
/// inverted dropout on both hidden layers. Training starts from the
/// passed model's weights, which is what makes daily retraining keep the
/// old knowledge.
inline TrainResult train(const MlpModel& start, const Matrix& X, const std::vector<int>& y,
                         const TrainConfig& cfg) {
    if (X.rows == 0) throw std::invalid_argument("train: empty training set");
    if (X.cols != start.input_size) throw std::invalid_argument("train: width mismatch");
    if (y.size() != X.rows) throw std::invalid_argument("train: label count mismatch");
    if (cfg.epochs < 1) throw std::invalid_argument("train: epochs must be >= 1");
    if (cfg.batch_size < 1) throw std::invalid_argument("train: batch_size must be >= 1");
    if (!(cfg.learning_rate > 0.0)) throw std::invalid_argument("train: learning_rate must be > 0");
    if (!(cfg.dropout >= 0.0 && cfg.dropout < 1.0))
        throw std::invalid_argument("train: dropout must be in [0,1)");

    TrainResult res;
    res.model = start;
    MlpModel& m = res.model;
    const std::size_t n = X.rows;
    const std::size_t k = m.input_size;
    const double keep = 1.0 - cfg.dropout;

    std::mt19937_64 rng(static_cast<std::uint64_t>(cfg.seed));
    std::uniform_real_distribution<double> unit(0.0, 1.0);

    std::vector<std::size_t> order(n);
    for (std::size_t i = 0; i < n; ++i) order[i] = i;

    Matrix gw1(kHidden1, k), gw2(kHidden2, kHidden1), gw3(1, kHidden2);
    std::vector<double> gb1(kHidden1), gb2(kHidden2), gb3(1);
    std::vector<double> h1(kHidden1), h2(kHidden2), tanh2(kHidden2);
    std::vector<double> dz1(kHidden1), dz2(kHidden2);
    std::vector<double> mask1(kHidden1), mask2(kHidden2);

    for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
        std::shuffle(order.begin(), order.end(), rng);
        double loss_sum = 0.0;

        for (std::size_t batch_start = 0; batch_start < n;
             batch_start += static_cast<std::size_t>(cfg.batch_size)) {
            const std::size_t batch_end =
                std::min(n, batch_start + static_cast<std::size_t>(cfg.batch_size));
            const auto bn = static_cast<double>(batch_end - batch_start);

            std::fill(gw1.data.begin(), gw1.data.end(), 0.0);
            std::fill(gw2.data.begin(), gw2.data.end(), 0.0);
            std::fill(gw3.data.begin(), gw3.data.end(), 0.0);
            std::fill(gb1.begin(), gb1.end(), 0.0);
            std::fill(gb2.begin(), gb2.end(), 0.0);
            std::fill(gb3.begin(), gb3.end(), 0.0);

            for (std::size_t bi = batch_start; bi < batch_end; ++bi) {
                const double* x = X.row(order[bi]);
                const int label = y[order[bi]];

                if (cfg.dropout > 0.0) {
                    for (std::size_t i = 0; i < kHidden1; ++i)
                        mask1[i] = unit(rng) < keep ? 1.0 / keep : 0.0;
                    for (std::size_t i = 0; i < kHidden2; ++i)
                        mask2[i] = unit(rng) < keep ? 1.0 / keep : 0.0;
                } else {
                    std::fill(mask1.begin(), mask1.end(), 1.0);
                    std::fill(mask2.begin(), mask2.end(), 1.0);
                }

                for (std::size_t i = 0; i < kHidden1; ++i) {
                    double z = m.b1[i];
                    const double* row = m.w1.row(i);
                    for (std::size_t j = 0; j < k; ++j) z += row[j] * x[j];
                    h1[i] = (z > 0.0 ? z : 0.0) * mask1[i];
                }
                for (std::size_t i = 0; i < kHidden2; ++i) {
                    double z = m.b2[i];
                    const double* row = m.w2.row(i);
                    for (std::size_t j = 0; j < kHidden1; ++j) z += row[j] * h1[j];
                    tanh2[i] = std::tanh(z);
                    h2[i] = tanh2[i] * mask2[i];
                }
                double z3 = m.b3[0];
                for (std::size_t j = 0; j < kHidden2; ++j) z3 += m.w3.row(0)[j] * h2[j];
                const double p = sigmoid(z3);
                loss_sum += detail::clamped_bce(p, label);

                const double dz3 = p - static_cast<double>(label);
                for (std::size_t j = 0; j < kHidden2; ++j) gw3(0, j) += dz3 * h2[j];
                gb3[0] += dz3;

                for (std::size_t i = 0; i < kHidden2; ++i)
                    dz2[i] = m.w3.row(0)[i] * dz3 * mask2[i] * (1.0 - tanh2[i] * tanh2[i]);
                for (std::size_t i = 0; i < kHidden2; ++i) {
                    if (dz2[i] == 0.0) continue;
                    double* grow = gw2.row(i);
                    for (std::size_t j = 0; j < kHidden1; ++j) grow[j] += dz2[i] * h1[j];
                    gb2[i] += dz2[i];
                }

                for (std::size_t i = 0; i < kHidden1; ++i) {
                    // h1 > 0 iff the unit survived dropout and its ReLU fired
                    if (h1[i] <= 0.0) {
                        dz1[i] = 0.0;
                        continue;
                    }
                    double acc = 0.0;
                    for (std::size_t j = 0; j < kHidden2; ++j) acc += m.w2(j, i) * dz2[j];
                    dz1[i] = acc * mask1[i];
                }
                for (std::size_t i = 0; i < kHidden1; ++i) {
                    if (dz1[i] == 0.0) continue;
                    double* grow = gw1.row(i);
                    for (std::size_t j = 0; j < k; ++j) grow[j] += dz1[i] * x[j];
                    gb1[i] += dz1[i];
                }
            }

            const double scale = cfg.learning_rate / bn;
            for (std::size_t i = 0; i < gw1.data.size(); ++i) m.w1.data[i] -= scale * gw1.data[i];
            for (std::size_t i = 0; i < gw2.data.size(); ++i) m.w2.data[i] -= scale * gw2.data[i];
            for (std::size_t i = 0; i < gw3.data.size(); ++i) m.w3.data[i] -= scale * gw3.data[i];
            for (std::size_t i = 0; i < kHidden1; ++i) m.b1[i] -= scale * gb1[i];
            for (std::size_t i = 0; i < kHidden2; ++i) m.b2[i] -= scale * gb2[i];
            m.b3[0] -= scale * gb3[0];
            ++m.train_step_count;
        }

        TrainLog::Epoch entry;
        entry.mean_loss = loss_sum / static_cast<double>(n);
        if (!std::isfinite(entry.mean_loss))
            throw std::runtime_error("train: non-finite loss at epoch " + std::to_string(epoch + 1));
        std::size_t correct = 0;
        for (std::size_t i = 0; i < n; ++i)
            if (predict(m, std::span<const double>(X.row(i), k)) == y[i]) ++correct;
        entry.train_accuracy = static_cast<double>(correct) / static_cast<double>(n);
        res.log.epochs.push_back(entry);
        res.log.final_loss = entry.mean_loss;
    }
    return res;
}

inline nlohmann::json model_to_json(const MlpModel& m) {
    return {
        {"format_version", 1},
        {"layer_sizes", m.layer_sizes()},
        {"activations", {"relu", "tanh", "sigmoid"}},
        {"weights", {m.w1.data, m.w2.data, m.w3.data}},
        {"biases", {m.b1, m.b2, m.b3}},
        {"train_step_count", m.train_step_count},
    };
}

inline MlpModel model_from_json(const nlohmann::json& j) {
    const auto sizes = j.at("layer_sizes").get<std::vector<std::size_t>>();
    if (sizes.size() != 4 || sizes[1] != kHidden1 || sizes[2] != kHidden2 || sizes[3] != 1)
        throw DataError("model_from_json: unexpected layer sizes");
    MlpModel m;
    m.input_size = sizes[0];
    m.w1 = Matrix(kHidden1, m.input_size);
    m.w2 = Matrix(kHidden2, kHidden1);
    m.w3 = Matrix(1, kHidden2);
    m.w1.data = j.at("weights").at(0).get<std::vector<double>>();
    m.w2.data = j.at("weights").at(1).get<std::vector<double>>();
    m.w3.data = j.at("weights").at(2).get<std::vector<double>>();
    if (m.w1.data.size() != kHidden1 * m.input_size || m.w2.data.size() != kHidden2 * kHidden1 ||
        m.w3.data.size() != kHidden2)
        throw DataError("model_from_json: weight array size mismatch");
    m.b1 = j.at("biases").at(0).get<std::vector<double>>();
    m.b2 = j.at("biases").at(1).get<std::vector<double>>();
    m.b3 = j.at("biases").at(2).get<std::vector<double>>();
    if (m.b1.size() != kHidden1 || m.b2.size() != kHidden2 || m.b3.size() != 1)
        throw DataError("model_from_json: bias array size mismatch");
    m.train_step_count = j.at("train_step_count").get<std::int64_t>();
    return m;
}

}  // namespace evadelab
