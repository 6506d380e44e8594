#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <numeric>
#include <random>
#include <span>
#include <string>
#include <vector>

#include "gausstin/errors.hpp"
#include "gausstin/stream.hpp"

namespace gausstin {

/// Linear softmax classifier over the global label space; the desk-scale
/// stand-in for the LM task solver.
struct SoftmaxModel {
    std::size_t input_dim = 0;
    int classes = 0;
    std::vector<double> weights;  // classes x input_dim, row-major
    std::vector<double> bias;     // classes
    std::uint64_t step_count = 0;
};

inline SoftmaxModel make_model(std::size_t input_dim, int classes) {
    SoftmaxModel m;
    m.input_dim = input_dim;
    m.classes = classes;
    m.weights.assign(static_cast<std::size_t>(classes) * input_dim, 0.0);
    m.bias.assign(static_cast<std::size_t>(classes), 0.0);
    return m;
}

struct TrainConfig {
    double learning_rate = 0.1;  // surrogate-scale default, not an LM rate
    int epochs = 3;
    std::size_t batch_size = 32;
    std::uint64_t seed = 0;
};

namespace detail {

inline void logits(const SoftmaxModel& m, std::span<const double> x, std::vector<double>& out) {
    out.resize(static_cast<std::size_t>(m.classes));
    for (int c = 0; c < m.classes; ++c) {
        const double* w = m.weights.data() + static_cast<std::size_t>(c) * m.input_dim;
        double s = m.bias[static_cast<std::size_t>(c)];
        for (std::size_t d = 0; d < m.input_dim; ++d) s += w[d] * x[d];
        out[static_cast<std::size_t>(c)] = s;
    }
}

inline void softmax_inplace(std::vector<double>& z) {
    double zmax = -std::numeric_limits<double>::infinity();
    for (double v : z) zmax = std::max(zmax, v);
    double denom = 0.0;
    for (double& v : z) {
        v = std::exp(v - zmax);
        denom += v;
    }
    for (double& v : z) v /= denom;
}

inline void check_rows(const SoftmaxModel& m, const TrainingSet& data, const char* op) {
    for (std::size_t i = 0; i < data.features.size(); ++i) {
        if (data.features[i].size() != m.input_dim)
            throw DimensionMismatch(std::string(op) + ": row " + std::to_string(i) + " has length " +
                                    std::to_string(data.features[i].size()) + ", model expects " +
                                    std::to_string(m.input_dim));
        if (data.labels[i] < 0 || data.labels[i] >= m.classes)
            throw LabelOutOfRange(std::string(op) + ": label " + std::to_string(data.labels[i]) +
                                  " outside [0, " + std::to_string(m.classes) + ")");
    }
}

}  // namespace detail

/// Argmax class, ties resolved to the lowest index.
inline int predict(const SoftmaxModel& m, std::span<const double> x) {
    if (x.size() != m.input_dim)
        throw DimensionMismatch("predict: vector length " + std::to_string(x.size()) +
                                ", model expects " + std::to_string(m.input_dim));
    std::vector<double> z;
    detail::logits(m, x, z);
    int best = 0;
    for (int c = 1; c < m.classes; ++c)
        if (z[static_cast<std::size_t>(c)] > z[static_cast<std::size_t>(best)]) best = c;
    return best;
}

/// Mean cross-entropy over the set.
inline double cross_entropy_loss(const SoftmaxModel& m, const TrainingSet& data) {
    detail::check_rows(m, data, "cross_entropy_loss");
    std::vector<double> z;
    double loss = 0.0;
    for (std::size_t i = 0; i < data.features.size(); ++i) {
        detail::logits(m, data.features[i], z);
        detail::softmax_inplace(z);
        loss -= std::log(std::max(z[static_cast<std::size_t>(data.labels[i])], 1e-300));
    }
    return loss / static_cast<double>(std::max<std::size_t>(data.features.size(), 1));
}

struct Gradients {
    std::vector<double> weights;
    std::vector<double> bias;
};

/// Mean cross-entropy gradient over the set.
inline Gradients cross_entropy_gradient(const SoftmaxModel& m, const TrainingSet& data) {
    detail::check_rows(m, data, "cross_entropy_gradient");
    Gradients g;
    g.weights.assign(m.weights.size(), 0.0);
    g.bias.assign(m.bias.size(), 0.0);
    std::vector<double> z;
    const double inv = 1.0 / static_cast<double>(std::max<std::size_t>(data.features.size(), 1));
    for (std::size_t i = 0; i < data.features.size(); ++i) {
        detail::logits(m, data.features[i], z);
        detail::softmax_inplace(z);
        z[static_cast<std::size_t>(data.labels[i])] -= 1.0;
        for (int c = 0; c < m.classes; ++c) {
            const double delta = z[static_cast<std::size_t>(c)] * inv;
            g.bias[static_cast<std::size_t>(c)] += delta;
            double* gw = g.weights.data() + static_cast<std::size_t>(c) * m.input_dim;
            const auto& x = data.features[i];
            for (std::size_t d = 0; d < m.input_dim; ++d) gw[d] += delta * x[d];
        }
    }
    return g;
}

/// Minibatch SGD for cfg.epochs passes. Pure in its inputs: the caller's model
/// is taken by value and the updated copy returned.
inline SoftmaxModel train(SoftmaxModel model, const TrainingSet& data, const TrainConfig& cfg) {
    if (cfg.epochs < 1) throw Error("train: epochs must be >= 1");
    if (!(cfg.learning_rate >= 0.0)) throw Error("train: learning_rate must be >= 0");
    if (cfg.batch_size < 1) throw Error("train: batch_size must be >= 1");
    detail::check_rows(model, data, "train");
    if (data.features.empty()) return model;

    std::mt19937_64 rng(cfg.seed);
    std::vector<std::size_t> order(data.features.size());
    std::iota(order.begin(), order.end(), std::size_t{0});

    TrainingSet batch;
    for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
        std::shuffle(order.begin(), order.end(), rng);
        for (std::size_t start = 0; start < order.size(); start += cfg.batch_size) {
            const std::size_t stop = std::min(start + cfg.batch_size, order.size());
            batch.features.clear();
            batch.labels.clear();
            for (std::size_t i = start; i < stop; ++i) {
                batch.features.push_back(data.features[order[i]]);
                batch.labels.push_back(data.labels[order[i]]);
            }
            const Gradients g = cross_entropy_gradient(model, batch);
            for (std::size_t j = 0; j < model.weights.size(); ++j)
                model.weights[j] -= cfg.learning_rate * g.weights[j];
            for (std::size_t j = 0; j < model.bias.size(); ++j)
                model.bias[j] -= cfg.learning_rate * g.bias[j];
            ++model.step_count;
        }
    }
    return model;
}

/// Fraction of eval samples whose argmax logit equals the label.
inline double accuracy(const SoftmaxModel& m, const std::vector<std::vector<double>>& features,
                       const std::vector<int>& labels) {
    if (features.empty()) throw EmptyEval("accuracy: empty evaluation set");
    std::size_t correct = 0;
    for (std::size_t i = 0; i < features.size(); ++i)
        if (predict(m, features[i]) == labels[i]) ++correct;
    return static_cast<double>(correct) / static_cast<double>(features.size());
}

inline double accuracy(const SoftmaxModel& m, const TaskDataset& task) {
    if (task.eval.empty()) throw EmptyEval("accuracy: task '" + task.task_id + "' has no eval split");
    std::size_t correct = 0;
    for (const Sample& s : task.eval)
        if (predict(m, s.features) == s.label) ++correct;
    return static_cast<double>(correct) / static_cast<double>(task.eval.size());
}

}  // namespace gausstin
