#pragma once

#include <cmath>
#include <span>
#include <vector>

#include "albi/core.hpp"
#include "albi/errors.hpp"

namespace albi::learner {

struct Hyperparams {
    double learning_rate = 0.1;
    double l2_penalty = 1e-4;
    int max_epochs = 2000;
    double convergence_tol = 1e-6;  // max-norm of the full gradient

    void validate() const {
        if (!(learning_rate > 0.0)) throw ConfigInvalid("learning_rate must be positive");
        if (l2_penalty < 0.0) throw ConfigInvalid("l2_penalty must be non-negative");
        if (max_epochs <= 0) throw ConfigInvalid("max_epochs must be positive");
        if (!(convergence_tol > 0.0)) throw ConfigInvalid("convergence_tol must be positive");
    }
};

/// Linear-logistic classifier. Immutable once trained.
struct Model {
    std::vector<double> weights;
    double bias = 0.0;
    Hyperparams hyper;
};

struct TrainRow {
    std::span<const double> features;
    int label = 0;
};

inline double sigmoid(double z) {
    if (z >= 0.0) return 1.0 / (1.0 + std::exp(-z));
    const double e = std::exp(z);
    return e / (1.0 + e);
}

/// log(1 + exp(x)) without overflow.
inline double softplus(double x) {
    return x > 0.0 ? x + std::log1p(std::exp(-x)) : std::log1p(std::exp(x));
}

/// Mean negative log-likelihood plus (l2/2)*||w||^2. The bias is not
/// penalized.
inline double loss(const std::vector<double>& weights, double bias,
                   std::span<const TrainRow> rows, double l2_penalty) {
    double nll = 0.0;
    for (const TrainRow& row : rows) {
        double z = bias;
        for (std::size_t j = 0; j < weights.size(); ++j) z += weights[j] * row.features[j];
        nll += softplus(z) - static_cast<double>(row.label) * z;
    }
    nll /= static_cast<double>(rows.size());
    double reg = 0.0;
    for (double w : weights) reg += w * w;
    return nll + 0.5 * l2_penalty * reg;
}

/// Analytic gradient of `loss`. grad_w must have weights.size() entries.
inline void loss_gradient(const std::vector<double>& weights, double bias,
                          std::span<const TrainRow> rows, double l2_penalty,
                          std::vector<double>& grad_w, double& grad_b) {
    const std::size_t d = weights.size();
    grad_w.assign(d, 0.0);
    grad_b = 0.0;
    for (const TrainRow& row : rows) {
        double z = bias;
        for (std::size_t j = 0; j < d; ++j) z += weights[j] * row.features[j];
        const double r = sigmoid(z) - static_cast<double>(row.label);
        for (std::size_t j = 0; j < d; ++j) grad_w[j] += r * row.features[j];
        grad_b += r;
    }
    const double inv_n = 1.0 / static_cast<double>(rows.size());
    for (std::size_t j = 0; j < d; ++j) grad_w[j] = grad_w[j] * inv_n + l2_penalty * weights[j];
    grad_b *= inv_n;
}

/// Full-batch gradient descent from zero-initialized parameters. Stops when
/// the gradient max-norm drops to convergence_tol or after max_epochs.
/// Deterministic: identical inputs give bit-identical models.
inline Model train(std::span<const TrainRow> rows, int feature_dim, const Hyperparams& hyper) {
    hyper.validate();
    if (rows.empty()) throw EmptyTrainingSet();
    for (const TrainRow& row : rows) {
        if (static_cast<int>(row.features.size()) != feature_dim)
            throw DimensionMismatch("training row has " + std::to_string(row.features.size()) +
                                    " features, expected " + std::to_string(feature_dim));
        for (double v : row.features)
            if (!std::isfinite(v)) throw NonFiniteFeature("non-finite feature value in training row");
    }

    Model model;
    model.weights.assign(static_cast<std::size_t>(feature_dim), 0.0);
    model.bias = 0.0;
    model.hyper = hyper;

    std::vector<double> grad_w(static_cast<std::size_t>(feature_dim));
    double grad_b = 0.0;
    for (int epoch = 0; epoch < hyper.max_epochs; ++epoch) {
        loss_gradient(model.weights, model.bias, rows, hyper.l2_penalty, grad_w, grad_b);
        double max_norm = std::abs(grad_b);
        for (double g : grad_w) max_norm = std::max(max_norm, std::abs(g));
        if (max_norm <= hyper.convergence_tol) break;
        for (std::size_t j = 0; j < grad_w.size(); ++j)
            model.weights[j] -= hyper.learning_rate * grad_w[j];
        model.bias -= hyper.learning_rate * grad_b;
    }
    return model;
}

inline double predict_proba(const Model& model, std::span<const double> features) {
    if (features.size() != model.weights.size())
        throw DimensionMismatch("feature vector has " + std::to_string(features.size()) +
                                " entries, model expects " + std::to_string(model.weights.size()));
    double z = model.bias;
    for (std::size_t j = 0; j < model.weights.size(); ++j) z += model.weights[j] * features[j];
    return sigmoid(z);
}

/// Predicted binary label at the 0.5 threshold (ties go to the positive
/// class).
inline int predict_label(const Model& model, std::span<const double> features) {
    return predict_proba(model, features) >= 0.5 ? 1 : 0;
}

/// Shannon entropy of a Bernoulli(p) in bits, with 0*log2(0) := 0.
inline double entropy_bits(double p) {
    if (!(p >= 0.0 && p <= 1.0)) throw OutOfRange("entropy argument must lie in [0,1]");
    if (p == 0.0 || p == 1.0) return 0.0;
    return -p * std::log2(p) - (1.0 - p) * std::log2(1.0 - p);
}

/// Observed-label training rows for the given instance ids.
inline std::vector<TrainRow> observed_rows(const Dataset& dataset, const std::vector<int>& ids) {
    std::vector<TrainRow> rows;
    rows.reserve(ids.size());
    for (int id : ids) {
        const Instance& inst = dataset.at(id);
        rows.push_back({std::span<const double>(inst.features), inst.observed_label});
    }
    return rows;
}

}  // namespace albi::learner
