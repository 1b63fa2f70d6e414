#pragma once

// Linear classifiers: multinomial logistic regression (full-batch gradient
// descent with L2) and a linear soft-margin SVM (full-batch Pegasos-style
// subgradient on the hinge loss, one-vs-rest beyond two classes).

#include <cmath>
#include <vector>

#include "flowsync/models/common.hpp"

namespace flowsync {

struct LinearModel {
    Matrix weights;  // d x K (LR); d x K one-vs-rest directions (SVM)
    RowVector bias;  // K
};

/// Row-wise softmax, max-shifted.
inline Matrix softmax_rows(const Matrix& logits) {
    Matrix p(logits.rows(), logits.cols());
    for (Eigen::Index i = 0; i < logits.rows(); ++i) {
        const double m = logits.row(i).maxCoeff();
        p.row(i) = (logits.row(i).array() - m).exp();
        p.row(i) /= p.row(i).sum();
    }
    return p;
}

inline LinearModel train_logistic(const ModelConfig& cfg, const Matrix& x, const std::vector<std::size_t>& y,
                                  std::size_t classes) {
    const auto n = x.rows();
    const auto d = x.cols();
    const auto k = static_cast<Eigen::Index>(classes);
    LinearModel m{Matrix::Zero(d, k), RowVector::Zero(k)};
    Matrix onehot = Matrix::Zero(n, k);
    for (Eigen::Index i = 0; i < n; ++i) onehot(i, static_cast<Eigen::Index>(y[static_cast<std::size_t>(i)])) = 1.0;
    const double inv_n = 1.0 / static_cast<double>(n);
    for (std::size_t epoch = 0; epoch < cfg.epochs; ++epoch) {
        Matrix logits = x * m.weights;
        logits.rowwise() += m.bias;
        const Matrix err = softmax_rows(logits) - onehot;
        const Matrix gw = inv_n * (x.transpose() * err) + cfg.l2 * m.weights;
        const RowVector gb = inv_n * err.colwise().sum();
        m.weights -= cfg.learning_rate * gw;
        m.bias -= cfg.learning_rate * gb;
    }
    return m;
}

inline Matrix logistic_scores(const LinearModel& m, const Matrix& x) {
    Matrix logits = x * m.weights;
    logits.rowwise() += m.bias;
    return softmax_rows(logits);
}

/// Binary SVM on targets t in {-1, +1}. Minimizes
///   (lambda / 2) |w|^2 + mean_i max(0, 1 - t_i (w.x_i + b)),  lambda = 1 / (n C),
/// i.e. the soft-margin primal divided by nC. Step 1 / (lambda t); the bias is
/// treated as a weight on a constant input and regularized with it.
inline std::pair<Vector, double> train_hinge(const Matrix& x, const std::vector<double>& t, double c,
                                             std::size_t epochs) {
    const auto n = x.rows();
    const auto d = x.cols();
    const double lambda = 1.0 / (static_cast<double>(n) * c);
    Vector w = Vector::Zero(d);
    double b = 0.0;
    Vector tv = Eigen::Map<const Vector>(t.data(), n);
    for (std::size_t epoch = 1; epoch <= epochs; ++epoch) {
        const double eta = 1.0 / (lambda * static_cast<double>(epoch));
        const Vector margin = (tv.array() * ((x * w).array() + b)).matrix();
        Vector coef = Vector::Zero(n);  // t_i for margin violators
        for (Eigen::Index i = 0; i < n; ++i) {
            if (margin(i) < 1.0) coef(i) = tv(i);
        }
        const Vector gw = lambda * w - (x.transpose() * coef) / static_cast<double>(n);
        const double gb = lambda * b - coef.sum() / static_cast<double>(n);
        w -= eta * gw;
        b -= eta * gb;
        // Projection onto the ball of radius 1 / sqrt(lambda) containing the optimum.
        const double norm = std::sqrt(w.squaredNorm() + b * b);
        const double radius = 1.0 / std::sqrt(lambda);
        if (norm > radius) {
            w *= radius / norm;
            b *= radius / norm;
        }
    }
    return {w, b};
}

/// Two classes: one hyperplane, scores (-f, f). More: one-vs-rest margins.
inline LinearModel train_svm(const ModelConfig& cfg, const Matrix& x, const std::vector<std::size_t>& y,
                             std::size_t classes) {
    const auto k = static_cast<Eigen::Index>(classes);
    LinearModel m{Matrix::Zero(x.cols(), k), RowVector::Zero(k)};
    std::vector<double> t(y.size());
    if (classes == 2) {
        for (std::size_t i = 0; i < y.size(); ++i) t[i] = y[i] == 1 ? 1.0 : -1.0;
        const auto [w, b] = train_hinge(x, t, cfg.svm_c, cfg.epochs);
        m.weights.col(0) = -w;
        m.weights.col(1) = w;
        m.bias << -b, b;
        return m;
    }
    for (std::size_t c = 0; c < classes; ++c) {
        for (std::size_t i = 0; i < y.size(); ++i) t[i] = y[i] == c ? 1.0 : -1.0;
        const auto [w, b] = train_hinge(x, t, cfg.svm_c, cfg.epochs);
        m.weights.col(static_cast<Eigen::Index>(c)) = w;
        m.bias(static_cast<Eigen::Index>(c)) = b;
    }
    return m;
}

inline Matrix linear_margins(const LinearModel& m, const Matrix& x) {
    Matrix s = x * m.weights;
    s.rowwise() += m.bias;
    return s;
}

inline nlohmann::json linear_to_json(const LinearModel& m) {
    return {{"weights", matrix_to_json(m.weights)},
            {"bias", std::vector<double>(m.bias.data(), m.bias.data() + m.bias.size())}};
}

inline LinearModel linear_from_json(const nlohmann::json& j) {
    LinearModel m;
    m.weights = matrix_from_json(j.at("weights"));
    const auto b = j.at("bias").get<std::vector<double>>();
    m.bias = Eigen::Map<const RowVector>(b.data(), static_cast<Eigen::Index>(b.size()));
    return m;
}

}  // namespace flowsync
