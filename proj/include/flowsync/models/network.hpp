#pragma once

// Fully connected softmax networks trained with Adam on mini-batches, with
// early stopping on a held-out validation split.

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <random>
#include <vector>

#include "flowsync/models/common.hpp"
#include "flowsync/models/linear.hpp"

namespace flowsync {

struct Network {
    std::vector<Matrix> weights;    // layer l: fan_in x fan_out
    std::vector<RowVector> biases;  // layer l: fan_out
    Activation activation = Activation::ReLU;
    std::size_t epochs_trained = 0;

    std::size_t layers() const { return weights.size(); }
    std::size_t parameter_count() const {
        std::size_t n = 0;
        for (std::size_t l = 0; l < layers(); ++l) n += static_cast<std::size_t>(weights[l].size() + biases[l].size());
        return n;
    }
};

/// He-normal weights for ReLU, 1/fan_in variance for identity; zero biases.
inline Network init_network(const std::vector<std::size_t>& hidden, Activation act, std::size_t inputs,
                            std::size_t classes, std::uint64_t seed) {
    Network net;
    net.activation = act;
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> g(0.0, 1.0);
    std::size_t fan_in = inputs;
    std::vector<std::size_t> sizes = hidden;
    sizes.push_back(classes);
    for (std::size_t l = 0; l < sizes.size(); ++l) {
        const bool output = l + 1 == sizes.size();
        const double scale = std::sqrt((act == Activation::ReLU && !output ? 2.0 : 1.0) / static_cast<double>(fan_in));
        Matrix w(static_cast<Eigen::Index>(fan_in), static_cast<Eigen::Index>(sizes[l]));
        for (Eigen::Index i = 0; i < w.size(); ++i) w.data()[i] = scale * g(rng);
        net.weights.push_back(std::move(w));
        net.biases.push_back(RowVector::Zero(static_cast<Eigen::Index>(sizes[l])));
        fan_in = sizes[l];
    }
    return net;
}

namespace detail {

struct ForwardPass {
    std::vector<Matrix> pre;   // pre-activations per layer
    std::vector<Matrix> post;  // post[0] = input, post[l + 1] = activation of layer l (softmax at the end)
};

inline ForwardPass forward(const Network& net, const Matrix& x) {
    ForwardPass f;
    f.post.push_back(x);
    for (std::size_t l = 0; l < net.layers(); ++l) {
        Matrix z = f.post.back() * net.weights[l];
        z.rowwise() += net.biases[l];
        const bool output = l + 1 == net.layers();
        Matrix a = output ? softmax_rows(z)
                          : (net.activation == Activation::ReLU ? Matrix(z.cwiseMax(0.0)) : z);
        f.pre.push_back(std::move(z));
        f.post.push_back(std::move(a));
    }
    return f;
}

inline double cross_entropy(const Matrix& p, const std::vector<std::size_t>& y) {
    double loss = 0.0;
    for (Eigen::Index i = 0; i < p.rows(); ++i) {
        loss -= std::log(std::max(p(i, static_cast<Eigen::Index>(y[static_cast<std::size_t>(i)])), 1e-300));
    }
    return loss / static_cast<double>(p.rows());
}

struct Gradients {
    std::vector<Matrix> weights;
    std::vector<RowVector> biases;
};

/// Gradient of mean cross-entropy + (l2 / 2) sum |W|^2.
inline Gradients backward(const Network& net, const ForwardPass& f, const std::vector<std::size_t>& y, double l2) {
    const std::size_t L = net.layers();
    Gradients g;
    g.weights.resize(L);
    g.biases.resize(L);
    Matrix delta = f.post.back();
    for (Eigen::Index i = 0; i < delta.rows(); ++i) delta(i, static_cast<Eigen::Index>(y[static_cast<std::size_t>(i)])) -= 1.0;
    delta /= static_cast<double>(delta.rows());
    for (std::size_t l = L; l-- > 0;) {
        g.weights[l] = f.post[l].transpose() * delta;
        if (l2 != 0.0) g.weights[l] += l2 * net.weights[l];
        g.biases[l] = delta.colwise().sum();
        if (l == 0) break;
        Matrix back = delta * net.weights[l].transpose();
        if (net.activation == Activation::ReLU) back = back.cwiseProduct((f.pre[l - 1].array() > 0.0).cast<double>().matrix());
        delta = std::move(back);
    }
    return g;
}

inline double loss(const Network& net, const Matrix& x, const std::vector<std::size_t>& y, double l2) {
    double reg = 0.0;
    if (l2 != 0.0) {
        for (const auto& w : net.weights) reg += 0.5 * l2 * w.squaredNorm();
    }
    return cross_entropy(forward(net, x).post.back(), y) + reg;
}

}  // namespace detail

inline Matrix network_scores(const Network& net, const Matrix& x) { return detail::forward(net, x).post.back(); }

/// Adam (beta1 0.9, beta2 0.999, eps 1e-8) on shuffled mini-batches. A
/// validation_fraction share of the rows (at least one, when the split leaves
/// two or more training rows) is held out; training stops after `patience`
/// epochs without validation-loss improvement and the best weights are kept.
inline Network train_network(const ModelConfig& cfg, const Matrix& x, const std::vector<std::size_t>& y,
                             std::size_t classes) {
    if (cfg.hidden.size() != hidden_layer_count(cfg.kind)) {
        throw Error(std::string(model_name(cfg.kind)) + " requires " + std::to_string(hidden_layer_count(cfg.kind)) +
                    " hidden layers, config has " + std::to_string(cfg.hidden.size()));
    }
    if (cfg.batch_size == 0) throw Error("batch size must be positive");
    Network net = init_network(cfg.hidden, cfg.activation, static_cast<std::size_t>(x.cols()), classes,
                               derive_seed(cfg.seed, 0));
    std::mt19937_64 rng(derive_seed(cfg.seed, 1));

    const std::size_t n = y.size();
    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), 0);
    std::shuffle(order.begin(), order.end(), rng);
    std::size_t n_val = static_cast<std::size_t>(std::floor(cfg.validation_fraction * static_cast<double>(n)));
    if (cfg.validation_fraction > 0.0 && n_val == 0 && n >= 3) n_val = 1;
    if (n - n_val < 2) n_val = 0;
    std::vector<std::size_t> val(order.begin(), order.begin() + static_cast<std::ptrdiff_t>(n_val));
    std::vector<std::size_t> train(order.begin() + static_cast<std::ptrdiff_t>(n_val), order.end());
    const Matrix x_val = select_rows(x, val);
    const auto y_val = select(y, val);

    const std::size_t L = net.layers();
    std::vector<Matrix> mw(L), vw(L);
    std::vector<RowVector> mb(L), vb(L);
    for (std::size_t l = 0; l < L; ++l) {
        mw[l] = Matrix::Zero(net.weights[l].rows(), net.weights[l].cols());
        vw[l] = mw[l];
        mb[l] = RowVector::Zero(net.biases[l].size());
        vb[l] = mb[l];
    }
    constexpr double beta1 = 0.9, beta2 = 0.999, eps = 1e-8;
    double b1t = 1.0, b2t = 1.0;

    Network best = net;
    double best_loss = std::numeric_limits<double>::infinity();
    std::size_t since_best = 0;
    Matrix xb;
    std::vector<std::size_t> yb;
    for (std::size_t epoch = 0; epoch < cfg.epochs; ++epoch) {
        std::shuffle(train.begin(), train.end(), rng);
        for (std::size_t start = 0; start < train.size(); start += cfg.batch_size) {
            const std::size_t stop = std::min(train.size(), start + cfg.batch_size);
            const std::span<const std::size_t> idx(train.data() + start, stop - start);
            xb = select_rows(x, idx);
            yb.assign(idx.size(), 0);
            for (std::size_t i = 0; i < idx.size(); ++i) yb[i] = y[idx[i]];
            const auto g = detail::backward(net, detail::forward(net, xb), yb, cfg.l2);
            b1t *= beta1;
            b2t *= beta2;
            const double step = cfg.learning_rate * std::sqrt(1.0 - b2t) / (1.0 - b1t);
            for (std::size_t l = 0; l < L; ++l) {
                mw[l] = beta1 * mw[l] + (1.0 - beta1) * g.weights[l];
                vw[l] = beta2 * vw[l] + (1.0 - beta2) * g.weights[l].cwiseAbs2();
                net.weights[l].array() -= step * mw[l].array() / (vw[l].array().sqrt() + eps);
                mb[l] = beta1 * mb[l] + (1.0 - beta1) * g.biases[l];
                vb[l] = beta2 * vb[l] + (1.0 - beta2) * g.biases[l].cwiseAbs2();
                net.biases[l].array() -= step * mb[l].array() / (vb[l].array().sqrt() + eps);
            }
        }
        net.epochs_trained = epoch + 1;
        if (n_val == 0) continue;
        const double vl = detail::loss(net, x_val, y_val, 0.0);
        if (vl < best_loss) {
            best_loss = vl;
            best = net;
            since_best = 0;
        } else if (++since_best >= cfg.patience) {
            break;
        }
    }
    return n_val == 0 ? net : best;
}

/// Max relative error between the analytic gradient and central differences
/// (step h) over every parameter; |a - n| / max(|a|, |n|, 1e-6).
inline double network_gradient_check(const Network& net, const Matrix& x, const std::vector<std::size_t>& y,
                                     double l2 = 0.0, double h = 1e-5) {
    const auto g = detail::backward(net, detail::forward(net, x), y, l2);
    Network probe = net;
    double worst = 0.0;
    auto check = [&](double* param, double analytic) {
        const double saved = *param;
        *param = saved + h;
        const double up = detail::loss(probe, x, y, l2);
        *param = saved - h;
        const double down = detail::loss(probe, x, y, l2);
        *param = saved;
        const double numeric = (up - down) / (2.0 * h);
        if (!std::isfinite(numeric) || !std::isfinite(analytic)) {
            worst = std::numeric_limits<double>::infinity();
            return;
        }
        const double denom = std::max({std::abs(analytic), std::abs(numeric), 1e-6});
        worst = std::max(worst, std::abs(analytic - numeric) / denom);
    };
    for (std::size_t l = 0; l < probe.layers(); ++l) {
        for (Eigen::Index i = 0; i < probe.weights[l].size(); ++i) check(probe.weights[l].data() + i, g.weights[l].data()[i]);
        for (Eigen::Index i = 0; i < probe.biases[l].size(); ++i) check(probe.biases[l].data() + i, g.biases[l].data()[i]);
    }
    return worst;
}

inline nlohmann::json network_to_json(const Network& net) {
    nlohmann::json layers = nlohmann::json::array();
    for (std::size_t l = 0; l < net.layers(); ++l) {
        layers.push_back({{"weights", matrix_to_json(net.weights[l])},
                          {"bias", std::vector<double>(net.biases[l].data(), net.biases[l].data() + net.biases[l].size())}});
    }
    return {{"layers", layers},
            {"activation", net.activation == Activation::ReLU ? "relu" : "identity"},
            {"epochs_trained", net.epochs_trained}};
}

inline Network network_from_json(const nlohmann::json& j) {
    Network net;
    for (const auto& layer : j.at("layers")) {
        net.weights.push_back(matrix_from_json(layer.at("weights")));
        const auto b = layer.at("bias").get<std::vector<double>>();
        net.biases.push_back(Eigen::Map<const RowVector>(b.data(), static_cast<Eigen::Index>(b.size())));
    }
    net.activation = j.at("activation").get<std::string>() == "relu" ? Activation::ReLU : Activation::Identity;
    net.epochs_trained = j.at("epochs_trained").get<std::size_t>();
    return net;
}

}  // namespace flowsync
