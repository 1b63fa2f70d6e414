#pragma once

// The classifier suite behind one interface: train, predict, predict_scores,
// JSON model files, and the finite-difference check for networks.
//
// Model file (JSON, format "flowsync-model", version 1):
//   { "format", "version", "kind", "config", "config_digest",
//     "classes": [...], "features": d, "params": {...kind specific...} }

#include <fstream>
#include <string>
#include <variant>
#include <vector>

#include "flowsync/models/common.hpp"
#include "flowsync/models/linear.hpp"
#include "flowsync/models/network.hpp"
#include "flowsync/models/tree.hpp"

namespace flowsync {

inline constexpr std::string_view kModelFormat = "flowsync-model";
inline constexpr int kModelFormatVersion = 1;

struct TrainedModel {
    ModelKind kind = ModelKind::LR;
    ModelConfig config;
    std::string digest;
    std::vector<int> classes;
    std::size_t features = 0;
    std::variant<LinearModel, DecisionTree, RandomForest, Network> params;

    std::size_t class_count() const { return classes.size(); }
};

inline TrainedModel train(const ModelConfig& cfg, const Matrix& x, const Labels& y) {
    check_training_input(x, y);
    TrainedModel m;
    m.kind = cfg.kind;
    m.config = cfg;
    m.digest = config_digest(cfg);
    m.classes = class_set(y);
    m.features = static_cast<std::size_t>(x.cols());
    const auto code = encode_labels(y, m.classes);
    const std::size_t k = m.classes.size();
    switch (cfg.kind) {
        case ModelKind::LR: m.params = train_logistic(cfg, x, code, k); break;
        case ModelKind::SVM: m.params = train_svm(cfg, x, code, k); break;
        case ModelKind::DT: m.params = train_tree(cfg, x, code, k); break;
        case ModelKind::RF: m.params = train_forest(cfg, x, code, k); break;
        default: m.params = train_network(cfg, x, code, k); break;
    }
    return m;
}

/// Untrained network of the configured shape, for gradient checks.
inline TrainedModel initialize_network(const ModelConfig& cfg, std::size_t features, std::vector<int> classes) {
    if (!is_network(cfg.kind)) throw Error("initialize_network: " + std::string(model_name(cfg.kind)) + " is not a network");
    if (cfg.hidden.size() != hidden_layer_count(cfg.kind)) throw Error("initialize_network: wrong hidden layer count");
    TrainedModel m;
    m.kind = cfg.kind;
    m.config = cfg;
    m.digest = config_digest(cfg);
    m.classes = std::move(classes);
    m.features = features;
    m.params = init_network(cfg.hidden, cfg.activation, features, m.classes.size(), derive_seed(cfg.seed, 0));
    return m;
}

/// Per-class scores, columns ordered as model.classes. LR, networks and trees
/// give probabilities; RF gives vote fractions; SVM gives signed margins.
inline Matrix predict_scores(const TrainedModel& m, const Matrix& x) {
    if (static_cast<std::size_t>(x.cols()) != m.features) {
        throw Error("predict: model expects " + std::to_string(m.features) + " features, got " +
                    std::to_string(x.cols()));
    }
    const std::size_t k = m.classes.size();
    switch (m.kind) {
        case ModelKind::LR: return logistic_scores(std::get<LinearModel>(m.params), x);
        case ModelKind::SVM: return linear_margins(std::get<LinearModel>(m.params), x);
        case ModelKind::DT: return tree_scores(std::get<DecisionTree>(m.params), x, k);
        case ModelKind::RF: return forest_votes(std::get<RandomForest>(m.params), x, k);
        default: return network_scores(std::get<Network>(m.params), x);
    }
}

/// Class labels: argmax of the scores, ties to the lowest class.
inline Labels predict(const TrainedModel& m, const Matrix& x) {
    const Matrix s = predict_scores(m, x);
    Labels out(static_cast<std::size_t>(s.rows()));
    for (Eigen::Index i = 0; i < s.rows(); ++i) out[static_cast<std::size_t>(i)] = m.classes[argmax(s.row(i))];
    return out;
}

/// Max relative error of the analytic gradient against central differences
/// with h = 1e-5, over every parameter.
inline double gradient_check(const TrainedModel& m, const Matrix& x, const Labels& y) {
    if (!is_network(m.kind)) throw Error("gradient_check: " + std::string(model_name(m.kind)) + " is not a network");
    if (x.rows() == 0 || x.rows() > 20) throw Error("gradient_check: use between 1 and 20 rows");
    if (static_cast<std::size_t>(x.rows()) != y.size()) throw Error("gradient_check: row mismatch");
    for (int v : y) {
        if (std::find(m.classes.begin(), m.classes.end(), v) == m.classes.end()) throw Error("gradient_check: unknown label");
    }
    return network_gradient_check(std::get<Network>(m.params), x, encode_labels(y, m.classes), m.config.l2);
}

inline nlohmann::json model_to_json(const TrainedModel& m) {
    nlohmann::json params;
    std::visit(
        [&](const auto& p) {
            using T = std::decay_t<decltype(p)>;
            if constexpr (std::is_same_v<T, LinearModel>) params = linear_to_json(p);
            else if constexpr (std::is_same_v<T, DecisionTree>) params = tree_to_json(p);
            else if constexpr (std::is_same_v<T, RandomForest>) {
                params["trees"] = nlohmann::json::array();
                for (const auto& t : p.trees) params["trees"].push_back(tree_to_json(t));
            } else params = network_to_json(p);
        },
        m.params);
    return {{"format", kModelFormat},    {"version", kModelFormatVersion}, {"kind", model_name(m.kind)},
            {"config", config_to_json(m.config)}, {"config_digest", m.digest},     {"classes", m.classes},
            {"features", m.features},    {"params", params}};
}

inline TrainedModel model_from_json(const nlohmann::json& j) {
    if (j.value("format", "") != kModelFormat) throw Error("not a flowsync model file");
    if (j.at("version").get<int>() != kModelFormatVersion) throw Error("unsupported model file version");
    TrainedModel m;
    m.config = config_from_json(j.at("config"));
    m.kind = m.config.kind;
    m.digest = j.at("config_digest").get<std::string>();
    if (m.digest != config_digest(m.config)) throw Error("model file: config digest mismatch");
    m.classes = j.at("classes").get<std::vector<int>>();
    m.features = j.at("features").get<std::size_t>();
    const auto& p = j.at("params");
    switch (m.kind) {
        case ModelKind::LR:
        case ModelKind::SVM: m.params = linear_from_json(p); break;
        case ModelKind::DT: m.params = tree_from_json(p); break;
        case ModelKind::RF: {
            RandomForest f;
            for (const auto& t : p.at("trees")) f.trees.push_back(tree_from_json(t));
            m.params = std::move(f);
            break;
        }
        default: m.params = network_from_json(p); break;
    }
    return m;
}

inline std::string serialize(const TrainedModel& m) { return model_to_json(m).dump(); }
inline TrainedModel deserialize(const std::string& s) { return model_from_json(nlohmann::json::parse(s)); }

inline void save_model(const std::string& path, const TrainedModel& m) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw Error("cannot write " + path);
    out << serialize(m) << '\n';
}

inline TrainedModel load_model(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw Error("cannot open " + path);
    return model_from_json(nlohmann::json::parse(in));
}

}  // namespace flowsync
