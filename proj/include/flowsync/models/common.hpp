#pragma once

// Shared model vocabulary: kinds, configuration, argmax, config digests and
// seed derivation.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "flowsync/core.hpp"
#include "flowsync/matrix.hpp"

namespace flowsync {

enum class ModelKind { LR, SVM, DT, RF, NN, DNN1, DNN2, DNN3 };

inline constexpr std::array<ModelKind, 8> kModelKinds = {ModelKind::LR, ModelKind::SVM, ModelKind::DT,
                                                         ModelKind::RF, ModelKind::NN,  ModelKind::DNN1,
                                                         ModelKind::DNN2, ModelKind::DNN3};

constexpr std::string_view model_name(ModelKind k) {
    switch (k) {
        case ModelKind::LR: return "LR";
        case ModelKind::SVM: return "SVM";
        case ModelKind::DT: return "DT";
        case ModelKind::RF: return "RF";
        case ModelKind::NN: return "NN";
        case ModelKind::DNN1: return "DNN1";
        case ModelKind::DNN2: return "DNN2";
        case ModelKind::DNN3: return "DNN3";
    }
    return "?";
}

/// Case-insensitive ("rf", "RF", "dnn3").
inline std::optional<ModelKind> parse_model_kind(std::string_view s) {
    std::string up(s);
    for (auto& c : up) c = static_cast<char>(std::toupper(static_cast<unsigned char>(c)));
    for (auto k : kModelKinds) {
        if (model_name(k) == up) return k;
    }
    return std::nullopt;
}

constexpr bool is_network(ModelKind k) {
    return k == ModelKind::NN || k == ModelKind::DNN1 || k == ModelKind::DNN2 || k == ModelKind::DNN3;
}

/// Hidden-layer count per network kind.
constexpr std::size_t hidden_layer_count(ModelKind k) {
    switch (k) {
        case ModelKind::NN: return 1;
        case ModelKind::DNN1: return 3;
        case ModelKind::DNN2: return 5;
        case ModelKind::DNN3: return 9;
        default: return 0;
    }
}

enum class Activation { ReLU, Identity };

struct ModelConfig {
    ModelKind kind = ModelKind::LR;
    std::uint64_t seed = 0;

    // Gradient-trained models (LR, networks).
    double learning_rate = 0.1;
    std::size_t epochs = 500;
    double l2 = 1e-4;

    // SVM: soft-margin constant.
    double svm_c = 1.0;

    // Trees. max_depth 0 = unlimited; max_features 0 = all (DT) or sqrt(d) (RF).
    std::size_t max_depth = 16;
    std::size_t min_leaf = 2;
    std::size_t n_trees = 200;
    std::size_t max_features = 0;

    // Networks.
    std::vector<std::size_t> hidden;
    Activation activation = Activation::ReLU;
    std::size_t batch_size = 32;
    double validation_fraction = 0.1;
    std::size_t patience = 10;

    // Execution only; excluded from the digest and serialized form.
    unsigned jobs = 1;
};

/// Defaults for each kind.
inline ModelConfig default_config(ModelKind kind, std::uint64_t seed = 0) {
    ModelConfig c;
    c.kind = kind;
    c.seed = seed;
    switch (kind) {
        case ModelKind::LR: break;
        case ModelKind::SVM: c.epochs = 500; break;
        case ModelKind::DT:
            c.max_depth = 16;
            c.min_leaf = 2;
            break;
        case ModelKind::RF:
            c.max_depth = 0;
            c.min_leaf = 1;
            c.n_trees = 200;
            break;
        default:
            c.learning_rate = 1e-3;
            c.epochs = 200;
            c.l2 = 0.0;
            c.hidden.assign(hidden_layer_count(kind), 128);
            break;
    }
    return c;
}

inline nlohmann::json config_to_json(const ModelConfig& c) {
    return {
        {"kind", model_name(c.kind)},
        {"seed", c.seed},
        {"learning_rate", c.learning_rate},
        {"epochs", c.epochs},
        {"l2", c.l2},
        {"svm_c", c.svm_c},
        {"max_depth", c.max_depth},
        {"min_leaf", c.min_leaf},
        {"n_trees", c.n_trees},
        {"max_features", c.max_features},
        {"hidden", c.hidden},
        {"activation", c.activation == Activation::ReLU ? "relu" : "identity"},
        {"batch_size", c.batch_size},
        {"validation_fraction", c.validation_fraction},
        {"patience", c.patience},
    };
}

inline ModelConfig config_from_json(const nlohmann::json& j) {
    ModelConfig c;
    const auto kind = parse_model_kind(j.at("kind").get<std::string>());
    if (!kind) throw Error("unknown model kind in config");
    c.kind = *kind;
    c.seed = j.at("seed").get<std::uint64_t>();
    c.learning_rate = j.at("learning_rate").get<double>();
    c.epochs = j.at("epochs").get<std::size_t>();
    c.l2 = j.at("l2").get<double>();
    c.svm_c = j.at("svm_c").get<double>();
    c.max_depth = j.at("max_depth").get<std::size_t>();
    c.min_leaf = j.at("min_leaf").get<std::size_t>();
    c.n_trees = j.at("n_trees").get<std::size_t>();
    c.max_features = j.at("max_features").get<std::size_t>();
    c.hidden = j.at("hidden").get<std::vector<std::size_t>>();
    c.activation = j.at("activation").get<std::string>() == "relu" ? Activation::ReLU : Activation::Identity;
    c.batch_size = j.at("batch_size").get<std::size_t>();
    c.validation_fraction = j.at("validation_fraction").get<double>();
    c.patience = j.at("patience").get<std::size_t>();
    return c;
}

/// 64-bit FNV-1a, rendered as 16 hex digits.
inline std::string fnv1a_hex(std::string_view bytes) {
    std::uint64_t h = 0xcbf29ce484222325ull;
    for (unsigned char c : bytes) {
        h ^= c;
        h *= 0x100000001b3ull;
    }
    static constexpr char kHex[] = "0123456789abcdef";
    std::string out(16, '0');
    for (int i = 15; i >= 0; --i, h >>= 4) out[static_cast<std::size_t>(i)] = kHex[h & 0xf];
    return out;
}

inline std::string config_digest(const ModelConfig& c) { return fnv1a_hex(config_to_json(c).dump()); }

/// Independent stream seed for sub-task `index` of a root seed (splitmix64).
constexpr std::uint64_t derive_seed(std::uint64_t root, std::uint64_t index) {
    std::uint64_t z = root + 0x9e3779b97f4a7c15ull * (index + 1);
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ull;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebull;
    return z ^ (z >> 31);
}

/// Index of the largest entry; ties go to the lowest index.
template <class Row>
std::size_t argmax(const Row& r) {
    std::size_t best = 0;
    for (Eigen::Index k = 1; k < r.size(); ++k) {
        if (r(k) > r(static_cast<Eigen::Index>(best))) best = static_cast<std::size_t>(k);
    }
    return best;
}

/// Sorted distinct labels; throws unless at least two are present.
inline std::vector<int> class_set(const Labels& y) {
    std::vector<int> c(y.begin(), y.end());
    std::sort(c.begin(), c.end());
    c.erase(std::unique(c.begin(), c.end()), c.end());
    if (c.size() < 2) throw Error("training set contains a single class");
    return c;
}

/// Labels re-coded as positions in `classes`.
inline std::vector<std::size_t> encode_labels(const Labels& y, const std::vector<int>& classes) {
    std::vector<std::size_t> out(y.size());
    for (std::size_t i = 0; i < y.size(); ++i) {
        out[i] = static_cast<std::size_t>(std::lower_bound(classes.begin(), classes.end(), y[i]) - classes.begin());
    }
    return out;
}

inline void check_training_input(const Matrix& x, const Labels& y) {
    if (static_cast<std::size_t>(x.rows()) != y.size()) throw Error("train: feature / label row mismatch");
    if (x.rows() == 0 || x.cols() == 0) throw Error("train: empty feature matrix");
    if (!x.allFinite()) throw Error("train: non-finite feature value");
}

inline nlohmann::json matrix_to_json(const Matrix& m) {
    return {{"rows", m.rows()}, {"cols", m.cols()}, {"data", std::vector<double>(m.data(), m.data() + m.size())}};
}

inline Matrix matrix_from_json(const nlohmann::json& j) {
    const auto rows = j.at("rows").get<Eigen::Index>();
    const auto cols = j.at("cols").get<Eigen::Index>();
    const auto data = j.at("data").get<std::vector<double>>();
    if (static_cast<Eigen::Index>(data.size()) != rows * cols) throw Error("model file: matrix size mismatch");
    Matrix m(rows, cols);
    std::copy(data.begin(), data.end(), m.data());
    return m;
}

}  // namespace flowsync
