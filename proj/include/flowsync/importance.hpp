#pragma once

// Feature importance across cross-validation folds: logistic-regression
// coefficients, random-forest impurity decrease, and sampled Shapley values
// for networks.

#include <algorithm>
#include <cmath>
#include <functional>
#include <numeric>
#include <random>
#include <string>
#include <vector>

#include "flowsync/eval.hpp"
#include "flowsync/models.hpp"

namespace flowsync {

struct FeatureImportance {
    std::size_t column = 0;
    std::string name;
    double value = 0.0;  // signed for binary coefficients, otherwise >= 0
};

/// Sorted by |value| descending, ties by column index.
inline std::vector<FeatureImportance> rank_features(const std::vector<double>& values,
                                                    const std::vector<std::string>& names) {
    if (values.size() != names.size()) throw Error("rank_features: name count mismatch");
    std::vector<FeatureImportance> out;
    for (std::size_t j = 0; j < values.size(); ++j) out.push_back({j, names[j], values[j]});
    std::stable_sort(out.begin(), out.end(),
                     [](const auto& a, const auto& b) { return std::abs(a.value) > std::abs(b.value); });
    return out;
}

inline std::vector<const TrainedModel*> fold_models(const CvResult& r) {
    std::vector<const TrainedModel*> out;
    for (const auto& f : r.folds) {
        if (!f.model) throw Error("importance: cross-validation was run without keep_models");
        out.push_back(&*f.model);
    }
    return out;
}

/// Per-feature coefficient averaged over models. Two classes: w_High - w_Low,
/// the log-odds weight of the positive class. More classes: mean over classes
/// of |w_c - mean_c w|, the spread of the feature's class weights.
inline std::vector<double> importance_coef(const std::vector<const TrainedModel*>& models) {
    if (models.empty()) throw Error("importance_coef: no models");
    std::vector<double> acc(models.front()->features, 0.0);
    for (const auto* m : models) {
        if (m->kind != ModelKind::LR) throw Error("importance_coef requires LR models, got " + std::string(model_name(m->kind)));
        if (m->features != acc.size()) throw Error("importance_coef: models differ in feature count");
        const auto& w = std::get<LinearModel>(m->params).weights;
        for (Eigen::Index j = 0; j < w.rows(); ++j) {
            double v = 0.0;
            if (w.cols() == 2) {
                v = w(j, 1) - w(j, 0);
            } else {
                const double mean = w.row(j).mean();
                v = (w.row(j).array() - mean).abs().mean();
            }
            acc[static_cast<std::size_t>(j)] += v;
        }
    }
    for (auto& v : acc) v /= static_cast<double>(models.size());
    return acc;
}

/// Per-model MDI (sums to 1 unless no tree split), averaged over models.
inline std::vector<double> importance_mdi(const std::vector<const TrainedModel*>& models) {
    if (models.empty()) throw Error("importance_mdi: no models");
    std::vector<double> acc(models.front()->features, 0.0);
    for (const auto* m : models) {
        if (m->kind != ModelKind::RF) throw Error("importance_mdi requires RF models, got " + std::string(model_name(m->kind)));
        if (m->features != acc.size()) throw Error("importance_mdi: models differ in feature count");
        const auto mdi = forest_mdi(std::get<RandomForest>(m->params), acc.size());
        for (std::size_t j = 0; j < acc.size(); ++j) acc[j] += mdi[j];
    }
    for (auto& v : acc) v /= static_cast<double>(models.size());
    return acc;
}

using ScoreFunction = std::function<Matrix(const Matrix&)>;

/// Sampled Shapley values of every output column of f. For each explained
/// row, sample s draws a random feature order and background row
/// background[s mod nb]; features are switched from the background value to
/// the explained value one at a time in that order and each switch is
/// credited with the change in f. Averaging gives, per row, attributions whose
/// sum over features is f(x) minus the mean of f over the visited background
/// rows (exactly the background mean when n_samples is a multiple of nb).
/// Result: one (features x outputs) matrix per explained row.
inline std::vector<Matrix> shapley_sampling(const ScoreFunction& f, const Matrix& background, const Matrix& explain,
                                            std::size_t n_samples, std::uint64_t seed) {
    if (background.rows() == 0) throw Error("shapley: empty background");
    if (background.cols() != explain.cols()) throw Error("shapley: background / explain column mismatch");
    if (n_samples == 0) throw Error("shapley: need at least one sample");
    const auto d = explain.cols();
    std::mt19937_64 rng(seed);
    std::vector<Eigen::Index> order(static_cast<std::size_t>(d));
    std::vector<Matrix> out;
    Matrix path(d + 1, d);
    for (Eigen::Index r = 0; r < explain.rows(); ++r) {
        Matrix phi;
        for (std::size_t s = 0; s < n_samples; ++s) {
            std::iota(order.begin(), order.end(), Eigen::Index{0});
            std::shuffle(order.begin(), order.end(), rng);
            RowVector cur = background.row(static_cast<Eigen::Index>(s % static_cast<std::size_t>(background.rows())));
            path.row(0) = cur;
            for (Eigen::Index step = 0; step < d; ++step) {
                const auto j = order[static_cast<std::size_t>(step)];
                cur(j) = explain(r, j);
                path.row(step + 1) = cur;
            }
            const Matrix scores = f(path);
            if (phi.size() == 0) phi = Matrix::Zero(d, scores.cols());
            for (Eigen::Index step = 0; step < d; ++step) {
                phi.row(order[static_cast<std::size_t>(step)]) += scores.row(step + 1) - scores.row(step);
            }
        }
        out.push_back(phi / static_cast<double>(n_samples));
    }
    return out;
}

struct ShapOptions {
    std::size_t n_samples = 256;       // feature orders per explained row
    std::size_t background_rows = 64;
    std::size_t explain_rows = 20;
    std::uint64_t seed = 0;
};

/// Network importance: per fold, mean over explained rows and classes of
/// |phi| on that fold's class probabilities, averaged over folds. Background
/// and explained rows are drawn (seeded) from the fold's own training and test
/// rows respectively and normalized exactly as the model saw them.
inline std::vector<double> importance_shap(const std::vector<const TrainedModel*>& models,
                                           const std::vector<Matrix>& backgrounds,
                                           const std::vector<Matrix>& explains, std::size_t n_samples,
                                           std::uint64_t seed) {
    if (models.empty()) throw Error("importance_shap: no models");
    if (n_samples < 50) throw Error("importance_shap: use at least 50 samples");
    if (backgrounds.size() != models.size() || explains.size() != models.size()) {
        throw Error("importance_shap: one background and one explain matrix per model");
    }
    std::vector<double> acc(models.front()->features, 0.0);
    for (std::size_t i = 0; i < models.size(); ++i) {
        const auto* m = models[i];
        if (!is_network(m->kind)) throw Error("importance_shap requires a network, got " + std::string(model_name(m->kind)));
        const auto phis = shapley_sampling([m](const Matrix& z) { return predict_scores(*m, z); }, backgrounds[i],
                                           explains[i], n_samples, derive_seed(seed, i));
        for (const auto& phi : phis) {
            for (Eigen::Index j = 0; j < phi.rows(); ++j) {
                acc[static_cast<std::size_t>(j)] +=
                    phi.row(j).cwiseAbs().mean() / static_cast<double>(phis.size() * models.size());
            }
        }
    }
    return acc;
}

/// Up to `count` rows drawn without replacement (seeded), ascending.
inline std::vector<std::size_t> sample_rows(std::size_t n, std::size_t count, std::uint64_t seed) {
    std::vector<std::size_t> idx(n);
    std::iota(idx.begin(), idx.end(), 0);
    std::mt19937_64 rng(seed);
    std::shuffle(idx.begin(), idx.end(), rng);
    idx.resize(std::min(n, count));
    std::sort(idx.begin(), idx.end());
    return idx;
}

enum class ImportanceMethod { Coef, Mdi, Shap };

inline std::optional<ImportanceMethod> parse_importance_method(std::string_view s) {
    if (s == "coef") return ImportanceMethod::Coef;
    if (s == "mdi") return ImportanceMethod::Mdi;
    if (s == "shap") return ImportanceMethod::Shap;
    return std::nullopt;
}

inline std::string_view importance_method_name(ImportanceMethod m) {
    switch (m) {
        case ImportanceMethod::Coef: return "coef";
        case ImportanceMethod::Mdi: return "mdi";
        case ImportanceMethod::Shap: return "shap";
    }
    return "";
}

struct ImportanceResult {
    ImportanceMethod method = ImportanceMethod::Coef;
    CvResult cv;
    std::vector<double> values;  // per column, before ranking
    std::vector<FeatureImportance> ranking;
};

/// Runs cross-validation with model retention and applies the importance
/// method matching the model kind: coef (LR), mdi (RF) or shap (networks).
inline ImportanceResult feature_importance(const TaskData& data, const std::vector<std::string>& names, Task task,
                                           ImportanceMethod method, const ModelConfig& model, CvOptions opt,
                                           const ShapOptions& shap = {}) {
    const bool ok = (method == ImportanceMethod::Coef && model.kind == ModelKind::LR) ||
                    (method == ImportanceMethod::Mdi && model.kind == ModelKind::RF) ||
                    (method == ImportanceMethod::Shap && is_network(model.kind));
    if (!ok) {
        throw Error("importance method " + std::string(importance_method_name(method)) + " cannot explain " +
                    std::string(model_name(model.kind)) + " (coef needs LR, mdi needs RF, shap needs a network)");
    }
    if (names.size() != static_cast<std::size_t>(data.x.cols())) throw Error("importance: name count mismatch");
    opt.keep_models = true;
    ImportanceResult res;
    res.method = method;
    res.cv = cross_validate(data, task, model, opt);
    const auto models = fold_models(res.cv);
    if (method == ImportanceMethod::Coef) {
        res.values = importance_coef(models);
    } else if (method == ImportanceMethod::Mdi) {
        res.values = importance_mdi(models);
    } else {
        if (opt.paper_mode) throw Error("shap importance is not available with --paper-mode");
        std::vector<Matrix> bg, ex;
        for (const auto& f : res.cv.folds) {
            Matrix xtr = select_rows(data.x, f.audit.train);
            Matrix xte = select_rows(data.x, f.audit.test);
            if (opt.normalize) {
                const auto stats = zscore_fit(opt.normalize_global ? data.x : xtr);
                xtr = zscore_apply(stats, xtr);
                xte = zscore_apply(stats, xte);
            }
            const auto seed = derive_seed(shap.seed, 0xb6 + f.fold);
            bg.push_back(select_rows(xtr, sample_rows(static_cast<std::size_t>(xtr.rows()), shap.background_rows, seed)));
            ex.push_back(select_rows(xte, sample_rows(static_cast<std::size_t>(xte.rows()), shap.explain_rows, seed + 1)));
        }
        res.values = importance_shap(models, bg, ex, shap.n_samples, shap.seed);
    }
    res.ranking = rank_features(res.values, names);
    return res;
}

}  // namespace flowsync
