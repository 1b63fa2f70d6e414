#pragma once

// Cross-validation harness: fold plans, classification metrics, paired
// t-tests, and the per-fold normalize / oversample / train / score loop.

#include <algorithm>
#include <array>
#include <cmath>
#include <map>
#include <numeric>
#include <optional>
#include <random>
#include <set>
#include <string>
#include <vector>

#include <boost/math/distributions/students_t.hpp>

#include "flowsync/core.hpp"
#include "flowsync/dataset.hpp"
#include "flowsync/matrix.hpp"
#include "flowsync/models.hpp"
#include "flowsync/parallel.hpp"

namespace flowsync {

// ---------------------------------------------------------------------------
// Fold plans

struct FoldPlan {
    std::vector<std::vector<std::size_t>> folds;  // test rows of each fold, ascending
    std::uint64_t seed = 0;
    bool stratified = false;
    bool grouped = false;

    std::size_t k() const { return folds.size(); }

    /// Every row not in fold f, ascending.
    std::vector<std::size_t> train_rows(std::size_t f, std::size_t n_rows) const {
        std::vector<bool> test(n_rows, false);
        for (auto i : folds[f]) test[i] = true;
        std::vector<std::size_t> out;
        out.reserve(n_rows - folds[f].size());
        for (std::size_t i = 0; i < n_rows; ++i) {
            if (!test[i]) out.push_back(i);
        }
        return out;
    }
};

namespace detail {

/// Contiguous split of `items` into k runs; the `extra` runs starting at
/// `offset` (cyclically) receive one more item.
inline void deal_contiguous(const std::vector<std::size_t>& items, std::size_t k, std::size_t offset,
                            std::vector<std::vector<std::size_t>>& folds) {
    const std::size_t base = items.size() / k;
    const std::size_t extra = items.size() % k;
    std::vector<std::size_t> size(k, base);
    for (std::size_t i = 0; i < extra; ++i) ++size[(offset + i) % k];
    std::size_t pos = 0;
    for (std::size_t f = 0; f < k; ++f) {
        for (std::size_t i = 0; i < size[f]; ++i) folds[f].push_back(items[pos++]);
    }
}

}  // namespace detail

/// Seeded shuffle then contiguous partition. With labels, each class is
/// shuffled and partitioned on its own (remainders rotated across folds so the
/// overall sizes still differ by at most one) and the parts are merged.
inline FoldPlan kfold(std::size_t n_rows, std::size_t k, std::uint64_t seed, const Labels* stratify = nullptr) {
    if (k < 2) throw Error("kfold: need at least 2 folds");
    if (k > n_rows) throw Error("kfold: " + std::to_string(k) + " folds for " + std::to_string(n_rows) + " rows");
    if (stratify && stratify->size() != n_rows) throw Error("kfold: label count mismatch");
    FoldPlan plan;
    plan.seed = seed;
    plan.stratified = stratify != nullptr;
    plan.folds.assign(k, {});
    std::mt19937_64 rng(seed);
    if (!stratify) {
        std::vector<std::size_t> idx(n_rows);
        std::iota(idx.begin(), idx.end(), 0);
        std::shuffle(idx.begin(), idx.end(), rng);
        detail::deal_contiguous(idx, k, 0, plan.folds);
    } else {
        std::map<int, std::vector<std::size_t>> by_class;
        for (std::size_t i = 0; i < n_rows; ++i) by_class[(*stratify)[i]].push_back(i);
        std::size_t offset = 0;
        for (auto& [label, idx] : by_class) {
            std::shuffle(idx.begin(), idx.end(), rng);
            detail::deal_contiguous(idx, k, offset, plan.folds);
            offset = (offset + idx.size() % k) % k;
        }
    }
    for (auto& f : plan.folds) std::sort(f.begin(), f.end());
    return plan;
}

/// Whole groups per fold: groups are shuffled and dealt to the currently
/// smallest fold (lowest index on ties), largest groups first.
inline FoldPlan group_kfold(const std::vector<int>& groups, std::size_t k, std::uint64_t seed) {
    std::map<int, std::vector<std::size_t>> members;
    for (std::size_t i = 0; i < groups.size(); ++i) members[groups[i]].push_back(i);
    if (k < 2) throw Error("group_kfold: need at least 2 folds");
    if (k > members.size()) {
        throw Error("group_kfold: " + std::to_string(k) + " folds for " + std::to_string(members.size()) + " groups");
    }
    std::vector<int> ids;
    for (const auto& [g, rows] : members) ids.push_back(g);
    std::mt19937_64 rng(seed);
    std::shuffle(ids.begin(), ids.end(), rng);
    std::stable_sort(ids.begin(), ids.end(),
                     [&](int a, int b) { return members[a].size() > members[b].size(); });
    FoldPlan plan;
    plan.seed = seed;
    plan.grouped = true;
    plan.folds.assign(k, {});
    for (int g : ids) {
        std::size_t target = 0;
        for (std::size_t f = 1; f < k; ++f) {
            if (plan.folds[f].size() < plan.folds[target].size()) target = f;
        }
        auto& fold = plan.folds[target];
        fold.insert(fold.end(), members[g].begin(), members[g].end());
    }
    for (auto& f : plan.folds) std::sort(f.begin(), f.end());
    return plan;
}

// ---------------------------------------------------------------------------
// Metrics

enum class Metric { Accuracy, Precision, Recall, F1 };
inline constexpr std::array<Metric, 4> kMetrics = {Metric::Accuracy, Metric::Precision, Metric::Recall, Metric::F1};

constexpr std::string_view metric_name(Metric m) {
    switch (m) {
        case Metric::Accuracy: return "accuracy";
        case Metric::Precision: return "precision";
        case Metric::Recall: return "recall";
        case Metric::F1: return "f1";
    }
    return "";
}

struct MetricSet {
    double accuracy = 0.0;
    double precision = 0.0;
    double recall = 0.0;
    double f1 = 0.0;
    QualityFlags flags = kFlagNone;

    double get(Metric m) const {
        switch (m) {
            case Metric::Accuracy: return accuracy;
            case Metric::Precision: return precision;
            case Metric::Recall: return recall;
            case Metric::F1: return f1;
        }
        return 0.0;
    }
};

/// counts[truth][prediction] over classes 0..k-1.
struct ConfusionMatrix {
    std::size_t k = 0;
    std::vector<std::size_t> counts;

    std::size_t operator()(std::size_t truth, std::size_t pred) const { return counts[truth * k + pred]; }
    std::size_t total() const { return std::accumulate(counts.begin(), counts.end(), std::size_t{0}); }
    std::size_t tp(std::size_t c) const { return (*this)(c, c); }
    std::size_t fp(std::size_t c) const {
        std::size_t s = 0;
        for (std::size_t t = 0; t < k; ++t) s += t == c ? 0 : (*this)(t, c);
        return s;
    }
    std::size_t fn(std::size_t c) const {
        std::size_t s = 0;
        for (std::size_t p = 0; p < k; ++p) s += p == c ? 0 : (*this)(c, p);
        return s;
    }
    std::size_t tn(std::size_t c) const { return total() - tp(c) - fp(c) - fn(c); }
};

inline ConfusionMatrix confusion(const Labels& pred, const Labels& truth, std::size_t k) {
    if (pred.size() != truth.size()) throw Error("metrics: prediction / truth length mismatch");
    if (truth.empty()) throw Error("metrics: empty input");
    ConfusionMatrix cm{k, std::vector<std::size_t>(k * k, 0)};
    for (std::size_t i = 0; i < pred.size(); ++i) {
        if (pred[i] < 0 || truth[i] < 0 || static_cast<std::size_t>(pred[i]) >= k || static_cast<std::size_t>(truth[i]) >= k) {
            throw Error("metrics: label outside the task's classes");
        }
        ++cm.counts[static_cast<std::size_t>(truth[i]) * k + static_cast<std::size_t>(pred[i])];
    }
    return cm;
}

namespace detail {

inline double ratio(std::size_t num, std::size_t den, QualityFlags& flags) {
    if (den == 0) {
        flags |= kFlagZeroDenominator;
        return 0.0;
    }
    return static_cast<double>(num) / static_cast<double>(den);
}

inline double harmonic(double p, double r) { return p + r > 0.0 ? 2.0 * p * r / (p + r) : 0.0; }

}  // namespace detail

/// Class 1 (High) is the positive class.
inline MetricSet metrics_binary(const ConfusionMatrix& cm) {
    if (cm.k != 2) throw Error("metrics_binary: expected 2 classes");
    MetricSet m;
    const std::size_t tp = cm(1, 1), tn = cm(0, 0), fp = cm(0, 1), fn = cm(1, 0);
    m.accuracy = detail::ratio(tp + tn, cm.total(), m.flags);
    m.precision = detail::ratio(tp, tp + fp, m.flags);
    m.recall = detail::ratio(tp, tp + fn, m.flags);
    m.f1 = detail::harmonic(m.precision, m.recall);
    return m;
}

/// Macro (unweighted) one-vs-rest precision and recall; F1 is the harmonic
/// mean of those two; accuracy is sum of TP over N.
inline MetricSet metrics_multiclass(const ConfusionMatrix& cm) {
    MetricSet m;
    std::size_t hits = 0;
    for (std::size_t c = 0; c < cm.k; ++c) {
        hits += cm.tp(c);
        m.precision += detail::ratio(cm.tp(c), cm.tp(c) + cm.fp(c), m.flags);
        m.recall += detail::ratio(cm.tp(c), cm.tp(c) + cm.fn(c), m.flags);
    }
    m.precision /= static_cast<double>(cm.k);
    m.recall /= static_cast<double>(cm.k);
    m.accuracy = detail::ratio(hits, cm.total(), m.flags);
    m.f1 = detail::harmonic(m.precision, m.recall);
    return m;
}

inline MetricSet metrics_binary(const Labels& pred, const Labels& truth) { return metrics_binary(confusion(pred, truth, 2)); }
inline MetricSet metrics_ternary(const Labels& pred, const Labels& truth) { return metrics_multiclass(confusion(pred, truth, 3)); }

inline MetricSet metrics_for(Task t, const ConfusionMatrix& cm) {
    return t == Task::Binary ? metrics_binary(cm) : metrics_multiclass(cm);
}

// ---------------------------------------------------------------------------
// Paired t-test

struct TTestResult {
    double t = 0.0;
    double df = 0.0;
    double p = 1.0;
    double mean_difference = 0.0;
    bool degenerate = false;
};

/// Two-sided paired t-test on a - b. Zero-variance differences are flagged
/// degenerate with p = 1 when the mean difference is 0 and p = 0 otherwise.
inline TTestResult paired_ttest(std::span<const double> a, std::span<const double> b) {
    if (a.size() != b.size()) throw Error("paired_ttest: length mismatch");
    if (a.size() < 2) throw Error("paired_ttest: need at least 2 pairs");
    const auto n = static_cast<double>(a.size());
    TTestResult r;
    r.df = n - 1.0;
    double mean = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) mean += a[i] - b[i];
    mean /= n;
    double ss = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) ss += (a[i] - b[i] - mean) * (a[i] - b[i] - mean);
    r.mean_difference = mean;
    const double sd = std::sqrt(ss / (n - 1.0));
    if (!(sd > 0.0) || sd <= 1e-15 * std::abs(mean)) {
        r.degenerate = true;
        r.t = mean == 0.0 ? 0.0 : std::copysign(std::numeric_limits<double>::infinity(), mean);
        r.p = mean == 0.0 ? 1.0 : 0.0;
        return r;
    }
    r.t = mean / (sd / std::sqrt(n));
    const boost::math::students_t dist(r.df);
    r.p = std::min(1.0, 2.0 * boost::math::cdf(boost::math::complement(dist, std::abs(r.t))));
    return r;
}

// ---------------------------------------------------------------------------
// Cross-validation

struct CvOptions {
    std::size_t folds = 10;
    std::uint64_t seed = 0;
    bool stratify = true;           // ignored with group_folds
    bool group_folds = false;       // keep each group's rows in one fold
    bool paper_mode = false;        // global z-score + global SMOTE before splitting
    bool normalize_global = false;  // global z-score, SMOTE still inside the training fold
    bool normalize = true;
    bool smote = true;
    std::size_t smote_k = 5;
    bool keep_models = false;
    unsigned jobs = 1;

    void validate() const {
        if (paper_mode && group_folds) throw Error("--paper-mode and --group-folds are mutually exclusive");
        if (folds < 2) throw Error("need at least 2 folds");
    }

    std::string scope() const {
        if (paper_mode) return "paper";
        if (normalize_global) return "normalize-global";
        return "fold-internal";
    }
};

/// Which rows fed each data-dependent preprocessing step of a fold. Row
/// indices refer to the matrix the plan was built on.
struct FoldAudit {
    std::vector<std::size_t> train;
    std::vector<std::size_t> test;
    std::vector<std::size_t> normalization_rows;
    std::vector<std::pair<std::size_t, std::size_t>> smote_origins;
};

struct FoldResult {
    std::size_t fold = 0;
    MetricSet metrics;
    ConfusionMatrix confusion;
    FoldAudit audit;
    std::optional<TrainedModel> model;
};

struct MetricSummary {
    std::array<double, 4> mean{};
    std::array<double, 4> std{};  // population standard deviation over folds

    double get_mean(Metric m) const { return mean[static_cast<std::size_t>(m)]; }
    double get_std(Metric m) const { return std[static_cast<std::size_t>(m)]; }
};

inline MetricSummary summarize(const std::vector<FoldResult>& folds) {
    MetricSummary s;
    const auto n = static_cast<double>(folds.size());
    for (std::size_t m = 0; m < 4; ++m) {
        double sum = 0.0;
        for (const auto& f : folds) sum += f.metrics.get(kMetrics[m]);
        s.mean[m] = sum / n;
        double ss = 0.0;
        for (const auto& f : folds) ss += (f.metrics.get(kMetrics[m]) - s.mean[m]) * (f.metrics.get(kMetrics[m]) - s.mean[m]);
        s.std[m] = std::sqrt(ss / n);
    }
    return s;
}

struct CvResult {
    ModelConfig model;
    Task task = Task::Binary;
    CvOptions options;
    FoldPlan plan;
    std::size_t rows = 0;  // rows of the matrix the plan indexes
    std::vector<FoldResult> folds;
    MetricSummary summary;

    std::vector<double> per_fold(Metric m) const {
        std::vector<double> v;
        for (const auto& f : folds) v.push_back(f.metrics.get(m));
        return v;
    }
};

/// Features and labels for one task, the unit cross_validate works on.
struct TaskData {
    Matrix x;
    Labels y;
    std::vector<int> groups;
};

inline TaskData task_data(const LabeledDataset& ds, Task task, std::span<const std::size_t> columns = {}) {
    TaskData d;
    d.x = columns.empty() ? ds.features : select_cols(ds.features, columns);
    d.y = ds.labels(task);
    d.groups = ds.group_id;
    return d;
}

/// Default: per fold, z-score statistics are fitted on the training rows only,
/// SMOTE oversamples the normalized training rows only, and the untouched test
/// fold is scored. Paper mode normalizes and oversamples the whole matrix first
/// and builds the folds over the enlarged matrix.
inline CvResult cross_validate(const TaskData& data, Task task, const ModelConfig& model, const CvOptions& opt) {
    opt.validate();
    if (static_cast<std::size_t>(data.x.rows()) != data.y.size()) throw Error("cross_validate: row mismatch");
    const std::size_t k_classes = class_count(task);
    for (int v : data.y) {
        if (v < 0 || static_cast<std::size_t>(v) >= k_classes) throw Error("cross_validate: label outside the task");
    }

    Matrix x = data.x;
    Labels y = data.y;
    std::vector<int> groups = data.groups;
    if (opt.paper_mode || opt.normalize_global) {
        if (opt.normalize) x = zscore_fit_transform(x).first;
    }
    if (opt.paper_mode && opt.smote) {
        auto s = smote(x, y, opt.smote_k, derive_seed(opt.seed, 0x5a07e));
        for (const auto& [base, nb] : s.origins) groups.push_back(groups.empty() ? 0 : groups[base]);
        x = std::move(s.features);
        y = std::move(s.labels);
    }

    CvResult res;
    res.model = model;
    res.task = task;
    res.options = opt;
    res.rows = y.size();
    if (opt.group_folds) {
        if (groups.size() != y.size()) throw Error("cross_validate: group ids required for --group-folds");
        res.plan = group_kfold(groups, opt.folds, opt.seed);
    } else {
        res.plan = kfold(y.size(), opt.folds, opt.seed, opt.stratify ? &y : nullptr);
    }

    res.folds.resize(res.plan.k());
    parallel_for(res.plan.k(), opt.jobs, [&](std::size_t f) {
        FoldResult& out = res.folds[f];
        out.fold = f;
        auto& audit = out.audit;
        audit.test = res.plan.folds[f];
        audit.train = res.plan.train_rows(f, y.size());
        Matrix xtr = select_rows(x, audit.train);
        Labels ytr = select(y, audit.train);
        Matrix xte = select_rows(x, audit.test);
        const Labels yte = select(y, audit.test);
        if (!opt.paper_mode && !opt.normalize_global && opt.normalize) {
            const auto stats = zscore_fit(xtr);
            audit.normalization_rows = audit.train;
            xtr = zscore_apply(stats, xtr);
            xte = zscore_apply(stats, xte);
        } else if (opt.normalize) {
            audit.normalization_rows.resize(data.y.size());
            std::iota(audit.normalization_rows.begin(), audit.normalization_rows.end(), 0);
        }
        if (!opt.paper_mode && opt.smote) {
            auto s = smote(xtr, ytr, opt.smote_k, derive_seed(opt.seed, 0x5a07e + 1 + f));
            for (const auto& [a, b] : s.origins) audit.smote_origins.emplace_back(audit.train[a], audit.train[b]);
            xtr = std::move(s.features);
            ytr = std::move(s.labels);
        }
        ModelConfig cfg = model;
        cfg.seed = derive_seed(model.seed, f);
        cfg.jobs = 1;
        TrainedModel m;
        try {
            m = train(cfg, xtr, ytr);
        } catch (const std::exception& ex) {
            throw Error("fold " + std::to_string(f) + ": " + ex.what());
        }
        out.confusion = confusion(predict(m, xte), yte, k_classes);
        out.metrics = metrics_for(task, out.confusion);
        if (opt.keep_models) out.model = std::move(m);
    });
    res.summary = summarize(res.folds);
    return res;
}

/// True when no fold's preprocessing touched its own test rows.
inline bool audit_clean(const CvResult& r) {
    for (const auto& f : r.folds) {
        const std::set<std::size_t> test(f.audit.test.begin(), f.audit.test.end());
        for (auto i : f.audit.normalization_rows) {
            if (test.count(i)) return false;
        }
        for (const auto& [a, b] : f.audit.smote_origins) {
            if (test.count(a) || test.count(b)) return false;
        }
    }
    return true;
}

/// Per-metric paired t-tests between two runs over the same folds.
inline std::array<TTestResult, 4> compare_runs(const CvResult& a, const CvResult& b) {
    if (a.folds.size() != b.folds.size()) throw Error("compare_runs: fold counts differ");
    std::array<TTestResult, 4> out;
    for (std::size_t m = 0; m < 4; ++m) {
        const auto va = a.per_fold(kMetrics[m]);
        const auto vb = b.per_fold(kMetrics[m]);
        out[m] = paired_ttest(va, vb);
    }
    return out;
}

}  // namespace flowsync
