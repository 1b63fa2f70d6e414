#pragma once

// CART decision trees (Gini impurity) and bagged random forests with
// per-node feature subsampling.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <numeric>
#include <random>
#include <vector>

#include "flowsync/models/common.hpp"
#include "flowsync/parallel.hpp"

namespace flowsync {

struct TreeNode {
    std::int32_t feature = -1;  // -1 marks a leaf
    double threshold = 0.0;     // go left when x[feature] <= threshold
    std::int32_t left = -1;
    std::int32_t right = -1;
    std::vector<double> distribution;  // class fractions of the training rows reaching the node (leaves only)
};

struct DecisionTree {
    std::vector<TreeNode> nodes;  // nodes[0] is the root
    std::vector<double> importance;  // impurity decrease per feature, weighted by node share of the root

    template <class Row>
    const std::vector<double>& leaf(const Row& x) const {
        std::size_t i = 0;
        while (nodes[i].feature >= 0) {
            const auto& n = nodes[i];
            i = static_cast<std::size_t>(x(n.feature) <= n.threshold ? n.left : n.right);
        }
        return nodes[i].distribution;
    }

    /// Majority class at the reached leaf (ties to the lowest class).
    template <class Row>
    std::size_t predict(const Row& x) const {
        const auto& dist = leaf(x);
        return static_cast<std::size_t>(std::max_element(dist.begin(), dist.end()) - dist.begin());
    }
};

namespace detail {

class TreeBuilder {
public:
    TreeBuilder(const Matrix& x, const std::vector<std::size_t>& y, std::size_t classes, std::size_t max_depth,
                std::size_t min_leaf, std::size_t max_features, std::uint64_t seed)
        : x_(x), y_(y), k_(classes), max_depth_(max_depth), min_leaf_(std::max<std::size_t>(1, min_leaf)),
          max_features_(max_features == 0 ? static_cast<std::size_t>(x.cols()) : max_features), rng_(seed) {
        features_.resize(static_cast<std::size_t>(x.cols()));
        std::iota(features_.begin(), features_.end(), 0);
    }

    DecisionTree build(std::vector<std::size_t> rows) {
        rows_ = std::move(rows);
        total_ = static_cast<double>(rows_.size());
        tree_.importance.assign(static_cast<std::size_t>(x_.cols()), 0.0);
        grow(0, rows_.size(), 0);
        return std::move(tree_);
    }

private:
    struct Split {
        std::size_t feature = 0;
        double threshold = 0.0;
        double score = -1.0;  // sum over children of sum_c count_c^2 / n_child; higher is purer
    };

    std::vector<std::size_t> counts(std::size_t begin, std::size_t end) const {
        std::vector<std::size_t> c(k_, 0);
        for (std::size_t i = begin; i < end; ++i) ++c[y_[rows_[i]]];
        return c;
    }

    static double gini_mass(const std::vector<std::size_t>& c, double n) {
        // n * gini = n - sum c^2 / n
        double s = 0.0;
        for (auto v : c) s += static_cast<double>(v) * static_cast<double>(v);
        return n - s / n;
    }

    void evaluate(std::size_t f, std::size_t begin, std::size_t end, const std::vector<std::size_t>& parent,
                  Split& best) {
        const std::size_t n = end - begin;
        scratch_.resize(n);
        for (std::size_t i = 0; i < n; ++i) {
            const std::size_t r = rows_[begin + i];
            scratch_[i] = {x_(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(f)), y_[r]};
        }
        std::sort(scratch_.begin(), scratch_.end(),
                  [](const auto& a, const auto& b) { return a.first < b.first || (a.first == b.first && a.second < b.second); });
        if (scratch_.front().first == scratch_.back().first) return;
        left_.assign(k_, 0);
        double left_sq = 0.0;
        double right_sq = 0.0;
        right_.assign(parent.begin(), parent.end());
        for (auto v : right_) right_sq += static_cast<double>(v) * static_cast<double>(v);
        for (std::size_t p = 0; p + 1 < n; ++p) {
            const std::size_t c = scratch_[p].second;
            left_sq += 2.0 * static_cast<double>(left_[c]) + 1.0;
            right_sq -= 2.0 * static_cast<double>(right_[c]) - 1.0;
            ++left_[c];
            --right_[c];
            const std::size_t nl = p + 1;
            const std::size_t nr = n - nl;
            if (nl < min_leaf_ || nr < min_leaf_) continue;
            if (scratch_[p].first == scratch_[p + 1].first) continue;
            const double score = left_sq / static_cast<double>(nl) + right_sq / static_cast<double>(nr);
            if (score > best.score) {
                best.score = score;
                best.feature = f;
                const double lo = scratch_[p].first;
                const double hi = scratch_[p + 1].first;
                best.threshold = lo + (hi - lo) / 2.0;
                if (!(best.threshold < hi)) best.threshold = lo;
            }
        }
    }

    std::int32_t make_leaf(const std::vector<std::size_t>& c, std::size_t n) {
        TreeNode leaf;
        leaf.distribution.resize(k_);
        for (std::size_t i = 0; i < k_; ++i) leaf.distribution[i] = static_cast<double>(c[i]) / static_cast<double>(n);
        tree_.nodes.push_back(std::move(leaf));
        return static_cast<std::int32_t>(tree_.nodes.size() - 1);
    }

    std::int32_t grow(std::size_t begin, std::size_t end, std::size_t depth) {
        const std::size_t n = end - begin;
        const auto c = counts(begin, end);
        const bool pure = std::count_if(c.begin(), c.end(), [](auto v) { return v > 0; }) <= 1;
        if (pure || n < 2 * min_leaf_ || (max_depth_ != 0 && depth >= max_depth_)) return make_leaf(c, n);

        // Visit features in a random order (all of them for a plain tree); stop after
        // max_features candidates once at least one valid split has been seen.
        const std::size_t d = features_.size();
        if (max_features_ < d) std::shuffle(features_.begin(), features_.end(), rng_);
        Split best;
        for (std::size_t i = 0; i < d; ++i) {
            if (i >= max_features_ && best.score >= 0.0) break;
            evaluate(features_[i], begin, end, c, best);
        }
        if (best.score < 0.0) return make_leaf(c, n);

        const auto mid_it = std::partition(rows_.begin() + static_cast<std::ptrdiff_t>(begin),
                                           rows_.begin() + static_cast<std::ptrdiff_t>(end), [&](std::size_t r) {
                                               return x_(static_cast<Eigen::Index>(r),
                                                         static_cast<Eigen::Index>(best.feature)) <= best.threshold;
                                           });
        const auto mid = static_cast<std::size_t>(mid_it - rows_.begin());
        // Child-weighted impurity decrease, as a share of the root sample count.
        const double parent_mass = gini_mass(c, static_cast<double>(n));
        const double child_mass = static_cast<double>(n) - best.score;
        tree_.importance[best.feature] += std::max(0.0, parent_mass - child_mass) / total_;

        const auto self = static_cast<std::int32_t>(tree_.nodes.size());
        tree_.nodes.push_back(TreeNode{static_cast<std::int32_t>(best.feature), best.threshold, -1, -1, {}});
        const auto l = grow(begin, mid, depth + 1);
        const auto r = grow(mid, end, depth + 1);
        tree_.nodes[static_cast<std::size_t>(self)].left = l;
        tree_.nodes[static_cast<std::size_t>(self)].right = r;
        return self;
    }

    const Matrix& x_;
    const std::vector<std::size_t>& y_;
    std::size_t k_;
    std::size_t max_depth_;
    std::size_t min_leaf_;
    std::size_t max_features_;
    std::mt19937_64 rng_;
    std::vector<std::size_t> features_;
    std::vector<std::size_t> rows_;
    double total_ = 0.0;
    DecisionTree tree_;
    std::vector<std::pair<double, std::size_t>> scratch_;
    std::vector<std::size_t> left_, right_;
};

}  // namespace detail

inline DecisionTree train_tree(const ModelConfig& cfg, const Matrix& x, const std::vector<std::size_t>& y,
                               std::size_t classes) {
    std::vector<std::size_t> rows(y.size());
    std::iota(rows.begin(), rows.end(), 0);
    detail::TreeBuilder b(x, y, classes, cfg.max_depth, cfg.min_leaf, cfg.max_features, cfg.seed);
    return b.build(std::move(rows));
}

struct RandomForest {
    std::vector<DecisionTree> trees;
};

inline std::size_t rf_max_features(const ModelConfig& cfg, std::size_t d) {
    if (cfg.max_features != 0) return std::min(cfg.max_features, d);
    return std::max<std::size_t>(1, static_cast<std::size_t>(std::sqrt(static_cast<double>(d))));
}

/// Tree t draws a bootstrap sample and its feature orders from derive_seed(seed, t),
/// so the forest is identical for any number of jobs.
inline RandomForest train_forest(const ModelConfig& cfg, const Matrix& x, const std::vector<std::size_t>& y,
                                 std::size_t classes) {
    if (cfg.n_trees == 0) throw Error("random forest needs at least one tree");
    RandomForest f;
    f.trees.resize(cfg.n_trees);
    const std::size_t n = y.size();
    const std::size_t mtry = rf_max_features(cfg, static_cast<std::size_t>(x.cols()));
    parallel_for(cfg.n_trees, cfg.jobs, [&](std::size_t t) {
        const std::uint64_t s = derive_seed(cfg.seed, t);
        std::mt19937_64 rng(s);
        std::uniform_int_distribution<std::size_t> pick(0, n - 1);
        std::vector<std::size_t> rows(n);
        for (auto& r : rows) r = pick(rng);
        detail::TreeBuilder b(x, y, classes, cfg.max_depth, cfg.min_leaf, mtry, derive_seed(s, 1));
        f.trees[t] = b.build(std::move(rows));
    });
    return f;
}

/// Vote fractions per class.
inline Matrix forest_votes(const RandomForest& f, const Matrix& x, std::size_t classes) {
    Matrix v = Matrix::Zero(x.rows(), static_cast<Eigen::Index>(classes));
    for (Eigen::Index i = 0; i < x.rows(); ++i) {
        const auto row = x.row(i);
        for (const auto& t : f.trees) v(i, static_cast<Eigen::Index>(t.predict(row))) += 1.0;
    }
    return v / static_cast<double>(f.trees.size());
}

inline Matrix tree_scores(const DecisionTree& t, const Matrix& x, std::size_t classes) {
    Matrix s(x.rows(), static_cast<Eigen::Index>(classes));
    for (Eigen::Index i = 0; i < x.rows(); ++i) {
        const auto& d = t.leaf(x.row(i));
        for (std::size_t c = 0; c < classes; ++c) s(i, static_cast<Eigen::Index>(c)) = d[c];
    }
    return s;
}

/// Mean decrease in impurity: per-tree totals normalized to 1, averaged over
/// trees, renormalized to sum 1 (all zeros if no tree ever split).
inline std::vector<double> forest_mdi(const RandomForest& f, std::size_t features) {
    std::vector<double> acc(features, 0.0);
    for (const auto& t : f.trees) {
        const double s = std::accumulate(t.importance.begin(), t.importance.end(), 0.0);
        if (!(s > 0.0)) continue;
        for (std::size_t j = 0; j < features; ++j) acc[j] += t.importance[j] / s;
    }
    const double total = std::accumulate(acc.begin(), acc.end(), 0.0);
    if (total > 0.0) {
        for (auto& v : acc) v /= total;
    }
    return acc;
}

inline nlohmann::json tree_to_json(const DecisionTree& t) {
    nlohmann::json nodes = nlohmann::json::array();
    for (const auto& n : t.nodes) {
        if (n.feature < 0) nodes.push_back({{"leaf", n.distribution}});
        else nodes.push_back({{"f", n.feature}, {"t", n.threshold}, {"l", n.left}, {"r", n.right}});
    }
    return {{"nodes", nodes}, {"importance", t.importance}};
}

inline DecisionTree tree_from_json(const nlohmann::json& j) {
    DecisionTree t;
    for (const auto& n : j.at("nodes")) {
        TreeNode node;
        if (n.contains("leaf")) {
            node.distribution = n.at("leaf").get<std::vector<double>>();
        } else {
            node.feature = n.at("f").get<std::int32_t>();
            node.threshold = n.at("t").get<double>();
            node.left = n.at("l").get<std::int32_t>();
            node.right = n.at("r").get<std::int32_t>();
        }
        t.nodes.push_back(std::move(node));
    }
    t.importance = j.at("importance").get<std::vector<double>>();
    return t;
}

}  // namespace flowsync
