#include <gtest/gtest.h>

#include <random>

#include "flowsync/models.hpp"

using namespace flowsync;

namespace {

/// Two Gaussian blobs (sigma 1) whose centres are 10 sigma apart along x0.
void blobs(std::size_t n, std::uint64_t seed, Matrix& x, Labels& y) {
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> g;
    x.resize(static_cast<Eigen::Index>(n), 2);
    y.assign(n, 0);
    for (std::size_t i = 0; i < n; ++i) {
        const int c = static_cast<int>(i % 2);
        y[i] = c;
        x(static_cast<Eigen::Index>(i), 0) = g(rng) + (c ? 5.0 : -5.0);
        x(static_cast<Eigen::Index>(i), 1) = g(rng);
    }
}

/// Three-class data driven by the first two of `d` features.
void three_class(std::size_t n, std::size_t d, std::uint64_t seed, Matrix& x, Labels& y) {
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> g;
    x.resize(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(d));
    y.assign(n, 0);
    for (std::size_t i = 0; i < n; ++i) {
        const int c = static_cast<int>(i % 3);
        y[i] = c;
        for (std::size_t j = 0; j < d; ++j) x(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = g(rng);
        x(static_cast<Eigen::Index>(i), 0) += 3.0 * (c == 1);
        x(static_cast<Eigen::Index>(i), 1) += 3.0 * (c == 2);
    }
}

double accuracy(const Labels& a, const Labels& b) {
    std::size_t hit = 0;
    for (std::size_t i = 0; i < a.size(); ++i) hit += a[i] == b[i];
    return static_cast<double>(hit) / static_cast<double>(a.size());
}

ModelConfig quick(ModelKind k, std::uint64_t seed = 1) {
    auto c = default_config(k, seed);
    c.n_trees = 25;
    if (is_network(k)) {
        c.hidden.assign(hidden_layer_count(k), 16);
        c.epochs = 60;
    }
    return c;
}

}  // namespace

TEST(Models, KindsAndDefaults) {
    EXPECT_EQ(parse_model_kind("dnn3"), ModelKind::DNN3);
    EXPECT_EQ(parse_model_kind("Rf"), ModelKind::RF);
    EXPECT_FALSE(parse_model_kind("knn"));
    EXPECT_EQ(default_config(ModelKind::NN).hidden.size(), 1u);
    EXPECT_EQ(default_config(ModelKind::DNN1).hidden.size(), 3u);
    EXPECT_EQ(default_config(ModelKind::DNN2).hidden.size(), 5u);
    EXPECT_EQ(default_config(ModelKind::DNN3).hidden.size(), 9u);
    EXPECT_EQ(default_config(ModelKind::DNN3).hidden[0], 128u);
    const auto lr = default_config(ModelKind::LR);
    EXPECT_EQ(lr.learning_rate, 0.1);
    EXPECT_EQ(lr.epochs, 500u);
    EXPECT_EQ(lr.l2, 1e-4);
    EXPECT_EQ(default_config(ModelKind::RF).n_trees, 200u);
    EXPECT_EQ(default_config(ModelKind::DT).max_depth, 16u);
    EXPECT_EQ(default_config(ModelKind::DT).min_leaf, 2u);
    EXPECT_EQ(default_config(ModelKind::NN).batch_size, 32u);
    EXPECT_EQ(default_config(ModelKind::NN).learning_rate, 1e-3);
}

TEST(Models, LogisticSeparatesBlobs) {
    Matrix x;
    Labels y;
    blobs(200, 3, x, y);
    // Hand-fit separating hyperplane x0 = 0 confirms separability first.
    for (std::size_t i = 0; i < y.size(); ++i) ASSERT_EQ(x(static_cast<Eigen::Index>(i), 0) > 0.0, y[i] == 1);
    const auto m = train(default_config(ModelKind::LR), x, y);
    EXPECT_EQ(accuracy(predict(m, x), y), 1.0);
    const Matrix s = predict_scores(m, x);
    for (Eigen::Index i = 0; i < s.rows(); ++i) EXPECT_NEAR(s.row(i).sum(), 1.0, 1e-9);
}

TEST(Models, ZeroWeightLogisticIsUniform) {
    Matrix x;
    Labels y;
    three_class(30, 4, 4, x, y);
    auto cfg = default_config(ModelKind::LR);
    cfg.epochs = 0;
    const auto m = train(cfg, x, y);
    const Matrix s = predict_scores(m, x);
    for (Eigen::Index i = 0; i < s.rows(); ++i) {
        for (Eigen::Index c = 0; c < 3; ++c) EXPECT_DOUBLE_EQ(s(i, c), 1.0 / 3.0);
    }
    EXPECT_EQ(predict(m, x), Labels(30, 0));  // ties go to the lowest class
}

TEST(Models, SvmSeparatesBlobsAndHandlesThreeClasses) {
    Matrix x;
    Labels y;
    blobs(200, 5, x, y);
    EXPECT_EQ(accuracy(predict(train(default_config(ModelKind::SVM), x, y), x), y), 1.0);
    three_class(300, 5, 6, x, y);
    const auto m = train(default_config(ModelKind::SVM), x, y);
    EXPECT_EQ(predict_scores(m, x).cols(), 3);
    EXPECT_GE(accuracy(predict(m, x), y), 0.8);
}

TEST(Models, UnlimitedTreeMemorizesConsistentLabels) {
    std::mt19937_64 rng(7);
    std::normal_distribution<double> g;
    Matrix x(150, 6);
    Labels y(150);
    std::uniform_int_distribution<int> lab(0, 2);
    for (Eigen::Index i = 0; i < x.rows(); ++i) {
        for (Eigen::Index j = 0; j < x.cols(); ++j) x(i, j) = g(rng);
        y[static_cast<std::size_t>(i)] = lab(rng);
    }
    auto cfg = default_config(ModelKind::DT);
    cfg.max_depth = 0;
    cfg.min_leaf = 1;
    EXPECT_EQ(accuracy(predict(train(cfg, x, y), x), y), 1.0);

    // XOR: no single split lowers impurity, the tree must still split.
    Matrix xo(4, 2);
    xo << 0, 0, 0, 1, 1, 0, 1, 1;
    const Labels yo{0, 1, 1, 0};
    EXPECT_EQ(predict(train(cfg, xo, yo), xo), yo);
}

TEST(Models, TreeDepthLimitAndLeafSize) {
    Matrix x;
    Labels y;
    three_class(200, 4, 8, x, y);
    auto cfg = default_config(ModelKind::DT);
    cfg.max_depth = 1;
    const auto m = train(cfg, x, y);
    const auto& t = std::get<DecisionTree>(m.params);
    EXPECT_EQ(t.nodes.size(), 3u);
    EXPECT_LT(accuracy(predict(m, x), y), 1.0);
}

TEST(Models, ForestIsExactMajorityVote) {
    Matrix x;
    Labels y;
    three_class(240, 9, 9, x, y);
    const auto m = train(quick(ModelKind::RF), x, y);
    const auto& f = std::get<RandomForest>(m.params);
    ASSERT_EQ(f.trees.size(), 25u);
    std::mt19937_64 rng(10);
    std::normal_distribution<double> g;
    Matrix probe(20, 9);
    for (Eigen::Index i = 0; i < probe.size(); ++i) probe.data()[i] = 2.0 * g(rng);
    const auto pred = predict(m, probe);
    const Matrix votes = predict_scores(m, probe);
    for (Eigen::Index i = 0; i < probe.rows(); ++i) {
        std::array<int, 3> count{};
        for (const auto& t : f.trees) ++count[t.predict(probe.row(i))];
        int best = 0;
        for (int c = 1; c < 3; ++c) {
            if (count[static_cast<std::size_t>(c)] > count[static_cast<std::size_t>(best)]) best = c;
        }
        EXPECT_EQ(pred[static_cast<std::size_t>(i)], best);
        for (int c = 0; c < 3; ++c) EXPECT_DOUBLE_EQ(votes(i, c), count[static_cast<std::size_t>(c)] / 25.0);
    }
}

TEST(Models, ForestIndependentOfJobCount) {
    Matrix x;
    Labels y;
    three_class(120, 6, 11, x, y);
    auto cfg = quick(ModelKind::RF);
    const auto a = serialize(train(cfg, x, y));
    cfg.jobs = 3;
    EXPECT_EQ(serialize(train(cfg, x, y)), a);
}

TEST(Models, ForestMdiNormalizedAndFindsSignal) {
    Matrix x;
    Labels y;
    three_class(300, 8, 12, x, y);
    x.col(7).setConstant(1.0);  // never splittable
    const auto m = train(quick(ModelKind::RF), x, y);
    const auto imp = forest_mdi(std::get<RandomForest>(m.params), 8);
    double sum = 0.0;
    for (double v : imp) sum += v;
    EXPECT_NEAR(sum, 1.0, 1e-9);
    EXPECT_EQ(imp[7], 0.0);
    EXPECT_GT(imp[0], imp[3]);
    EXPECT_GT(imp[1], imp[3]);
}

TEST(Models, EveryKindTrainsPredictsAndRoundTrips) {
    Matrix x;
    Labels y;
    three_class(150, 5, 13, x, y);
    for (auto k : kModelKinds) {
        SCOPED_TRACE(std::string(model_name(k)));
        const auto cfg = quick(k);
        const auto m = train(cfg, x, y);
        const Matrix s = predict_scores(m, x);
        ASSERT_EQ(s.rows(), 150);
        ASSERT_EQ(s.cols(), 3);
        EXPECT_TRUE(s.allFinite());
        if (k != ModelKind::SVM) {
            for (Eigen::Index i = 0; i < s.rows(); ++i) EXPECT_NEAR(s.row(i).sum(), 1.0, 1e-9);
        }
        const auto p = predict(m, x);
        for (Eigen::Index i = 0; i < s.rows(); ++i) EXPECT_EQ(p[static_cast<std::size_t>(i)], argmax(s.row(i)));
        EXPECT_GE(accuracy(p, y), 0.7);

        // Determinism and serialization.
        const auto text = serialize(m);
        EXPECT_EQ(serialize(train(cfg, x, y)), text);
        const auto back = deserialize(text);
        EXPECT_EQ(serialize(back), text);
        EXPECT_EQ(predict_scores(back, x), s);

        // Duplicate rows predict identically.
        Matrix dup(2, 5);
        dup.row(0) = x.row(3);
        dup.row(1) = x.row(3);
        const auto pd = predict(m, dup);
        EXPECT_EQ(pd[0], pd[1]);

        EXPECT_THROW(predict(m, Matrix::Zero(2, 4)), Error);
    }
}

TEST(Models, FileRoundTripAndDigest) {
    Matrix x;
    Labels y;
    blobs(40, 14, x, y);
    const auto m = train(default_config(ModelKind::LR, 5), x, y);
    const auto path = (std::filesystem::temp_directory_path() / "flowsync_model_test.json").string();
    save_model(path, m);
    const auto back = load_model(path);
    std::filesystem::remove(path);
    EXPECT_EQ(back.digest, m.digest);
    EXPECT_EQ(predict_scores(back, x), predict_scores(m, x));
    EXPECT_NE(config_digest(default_config(ModelKind::LR, 6)), m.digest);

    auto j = model_to_json(m);
    j["config"]["epochs"] = 7;
    EXPECT_THROW(model_from_json(j), Error);
    j = model_to_json(m);
    j["version"] = 99;
    EXPECT_THROW(model_from_json(j), Error);
}

TEST(Models, TrainingErrors) {
    Matrix x(4, 2);
    x.setOnes();
    EXPECT_THROW(train(default_config(ModelKind::LR), x, Labels{1, 1, 1, 1}), Error);
    x(0, 0) = std::numeric_limits<double>::quiet_NaN();
    EXPECT_THROW(train(default_config(ModelKind::RF), x, Labels{0, 1, 0, 1}), Error);
    EXPECT_THROW(train(default_config(ModelKind::LR), Matrix::Ones(3, 2), Labels{0, 1}), Error);
    auto bad = default_config(ModelKind::DNN2);
    bad.hidden.pop_back();
    EXPECT_THROW(train(bad, Matrix::Identity(4, 4), Labels{0, 1, 0, 1}), Error);
}

TEST(Models, LogisticPermutationEquivariance) {
    Matrix x;
    Labels y;
    three_class(200, 6, 15, x, y);
    const std::vector<std::size_t> perm{3, 0, 5, 1, 4, 2};
    const Matrix xp = select_cols(x, perm);
    const auto a = train(default_config(ModelKind::LR), x, y);
    const auto b = train(default_config(ModelKind::LR), xp, y);
    EXPECT_EQ(predict(a, x), predict(b, xp));
    EXPECT_TRUE(predict_scores(a, x).isApprox(predict_scores(b, xp), 1e-10));
}

TEST(Models, NetworkPermutationEquivarianceWithPermutedInit) {
    // A network whose first layer is permuted along with the columns computes the
    // same function; training from that state follows the same trajectory.
    Matrix x;
    Labels y;
    three_class(60, 4, 16, x, y);
    const std::vector<std::size_t> perm{2, 0, 3, 1};
    auto net = init_network({8}, Activation::ReLU, 4, 3, 1);
    Network permuted = net;
    for (std::size_t j = 0; j < 4; ++j) permuted.weights[0].row(static_cast<Eigen::Index>(j)) = net.weights[0].row(static_cast<Eigen::Index>(perm[j]));
    const Matrix xp = select_cols(x, perm);
    EXPECT_TRUE(network_scores(net, x).isApprox(network_scores(permuted, xp), 1e-12));
}

TEST(Models, GradientCheckFreshNetworks) {
    std::mt19937_64 rng(17);
    std::normal_distribution<double> g;
    Matrix x(5, 10);
    for (Eigen::Index i = 0; i < x.size(); ++i) x.data()[i] = g(rng);
    const Labels y{0, 1, 2, 1, 0};
    for (auto k : {ModelKind::NN, ModelKind::DNN1, ModelKind::DNN2, ModelKind::DNN3}) {
        SCOPED_TRACE(std::string(model_name(k)));
        auto cfg = default_config(k, 3);
        cfg.hidden.assign(hidden_layer_count(k), 16);
        const auto m = initialize_network(cfg, 10, {0, 1, 2});
        const double err = gradient_check(m, x, y);
        EXPECT_LT(err, k == ModelKind::NN ? 1e-4 : 1e-3);
    }
    auto nn = default_config(ModelKind::NN, 4);
    nn.hidden = {16};
    const auto m = initialize_network(nn, 10, {0, 1});
    EXPECT_TRUE(std::isfinite(gradient_check(m, Matrix::Zero(5, 10), Labels(5, 0))));
    EXPECT_THROW(gradient_check(m, Matrix::Zero(21, 10), Labels(21, 0)), Error);
    Matrix bx;
    Labels by;
    blobs(20, 1, bx, by);
    EXPECT_THROW(gradient_check(train(default_config(ModelKind::LR), bx, by), bx.topRows(5), Labels(5, 0)), Error);
}

TEST(Models, GradientCheckDetectsWrongGradient) {
    // Sanity of the checker itself: an L2 term the loss includes but the model
    // config omits must be reported as a mismatch.
    std::mt19937_64 rng(18);
    std::normal_distribution<double> g;
    Matrix x(5, 6);
    for (Eigen::Index i = 0; i < x.size(); ++i) x.data()[i] = g(rng);
    const auto net = init_network({8}, Activation::ReLU, 6, 2, 2);
    const std::vector<std::size_t> y{0, 1, 1, 0, 1};
    EXPECT_LT(network_gradient_check(net, x, y, 0.5), 1e-4);
    auto g0 = detail::backward(net, detail::forward(net, x), y, 0.0);
    auto g1 = detail::backward(net, detail::forward(net, x), y, 0.5);
    EXPECT_GT((g0.weights[0] - g1.weights[0]).norm(), 1e-3);
}

TEST(Models, NetworkEarlyStoppingKeepsBestEpoch) {
    Matrix x;
    Labels y;
    three_class(200, 5, 19, x, y);
    auto cfg = quick(ModelKind::NN);
    cfg.epochs = 400;
    cfg.patience = 5;
    const auto m = train(cfg, x, y);
    EXPECT_LT(std::get<Network>(m.params).epochs_trained, 400u);
    EXPECT_GE(accuracy(predict(m, x), y), 0.8);
}
