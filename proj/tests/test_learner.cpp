#include <cmath>
#include <span>
#include <vector>

#include <gtest/gtest.h>

#include "albi/learner.hpp"
#include "albi/rng.hpp"
#include "test_util.hpp"

using albi::Rng;
using albi::learner::Hyperparams;
using albi::learner::Model;
using albi::learner::TrainRow;

namespace {

struct Problem {
    std::vector<std::vector<double>> features;
    std::vector<int> labels;

    std::vector<TrainRow> rows() const {
        std::vector<TrainRow> out;
        for (std::size_t i = 0; i < features.size(); ++i)
            out.push_back({std::span<const double>(features[i]), labels[i]});
        return out;
    }
};

Problem random_problem(Rng& rng, int n, int d) {
    Problem p;
    for (int i = 0; i < n; ++i) {
        std::vector<double> f(static_cast<std::size_t>(d));
        for (double& v : f) v = rng.gaussian();
        p.features.push_back(std::move(f));
        p.labels.push_back(rng.bernoulli(0.5) ? 1 : 0);
    }
    return p;
}

Problem separable_2d() {
    Problem p;
    p.features = {{-2.0, -1.0}, {-1.5, -2.0}, {2.0, 1.0}, {1.5, 2.0}};
    p.labels = {0, 0, 1, 1};
    return p;
}

}  // namespace

TEST(Sigmoid, KnownValues) {
    EXPECT_DOUBLE_EQ(albi::learner::sigmoid(0.0), 0.5);
    EXPECT_NEAR(albi::learner::sigmoid(std::log(3.0)), 0.75, 1e-15);
    EXPECT_NEAR(albi::learner::sigmoid(-std::log(3.0)), 0.25, 1e-15);
    EXPECT_NEAR(albi::learner::sigmoid(50.0), 1.0, 1e-15);
    EXPECT_NEAR(albi::learner::sigmoid(-50.0), 0.0, 1e-15);
}

TEST(Softplus, StableAtExtremes) {
    EXPECT_NEAR(albi::learner::softplus(0.0), std::log(2.0), 1e-15);
    EXPECT_NEAR(albi::learner::softplus(800.0), 800.0, 1e-9);
    EXPECT_NEAR(albi::learner::softplus(-800.0), 0.0, 1e-15);
    EXPECT_TRUE(std::isfinite(albi::learner::softplus(1e4)));
}

TEST(LossGradient, MatchesCentralFiniteDifferences) {
    Rng rng(2024);
    for (int trial = 0; trial < 50; ++trial) {
        const int n = 2 + static_cast<int>(rng.below(19));
        const int d = 1 + static_cast<int>(rng.below(5));
        const auto problem = random_problem(rng, n, d);
        const auto rows = problem.rows();

        std::vector<double> w(static_cast<std::size_t>(d));
        for (double& v : w) v = rng.gaussian();
        const double b = rng.gaussian();
        const double l2 = 0.1 * rng.next_double();

        std::vector<double> grad_w;
        double grad_b = 0.0;
        albi::learner::loss_gradient(w, b, rows, l2, grad_w, grad_b);

        const double h = 1e-6;
        for (int j = 0; j <= d; ++j) {
            auto wp = w;
            auto wm = w;
            double bp = b, bm = b;
            if (j < d) {
                wp[static_cast<std::size_t>(j)] += h;
                wm[static_cast<std::size_t>(j)] -= h;
            } else {
                bp += h;
                bm -= h;
            }
            const double fd = (albi::learner::loss(wp, bp, rows, l2) -
                               albi::learner::loss(wm, bm, rows, l2)) /
                              (2.0 * h);
            const double analytic = j < d ? grad_w[static_cast<std::size_t>(j)] : grad_b;
            const double scale = std::max({std::abs(fd), std::abs(analytic), 1e-8});
            EXPECT_LT(std::abs(fd - analytic) / scale, 1e-4)
                << "trial " << trial << " coordinate " << j;
        }
    }
}

TEST(Train, SeparableProblemFitsTrainingSet) {
    const auto problem = separable_2d();
    Hyperparams hyper;
    hyper.l2_penalty = 1e-6;
    const auto model = albi::learner::train(problem.rows(), 2, hyper);
    for (std::size_t i = 0; i < problem.features.size(); ++i)
        EXPECT_EQ(albi::learner::predict_label(model, problem.features[i]), problem.labels[i]);
}

TEST(Train, SingleClassConverges) {
    Problem p;
    p.features = {{1.0}, {2.0}, {0.5}};
    p.labels = {1, 1, 1};
    Hyperparams hyper;
    const auto model = albi::learner::train(p.rows(), 1, hyper);
    for (const auto& f : p.features) EXPECT_GT(albi::learner::predict_proba(model, f), 0.5);
}

TEST(Train, EmptyTrainingSetRejected) {
    EXPECT_THROW(albi::learner::train({}, 1, Hyperparams{}), albi::EmptyTrainingSet);
}

TEST(Train, DimensionMismatchRejected) {
    Problem p;
    p.features = {{1.0, 2.0}};
    p.labels = {1};
    EXPECT_THROW(albi::learner::train(p.rows(), 3, Hyperparams{}), albi::DimensionMismatch);
}

TEST(Train, NonFiniteFeatureRejected) {
    Problem p;
    p.features = {{std::nan("")}};
    p.labels = {1};
    EXPECT_THROW(albi::learner::train(p.rows(), 1, Hyperparams{}), albi::NonFiniteFeature);
}

TEST(Train, DeterministicBitIdentical) {
    Rng rng(7);
    const auto problem = random_problem(rng, 15, 3);
    Hyperparams hyper;
    const auto a = albi::learner::train(problem.rows(), 3, hyper);
    const auto b = albi::learner::train(problem.rows(), 3, hyper);
    EXPECT_EQ(a.weights, b.weights);
    EXPECT_EQ(a.bias, b.bias);
}

TEST(Train, LossNonIncreasingUnderSmallStep) {
    Rng rng(31);
    const auto problem = random_problem(rng, 20, 4);
    const auto rows = problem.rows();
    const double l2 = 1e-3;

    std::vector<double> w(4, 0.0);
    double b = 0.0;
    double prev = albi::learner::loss(w, b, rows, l2);
    std::vector<double> grad_w;
    double grad_b = 0.0;
    for (int epoch = 0; epoch < 200; ++epoch) {
        albi::learner::loss_gradient(w, b, rows, l2, grad_w, grad_b);
        for (std::size_t j = 0; j < w.size(); ++j) w[j] -= 0.05 * grad_w[j];
        b -= 0.05 * grad_b;
        const double cur = albi::learner::loss(w, b, rows, l2);
        EXPECT_LE(cur, prev + 1e-12);
        prev = cur;
    }
}

TEST(PredictProba, KnownValues) {
    Model model;
    model.weights = {0.0, 0.0};
    model.bias = 0.0;
    const std::vector<double> x{3.0, -4.0};
    EXPECT_DOUBLE_EQ(albi::learner::predict_proba(model, x), 0.5);

    model.weights = {1.0, 0.0};
    const std::vector<double> y{std::log(3.0), 5.0};
    EXPECT_NEAR(albi::learner::predict_proba(model, y), 0.75, 1e-15);
}

TEST(PredictProba, DimensionMismatchRejected) {
    Model model;
    model.weights = {1.0};
    const std::vector<double> x{1.0, 2.0};
    EXPECT_THROW(albi::learner::predict_proba(model, x), albi::DimensionMismatch);
}

TEST(PredictLabel, ThresholdTieGoesPositive) {
    Model model;
    model.weights = {1.0};
    const std::vector<double> zero{0.0};
    EXPECT_EQ(albi::learner::predict_label(model, zero), 1);
    const std::vector<double> neg{-1.0};
    EXPECT_EQ(albi::learner::predict_label(model, neg), 0);
}

TEST(Entropy, KnownValues) {
    EXPECT_DOUBLE_EQ(albi::learner::entropy_bits(0.5), 1.0);
    EXPECT_DOUBLE_EQ(albi::learner::entropy_bits(0.0), 0.0);
    EXPECT_DOUBLE_EQ(albi::learner::entropy_bits(1.0), 0.0);
    EXPECT_NEAR(albi::learner::entropy_bits(0.25), 0.811278, 1e-6);
}

TEST(Entropy, SymmetricInP) {
    for (double p = 0.0; p <= 1.0; p += 0.01)
        EXPECT_NEAR(albi::learner::entropy_bits(p), albi::learner::entropy_bits(1.0 - p), 1e-12);
}

TEST(Entropy, OutOfRangeRejected) {
    EXPECT_THROW(albi::learner::entropy_bits(-0.01), albi::OutOfRange);
    EXPECT_THROW(albi::learner::entropy_bits(1.01), albi::OutOfRange);
    EXPECT_THROW(albi::learner::entropy_bits(std::nan("")), albi::OutOfRange);
}

TEST(Hyperparams, ValidationRejectsBadRanges) {
    Hyperparams h;
    h.learning_rate = 0.0;
    EXPECT_THROW(h.validate(), albi::ConfigInvalid);
    h = Hyperparams{};
    h.l2_penalty = -1.0;
    EXPECT_THROW(h.validate(), albi::ConfigInvalid);
    h = Hyperparams{};
    h.max_epochs = 0;
    EXPECT_THROW(h.validate(), albi::ConfigInvalid);
    h = Hyperparams{};
    h.convergence_tol = 0.0;
    EXPECT_THROW(h.validate(), albi::ConfigInvalid);
}

TEST(ObservedRows, PullsObservedLabels) {
    const auto data = testutil::make_dataset(
        2, 2, [](int id, int) { return id % 2; }, [](int, int) { return 1; });
    const auto rows = albi::learner::observed_rows(data, {0, 3});
    ASSERT_EQ(rows.size(), 2u);
    EXPECT_EQ(rows[0].label, 0);
    EXPECT_EQ(rows[1].label, 1);
    EXPECT_DOUBLE_EQ(rows[0].features[0], 0.0);
    EXPECT_DOUBLE_EQ(rows[1].features[0], 3.0);
}
