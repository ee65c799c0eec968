#include <cmath>

#include <gtest/gtest.h>

#include "oracles.hpp"
#include "sngp/metrics.hpp"
#include "sngp/predict.hpp"

using namespace sngp;

namespace {

Matrix random_probs(Rng& rng, std::size_t n, std::size_t k) {
    return softmax(sample_gaussian(rng, n, k) * rng.uniform(0.1, 4.0));
}

Vector random_labels(Rng& rng, std::size_t n, std::size_t k) {
    Vector y(n);
    for (double& v : y) v = static_cast<double>(rng.below(k));
    return y;
}

// Scores on a coarse lattice so ties occur.
Vector lattice_scores(Rng& rng, std::size_t n, double shift) {
    Vector s(n);
    for (double& v : s) v = std::round(4.0 * (rng.normal() + shift)) / 4.0;
    return s;
}

}  // namespace

TEST(Ece, CalibratedByConstruction) {
    Matrix probs(10, 2);
    Vector labels(10);
    for (std::size_t i = 0; i < 10; ++i) {
        probs(i, 0) = 0.8;
        probs(i, 1) = 0.2;
        labels[i] = i < 8 ? 0.0 : 1.0;
    }
    EXPECT_NEAR(ece(probs, labels), 0.0, 1e-15);
}

TEST(Ece, OverconfidentHalf) {
    const Matrix probs{{1.0, 0.0}, {1.0, 0.0}, {0.0, 1.0}, {0.0, 1.0}};
    const Vector labels{0, 1, 1, 0};
    EXPECT_DOUBLE_EQ(ece(probs, labels), 0.5);
}

TEST(Ece, BinCountsSumToN) {
    Rng rng(1);
    const Matrix p = random_probs(rng, 77, 3);
    std::vector<BinStat> stats;
    ece(p, random_labels(rng, 77, 3), 15, &stats);
    std::size_t total = 0;
    for (const auto& b : stats) total += b.count;
    EXPECT_EQ(total, 77u);
}

TEST(Ece, EmptyThrows) { EXPECT_THROW(ece(Matrix(0, 2), Vector{}), EmptySet); }

TEST(Ece, MatchesBruteForce) {
    Rng rng(2);
    for (int trial = 0; trial < 100; ++trial) {
        const std::size_t n = 1 + rng.below(200), k = 2 + rng.below(4), bins = 1 + rng.below(20);
        const Matrix p = random_probs(rng, n, k);
        const Vector y = random_labels(rng, n, k);
        EXPECT_NEAR(ece(p, y, bins), test::brute_ece(p, y, bins), 1e-12);
    }
}

TEST(NllBrier, PerfectAndUniform) {
    const Matrix onehot{{1.0, 0.0}, {0.0, 1.0}};
    const Vector labels{0, 1};
    EXPECT_EQ(nll(onehot, labels), 0.0);
    EXPECT_EQ(brier(onehot, labels), 0.0);
    const Matrix uniform{{0.5, 0.5}, {0.5, 0.5}};
    EXPECT_NEAR(nll(uniform, labels), std::log(2.0), 1e-12);
    // Σ_k (p_k − 1[y=k])² = 0.25 + 0.25 per example.
    EXPECT_NEAR(brier(uniform, labels), 0.5, 1e-15);
}

TEST(Auroc, PerfectSeparation) {
    const Vector ind{0.9, 0.8}, ood{0.2, 0.1};
    EXPECT_EQ(auroc(ind, ood), 1.0);
    EXPECT_EQ(aupr(ind, ood), 1.0);
}

TEST(Auroc, IdenticalDistributionsNearHalf) {
    Rng rng(3);
    Vector a(2000), b(2000);
    for (double& v : a) v = rng.normal();
    for (double& v : b) v = rng.normal();
    EXPECT_NEAR(auroc(a, b), 0.5, 0.03);
}

TEST(Auroc, MatchesBruteForceWithTies) {
    Rng rng(4);
    for (int trial = 0; trial < 100; ++trial) {
        const Vector ind = lattice_scores(rng, 1 + rng.below(100), 0.5);
        const Vector ood = lattice_scores(rng, 1 + rng.below(100), 0.0);
        EXPECT_NEAR(auroc(ind, ood), test::brute_auroc(ind, ood), 1e-12);
        EXPECT_NEAR(aupr(ind, ood), test::brute_aupr(ind, ood), 1e-12);
    }
}

TEST(Auroc, InvariantUnderMonotoneTransform) {
    Rng rng(5);
    Vector ind(80), ood(60);
    for (double& v : ind) v = rng.normal() + 1.0;
    for (double& v : ood) v = rng.normal();
    Vector ti = ind, to = ood;
    for (double& v : ti) v = std::exp(3 * v) + 7;
    for (double& v : to) v = std::exp(3 * v) + 7;
    EXPECT_EQ(auroc(ind, ood), auroc(ti, to));
    EXPECT_EQ(aupr(ind, ood), aupr(ti, to));
}

TEST(Auroc, EmptyThrows) {
    const Vector a{1.0};
    EXPECT_THROW(auroc(a, Vector{}), EmptySet);
    EXPECT_THROW(aupr(Vector{}, a), EmptySet);
}

TEST(Scores, DempsterShaferHandValues) {
    EXPECT_NEAR(dempster_shafer(Matrix{{0.0, 0.0}})[0], 0.5, 1e-15);
    EXPECT_LT(dempster_shafer(Matrix{{-50.0, -50.0, -50.0}})[0], 1e-20);
}

TEST(Scores, MspShiftInvariantDsNot) {
    const Matrix g{{1.0, 0.2, -0.5}};
    Matrix shifted = g;
    for (double& v : shifted.data()) v += 2.0;
    EXPECT_NEAR(msp(g)[0], msp(shifted)[0], 1e-15);
    EXPECT_GT(std::abs(dempster_shafer(g)[0] - dempster_shafer(shifted)[0]), 1e-3);
}

// DS confidence is 1 − K/(K + e^lse), so a shared log-sum-exp makes it a
// constant: it ties every pair and never contradicts the MSP order.
TEST(Scores, SharedLogSumExpNeverContradictsMsp) {
    Rng rng(6);
    Matrix g = sample_gaussian(rng, 30, 3);
    for (std::size_t i = 0; i < g.rows(); ++i) {
        double z = 0.0;
        for (double v : g.row(i)) z += std::exp(v);
        const double lse = std::log(z);
        for (double& v : g.row(i)) v -= lse;
    }
    const Vector a = msp(g), b = dempster_shafer(g);
    for (std::size_t i = 0; i < 30; ++i)
        for (std::size_t j = 0; j < 30; ++j) EXPECT_FALSE(a[i] < a[j] && b[i] > b[j]);
}

TEST(Scores, IdenticalRankingsWhenOnlyTopLogitMoves) {
    Rng rng(7);
    Matrix g(40, 4, 0.0);
    for (std::size_t i = 0; i < 40; ++i) g(i, 0) = rng.uniform(0.0, 6.0);
    const Vector a = msp(g), b = dempster_shafer(g);
    for (std::size_t i = 0; i < 40; ++i)
        for (std::size_t j = 0; j < 40; ++j) EXPECT_EQ(a[i] < a[j], b[i] < b[j]);
}

TEST(Scores, RankingsCanDisagree) {
    // Row 0 is confident but low-mass; row 1 is uncertain but high-mass.
    const Matrix g{{0.0, -6.0}, {5.0, 5.0}};
    const Vector a = msp(g), b = dempster_shafer(g);
    EXPECT_GT(a[0], a[1]);
    EXPECT_LT(b[0], b[1]);
}

TEST(Mahalanobis, HandValue) {
    const auto fit = GaussianFit::from_parameters(Matrix{{0.0, 0.0}}, Matrix::identity(2), Vector{0.0, 0.0},
                                                  Matrix::identity(2));
    const Matrix x{{3.0, 4.0}};
    EXPECT_NEAR(mahalanobis_score(fit, x)[0], -25.0, 1e-12);
    EXPECT_NEAR(relative_mahalanobis_score(fit, x)[0], 0.0, 1e-12);
}

TEST(Mahalanobis, ZeroAtClassMean) {
    const auto fit = GaussianFit::from_parameters(Matrix{{0.0, 0.0}, {4.0, 1.0}}, Matrix::identity(2),
                                                  Vector{2.0, 0.5}, Matrix::identity(2) * 4.0);
    const Matrix x{{4.0, 1.0}};
    const Matrix d = class_distances(fit, x);
    EXPECT_EQ(d(0, 1), 0.0);
    EXPECT_EQ(mahalanobis_score(fit, x)[0], 0.0);
}

TEST(Mahalanobis, FitMatchesEigenSampleStatistics) {
    Rng rng(7);
    const Matrix h = sample_gaussian(rng, 200, 3);
    const Vector y = random_labels(rng, 200, 2);
    const auto fit = fit_gaussian(h, y, 2);
    Eigen::MatrixXd eh = test::to_eigen(h);
    Eigen::Vector3d mean = eh.colwise().mean();
    Eigen::MatrixXd c = eh.rowwise() - mean.transpose();
    Eigen::Matrix3d cov = c.transpose() * c / 200.0;
    cov.diagonal().array() += kCovarianceRidge * cov.trace() / 3.0;
    EXPECT_LT((test::to_eigen(fit.background_covariance) - cov).cwiseAbs().maxCoeff(), 1e-12);
    EXPECT_LT((test::to_eigen(fit.background_precision) * cov - Eigen::Matrix3d::Identity()).cwiseAbs().maxCoeff(),
              1e-10);
}

TEST(Mahalanobis, ZeroTraceThrows) {
    const Matrix h(4, 2, 1.0);
    const Vector y{0, 0, 1, 1};
    EXPECT_THROW(fit_gaussian(h, y, 2), SingularCovariance);
}

TEST(Report, JsonHasFlatKeysAndOptionalOod) {
    EvalReport r;
    r.n = 4;
    r.accuracy = 0.75;
    r.bin_stats = {{0.8, 0.75, 4}};
    auto j = to_json(r);
    for (const char* key : {"accuracy", "ece", "nll", "brier", "bin_stats"}) EXPECT_TRUE(j.contains(key)) << key;
    EXPECT_TRUE(j["bin_stats"].is_array());
    EXPECT_FALSE(j.contains("ood"));
    r.ood["far"]["msp"] = {0.9, 0.8};
    j = to_json(r);
    EXPECT_DOUBLE_EQ(j["ood"]["far"]["msp"]["auroc"].get<double>(), 0.9);
}
