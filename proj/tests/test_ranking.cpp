#include <gtest/gtest.h>

#include <cmath>

#include "flst/ranking.hpp"
#include "flst/rng.hpp"
#include "test_util.hpp"

using namespace flst;
using flst_test::random_matrix;

namespace {

Dataset make_dataset(Matrix features) {
    Dataset ds;
    ds.features = std::move(features);
    ds.labels.assign(ds.features.rows, 0);
    ds.instance_ids.resize(ds.features.rows);
    std::iota(ds.instance_ids.begin(), ds.instance_ids.end(), std::uint64_t{0});
    return ds;
}

// Explicit-inverse Mahalanobis oracle via Gauss-Jordan on a tiny matrix.
double explicit_inverse_mahalanobis(const Matrix& cov, const std::vector<double>& mean,
                                    const std::vector<double>& x) {
    const std::size_t n = cov.rows;
    Matrix aug(n, 2 * n);
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t j = 0; j < n; ++j) aug.at(i, j) = cov.at(i, j);
        aug.at(i, n + i) = 1.0;
    }
    for (std::size_t col = 0; col < n; ++col) {
        std::size_t pivot = col;
        for (std::size_t r = col + 1; r < n; ++r)
            if (std::abs(aug.at(r, col)) > std::abs(aug.at(pivot, col))) pivot = r;
        if (pivot != col)
            for (std::size_t c = 0; c < 2 * n; ++c) std::swap(aug.at(col, c), aug.at(pivot, c));
        const double diag = aug.at(col, col);
        for (std::size_t c = 0; c < 2 * n; ++c) aug.at(col, c) /= diag;
        for (std::size_t r = 0; r < n; ++r) {
            if (r == col) continue;
            const double f = aug.at(r, col);
            for (std::size_t c = 0; c < 2 * n; ++c) aug.at(r, c) -= f * aug.at(col, c);
        }
    }
    double quad = 0.0;
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = 0; j < n; ++j)
            quad += (x[i] - mean[i]) * aug.at(i, n + j) * (x[j] - mean[j]);
    return std::sqrt(quad);
}

} // namespace

TEST(FitRanking, RejectsDegenerateData) {
    Matrix f(2, 1);
    f.values = {1.5, 1.5}; // two identical points: zero variance, zero trace
    EXPECT_THROW(fit_ranking(make_dataset(std::move(f)), Metric::Mahalanobis), EstimationError);

    Matrix few(2, 3); // fewer than feature_dim + 1 rows
    EXPECT_THROW(fit_ranking(make_dataset(std::move(few)), Metric::Mahalanobis), EstimationError);
}

TEST(FitRanking, MeanOfStandardNormalSampleIsNearZero) {
    Rng rng(123);
    Matrix f(1000, 3);
    for (double& v : f.values) v = rng.normal();
    const auto model = fit_ranking(make_dataset(std::move(f)), Metric::Mahalanobis);
    for (double m : model.mean) EXPECT_LT(std::abs(m), 0.1);
}

TEST(FitRanking, CosineStoresOnlyTheMean) {
    Matrix f(4, 2);
    f.values = {1, 0, 3, 0, 0, 2, 0, 2};
    const auto model = fit_ranking(make_dataset(std::move(f)), Metric::Cosine);
    EXPECT_EQ(model.metric, Metric::Cosine);
    ASSERT_EQ(model.mean.size(), 2u);
    EXPECT_DOUBLE_EQ(model.mean[0], 1.0);
    EXPECT_DOUBLE_EQ(model.mean[1], 1.0);
    EXPECT_EQ(model.covariance.size(), 0u);
}

TEST(Score, ZeroAtTheMeanExactly) {
    Rng rng(5);
    Matrix f = random_matrix(20, 4, rng);
    const auto model = fit_ranking(make_dataset(std::move(f)), Metric::Mahalanobis);
    EXPECT_EQ(score(model, model.mean), 0.0);
}

TEST(Score, IdentityCovarianceReducesToEuclideanNorm) {
    Matrix eye(3, 3);
    for (std::size_t i = 0; i < 3; ++i) eye.at(i, i) = 1.0;
    const auto model = make_mahalanobis({0.0, 0.0, 0.0}, eye, 0.0);
    const std::vector<double> x{3.0, 4.0, 12.0};
    EXPECT_NEAR(score(model, x), 13.0, 1e-12);
}

TEST(Score, MatchesExplicitInverseOracle) {
    Rng rng(9);
    for (int trial = 0; trial < 20; ++trial) {
        Matrix f = random_matrix(5 + static_cast<std::size_t>(rng.uniform_index(10)), 3, rng);
        const auto ds = make_dataset(std::move(f));
        RankingModel model;
        try {
            model = fit_ranking(ds, Metric::Mahalanobis);
        } catch (const EstimationError&) {
            continue;
        }
        std::vector<double> x{rng.uniform(-2, 2), rng.uniform(-2, 2), rng.uniform(-2, 2)};
        const double oracle = explicit_inverse_mahalanobis(model.covariance, model.mean, x);
        EXPECT_NEAR(score(model, x), oracle, 1e-8);
    }
}

TEST(Score, CosineDefinition) {
    const RankingModel model = [] {
        Matrix f(2, 3);
        f.values = {2, 0, 0, 2, 0, 0}; // mean = (2,0,0)
        return fit_ranking(make_dataset(std::move(f)), Metric::Cosine);
    }();
    EXPECT_NEAR(score(model, {2.0, 0.0, 0.0}), 1.0, 1e-15);
    EXPECT_NEAR(score(model, {5.0, 0.0, 0.0}), 1.0, 1e-15);
    EXPECT_NEAR(score(model, {0.0, 7.0, 0.0}), 0.0, 1e-15);
    EXPECT_NEAR(score(model, {-1.0, 0.0, 0.0}), -1.0, 1e-15);
}

TEST(Score, DimensionMismatchIsShapeError) {
    Rng rng(5);
    Matrix f = random_matrix(10, 4, rng);
    const auto model = fit_ranking(make_dataset(std::move(f)), Metric::Mahalanobis);
    EXPECT_THROW(score(model, {1.0, 2.0}), ShapeError);
}

// Mahalanobis distances are invariant under invertible affine maps of the
// features once the model is refit on the transformed data.
TEST(Score, AffineInvarianceProperty) {
    Rng rng(41);
    for (int trial = 0; trial < 5; ++trial) {
        const std::size_t d = 3;
        Matrix f = random_matrix(40, d, rng);

        Matrix a(d, d);
        do {
            a = random_matrix(d, d, rng);
            for (std::size_t i = 0; i < d; ++i) a.at(i, i) += 2.0; // keep it well-conditioned
        } while (false);
        const std::vector<double> shift{rng.uniform(-1, 1), rng.uniform(-1, 1), rng.uniform(-1, 1)};

        Matrix g(f.rows, d);
        for (std::size_t r = 0; r < f.rows; ++r)
            for (std::size_t i = 0; i < d; ++i) {
                double acc = shift[i];
                for (std::size_t j = 0; j < d; ++j) acc += a.at(i, j) * f.at(r, j);
                g.at(r, i) = acc;
            }

        const auto ds_f = make_dataset(f);
        const auto ds_g = make_dataset(g);
        const auto model_f = fit_ranking(ds_f, Metric::Mahalanobis);
        const auto model_g = fit_ranking(ds_g, Metric::Mahalanobis);
        for (std::size_t r = 0; r < 10; ++r) {
            const double sf = score(model_f, ds_f.features.row(r), d);
            const double sg = score(model_g, ds_g.features.row(r), d);
            EXPECT_NEAR(sf, sg, 1e-6);
        }
    }
}
