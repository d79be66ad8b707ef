#pragma once

#include <cmath>
#include <cstddef>
#include <vector>

#include "flst/dataset.hpp"
#include "flst/errors.hpp"
#include "flst/matrix.hpp"

namespace flst {

enum class Metric { Mahalanobis, Cosine };

// Difficulty-ranking model for curriculum construction. For the Mahalanobis
// metric the regularized covariance is kept together with its Cholesky factor
// so scoring is a triangular solve, never an explicit inverse.
struct RankingModel {
    Metric metric = Metric::Mahalanobis;
    std::vector<double> mean;
    Matrix covariance;  // regularized: sample covariance + lambda*I
    double lambda = 0.0;
    Matrix chol_lower;  // L with L*L^T = covariance
};

namespace detail {

// Plain lower-triangular Cholesky; returns false when the matrix is not
// positive definite.
inline bool cholesky(const Matrix& a, Matrix& lower) {
    const std::size_t n = a.rows;
    lower = Matrix(n, n);
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t j = 0; j <= i; ++j) {
            double sum = a.at(i, j);
            for (std::size_t k = 0; k < j; ++k) sum -= lower.at(i, k) * lower.at(j, k);
            if (i == j) {
                if (sum <= 0.0 || !std::isfinite(sum)) return false;
                lower.at(i, i) = std::sqrt(sum);
            } else {
                lower.at(i, j) = sum / lower.at(j, j);
            }
        }
    }
    return true;
}

} // namespace detail

// Builds a Mahalanobis model from an explicit mean and covariance; lambda is
// added to the diagonal before factorization.
inline RankingModel make_mahalanobis(std::vector<double> mean, Matrix covariance,
                                     double lambda) {
    if (covariance.rows != covariance.cols || covariance.rows != mean.size())
        throw ShapeError("make_mahalanobis: covariance must be square and match the mean");
    for (std::size_t i = 0; i < covariance.rows; ++i)
        for (std::size_t j = i + 1; j < covariance.cols; ++j) {
            const double d = covariance.at(i, j) - covariance.at(j, i);
            if (std::abs(d) > 1e-9 * (1.0 + std::abs(covariance.at(i, j))))
                throw EstimationError("make_mahalanobis: covariance is not symmetric");
        }
    RankingModel model;
    model.metric = Metric::Mahalanobis;
    model.mean = std::move(mean);
    model.covariance = std::move(covariance);
    model.lambda = lambda;
    for (std::size_t i = 0; i < model.covariance.rows; ++i)
        model.covariance.at(i, i) += lambda;
    if (!detail::cholesky(model.covariance, model.chol_lower))
        throw EstimationError("make_mahalanobis: regularized covariance is not positive definite");
    return model;
}

// Fits the ranking model on a shard. Mahalanobis: sample mean and covariance
// with lambda = 1e-6 * trace(S)/d added to the diagonal. Cosine: the sample
// mean acts as the reference vector.
inline RankingModel fit_ranking(const Dataset& data, Metric metric) {
    const std::size_t n = data.features.rows;
    const std::size_t d = data.features.cols;
    if (n == 0 || d == 0) throw EstimationError("fit_ranking: empty dataset");

    std::vector<double> mean(d, 0.0);
    for (std::size_t r = 0; r < n; ++r) {
        const double* row = data.features.row(r);
        for (std::size_t c = 0; c < d; ++c) mean[c] += row[c];
    }
    for (double& m : mean) m /= static_cast<double>(n);

    if (metric == Metric::Cosine) {
        RankingModel model;
        model.metric = Metric::Cosine;
        model.mean = std::move(mean);
        return model;
    }

    if (n < d + 1)
        throw EstimationError("fit_ranking: mahalanobis needs at least feature_dim+1 instances (" +
                              std::to_string(d + 1) + "), got " + std::to_string(n));

    Matrix cov(d, d);
    for (std::size_t r = 0; r < n; ++r) {
        const double* row = data.features.row(r);
        for (std::size_t i = 0; i < d; ++i) {
            const double di = row[i] - mean[i];
            double* ci = cov.row(i);
            for (std::size_t j = i; j < d; ++j) ci[j] += di * (row[j] - mean[j]);
        }
    }
    const double denom = static_cast<double>(n - 1);
    for (std::size_t i = 0; i < d; ++i)
        for (std::size_t j = i; j < d; ++j) {
            cov.at(i, j) /= denom;
            cov.at(j, i) = cov.at(i, j);
        }

    double trace = 0.0;
    for (std::size_t i = 0; i < d; ++i) trace += cov.at(i, i);
    const double lambda = 1e-6 * trace / static_cast<double>(d);
    return make_mahalanobis(std::move(mean), std::move(cov), lambda);
}

inline double score(const RankingModel& model, const double* x, std::size_t dim) {
    if (dim != model.mean.size())
        throw ShapeError("score: vector has dimension " + std::to_string(dim) + ", model expects " +
                         std::to_string(model.mean.size()));
    const std::size_t d = dim;
    if (model.metric == Metric::Cosine) {
        double dot = 0.0, nx = 0.0, nm = 0.0;
        for (std::size_t i = 0; i < d; ++i) {
            dot += x[i] * model.mean[i];
            nx += x[i] * x[i];
            nm += model.mean[i] * model.mean[i];
        }
        if (nx == 0.0 || nm == 0.0) return 0.0;
        return dot / (std::sqrt(nx) * std::sqrt(nm));
    }
    // Solve L z = (x - mean); the distance is ||z||.
    std::vector<double> z(d);
    for (std::size_t i = 0; i < d; ++i) {
        double sum = x[i] - model.mean[i];
        const double* li = model.chol_lower.row(i);
        for (std::size_t k = 0; k < i; ++k) sum -= li[k] * z[k];
        z[i] = sum / li[i];
    }
    double sq = 0.0;
    for (double v : z) sq += v * v;
    return std::sqrt(sq);
}

inline double score(const RankingModel& model, const std::vector<double>& x) {
    return score(model, x.data(), x.size());
}

} // namespace flst
