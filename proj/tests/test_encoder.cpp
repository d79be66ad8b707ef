#include <gtest/gtest.h>

#include <numeric>

#include "flst/encoder.hpp"
#include "flst/rng.hpp"

using namespace flst;

namespace {

Dataset subspace_dataset(std::size_t rows, std::size_t d, std::uint64_t seed) {
    // Points living exactly in a (d-1)-dimensional subspace: the last
    // coordinate is a linear combination of the others.
    Rng rng(seed);
    Dataset ds;
    ds.features = Matrix(rows, d);
    for (std::size_t r = 0; r < rows; ++r) {
        double sum = 0.0;
        for (std::size_t c = 0; c + 1 < d; ++c) {
            ds.features.at(r, c) = rng.uniform(-1, 1);
            sum += ds.features.at(r, c);
        }
        ds.features.at(r, d - 1) = 0.5 * sum;
    }
    ds.labels.assign(rows, 0);
    ds.instance_ids.resize(rows);
    std::iota(ds.instance_ids.begin(), ds.instance_ids.end(), std::uint64_t{0});
    return ds;
}

} // namespace

TEST(FitEncoder, ReconstructsSubspaceDataAlmostExactly) {
    const Dataset ds = subspace_dataset(200, 5, 7);
    const Encoder enc = fit_encoder(ds, 4, 0.0, 200, 11, 0.05);
    // Check reconstruction through a freshly trained full autoencoder by
    // encoding and measuring the span: encode then verify the training
    // objective actually went below the threshold via a decoder retrained in
    // closed loop is overkill here; instead verify the advertised encoder maps
    // identical rows identically and that training reported improvement by
    // reconstructing via least squares is unnecessary -- the contract is the
    // autoencoder's reconstruction error, so re-derive it:
    // fit again with the same seed and measure the mse the trainer reports.
    // Simpler: the encoder is linear; reconstruction quality was asserted by
    // the trainer reaching < 1e-3; validate by round-tripping through a
    // re-fit decoder: encode all rows and solve for the best linear decoder.
    const Matrix z = encode_batch(enc, ds.features);

    // Closed-form least-squares decoder from latents back to features; if the
    // subspace is captured, residuals are tiny.
    const std::size_t k = z.cols + 1; // latent + bias
    Matrix gram(k, k);
    Matrix rhs(k, ds.features.cols);
    for (std::size_t r = 0; r < z.rows; ++r) {
        std::vector<double> zr(k, 1.0);
        for (std::size_t c = 0; c < z.cols; ++c) zr[c] = z.at(r, c);
        for (std::size_t i = 0; i < k; ++i) {
            for (std::size_t j = 0; j < k; ++j) gram.at(i, j) += zr[i] * zr[j];
            for (std::size_t j = 0; j < ds.features.cols; ++j)
                rhs.at(i, j) += zr[i] * ds.features.at(r, j);
        }
    }
    for (std::size_t i = 0; i < k; ++i) gram.at(i, i) += 1e-9;
    // Gaussian elimination solve gram * W = rhs.
    for (std::size_t col = 0; col < k; ++col) {
        std::size_t pivot = col;
        for (std::size_t r = col + 1; r < k; ++r)
            if (std::abs(gram.at(r, col)) > std::abs(gram.at(pivot, col))) pivot = r;
        for (std::size_t c = 0; c < k; ++c) std::swap(gram.at(col, c), gram.at(pivot, c));
        for (std::size_t c = 0; c < rhs.cols; ++c) std::swap(rhs.at(col, c), rhs.at(pivot, c));
        const double d = gram.at(col, col);
        for (std::size_t c = 0; c < k; ++c) gram.at(col, c) /= d;
        for (std::size_t c = 0; c < rhs.cols; ++c) rhs.at(col, c) /= d;
        for (std::size_t r = 0; r < k; ++r) {
            if (r == col) continue;
            const double f = gram.at(r, col);
            for (std::size_t c = 0; c < k; ++c) gram.at(r, c) -= f * gram.at(col, c);
            for (std::size_t c = 0; c < rhs.cols; ++c) rhs.at(r, c) -= f * rhs.at(col, c);
        }
    }
    double mse = 0.0;
    for (std::size_t r = 0; r < z.rows; ++r) {
        for (std::size_t j = 0; j < ds.features.cols; ++j) {
            double recon = rhs.at(z.cols, j); // bias row
            for (std::size_t c = 0; c < z.cols; ++c) recon += z.at(r, c) * rhs.at(c, j);
            const double diff = recon - ds.features.at(r, j);
            mse += diff * diff;
        }
    }
    mse /= static_cast<double>(z.rows);
    EXPECT_LT(mse, 1e-3);
}

TEST(FitEncoder, SameSeedGivesIdenticalEncoders) {
    const Dataset ds = subspace_dataset(120, 4, 3);
    const Encoder a = fit_encoder(ds, 2, 0.2, 10, 99);
    const Encoder b = fit_encoder(ds, 2, 0.2, 10, 99);
    EXPECT_TRUE(params_equal(a.net, b.net));
    const Encoder c = fit_encoder(ds, 2, 0.2, 10, 100);
    EXPECT_FALSE(params_equal(a.net, c.net));
}

TEST(FitEncoder, LatentDimMustBeSmallerThanFeatureDim) {
    const Dataset ds = subspace_dataset(50, 4, 3);
    EXPECT_THROW(fit_encoder(ds, 4, 0.1, 5, 1), ConfigError);
    EXPECT_THROW(fit_encoder(ds, 5, 0.1, 5, 1), ConfigError);
    EXPECT_THROW(fit_encoder(ds, 0, 0.1, 5, 1), ConfigError);
}

TEST(EncodeBatch, DeterministicAndShapeCorrect) {
    const Dataset ds = subspace_dataset(60, 5, 8);
    const Encoder enc = fit_encoder(ds, 3, 0.3, 8, 21);

    Matrix batch(17, 5);
    Rng rng(2);
    for (double& v : batch.values) v = rng.uniform(-1, 1);
    const Matrix z1 = encode_batch(enc, batch);
    const Matrix z2 = encode_batch(enc, batch);
    EXPECT_EQ(z1.values, z2.values);
    EXPECT_EQ(z1.rows, 17u);
    EXPECT_EQ(z1.cols, 3u);
}

TEST(EncodeBatch, SharedEncoderBehavesIdenticallyAcrossNodes) {
    const Dataset ds = subspace_dataset(60, 5, 8);
    const Encoder enc = fit_encoder(ds, 3, 0.3, 8, 21);
    const Encoder copy_at_other_node = enc; // distribution = value copy
    Matrix row(1, 5);
    row.values = {0.3, -0.2, 0.9, 0.1, 0.05};
    EXPECT_EQ(encode_batch(enc, row).values, encode_batch(copy_at_other_node, row).values);
}

TEST(EncodeBatch, RejectsWrongWidth) {
    const Dataset ds = subspace_dataset(50, 4, 5);
    const Encoder enc = fit_encoder(ds, 2, 0.0, 5, 6);
    EXPECT_THROW(encode_batch(enc, Matrix(3, 7)), ShapeError);
}
