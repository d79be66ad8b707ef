#include <gtest/gtest.h>

#include <algorithm>
#include <numeric>

#include "flst/curriculum.hpp"
#include "flst/rng.hpp"
#include "test_util.hpp"

using namespace flst;

namespace {

// One-dimensional dataset whose Euclidean-from-mean scores are easy to reason
// about; identity covariance is injected directly.
Dataset line_dataset(const std::vector<double>& xs) {
    Dataset ds;
    ds.features = Matrix(xs.size(), 1);
    for (std::size_t i = 0; i < xs.size(); ++i) ds.features.at(i, 0) = xs[i];
    ds.labels.assign(xs.size(), 0);
    ds.instance_ids.resize(xs.size());
    std::iota(ds.instance_ids.begin(), ds.instance_ids.end(), std::uint64_t{0});
    return ds;
}

RankingModel euclidean_model_1d(double mean) {
    Matrix eye(1, 1);
    eye.at(0, 0) = 1.0;
    return make_mahalanobis({mean}, eye, 0.0);
}

} // namespace

TEST(BuildCurriculum, StrictlyIncreasingScoresGiveIdentityPermutation) {
    const Dataset ds = line_dataset({0.1, 0.2, 0.5, 1.0, 2.0});
    const auto curr = build_curriculum(ds, euclidean_model_1d(0.0), 2);
    const std::vector<std::size_t> identity{0, 1, 2, 3, 4};
    EXPECT_EQ(curr.ordered_indices, identity);
}

TEST(BuildCurriculum, SingleBatchCoversEverything) {
    const Dataset ds = line_dataset({3, 1, 2});
    const auto curr = build_curriculum(ds, euclidean_model_1d(0.0), 1);
    EXPECT_EQ(curr.batch_count, 1u);
    EXPECT_EQ(curr.batch_boundaries.front(), 0u);
    EXPECT_EQ(curr.batch_boundaries.back(), 3u);
}

TEST(BuildCurriculum, BatchCountOutOfRangeIsConfigError) {
    const Dataset ds = line_dataset({1, 2, 3});
    EXPECT_THROW(build_curriculum(ds, euclidean_model_1d(0.0), 0), ConfigError);
    EXPECT_THROW(build_curriculum(ds, euclidean_model_1d(0.0), 4), ConfigError);
}

TEST(BuildCurriculum, MatchesSortOracleAndPigeonholesBatchSizes) {
    Rng rng(17);
    std::vector<double> xs(103);
    for (double& x : xs) x = rng.uniform(-5, 5);
    const Dataset ds = line_dataset(xs);
    const auto model = euclidean_model_1d(0.0);
    const auto curr = build_curriculum(ds, model, 10);

    // Independent sort oracle on (score, index).
    std::vector<std::size_t> oracle(xs.size());
    std::iota(oracle.begin(), oracle.end(), std::size_t{0});
    std::vector<double> scores(xs.size());
    for (std::size_t i = 0; i < xs.size(); ++i) scores[i] = std::abs(xs[i]);
    std::stable_sort(oracle.begin(), oracle.end(),
                     [&](std::size_t a, std::size_t b) { return scores[a] < scores[b]; });
    EXPECT_EQ(curr.ordered_indices, oracle);

    // 103 items over 10 batches: sizes differ by at most one.
    std::size_t min_size = xs.size(), max_size = 0;
    for (std::size_t b = 0; b < 10; ++b) {
        const std::size_t size = curr.batch_boundaries[b + 1] - curr.batch_boundaries[b];
        min_size = std::min(min_size, size);
        max_size = std::max(max_size, size);
    }
    EXPECT_LE(max_size - min_size, 1u);

    // ordered_indices is a permutation.
    auto sorted = curr.ordered_indices;
    std::sort(sorted.begin(), sorted.end());
    for (std::size_t i = 0; i < sorted.size(); ++i) EXPECT_EQ(sorted[i], i);
}

TEST(SelectWindow, ActionEndpointsPickFirstAndLastBatch) {
    Rng rng(3);
    std::vector<double> xs(100);
    for (double& x : xs) x = rng.uniform(0, 10);
    const Dataset ds = line_dataset(xs);
    const auto curr = build_curriculum(ds, euclidean_model_1d(0.0), 10);

    const auto first = select_window(curr, -1.0, -1.0, 9);
    const auto last = select_window(curr, 1.0, -1.0, 9);
    EXPECT_EQ(first.size(), 10u);
    EXPECT_EQ(last.size(), 10u);
    std::vector<std::size_t> expected_first(curr.ordered_indices.begin(),
                                            curr.ordered_indices.begin() + 10);
    std::sort(expected_first.begin(), expected_first.end());
    EXPECT_EQ(first, expected_first);
    std::vector<std::size_t> expected_last(curr.ordered_indices.end() - 10,
                                           curr.ordered_indices.end());
    std::sort(expected_last.begin(), expected_last.end());
    EXPECT_EQ(last, expected_last);
}

TEST(SelectWindow, CenterFullWidthCoversEntireDataset) {
    // N=10, W_max=9, a=(0,+1): center rounds to batch 5 (half away from
    // zero), width 9, clipping covers batches 0..9.
    Rng rng(4);
    std::vector<double> xs(100);
    for (double& x : xs) x = rng.uniform(0, 10);
    const Dataset ds = line_dataset(xs);
    const auto curr = build_curriculum(ds, euclidean_model_1d(0.0), 10);
    const auto window = select_window(curr, 0.0, 1.0, 9);
    EXPECT_EQ(window.size(), 100u);
}

TEST(SelectWindow, OutputIsSortedUniqueNonEmptyInBoundsForAllActions) {
    Rng rng(5);
    std::vector<double> xs(57);
    for (double& x : xs) x = rng.uniform(0, 10);
    const Dataset ds = line_dataset(xs);
    const auto curr = build_curriculum(ds, euclidean_model_1d(0.0), 7);

    for (int trial = 0; trial < 300; ++trial) {
        const double a1 = rng.uniform(-1, 1);
        const double a2 = rng.uniform(-1, 1);
        const auto window = select_window(curr, a1, a2, 6);
        ASSERT_FALSE(window.empty());
        for (std::size_t i = 0; i + 1 < window.size(); ++i) ASSERT_LT(window[i], window[i + 1]);
        ASSERT_LT(window.back(), xs.size());
    }
}

TEST(SelectWindow, ClampsOutOfRangeActions) {
    const Dataset ds = line_dataset({1, 2, 3, 4});
    const auto curr = build_curriculum(ds, euclidean_model_1d(0.0), 4);
    const auto clamped = select_window(curr, -3.0, -2.0, 3);
    const auto endpoint = select_window(curr, -1.0, -1.0, 3);
    EXPECT_EQ(clamped, endpoint);
}

TEST(CurriculumTable, OneDeterministicRowPerInstance) {
    const Dataset ds = line_dataset({2.0, 0.5, 1.0});
    const auto curr = build_curriculum(ds, euclidean_model_1d(0.0), 3);
    const std::string table = curriculum_table(ds, curr);
    EXPECT_EQ(table, curriculum_table(ds, curr));
    EXPECT_EQ(std::count(table.begin(), table.end(), '\n'), 4); // header + 3 rows
    EXPECT_NE(table.find("instance_id"), std::string::npos);
}
