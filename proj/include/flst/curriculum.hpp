#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <iostream>
#include <numeric>
#include <sstream>
#include <vector>

#include "flst/dataset.hpp"
#include "flst/errors.hpp"
#include "flst/ranking.hpp"

namespace flst {

// Instances sorted ascending by ranking score and cut into batch_count
// contiguous batches whose sizes differ by at most one.
struct Curriculum {
    std::vector<std::size_t> ordered_indices;
    std::size_t batch_count = 0;
    std::vector<std::size_t> batch_boundaries; // batch_count + 1 offsets into ordered_indices
    std::vector<double> scores;                // per instance, in dataset row order
};

inline Curriculum build_curriculum(const Dataset& data, const RankingModel& model,
                                   std::size_t batch_count) {
    const std::size_t n = data.size();
    if (batch_count < 1 || batch_count > n)
        throw ConfigError("build_curriculum: batch_count must lie in [1, " + std::to_string(n) +
                          "], got " + std::to_string(batch_count));
    Curriculum curr;
    curr.batch_count = batch_count;
    curr.scores.resize(n);
    for (std::size_t r = 0; r < n; ++r)
        curr.scores[r] = score(model, data.features.row(r), data.features.cols);

    curr.ordered_indices.resize(n);
    std::iota(curr.ordered_indices.begin(), curr.ordered_indices.end(), std::size_t{0});
    std::sort(curr.ordered_indices.begin(), curr.ordered_indices.end(),
              [&](std::size_t a, std::size_t b) {
                  if (curr.scores[a] != curr.scores[b]) return curr.scores[a] < curr.scores[b];
                  return a < b;
              });

    curr.batch_boundaries.resize(batch_count + 1);
    const std::size_t base = n / batch_count;
    const std::size_t rem = n % batch_count;
    curr.batch_boundaries[0] = 0;
    for (std::size_t b = 0; b < batch_count; ++b)
        curr.batch_boundaries[b + 1] = curr.batch_boundaries[b] + base + (b < rem ? 1 : 0);
    return curr;
}

// Maps a teacher action (a1, a2) in [-1,1]^2 to a curriculum window: a1 picks
// the center batch, a2 the half-width in batches (up to w_max). Returns the
// dataset row indices of the window, sorted ascending. Out-of-range action
// components are clamped with a warning; the window is never empty.
inline std::vector<std::size_t> select_window(const Curriculum& curr, double a1, double a2,
                                              std::size_t w_max) {
    auto clamp_component = [](double v, const char* name) {
        if (v < -1.0 || v > 1.0) {
            std::cerr << "[flst] warning: action component " << name << " = " << v
                      << " outside [-1,1], clamping\n";
            return std::clamp(v, -1.0, 1.0);
        }
        return v;
    };
    a1 = clamp_component(a1, "a1");
    a2 = clamp_component(a2, "a2");

    const std::size_t n_batches = curr.batch_count;
    const auto center = static_cast<std::size_t>(
        std::lround((a1 + 1.0) / 2.0 * static_cast<double>(n_batches - 1)));
    const auto half_width =
        static_cast<std::size_t>(std::lround((a2 + 1.0) / 2.0 * static_cast<double>(w_max)));

    const std::size_t lo = center > half_width ? center - half_width : 0;
    const std::size_t hi = std::min(n_batches - 1, center + half_width);

    std::vector<std::size_t> out(curr.ordered_indices.begin() +
                                     static_cast<std::ptrdiff_t>(curr.batch_boundaries[lo]),
                                 curr.ordered_indices.begin() +
                                     static_cast<std::ptrdiff_t>(curr.batch_boundaries[hi + 1]));
    std::sort(out.begin(), out.end());
    return out;
}

// Diagnostic dump: one line per instance in curriculum order.
inline std::string curriculum_table(const Dataset& data, const Curriculum& curr) {
    std::ostringstream out;
    out << "instance_id\tscore\tbatch\n";
    std::size_t batch = 0;
    for (std::size_t pos = 0; pos < curr.ordered_indices.size(); ++pos) {
        while (pos >= curr.batch_boundaries[batch + 1]) ++batch;
        const std::size_t row = curr.ordered_indices[pos];
        char score_buf[32];
        std::snprintf(score_buf, sizeof(score_buf), "%.17g", curr.scores[row]);
        out << data.instance_ids[row] << '\t' << score_buf << '\t' << batch << '\n';
    }
    return out.str();
}

} // namespace flst
