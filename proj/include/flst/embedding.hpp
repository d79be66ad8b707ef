#pragma once

#include <cmath>
#include <cstddef>
#include <vector>

#include "flst/errors.hpp"
#include "flst/mlp.hpp"

namespace flst {

// Compact description of a student network: for every hidden unit, the
// magnitude of the inner product between its incoming weight row and a fixed
// reference vector, plus the angle between them. Length is 2 * (sum of hidden
// layer sizes) regardless of fan-in, so teachers and schedulers see a
// fixed-size state while the student's weights move.
struct StudentState {
    std::vector<double> v;
    std::size_t dim() const { return v.size(); }
};

struct StudentEmbedder {
    std::vector<std::size_t> layer_sizes; // the student architecture this embedder expects
    std::vector<std::vector<double>> reference_vectors; // one per hidden layer, length fan-in
    std::size_t expected_dim = 0;
};

// Reference vectors are all-ones scaled by 1/sqrt(fan_in), so a row equal to
// the reference embeds as magnitude 1, angle 0.
inline StudentEmbedder make_embedder(const std::vector<std::size_t>& student_layer_sizes) {
    if (student_layer_sizes.size() < 3)
        throw ConfigError("make_embedder: student needs at least one hidden layer");
    StudentEmbedder emb;
    emb.layer_sizes = student_layer_sizes;
    for (std::size_t h = 1; h + 1 < student_layer_sizes.size(); ++h) {
        const std::size_t fan_in = student_layer_sizes[h - 1];
        emb.reference_vectors.emplace_back(fan_in, 1.0 / std::sqrt(static_cast<double>(fan_in)));
        emb.expected_dim += 2 * student_layer_sizes[h];
    }
    return emb;
}

inline StudentState embed_student(const Mlp& student, const StudentEmbedder& emb) {
    if (student.layer_sizes != emb.layer_sizes)
        throw ShapeError("embed_student: student architecture does not match embedder");
    StudentState state;
    state.v.reserve(emb.expected_dim);
    constexpr double half_pi = 1.5707963267948966;
    for (std::size_t h = 0; h < emb.reference_vectors.size(); ++h) {
        const Matrix& w = student.weights[h]; // incoming weights of hidden layer h+1
        const std::vector<double>& a = emb.reference_vectors[h];
        double a_norm_sq = 0.0;
        for (double v : a) a_norm_sq += v * v;
        const double a_norm = std::sqrt(a_norm_sq);
        for (std::size_t n = 0; n < w.rows; ++n) {
            const double* row = w.row(n);
            double dot = 0.0, norm_sq = 0.0;
            for (std::size_t k = 0; k < w.cols; ++k) {
                dot += row[k] * a[k];
                norm_sq += row[k] * row[k];
            }
            state.v.push_back(std::abs(dot));
            if (norm_sq == 0.0) {
                state.v.push_back(half_pi); // zero rows are orthogonal by convention
            } else {
                double c = dot / (std::sqrt(norm_sq) * a_norm);
                c = std::clamp(c, -1.0, 1.0);
                state.v.push_back(std::acos(c));
            }
        }
    }
    return state;
}

inline Matrix state_as_row(const StudentState& s) {
    Matrix m(1, s.v.size());
    for (std::size_t i = 0; i < s.v.size(); ++i) m.values[i] = s.v[i];
    return m;
}

} // namespace flst
