#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <fstream>
#include <numeric>
#include <string>
#include <vector>

#include "flst/dataset.hpp"
#include "flst/errors.hpp"
#include "flst/matrix.hpp"
#include "flst/ranking.hpp"
#include "flst/rng.hpp"

namespace flst {

enum class CorpusSource { MnistIdx, SyntheticTabular, SyntheticDigits };

struct RawCorpus {
    Matrix features;
    std::vector<int> labels;
    std::size_t class_count = 0;
    CorpusSource source = CorpusSource::SyntheticTabular;

    std::size_t size() const { return labels.size(); }
};

// ---------------------------------------------------------------------------
// IDX files (big-endian magic + dimension header, then raw payload bytes).

namespace idx_detail {

inline std::uint32_t read_be_u32(std::ifstream& in, const std::string& path, const char* what) {
    unsigned char b[4];
    if (!in.read(reinterpret_cast<char*>(b), 4))
        throw DecodeError(path + ": truncated while reading " + what);
    return (std::uint32_t(b[0]) << 24) | (std::uint32_t(b[1]) << 16) | (std::uint32_t(b[2]) << 8) |
           std::uint32_t(b[3]);
}

inline void write_be_u32(std::ofstream& out, std::uint32_t v) {
    unsigned char b[4] = {static_cast<unsigned char>(v >> 24), static_cast<unsigned char>(v >> 16),
                          static_cast<unsigned char>(v >> 8), static_cast<unsigned char>(v)};
    out.write(reinterpret_cast<const char*>(b), 4);
}

} // namespace idx_detail

// Loads an MNIST-style image/label pair. Pixels are scaled to [0,1] and each
// image flattened to rows*cols features.
inline RawCorpus load_mnist_idx(const std::string& images_path, const std::string& labels_path) {
    using idx_detail::read_be_u32;

    std::ifstream img(images_path, std::ios::binary);
    if (!img) throw DecodeError(images_path + ": cannot open");
    const std::uint32_t img_magic = read_be_u32(img, images_path, "magic");
    if (img_magic != 0x00000803u)
        throw DecodeError(images_path + ": bad magic (expected 0x00000803)");
    const std::uint32_t count = read_be_u32(img, images_path, "image count");
    const std::uint32_t rows = read_be_u32(img, images_path, "row count");
    const std::uint32_t cols = read_be_u32(img, images_path, "column count");
    if (rows == 0 || cols == 0) throw DecodeError(images_path + ": zero image dimensions");

    const std::size_t pixels = std::size_t(rows) * cols;
    std::vector<unsigned char> buf(pixels);
    RawCorpus corpus;
    corpus.source = CorpusSource::MnistIdx;
    corpus.class_count = 10;
    corpus.features = Matrix(count, pixels);
    for (std::uint32_t i = 0; i < count; ++i) {
        if (!img.read(reinterpret_cast<char*>(buf.data()), static_cast<std::streamsize>(pixels)))
            throw DecodeError(images_path + ": truncated image payload at image " +
                              std::to_string(i));
        double* dst = corpus.features.row(i);
        for (std::size_t p = 0; p < pixels; ++p) dst[p] = buf[p] / 255.0;
    }

    std::ifstream lab(labels_path, std::ios::binary);
    if (!lab) throw DecodeError(labels_path + ": cannot open");
    const std::uint32_t lab_magic = read_be_u32(lab, labels_path, "magic");
    if (lab_magic != 0x00000801u)
        throw DecodeError(labels_path + ": bad magic (expected 0x00000801)");
    const std::uint32_t lab_count = read_be_u32(lab, labels_path, "label count");
    if (lab_count != count)
        throw DecodeError(labels_path + ": label count " + std::to_string(lab_count) +
                          " does not match image count " + std::to_string(count) + " in " +
                          images_path);
    corpus.labels.resize(count);
    for (std::uint32_t i = 0; i < count; ++i) {
        char c;
        if (!lab.get(c)) throw DecodeError(labels_path + ": truncated label payload");
        const int y = static_cast<unsigned char>(c);
        if (y > 9) throw DecodeError(labels_path + ": label " + std::to_string(y) + " outside [0,9]");
        corpus.labels[i] = y;
    }
    return corpus;
}

// Writes a corpus of [0,1] grayscale images back out as an IDX pair.
inline void write_idx_pair(const RawCorpus& corpus, std::uint32_t rows, std::uint32_t cols,
                           const std::string& images_path, const std::string& labels_path) {
    using idx_detail::write_be_u32;
    if (corpus.features.cols != std::size_t(rows) * cols)
        throw ShapeError("write_idx_pair: feature dim does not match image dimensions");

    std::ofstream img(images_path, std::ios::binary | std::ios::trunc);
    if (!img) throw ConfigError(images_path + ": cannot open for writing");
    write_be_u32(img, 0x00000803u);
    write_be_u32(img, static_cast<std::uint32_t>(corpus.size()));
    write_be_u32(img, rows);
    write_be_u32(img, cols);
    for (std::size_t i = 0; i < corpus.size(); ++i) {
        const double* src = corpus.features.row(i);
        for (std::size_t p = 0; p < corpus.features.cols; ++p) {
            const double v = std::clamp(src[p], 0.0, 1.0);
            img.put(static_cast<char>(std::lround(v * 255.0)));
        }
    }
    if (!img) throw ConfigError(images_path + ": write failed");

    std::ofstream lab(labels_path, std::ios::binary | std::ios::trunc);
    if (!lab) throw ConfigError(labels_path + ": cannot open for writing");
    write_be_u32(lab, 0x00000801u);
    write_be_u32(lab, static_cast<std::uint32_t>(corpus.size()));
    for (int y : corpus.labels) lab.put(static_cast<char>(y));
    if (!lab) throw ConfigError(labels_path + ": write failed");
}

// ---------------------------------------------------------------------------
// Synthetic generators.

// Balanced per-class Gaussian clusters. With node_shift > 0 the corpus is laid
// out in node_count contiguous blocks and each block's features receive a
// seeded mean offset of magnitude node_shift, emulating per-node covariate
// shift; the source_blocks partition scheme maps those blocks onto nodes.
inline RawCorpus gen_synthetic_tabular(std::size_t class_count, std::size_t feature_dim,
                                       std::size_t instances, double node_shift,
                                       std::size_t node_count, std::uint64_t seed) {
    if (class_count < 2 || feature_dim == 0 || node_count == 0)
        throw ConfigError("gen_synthetic_tabular: class_count>=2, feature_dim>=1, node_count>=1");
    if (instances < class_count * 10)
        throw ConfigError("gen_synthetic_tabular: need at least class_count*10 instances");
    if (node_shift < 0.0) throw ConfigError("gen_synthetic_tabular: node_shift must be >= 0");

    Rng rng(seed);

    // Class geometry: seeded means, per-feature spreads.
    std::vector<std::vector<double>> class_means(class_count, std::vector<double>(feature_dim));
    std::vector<std::vector<double>> class_stds(class_count, std::vector<double>(feature_dim));
    for (std::size_t c = 0; c < class_count; ++c)
        for (std::size_t f = 0; f < feature_dim; ++f) {
            class_means[c][f] = rng.normal(0.0, 1.5);
            class_stds[c][f] = rng.uniform(0.6, 1.1);
        }

    // One seeded unit offset direction per node block.
    std::vector<std::vector<double>> node_offsets(node_count, std::vector<double>(feature_dim, 0.0));
    for (std::size_t k = 0; k < node_count; ++k) {
        double norm_sq = 0.0;
        for (std::size_t f = 0; f < feature_dim; ++f) {
            node_offsets[k][f] = rng.normal();
            norm_sq += node_offsets[k][f] * node_offsets[k][f];
        }
        const double scale = node_shift / std::max(std::sqrt(norm_sq), 1e-12);
        for (double& v : node_offsets[k]) v *= scale;
    }

    RawCorpus corpus;
    corpus.source = CorpusSource::SyntheticTabular;
    corpus.class_count = class_count;
    corpus.features = Matrix(instances, feature_dim);
    corpus.labels.resize(instances);
    const std::size_t block = (instances + node_count - 1) / node_count;
    for (std::size_t i = 0; i < instances; ++i) {
        const std::size_t c = i % class_count; // cyclic labels keep classes balanced
        const std::size_t node = std::min(i / block, node_count - 1);
        corpus.labels[i] = static_cast<int>(c);
        double* row = corpus.features.row(i);
        for (std::size_t f = 0; f < feature_dim; ++f)
            row[f] = class_means[c][f] + class_stds[c][f] * rng.normal() +
                     (node_shift > 0.0 ? node_offsets[node][f] : 0.0);
    }
    return corpus;
}

// Deterministic seven-segment digit corpus: 28x28 grayscale renderings with
// seeded affine jitter, stroke-width variation and pixel noise. A stand-in
// image task with the same layout as the IDX loader output.
inline RawCorpus gen_synthetic_digits(std::size_t instances, std::uint64_t seed) {
    if (instances < 100) throw ConfigError("gen_synthetic_digits: need at least 100 instances");
    constexpr int kSide = 28;
    // Segment endpoints: A top, B/C right, D bottom, E/F left, G middle.
    static const double seg[7][4] = {
        {8, 5, 20, 5},   // A
        {20, 5, 20, 14}, // B
        {20, 14, 20, 23},// C
        {8, 23, 20, 23}, // D
        {8, 14, 8, 23},  // E
        {8, 5, 8, 14},   // F
        {8, 14, 20, 14}, // G
    };
    static const int digit_segments[10] = {
        0b0111111, // 0: ABCDEF
        0b0000110, // 1: BC
        0b1011011, // 2: ABDEG
        0b1001111, // 3: ABCDG
        0b1100110, // 4: BCFG
        0b1101101, // 5: ACDFG
        0b1111101, // 6: ACDEFG
        0b0000111, // 7: ABC
        0b1111111, // 8
        0b1101111, // 9: ABCDFG
    };

    Rng rng(seed);
    RawCorpus corpus;
    corpus.source = CorpusSource::SyntheticDigits;
    corpus.class_count = 10;
    corpus.features = Matrix(instances, kSide * kSide);
    corpus.labels.resize(instances);

    for (std::size_t i = 0; i < instances; ++i) {
        const int digit = static_cast<int>(i % 10);
        corpus.labels[i] = digit;

        const double angle = rng.uniform(-0.25, 0.25);
        const double scale = rng.uniform(0.8, 1.15);
        const double dx = rng.uniform(-2.5, 2.5);
        const double dy = rng.uniform(-2.5, 2.5);
        const double sigma = rng.uniform(0.9, 1.5);
        const double ca = std::cos(angle) * scale, sa = std::sin(angle) * scale;
        auto transform = [&](double x, double y, double& ox, double& oy) {
            const double cx = x - 14.0, cy = y - 14.0;
            ox = 14.0 + ca * cx - sa * cy + dx;
            oy = 14.0 + sa * cx + ca * cy + dy;
        };

        double pts[7][4];
        for (int s = 0; s < 7; ++s) {
            transform(seg[s][0], seg[s][1], pts[s][0], pts[s][1]);
            transform(seg[s][2], seg[s][3], pts[s][2], pts[s][3]);
        }

        double* row = corpus.features.row(i);
        const int mask = digit_segments[digit];
        for (int py = 0; py < kSide; ++py) {
            for (int px = 0; px < kSide; ++px) {
                double intensity = 0.0;
                for (int s = 0; s < 7; ++s) {
                    if (!(mask & (1 << s))) continue;
                    const double x1 = pts[s][0], y1 = pts[s][1], x2 = pts[s][2], y2 = pts[s][3];
                    const double vx = x2 - x1, vy = y2 - y1;
                    const double wx = px - x1, wy = py - y1;
                    const double len_sq = vx * vx + vy * vy;
                    double t = len_sq > 0.0 ? (wx * vx + wy * vy) / len_sq : 0.0;
                    t = std::clamp(t, 0.0, 1.0);
                    const double ex = wx - t * vx, ey = wy - t * vy;
                    const double d_sq = ex * ex + ey * ey;
                    intensity = std::max(intensity, std::exp(-d_sq / (2.0 * sigma * sigma)));
                }
                intensity += rng.normal(0.0, 0.07);
                row[py * kSide + px] = std::clamp(intensity, 0.0, 1.0);
            }
        }
    }
    return corpus;
}

// Seeded uniform subsample without replacement, preserving relative order.
inline RawCorpus subsample_corpus(const RawCorpus& corpus, std::size_t count, std::uint64_t seed) {
    if (count > corpus.size())
        throw ConfigError("subsample_corpus: requested more instances than available");
    std::vector<std::size_t> idx(corpus.size());
    std::iota(idx.begin(), idx.end(), std::size_t{0});
    Rng rng(seed);
    for (std::size_t i = corpus.size(); i > 1; --i)
        std::swap(idx[i - 1], idx[rng.uniform_index(i)]);
    idx.resize(count);
    std::sort(idx.begin(), idx.end());

    RawCorpus out;
    out.source = corpus.source;
    out.class_count = corpus.class_count;
    out.features = Matrix(count, corpus.features.cols);
    out.labels.reserve(count);
    for (std::size_t i = 0; i < count; ++i) {
        const double* src = corpus.features.row(idx[i]);
        double* dst = out.features.row(i);
        for (std::size_t c = 0; c < corpus.features.cols; ++c) dst[c] = src[c];
        out.labels.push_back(corpus.labels[idx[i]]);
    }
    return out;
}

// Replaces labels with seeded uniform draws for instances whose rank position
// (ascending Mahalanobis score over the whole corpus) falls inside
// [band_lo, band_hi) as fractions of the corpus. Used to build tasks where
// data quality varies along the curriculum.
inline RawCorpus randomize_labels_in_score_band(const RawCorpus& corpus, double band_lo,
                                                double band_hi, std::uint64_t seed) {
    if (!(0.0 <= band_lo && band_lo <= band_hi && band_hi <= 1.0))
        throw ConfigError("randomize_labels_in_score_band: need 0 <= lo <= hi <= 1");
    Dataset as_dataset;
    as_dataset.features = corpus.features;
    as_dataset.labels = corpus.labels;
    as_dataset.instance_ids.resize(corpus.size());
    std::iota(as_dataset.instance_ids.begin(), as_dataset.instance_ids.end(), std::uint64_t{0});
    const RankingModel model = fit_ranking(as_dataset, Metric::Mahalanobis);

    std::vector<std::size_t> order(corpus.size());
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::vector<double> scores(corpus.size());
    for (std::size_t i = 0; i < corpus.size(); ++i)
        scores[i] = score(model, corpus.features.row(i), corpus.features.cols);
    std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
        if (scores[a] != scores[b]) return scores[a] < scores[b];
        return a < b;
    });

    RawCorpus out = corpus;
    Rng rng(seed);
    const auto lo = static_cast<std::size_t>(band_lo * static_cast<double>(corpus.size()));
    const auto hi = static_cast<std::size_t>(band_hi * static_cast<double>(corpus.size()));
    for (std::size_t pos = lo; pos < hi; ++pos)
        out.labels[order[pos]] = static_cast<int>(rng.uniform_index(corpus.class_count));
    return out;
}

inline void export_corpus_csv(const RawCorpus& corpus, const std::string& path) {
    std::ofstream out(path, std::ios::trunc);
    if (!out) throw ConfigError(path + ": cannot open for writing");
    for (std::size_t f = 0; f < corpus.features.cols; ++f) out << 'f' << f << ',';
    out << "label\n";
    char buf[32];
    for (std::size_t r = 0; r < corpus.size(); ++r) {
        const double* row = corpus.features.row(r);
        for (std::size_t f = 0; f < corpus.features.cols; ++f) {
            std::snprintf(buf, sizeof(buf), "%.17g", row[f]);
            out << buf << ',';
        }
        out << corpus.labels[r] << '\n';
    }
    if (!out) throw ConfigError(path + ": write failed");
}

// ---------------------------------------------------------------------------
// Partitioning.

enum class PartitionScheme { RandomUniform, RandomSized, LabelSkew, SourceBlocks };

struct PartitionPlan {
    std::size_t node_count = 1;
    PartitionScheme scheme = PartitionScheme::RandomUniform;
    double dirichlet_alpha = 1.0; // label_skew only
    double train_fraction = 0.60;
    double val_fraction = 0.20;
    double test_fraction = 0.20;
    std::uint64_t seed = 0;
};

struct NodeShards {
    Dataset train;
    Dataset validation;
    Dataset test;
};

struct FederationData {
    std::vector<NodeShards> nodes;
    Dataset global_test; // union of the node test shards
    std::size_t class_count = 0;
    std::size_t feature_dim = 0;
};

namespace partition_detail {

// Splits `indices` into node_count buckets with `weights` proportions
// (cumulative rounding keeps the union exhaustive).
inline std::vector<std::vector<std::size_t>> split_by_weights(
    const std::vector<std::size_t>& indices, const std::vector<double>& weights) {
    const std::size_t n = indices.size();
    const std::size_t k = weights.size();
    std::vector<std::vector<std::size_t>> buckets(k);
    double total = 0.0;
    for (double w : weights) total += w;
    double cum = 0.0;
    std::size_t start = 0;
    for (std::size_t b = 0; b < k; ++b) {
        cum += weights[b];
        const std::size_t end =
            (b + 1 == k) ? n : static_cast<std::size_t>(std::llround(cum / total * n));
        for (std::size_t i = start; i < std::min(end, n); ++i) buckets[b].push_back(indices[i]);
        start = std::min(end, n);
    }
    return buckets;
}

inline Dataset take(const RawCorpus& corpus, const std::vector<std::size_t>& rows) {
    Dataset ds;
    ds.features = Matrix(rows.size(), corpus.features.cols);
    ds.labels.reserve(rows.size());
    ds.instance_ids.reserve(rows.size());
    for (std::size_t i = 0; i < rows.size(); ++i) {
        const double* src = corpus.features.row(rows[i]);
        double* dst = ds.features.row(i);
        for (std::size_t c = 0; c < corpus.features.cols; ++c) dst[c] = src[c];
        ds.labels.push_back(corpus.labels[rows[i]]);
        ds.instance_ids.push_back(rows[i]);
    }
    return ds;
}

} // namespace partition_detail

// 60/20/20 split first (rounding residue goes to train), then division across
// nodes per scheme. Instance ids are corpus row indices, so shards stay
// traceable and provably disjoint.
inline FederationData partition_and_split(const RawCorpus& corpus, const PartitionPlan& plan) {
    using namespace partition_detail;
    if (corpus.size() == 0) throw ConfigError("partition_and_split: empty corpus");
    if (plan.node_count < 1) throw ConfigError("partition_and_split: node_count must be >= 1");
    const double frac_sum = plan.train_fraction + plan.val_fraction + plan.test_fraction;
    if (std::abs(frac_sum - 1.0) > 1e-9)
        throw ConfigError("partition_and_split: split fractions must sum to 1");
    if (plan.train_fraction <= 0.0 || plan.val_fraction <= 0.0 || plan.test_fraction <= 0.0)
        throw ConfigError("partition_and_split: split fractions must be positive");

    const std::size_t m = corpus.size();
    std::vector<std::size_t> order(m);
    std::iota(order.begin(), order.end(), std::size_t{0});
    Rng rng(plan.seed);
    for (std::size_t i = m; i > 1; --i) std::swap(order[i - 1], order[rng.uniform_index(i)]);

    const auto n_val = static_cast<std::size_t>(plan.val_fraction * static_cast<double>(m));
    const auto n_test = static_cast<std::size_t>(plan.test_fraction * static_cast<double>(m));
    const std::size_t n_train = m - n_val - n_test;

    std::vector<std::size_t> train_ids(order.begin(), order.begin() + n_train);
    std::vector<std::size_t> val_ids(order.begin() + n_train, order.begin() + n_train + n_val);
    std::vector<std::size_t> test_ids(order.begin() + n_train + n_val, order.end());

    const std::size_t k = plan.node_count;
    std::vector<double> node_weights(k, 1.0);
    if (plan.scheme == PartitionScheme::RandomSized) {
        // Flat Dirichlet via normalized exponentials.
        for (double& w : node_weights) w = -std::log(std::max(rng.uniform(), 1e-300));
    }

    // Per-class node weights for label skew, shared across the three sets so
    // train and validation shards reflect the same node distribution.
    std::vector<std::vector<double>> class_node_weights;
    if (plan.scheme == PartitionScheme::LabelSkew) {
        if (plan.dirichlet_alpha <= 0.0)
            throw ConfigError("partition_and_split: dirichlet_alpha must be positive");
        class_node_weights.resize(corpus.class_count, std::vector<double>(k));
        for (auto& weights : class_node_weights) {
            // Gamma(alpha) via Marsaglia-Tsang (alpha boost for alpha < 1).
            for (double& w : weights) {
                const double alpha = plan.dirichlet_alpha;
                const double boosted = alpha < 1.0 ? alpha + 1.0 : alpha;
                const double d = boosted - 1.0 / 3.0;
                const double c = 1.0 / std::sqrt(9.0 * d);
                double g;
                for (;;) {
                    const double x = rng.normal();
                    const double v = std::pow(1.0 + c * x, 3.0);
                    if (v <= 0.0) continue;
                    const double u = rng.uniform();
                    if (std::log(std::max(u, 1e-300)) < 0.5 * x * x + d - d * v + d * std::log(v)) {
                        g = d * v;
                        break;
                    }
                }
                if (alpha < 1.0)
                    g *= std::pow(std::max(rng.uniform(), 1e-300), 1.0 / alpha);
                w = std::max(g, 1e-12);
            }
        }
    }

    const std::size_t block = (m + k - 1) / k;
    auto divide = [&](const std::vector<std::size_t>& ids) {
        switch (plan.scheme) {
            case PartitionScheme::RandomUniform:
            case PartitionScheme::RandomSized:
                return split_by_weights(ids, node_weights);
            case PartitionScheme::SourceBlocks: {
                std::vector<std::vector<std::size_t>> buckets(k);
                for (std::size_t id : ids) buckets[std::min(id / block, k - 1)].push_back(id);
                return buckets;
            }
            case PartitionScheme::LabelSkew: {
                std::vector<std::vector<std::size_t>> buckets(k);
                std::vector<std::vector<std::size_t>> by_class(corpus.class_count);
                for (std::size_t id : ids)
                    by_class[static_cast<std::size_t>(corpus.labels[id])].push_back(id);
                for (std::size_t c = 0; c < corpus.class_count; ++c) {
                    auto parts = split_by_weights(by_class[c], class_node_weights[c]);
                    for (std::size_t b = 0; b < k; ++b)
                        buckets[b].insert(buckets[b].end(), parts[b].begin(), parts[b].end());
                }
                return buckets;
            }
        }
        throw ConfigError("partition_and_split: unknown scheme");
    };

    const auto train_buckets = divide(train_ids);
    const auto val_buckets = divide(val_ids);
    const auto test_buckets = divide(test_ids);

    FederationData fd;
    fd.class_count = corpus.class_count;
    fd.feature_dim = corpus.features.cols;
    fd.nodes.resize(k);
    for (std::size_t b = 0; b < k; ++b) {
        if (train_buckets[b].size() < corpus.class_count)
            throw ConfigError("partition_and_split: node " + std::to_string(b) +
                              " would receive only " + std::to_string(train_buckets[b].size()) +
                              " training instances (< class_count)");
        if (val_buckets[b].empty() || test_buckets[b].empty())
            throw ConfigError("partition_and_split: node " + std::to_string(b) +
                              " would receive an empty validation or test shard");
        fd.nodes[b].train = take(corpus, train_buckets[b]);
        fd.nodes[b].validation = take(corpus, val_buckets[b]);
        fd.nodes[b].test = take(corpus, test_buckets[b]);
    }

    std::vector<std::size_t> all_test;
    for (const auto& bucket : test_buckets)
        all_test.insert(all_test.end(), bucket.begin(), bucket.end());
    std::sort(all_test.begin(), all_test.end());
    fd.global_test = take(corpus, all_test);
    return fd;
}

} // namespace flst
