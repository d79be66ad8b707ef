#pragma once

#include <cstdint>
#include <string>
#include <unordered_set>
#include <vector>

#include "flst/errors.hpp"
#include "flst/matrix.hpp"

namespace flst {

// A labelled shard: features row-per-instance, integer class labels, and the
// stable corpus-level instance ids the rows came from.
struct Dataset {
    Matrix features;
    std::vector<int> labels;
    std::vector<std::uint64_t> instance_ids;

    std::size_t size() const { return labels.size(); }
    bool empty() const { return labels.empty(); }
};

inline void validate_dataset(const Dataset& ds, const std::string& what) {
    if (ds.features.rows != ds.labels.size() || ds.features.rows != ds.instance_ids.size())
        throw ShapeError(what + ": features/labels/ids row counts disagree");
    std::unordered_set<std::uint64_t> seen;
    seen.reserve(ds.instance_ids.size());
    for (std::uint64_t id : ds.instance_ids)
        if (!seen.insert(id).second)
            throw ValidationError(what + ": duplicate instance id " + std::to_string(id));
}

inline Dataset dataset_subset(const Dataset& ds, const std::vector<std::size_t>& rows) {
    Dataset out;
    out.features = Matrix(rows.size(), ds.features.cols);
    out.labels.reserve(rows.size());
    out.instance_ids.reserve(rows.size());
    for (std::size_t i = 0; i < rows.size(); ++i) {
        const std::size_t r = rows[i];
        const double* src = ds.features.row(r);
        double* dst = out.features.row(i);
        for (std::size_t c = 0; c < ds.features.cols; ++c) dst[c] = src[c];
        out.labels.push_back(ds.labels[r]);
        out.instance_ids.push_back(ds.instance_ids[r]);
    }
    return out;
}

inline Matrix one_hot(const std::vector<int>& labels, std::size_t class_count) {
    Matrix t(labels.size(), class_count);
    for (std::size_t r = 0; r < labels.size(); ++r) {
        const int y = labels[r];
        if (y < 0 || static_cast<std::size_t>(y) >= class_count)
            throw ValidationError("label " + std::to_string(y) + " outside [0, " +
                                  std::to_string(class_count) + ")");
        t.at(r, static_cast<std::size_t>(y)) = 1.0;
    }
    return t;
}

} // namespace flst
