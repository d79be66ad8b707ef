#pragma once

#include <cstdio>
#include <fstream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "flst/errors.hpp"

namespace flst {

// One outer-iteration record. Written as one CSV row; the header expands the
// per-node vectors into one column per node.
struct MetricsRow {
    std::size_t iteration = 0;
    std::vector<double> scheduler_probs;
    std::vector<std::size_t> selected_nodes;
    double action_a1 = 0.0;
    double action_a2 = 0.0;
    std::size_t batch_size = 0;
    double inner_loss = 0.0;
    double meta_loss = 0.0;
    std::vector<double> node_val_accuracy;
    std::optional<double> test_accuracy; // periodic
    double reward = 0.0;
    std::string flag = "ok";
};

namespace metrics_detail {

inline std::string fmt(double v) {
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return buf;
}

} // namespace metrics_detail

inline std::string metrics_header(std::size_t node_count) {
    std::string h = "iteration,selected,a1,a2,batch_size,inner_loss,meta_loss,reward,test_accuracy,flag";
    for (std::size_t i = 0; i < node_count; ++i) h += ",p_node_" + std::to_string(i);
    for (std::size_t i = 0; i < node_count; ++i) h += ",val_acc_node_" + std::to_string(i);
    return h + "\n";
}

inline std::string metrics_row_csv(const MetricsRow& row) {
    using metrics_detail::fmt;
    std::string s = std::to_string(row.iteration) + ",";
    for (std::size_t i = 0; i < row.selected_nodes.size(); ++i) {
        if (i) s += ';';
        s += std::to_string(row.selected_nodes[i]);
    }
    s += ',' + fmt(row.action_a1) + ',' + fmt(row.action_a2) + ',' + std::to_string(row.batch_size);
    s += ',' + fmt(row.inner_loss) + ',' + fmt(row.meta_loss) + ',' + fmt(row.reward);
    s += ',' + (row.test_accuracy ? fmt(*row.test_accuracy) : std::string());
    s += ',' + row.flag;
    for (double p : row.scheduler_probs) s += ',' + fmt(p);
    for (double a : row.node_val_accuracy) s += ',' + fmt(a);
    return s + "\n";
}

class MetricsWriter {
public:
    MetricsWriter(const std::string& path, std::size_t node_count) : out_(path, std::ios::trunc) {
        if (!out_) throw ConfigError(path + ": cannot open metrics file for writing");
        out_ << metrics_header(node_count);
    }

    void write(const MetricsRow& row) { out_ << metrics_row_csv(row); }

    void flush() { out_.flush(); }

private:
    std::ofstream out_;
};

// Parses a metrics CSV produced by MetricsWriter. Malformed rows raise a
// ValidationError naming the 1-based line number.
inline std::vector<MetricsRow> read_metrics_csv(const std::string& path, std::size_t* node_count_out = nullptr) {
    std::ifstream in(path);
    if (!in) throw ConfigError(path + ": cannot open metrics file");
    std::string line;
    if (!std::getline(in, line)) throw ValidationError(path + ": missing header row");

    std::size_t node_count = 0;
    {
        std::stringstream ss(line);
        std::string col;
        while (std::getline(ss, col, ','))
            if (col.rfind("p_node_", 0) == 0) ++node_count;
    }
    if (node_count_out) *node_count_out = node_count;

    std::vector<MetricsRow> rows;
    std::size_t line_no = 1;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.empty()) continue;
        std::vector<std::string> cells;
        std::stringstream ss(line);
        std::string cell;
        while (std::getline(ss, cell, ',')) cells.push_back(cell);
        if (line.back() == ',') cells.emplace_back();
        const std::size_t expected = 10 + 2 * node_count;
        if (cells.size() != expected)
            throw ValidationError(path + ": row " + std::to_string(line_no) + " has " +
                                  std::to_string(cells.size()) + " cells, expected " +
                                  std::to_string(expected));
        try {
            MetricsRow row;
            row.iteration = std::stoull(cells[0]);
            if (!cells[1].empty()) {
                std::stringstream sel(cells[1]);
                std::string tok;
                while (std::getline(sel, tok, ';')) row.selected_nodes.push_back(std::stoull(tok));
            }
            row.action_a1 = std::stod(cells[2]);
            row.action_a2 = std::stod(cells[3]);
            row.batch_size = std::stoull(cells[4]);
            row.inner_loss = std::stod(cells[5]);
            row.meta_loss = std::stod(cells[6]);
            row.reward = std::stod(cells[7]);
            if (!cells[8].empty()) row.test_accuracy = std::stod(cells[8]);
            row.flag = cells[9];
            for (std::size_t i = 0; i < node_count; ++i)
                row.scheduler_probs.push_back(std::stod(cells[10 + i]));
            for (std::size_t i = 0; i < node_count; ++i)
                row.node_val_accuracy.push_back(std::stod(cells[10 + node_count + i]));
            rows.push_back(std::move(row));
        } catch (const std::invalid_argument&) {
            throw ValidationError(path + ": row " + std::to_string(line_no) + " has a malformed cell");
        } catch (const std::out_of_range&) {
            throw ValidationError(path + ": row " + std::to_string(line_no) + " has an out-of-range cell");
        }
    }
    return rows;
}

} // namespace flst
