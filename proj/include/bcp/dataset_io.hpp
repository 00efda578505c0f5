#pragma once

#include <charconv>
#include <cmath>
#include <istream>
#include <ostream>
#include <sstream>
#include <string>
#include <vector>

#include "bcp/core.hpp"
#include "bcp/harness.hpp"

namespace bcp {

// Columnar dataset format: header `label_index,p_0,...,p_{S+1}`, one example
// per row. Probabilities are written in shortest round-trip form, so a
// write/read cycle reproduces the distribution bit for bit.
inline void write_dataset_csv(const std::vector<Example>& examples, const LabelSpace& space,
                              std::ostream& os) {
    os << "label_index";
    for (int i = 0; i < space.size(); ++i) os << ",p_" << i;
    os << '\n';
    for (const Example& ex : examples) {
        os << ex.true_label.index;
        for (double p : ex.dist.probs) os << ',' << format_double(p);
        os << '\n';
    }
}

namespace detail {

inline std::vector<std::string> split_csv_line(const std::string& line) {
    std::vector<std::string> out;
    std::string cur;
    for (char c : line) {
        if (c == ',') {
            out.push_back(cur);
            cur.clear();
        } else if (c != '\r') {
            cur += c;
        }
    }
    out.push_back(cur);
    return out;
}

inline double parse_double_field(const std::string& s, std::size_t row) {
    double v = 0.0;
    auto res = std::from_chars(s.data(), s.data() + s.size(), v);
    if (res.ec != std::errc{} || res.ptr != s.data() + s.size())
        throw DataError("row " + std::to_string(row) + ": bad numeric field '" + s + "'");
    return v;
}

}  // namespace detail

struct Dataset {
    LabelSpace space;
    std::vector<Example> examples;
};

inline Dataset read_dataset_csv(std::istream& is) {
    std::string line;
    if (!std::getline(is, line)) throw DataError("dataset is empty, no header");
    std::vector<std::string> header = detail::split_csv_line(line);
    if (header.size() < 3 || header[0] != "label_index")
        throw DataError("dataset header must start with label_index,p_0,...");
    const int n_labels = static_cast<int>(header.size()) - 1;
    for (int i = 0; i < n_labels; ++i)
        if (header[static_cast<std::size_t>(i + 1)] != "p_" + std::to_string(i))
            throw DataError("unexpected header column '" +
                            header[static_cast<std::size_t>(i + 1)] + "'");

    Dataset ds;
    ds.space = LabelSpace{n_labels - 2};
    std::size_t row = 1;
    while (std::getline(is, line)) {
        ++row;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty()) continue;
        std::vector<std::string> fields = detail::split_csv_line(line);
        if (static_cast<int>(fields.size()) != n_labels + 1)
            throw DataError("row " + std::to_string(row) + ": expected " +
                            std::to_string(n_labels + 1) + " fields, got " +
                            std::to_string(fields.size()));
        int label = static_cast<int>(detail::parse_double_field(fields[0], row));
        std::vector<double> probs;
        probs.reserve(static_cast<std::size_t>(n_labels));
        double sum = 0.0;
        bool valid = true;
        for (int i = 0; i < n_labels; ++i) {
            double p = detail::parse_double_field(fields[static_cast<std::size_t>(i + 1)], row);
            valid = valid && p >= kEpsFloor && p <= 1.0;
            sum += p;
            probs.push_back(p);
        }
        Example ex;
        // Rows that already satisfy the invariants pass through untouched,
        // which keeps a write/read cycle bit-exact; anything else (hand-edited
        // files, truncated precision) goes through normalization.
        if (valid && std::abs(sum - 1.0) <= 1e-9)
            ex.dist = PredictiveDistribution{std::move(probs)};
        else
            ex.dist = normalize(probs, ds.space);
        ex.true_label = make_label(ds.space, label);
        ex.raw_input_id = static_cast<std::uint64_t>(row - 2);
        ds.examples.push_back(std::move(ex));
    }
    if (ds.examples.empty()) throw DataError("dataset has a header but no rows");
    return ds;
}

}  // namespace bcp
