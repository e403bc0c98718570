#include "treeinfluence/dataset.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <sstream>
#include <stdexcept>
#include <unordered_map>
#include <unordered_set>

#include "treeinfluence/errors.hpp"
#include "treeinfluence/rng.hpp"
#include "treeinfluence/serialize.hpp"

namespace treeinf {

bool Dataset::labels_binary() const {
    for (double y : labels) {
        if (y != 0.0 && y != 1.0) return false;
    }
    return true;
}

std::int64_t Dataset::position_of_id(std::int64_t id) const {
    for (std::int64_t i = 0; i < rows; ++i) {
        if (ids[i] == id) return i;
    }
    return -1;
}

void Dataset::validate() const {
    if (rows < 1) throw std::invalid_argument("dataset: needs at least one row");
    if (cols < 1) throw std::invalid_argument("dataset: needs at least one feature");
    if (static_cast<std::int64_t>(features.size()) != rows * cols ||
        static_cast<std::int64_t>(labels.size()) != rows ||
        static_cast<std::int64_t>(weights.size()) != rows ||
        static_cast<std::int64_t>(ids.size()) != rows ||
        static_cast<std::int64_t>(feature_names.size()) != cols) {
        throw std::invalid_argument("dataset: inconsistent array sizes");
    }
    for (std::int64_t i = 0; i < rows * cols; ++i) {
        if (!std::isfinite(features[i])) {
            throw std::invalid_argument("dataset: non-finite feature value at flat index " +
                                        std::to_string(i));
        }
    }
    for (std::int64_t i = 0; i < rows; ++i) {
        if (!std::isfinite(labels[i])) {
            throw std::invalid_argument("dataset: non-finite label at row " + std::to_string(i));
        }
        if (!(weights[i] >= 0.0) || !std::isfinite(weights[i])) {
            throw std::invalid_argument("dataset: negative or non-finite weight at row " +
                                        std::to_string(i));
        }
    }
    std::unordered_set<std::int64_t> seen(ids.begin(), ids.end());
    if (static_cast<std::int64_t>(seen.size()) != rows) {
        throw std::invalid_argument("dataset: row ids are not unique");
    }
}

Dataset make_dataset(std::vector<std::string> feature_names, std::vector<double> features,
                     std::vector<double> labels, std::vector<double> weights) {
    Dataset ds;
    ds.rows = static_cast<std::int64_t>(labels.size());
    ds.cols = static_cast<std::int64_t>(feature_names.size());
    ds.feature_names = std::move(feature_names);
    ds.features = std::move(features);
    ds.labels = std::move(labels);
    ds.weights = weights.empty() ? std::vector<double>(ds.rows, 1.0) : std::move(weights);
    ds.ids.resize(ds.rows);
    for (std::int64_t i = 0; i < ds.rows; ++i) ds.ids[i] = i;
    ds.validate();
    return ds;
}

int feature_index(const Dataset& ds, const std::string& name) {
    for (std::size_t j = 0; j < ds.feature_names.size(); ++j) {
        if (ds.feature_names[j] == name) return static_cast<int>(j);
    }
    throw std::invalid_argument("unknown column '" + name + "'");
}

// ---------------------------------------------------------------------------
// CSV
// ---------------------------------------------------------------------------

namespace {

std::vector<std::string> split_line(const std::string& line) {
    std::vector<std::string> fields;
    std::string current;
    for (char c : line) {
        if (c == ',') {
            fields.push_back(current);
            current.clear();
        } else if (c != '\r') {
            current.push_back(c);
        }
    }
    fields.push_back(current);
    return fields;
}

bool parse_double(const std::string& text, double& out) {
    const char* begin = text.data();
    const char* end = begin + text.size();
    while (begin < end && (*begin == ' ' || *begin == '\t')) ++begin;
    while (end > begin && (end[-1] == ' ' || end[-1] == '\t')) --end;
    if (begin == end) return false;
    const auto result = std::from_chars(begin, end, out);
    return result.ec == std::errc{} && result.ptr == end;
}

}  // namespace

Dataset load_csv(const std::string& path, const std::string& label_column,
                 const std::optional<std::string>& weight_column) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open file '" + path + "'");

    std::string line;
    if (!std::getline(in, line)) throw std::invalid_argument("'" + path + "': empty file");
    const std::vector<std::string> header = split_line(line);

    std::unordered_set<std::string> header_set(header.begin(), header.end());
    if (header_set.size() != header.size()) {
        throw std::invalid_argument("'" + path + "': duplicate column names in header");
    }

    int label_idx = -1, weight_idx = -1;
    for (std::size_t j = 0; j < header.size(); ++j) {
        if (header[j] == label_column) label_idx = static_cast<int>(j);
        if (weight_column && header[j] == *weight_column) weight_idx = static_cast<int>(j);
    }
    if (label_idx < 0) {
        throw std::invalid_argument("label column '" + label_column +
                                    "' not found in header of '" + path + "'");
    }
    if (weight_column && weight_idx < 0) {
        throw std::invalid_argument("weight column '" + *weight_column +
                                    "' not found in header of '" + path + "'");
    }

    std::vector<std::vector<std::string>> cells;
    std::int64_t line_no = 1;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.empty() || line == "\r") continue;
        std::vector<std::string> fields = split_line(line);
        if (fields.size() != header.size()) {
            throw std::invalid_argument("'" + path + "': row " + std::to_string(line_no) +
                                        " has " + std::to_string(fields.size()) +
                                        " fields, expected " + std::to_string(header.size()));
        }
        cells.push_back(std::move(fields));
    }
    const std::int64_t n = static_cast<std::int64_t>(cells.size());
    if (n == 0) throw std::invalid_argument("'" + path + "': no data rows");

    const int total_cols = static_cast<int>(header.size());
    std::vector<int> feature_cols;
    for (int j = 0; j < total_cols; ++j) {
        if (j != label_idx && j != weight_idx) feature_cols.push_back(j);
    }
    if (feature_cols.empty()) {
        throw std::invalid_argument("'" + path + "': no feature columns besides label/weight");
    }

    // Per column: numeric when every cell parses; otherwise ordinal-encoded
    // by first appearance. A numeric cell that parses to inf/nan is an error.
    Dataset ds;
    ds.rows = n;
    ds.cols = static_cast<std::int64_t>(feature_cols.size());
    ds.features.resize(n * ds.cols);
    for (int fj = 0; fj < static_cast<int>(feature_cols.size()); ++fj) {
        const int j = feature_cols[fj];
        ds.feature_names.push_back(header[j]);
        bool numeric = true;
        for (std::int64_t i = 0; i < n && numeric; ++i) {
            double v;
            numeric = parse_double(cells[i][j], v);
        }
        if (numeric) {
            for (std::int64_t i = 0; i < n; ++i) {
                double v;
                parse_double(cells[i][j], v);
                if (!std::isfinite(v)) {
                    throw std::invalid_argument("'" + path + "': non-finite value in column '" +
                                                header[j] + "' at data row " +
                                                std::to_string(i + 1));
                }
                ds.features[i * ds.cols + fj] = v;
            }
        } else {
            std::unordered_map<std::string, double> codes;
            for (std::int64_t i = 0; i < n; ++i) {
                auto [it, inserted] =
                    codes.try_emplace(cells[i][j], static_cast<double>(codes.size()));
                ds.features[i * ds.cols + fj] = it->second;
            }
        }
    }

    ds.labels.resize(n);
    for (std::int64_t i = 0; i < n; ++i) {
        double v;
        if (!parse_double(cells[i][label_idx], v) || !std::isfinite(v)) {
            throw std::invalid_argument("'" + path + "': label column '" + label_column +
                                        "' has a non-numeric or non-finite value at data row " +
                                        std::to_string(i + 1));
        }
        ds.labels[i] = v;
    }

    ds.weights.assign(n, 1.0);
    if (weight_idx >= 0) {
        for (std::int64_t i = 0; i < n; ++i) {
            double v;
            if (!parse_double(cells[i][weight_idx], v) || !std::isfinite(v) || v < 0.0) {
                throw std::invalid_argument("'" + path + "': weight column '" + *weight_column +
                                            "' needs non-negative numbers, bad value at data row " +
                                            std::to_string(i + 1));
            }
            ds.weights[i] = v;
        }
    }

    ds.ids.resize(n);
    for (std::int64_t i = 0; i < n; ++i) ds.ids[i] = i;
    ds.validate();
    return ds;
}

void save_csv(const Dataset& ds, const std::string& path, const std::string& label_column,
              const std::optional<std::string>& weight_column) {
    std::ostringstream out;
    for (std::int64_t j = 0; j < ds.cols; ++j) {
        out << ds.feature_names[j] << ',';
    }
    out << label_column;
    if (weight_column) out << ',' << *weight_column;
    out << '\n';
    for (std::int64_t i = 0; i < ds.rows; ++i) {
        for (std::int64_t j = 0; j < ds.cols; ++j) {
            out << format_double(ds.feature(i, j)) << ',';
        }
        out << format_double(ds.labels[i]);
        if (weight_column) out << ',' << format_double(ds.weights[i]);
        out << '\n';
    }
    write_text_atomic(path, out.str());
}

// ---------------------------------------------------------------------------
// Perturbations and splits
// ---------------------------------------------------------------------------

FlipResult flip_labels(const Dataset& ds, double fraction, std::uint64_t seed) {
    if (!(fraction >= 0.0 && fraction <= 1.0)) {
        throw std::invalid_argument("flip_labels: fraction must lie in [0,1]");
    }
    if (!ds.labels_binary()) {
        throw std::invalid_argument("flip_labels: labels must be binary {0,1}");
    }
    FlipResult result{ds, std::vector<std::uint8_t>(ds.rows, 0)};
    const std::int64_t k = std::llround(fraction * static_cast<double>(ds.rows));
    std::mt19937_64 rng(seed);
    for (std::int64_t i : sample_without_replacement(rng, ds.rows, k)) {
        result.data.labels[i] = 1.0 - result.data.labels[i];
        result.mask[i] = 1;
    }
    return result;
}

Dataset filter_bias(const Dataset& ds, const BiasFilter& predicate, double keep_fraction,
                    std::uint64_t seed) {
    if (!(keep_fraction >= 0.0 && keep_fraction <= 1.0)) {
        throw std::invalid_argument("filter_bias: keep_fraction must lie in [0,1]");
    }
    const int col = feature_index(ds, predicate.column);
    std::mt19937_64 rng(seed);
    Dataset out;
    out.feature_names = ds.feature_names;
    out.cols = ds.cols;
    for (std::int64_t i = 0; i < ds.rows; ++i) {
        const double v = ds.feature(i, col);
        const bool matches =
            v >= predicate.lo && v < predicate.hi && ds.labels[i] == predicate.label;
        // Draw for every matching row so the retained set only depends on
        // (inputs, seed), not on earlier removals.
        const bool keep = !matches || bernoulli(rng, keep_fraction);
        if (!keep) continue;
        const auto row = ds.row(i);
        out.features.insert(out.features.end(), row.begin(), row.end());
        out.labels.push_back(ds.labels[i]);
        out.weights.push_back(ds.weights[i]);
        out.ids.push_back(ds.ids[i]);
    }
    out.rows = static_cast<std::int64_t>(out.labels.size());
    if (out.rows == 0) throw std::invalid_argument("filter_bias: no rows left");
    out.validate();
    return out;
}

SplitResult train_test_split(const Dataset& ds, double test_fraction, std::uint64_t seed) {
    if (!(test_fraction >= 0.0 && test_fraction < 1.0)) {
        throw std::invalid_argument("train_test_split: test_fraction must lie in [0,1)");
    }
    const std::int64_t n_test = std::llround(test_fraction * static_cast<double>(ds.rows));
    std::vector<std::int64_t> order(ds.rows);
    for (std::int64_t i = 0; i < ds.rows; ++i) order[i] = i;
    std::mt19937_64 rng(seed);
    shuffle_values(rng, order);

    auto take = [&](std::int64_t begin, std::int64_t end) {
        Dataset part;
        part.feature_names = ds.feature_names;
        part.cols = ds.cols;
        for (std::int64_t p = begin; p < end; ++p) {
            const std::int64_t i = order[p];
            const auto row = ds.row(i);
            part.features.insert(part.features.end(), row.begin(), row.end());
            part.labels.push_back(ds.labels[i]);
            part.weights.push_back(ds.weights[i]);
            part.ids.push_back(ds.ids[i]);
        }
        part.rows = end - begin;
        return part;
    };
    SplitResult result{take(n_test, ds.rows), take(0, n_test)};
    result.train.validate();
    if (result.test.rows > 0) result.test.validate();
    return result;
}

Dataset drop_row(const Dataset& ds, std::int64_t position) {
    if (position < 0 || position >= ds.rows) {
        throw std::invalid_argument("drop_row: position out of range");
    }
    if (ds.rows == 1) throw std::invalid_argument("drop_row: nothing would remain");
    Dataset out;
    out.feature_names = ds.feature_names;
    out.cols = ds.cols;
    out.rows = ds.rows - 1;
    out.features.reserve(out.rows * out.cols);
    for (std::int64_t i = 0; i < ds.rows; ++i) {
        if (i == position) continue;
        const auto row = ds.row(i);
        out.features.insert(out.features.end(), row.begin(), row.end());
        out.labels.push_back(ds.labels[i]);
        out.weights.push_back(ds.weights[i]);
        out.ids.push_back(ds.ids[i]);
    }
    return out;
}

Dataset with_weight(const Dataset& ds, std::int64_t position, double new_weight) {
    if (position < 0 || position >= ds.rows) {
        throw std::invalid_argument("with_weight: position out of range");
    }
    if (!(new_weight >= 0.0) || !std::isfinite(new_weight)) {
        throw std::invalid_argument("with_weight: weight must be finite and >= 0");
    }
    Dataset out = ds;
    out.weights[position] = new_weight;
    return out;
}

void write_mask_csv(const std::string& path, const std::string& header,
                    std::span<const std::uint8_t> mask) {
    std::ostringstream out;
    out << header << '\n';
    for (std::uint8_t m : mask) out << static_cast<int>(m) << '\n';
    write_text_atomic(path, out.str());
}

void write_ids_csv(const std::string& path, const std::string& header,
                   std::span<const std::int64_t> ids) {
    std::ostringstream out;
    out << header << '\n';
    for (std::int64_t id : ids) out << id << '\n';
    write_text_atomic(path, out.str());
}

}  // namespace treeinf
