#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace treeinf {

// In-memory dataset. Immutable by convention after construction; all
// perturbation utilities return fresh copies, so instances can be shared
// read-only across threads.
struct Dataset {
    std::vector<std::string> feature_names;
    std::vector<double> features;  // row-major, rows x cols
    std::vector<double> labels;
    std::vector<double> weights;
    std::vector<std::int64_t> ids;  // stable row identifiers, unique
    std::int64_t rows = 0;
    std::int64_t cols = 0;

    std::span<const double> row(std::int64_t i) const {
        return {features.data() + i * cols, static_cast<std::size_t>(cols)};
    }
    double feature(std::int64_t i, std::int64_t j) const { return features[i * cols + j]; }

    bool labels_binary() const;
    std::int64_t position_of_id(std::int64_t id) const;  // -1 when absent

    // Enforces: n >= 1, finite features, non-negative weights, unique ids.
    void validate() const;
};

// Builds a dataset with ids 0..n-1 and unit weights unless given; validates.
Dataset make_dataset(std::vector<std::string> feature_names,
                     std::vector<double> features,
                     std::vector<double> labels,
                     std::vector<double> weights = {});

// Strict CSV: comma-separated, mandatory header, '.' decimal point. The
// label column (and optional weight column) are removed from the feature
// matrix; columns that do not parse as numbers are ordinal-encoded by
// first appearance. Errors name the offending row and column.
Dataset load_csv(const std::string& path, const std::string& label_column,
                 const std::optional<std::string>& weight_column = std::nullopt);

void save_csv(const Dataset& ds, const std::string& path,
              const std::string& label_column = "label",
              const std::optional<std::string>& weight_column = std::nullopt);

struct FlipResult {
    Dataset data;
    std::vector<std::uint8_t> mask;  // 1 for rows whose label was flipped
};

// Flips round(fraction*n) distinct uniformly chosen binary labels.
FlipResult flip_labels(const Dataset& ds, double fraction, std::uint64_t seed);

// Row matches when column value is in [lo, hi) and the label equals `label`.
struct BiasFilter {
    std::string column;
    double lo = 0.0;
    double hi = 0.0;
    double label = 1.0;
};

// Matching rows are kept independently with probability keep_fraction;
// non-matching rows are always kept. Order, ids, features and weights of
// retained rows are untouched.
Dataset filter_bias(const Dataset& ds, const BiasFilter& predicate,
                    double keep_fraction, std::uint64_t seed);

struct SplitResult {
    Dataset train;
    Dataset test;
};

// Deterministic shuffle split; row order within each part follows the
// shuffled order.
SplitResult train_test_split(const Dataset& ds, double test_fraction, std::uint64_t seed);

Dataset drop_row(const Dataset& ds, std::int64_t position);
Dataset with_weight(const Dataset& ds, std::int64_t position, double new_weight);

int feature_index(const Dataset& ds, const std::string& name);  // throws on unknown column

// One-column bookkeeping CSVs (flip masks, removed ids).
void write_mask_csv(const std::string& path, const std::string& header,
                    std::span<const std::uint8_t> mask);
void write_ids_csv(const std::string& path, const std::string& header,
                   std::span<const std::int64_t> ids);

}  // namespace treeinf
