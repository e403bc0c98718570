#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "treeinfluence/dataset.hpp"
#include "treeinfluence/loss.hpp"

namespace treeinf {

// Leaf fitting rule: Gradient divides the accumulated gradient by the
// accumulated weight, Newton by the accumulated weighted hessian.
enum class LeafFormula { Gradient, Newton };

LeafFormula formula_from_string(const std::string& name);
const char* to_string(LeafFormula formula) noexcept;

struct SplitNode {
    std::int32_t feature = 0;
    double threshold = 0.0;
};

// Pass-through nodes (degenerate split search) route every sample left.
inline constexpr double kPassThroughThreshold = 1.7976931348623157e308;  // DBL_MAX

// Full binary tree of fixed depth. Internal nodes are stored in
// breadth-first order (children of node i are 2i+1 and 2i+2);
// x[feature] < threshold descends left.
struct TreeStructure {
    int depth = 0;
    std::vector<SplitNode> nodes;  // size 2^depth - 1

    int leaf_count() const { return 1 << depth; }
    // Deterministic descent; result in [0, 2^depth).
    int leaf_for(std::span<const double> x) const;
};

struct Tree {
    TreeStructure structure;
    std::vector<double> leaf_values;  // learning rate already folded in
};

struct TrainParams {
    int trees = 100;
    int depth = 6;
    double learning_rate = 0.2;
    double l2_reg = 0.0;
    LossKind loss = LossKind::Logloss;
    LeafFormula formula = LeafFormula::Newton;
    std::uint64_t seed = 0;
    // When set, used verbatim as the initial prediction instead of the
    // closed-form fit (weighted mean for squared loss, clamped logit of
    // the weighted positive rate for logloss).
    std::optional<double> bias_override;
    // Column names recorded so test CSVs can be aligned later.
    std::string label_column = "label";
    std::optional<std::string> weight_column;

    void validate() const;
};

struct Ensemble {
    TrainParams params;
    double bias = 0.0;
    std::int64_t n_features = 0;
    std::vector<std::string> feature_names;
    std::vector<Tree> trees;

    double predict(std::span<const double> x) const;        // raw score
    double predict_proba(std::span<const double> x) const;  // sigmoid(raw)
};

// Everything needed to replay a boosting step without touching feature data.
struct TraceStep {
    std::vector<std::int32_t> leaf;  // leaf index per training row
    std::vector<double> a_prev;      // predictions entering this step
    std::vector<double> g, h, k;     // loss derivatives at a_prev
    std::vector<double> grad_sum;    // per leaf: sum of w*g
    std::vector<double> weight_sum;  // per leaf: sum of w
    std::vector<double> hess_sum;    // per leaf: sum of w*h
    // Derived from `leaf`; rebuilt after deserialization, never stored.
    std::vector<std::vector<std::int32_t>> members;

    double denom_sum(LeafFormula formula, int l) const {
        return formula == LeafFormula::Newton ? hess_sum[l] : weight_sum[l];
    }
};

struct TrainingTrace {
    Dataset data;
    std::vector<TraceStep> steps;

    void rebuild_members();
};

struct TrainedModel {
    Ensemble ensemble;
    std::optional<TrainingTrace> trace;

    const TrainingTrace& trace_or_throw() const;
};

inline constexpr double kDenominatorEpsilon = 1e-12;

// -learning_rate * grad_sum / (denom_sum + l2); 0 when the denominator is
// degenerate (empty or saturated leaf).
double leaf_value(double grad_sum, double denom_sum, double l2_reg, double learning_rate);

// Deterministic level-wise greedy training. Structure search maximizes the
// second-order gain over all (feature, midpoint threshold) candidates; ties
// break to the lowest feature index, then the lowest threshold. Nodes with
// no usable split (constant features) become pass-through nodes.
TrainedModel fit(const Dataset& ds, const TrainParams& params);

// Closed-form initial prediction (or the override).
double initial_bias(const Dataset& ds, const TrainParams& params);

}  // namespace treeinf
