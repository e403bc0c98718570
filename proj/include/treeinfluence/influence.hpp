#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "treeinfluence/gbdt.hpp"

namespace treeinf {

enum class UpdateSetKind { SinglePoint, AllPoints, TopKLeaves, SampledTopKLeaves };

// Chooses which training points' accumulated prediction changes are
// propagated at each boosting step. SinglePoint uses the empty set,
// AllPoints every index; TopKLeaves keeps the members of the k leaves with
// the largest accumulated absolute change, SampledTopKLeaves estimates the
// leaf scores from m uniform draws (with replacement).
struct UpdateSetStrategy {
    UpdateSetKind kind = UpdateSetKind::AllPoints;
    int top_k = 0;
    int sample_size = 0;
    std::uint64_t seed = 0;

    static UpdateSetStrategy single_point();
    static UpdateSetStrategy all_points();
    static UpdateSetStrategy top_k_leaves(int k);
    static UpdateSetStrategy sampled_top_k_leaves(int k, int m, std::uint64_t seed);

    // "single" | "all" | "topk:K" | "sampledtopk:K:M"
    static UpdateSetStrategy parse(const std::string& text, std::uint64_t seed = 0);
    std::string label() const;

    void validate() const;  // top_k >= 0, sample_size >= 1
};

// Per-leaf selection for one boosting step; `accumulated` is the length-n
// vector scored (refit deltas or Jacobian entries). Sampled scoring seeds
// its generator with (strategy.seed, step_index), so selections are
// reproducible per step.
std::vector<std::uint8_t> select_update_leaves(const TrainingTrace& trace,
                                               const UpdateSetStrategy& strategy,
                                               int step_index,
                                               std::span<const double> accumulated);

// Update set as sorted training indices (the leaves' members flattened).
std::vector<std::int64_t> select_update_set(const TrainingTrace& trace,
                                            const UpdateSetStrategy& strategy,
                                            int step_index,
                                            std::span<const double> accumulated);

// Leaf values refit with training point `removed_index` excluded from every
// leaf, tree structures untouched.
struct RefitResult {
    std::int64_t removed_index = -1;
    int num_trees = 0;
    int leaf_count = 0;
    std::vector<double> leaf_values;  // num_trees x leaf_count, row-major
    std::vector<double> deltas;       // final accumulated prediction change per row
    bool removed_leaf_emptied = false;

    double leaf_value_at(int t, int l) const { return leaf_values[t * leaf_count + l]; }
};

// Derivatives of every leaf value and of the final training predictions
// with respect to one training point's weight.
struct InfluenceVector {
    std::int64_t perturbed_index = -1;
    int num_trees = 0;
    int leaf_count = 0;
    std::vector<double> leaf_derivatives;  // num_trees x leaf_count, row-major
    std::vector<double> jacobian;          // d A_j^T / d w_i0 per row j

    double leaf_derivative_at(int t, int l) const {
        return leaf_derivatives[t * leaf_count + l];
    }
};

// Exact fixed-structure leave-one-out leaf refit: at every step the leaf
// statistics are rebuilt from fresh derivatives at the shifted predictions.
RefitResult leaf_refit(const Ensemble& ens, const TrainingTrace& trace, std::int64_t i0);

// Approximate refit: derivative recomputation is restricted to the leaves
// chosen by `strategy`; everywhere else cached step sums are corrected only
// for the removed point. AllPoints reproduces leaf_refit bit for bit.
RefitResult fast_leaf_refit(const Ensemble& ens, const TrainingTrace& trace,
                            std::int64_t i0, const UpdateSetStrategy& strategy);

// One leaf value recomputed from cached sums plus derivative corrections for
// an explicit update set (members of leaf l at step t). `deltas` holds the
// accumulated prediction changes through step t-1.
double leaf_recalc(const Ensemble& ens, const TrainingTrace& trace, int t, int l,
                   std::int64_t i0, std::span<const std::int64_t> update_members,
                   std::span<const double> deltas);

// Exact leaf-value derivatives, iterating the per-step recursion of the
// training-prediction Jacobian.
InfluenceVector leaf_influence(const Ensemble& ens, const TrainingTrace& trace,
                               std::int64_t i0);

// Approximate variant: the Jacobian summation term runs only over members
// of the selected leaves (scored by |jacobian|); the direct term for the
// perturbed point is always exact. AllPoints reproduces leaf_influence.
InfluenceVector fast_leaf_influence(const Ensemble& ens, const TrainingTrace& trace,
                                    std::int64_t i0, const UpdateSetStrategy& strategy);

// Prediction of the refit model: original bias plus refit leaf values along
// the original structures.
double refit_prediction(const Ensemble& ens, const RefitResult& refit,
                        std::span<const double> x);

// Loss change on (x, y) caused by the removal: positive means removing the
// training point helps this test point.
double influence_loo(const RefitResult& refit, const Ensemble& ens,
                     std::span<const double> x, double y, LossKind loss);

// dF(x)/dw_i0: x routed through the derivative-leaf ensemble.
double prediction_weight_derivative(const InfluenceVector& iv, const Ensemble& ens,
                                    std::span<const double> x);

// dL(y, F(x))/dw_i0 by the chain rule.
double influence_grad(const InfluenceVector& iv, const Ensemble& ens,
                      std::span<const double> x, double y, LossKind loss);

enum class InfluenceMethod { LeafRefit, FastLeafRefit, LeafInfluence, FastLeafInfluence };

InfluenceMethod method_from_string(const std::string& name);
const char* to_string(InfluenceMethod method) noexcept;
bool is_refit_method(InfluenceMethod method) noexcept;

struct BatchRow {
    std::int64_t train_id = -1;
    double influence = 0.0;  // mean over the test rows
    double seconds = 0.0;
};

// Mean influence of each requested training row on the test set. Rows are
// independent, so `jobs` threads may process them concurrently; results are
// sorted by train id and identical for any job count.
std::vector<BatchRow> influence_batch(const Ensemble& ens, const TrainingTrace& trace,
                                      const Dataset& test, InfluenceMethod method,
                                      const UpdateSetStrategy& strategy,
                                      std::span<const std::int64_t> positions, int jobs);

void write_batch_csv(const std::string& path, InfluenceMethod method,
                     const UpdateSetStrategy& strategy, std::span<const BatchRow> rows);

}  // namespace treeinf
