#include "treeinfluence/oracle.hpp"

#include <cmath>
#include <optional>
#include <stdexcept>

namespace treeinf {

RetrainMode retrain_mode_from_string(const std::string& name) {
    if (name == "full") return RetrainMode::Full;
    if (name == "fixed") return RetrainMode::FixedStructure;
    throw std::invalid_argument("unknown retrain mode '" + name + "' (expected full|fixed)");
}

namespace {

void check_reference(const Dataset& ds, const Ensemble& reference) {
    if (reference.trees.empty()) throw std::invalid_argument("oracle: reference has no trees");
    if (reference.n_features != ds.cols) {
        throw std::invalid_argument("oracle: reference feature dimension mismatch");
    }
}

// Replays the reference structures on ds, refitting only leaf values.
// Derivatives are recomputed at the replay's own intermediate predictions
// each step, so this shares no arithmetic with the trace-based refits.
// The reference initial prediction is kept.
Ensemble fixed_structure_refit(const Dataset& ds, const TrainParams& params,
                               const Ensemble& reference, std::int64_t i0,
                               std::optional<double> new_weight) {
    check_reference(ds, reference);
    const std::int64_t n = ds.rows;
    const bool exclude = !new_weight.has_value();
    const bool newton = params.formula == LeafFormula::Newton;

    std::vector<double> weights = ds.weights;
    if (new_weight) weights[i0] = *new_weight;

    Ensemble out = reference;
    std::vector<double> a(n, reference.bias);
    std::vector<std::int32_t> leaf_of(n);
    const int leaves = reference.trees.front().structure.leaf_count();
    std::vector<double> grad(leaves), denom(leaves);

    for (std::size_t t = 0; t < reference.trees.size(); ++t) {
        const TreeStructure& structure = reference.trees[t].structure;
        for (std::int64_t i = 0; i < n; ++i) {
            leaf_of[i] = structure.leaf_for(ds.row(i));
        }
        std::fill(grad.begin(), grad.end(), 0.0);
        std::fill(denom.begin(), denom.end(), 0.0);
        for (std::int64_t i = 0; i < n; ++i) {
            if (exclude && i == i0) continue;
            const LossValues lv = loss_derivatives(params.loss, ds.labels[i], a[i]);
            grad[leaf_of[i]] += weights[i] * lv.grad;
            denom[leaf_of[i]] += newton ? weights[i] * lv.hess : weights[i];
        }
        std::vector<double>& values = out.trees[t].leaf_values;
        for (int l = 0; l < leaves; ++l) {
            values[l] = leaf_value(grad[l], denom[l], params.l2_reg, params.learning_rate);
        }
        for (std::int64_t i = 0; i < n; ++i) {
            a[i] += values[leaf_of[i]];
        }
    }
    return out;
}

}  // namespace

Ensemble retrain_without(const Dataset& ds, const TrainParams& params, std::int64_t i0,
                         RetrainMode mode, const Ensemble& reference) {
    if (i0 < 0 || i0 >= ds.rows) throw std::invalid_argument("retrain_without: index out of range");
    if (ds.rows < 2) throw std::invalid_argument("retrain_without: nothing would remain");
    if (mode == RetrainMode::FixedStructure) {
        return fixed_structure_refit(ds, params, reference, i0, std::nullopt);
    }
    // Full retraining keeps the reference initial prediction so that
    // structure differences reflect the data change only.
    TrainParams reduced_params = params;
    reduced_params.bias_override = reference.bias;
    return fit(drop_row(ds, i0), reduced_params).ensemble;
}

Ensemble perturb_weight(const Dataset& ds, const TrainParams& params, std::int64_t i0,
                        double new_weight, const Ensemble& reference) {
    if (i0 < 0 || i0 >= ds.rows) throw std::invalid_argument("perturb_weight: index out of range");
    if (!(new_weight >= 0.0) || !std::isfinite(new_weight)) {
        throw std::invalid_argument("perturb_weight: weight must be finite and >= 0");
    }
    return fixed_structure_refit(ds, params, reference, i0, new_weight);
}

bool structure_changed(const Ensemble& a, const Ensemble& b) {
    if (a.trees.size() != b.trees.size()) {
        throw std::invalid_argument("structure_changed: tree counts differ");
    }
    for (std::size_t t = 0; t < a.trees.size(); ++t) {
        const TreeStructure& sa = a.trees[t].structure;
        const TreeStructure& sb = b.trees[t].structure;
        if (sa.depth != sb.depth) {
            throw std::invalid_argument("structure_changed: depths differ");
        }
        for (std::size_t node = 0; node < sa.nodes.size(); ++node) {
            if (sa.nodes[node].feature != sb.nodes[node].feature ||
                sa.nodes[node].threshold != sb.nodes[node].threshold) {
                return true;
            }
        }
    }
    return false;
}

}  // namespace treeinf
