#include "treeinfluence/gbdt.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

namespace treeinf {

LeafFormula formula_from_string(const std::string& name) {
    if (name == "gradient") return LeafFormula::Gradient;
    if (name == "newton") return LeafFormula::Newton;
    throw std::invalid_argument("unknown leaf formula '" + name +
                                "' (expected gradient|newton)");
}

const char* to_string(LeafFormula formula) noexcept {
    return formula == LeafFormula::Gradient ? "gradient" : "newton";
}

void TrainParams::validate() const {
    if (trees < 1) throw std::invalid_argument("params: trees must be >= 1");
    if (depth < 0 || depth > 20) throw std::invalid_argument("params: depth must be in [0,20]");
    if (!(learning_rate > 0.0) || !std::isfinite(learning_rate)) {
        throw std::invalid_argument("params: learning_rate must be > 0");
    }
    if (!(l2_reg >= 0.0) || !std::isfinite(l2_reg)) {
        throw std::invalid_argument("params: l2_reg must be >= 0");
    }
    if (bias_override && !std::isfinite(*bias_override)) {
        throw std::invalid_argument("params: bias_override must be finite");
    }
}

int TreeStructure::leaf_for(std::span<const double> x) const {
    int node = 0;
    for (int level = 0; level < depth; ++level) {
        const SplitNode& s = nodes[node];
        if (s.feature < 0 || static_cast<std::size_t>(s.feature) >= x.size()) {
            throw std::invalid_argument("path: split feature index out of range");
        }
        node = 2 * node + (x[s.feature] < s.threshold ? 1 : 2);
    }
    return node - static_cast<int>(nodes.size());
}

double Ensemble::predict(std::span<const double> x) const {
    if (static_cast<std::int64_t>(x.size()) != n_features) {
        throw std::invalid_argument("predict: expected " + std::to_string(n_features) +
                                    " features, got " + std::to_string(x.size()));
    }
    double score = bias;
    for (const Tree& tree : trees) {
        score += tree.leaf_values[tree.structure.leaf_for(x)];
    }
    return score;
}

double Ensemble::predict_proba(std::span<const double> x) const { return sigmoid(predict(x)); }

const TrainingTrace& TrainedModel::trace_or_throw() const {
    if (!trace) throw std::invalid_argument("model has no training trace");
    return *trace;
}

void TrainingTrace::rebuild_members() {
    for (TraceStep& step : steps) {
        const int leaves = static_cast<int>(step.grad_sum.size());
        step.members.assign(leaves, {});
        for (std::int32_t i = 0; i < static_cast<std::int32_t>(step.leaf.size()); ++i) {
            step.members[step.leaf[i]].push_back(i);
        }
    }
}

double leaf_value(double grad_sum, double denom_sum, double l2_reg, double learning_rate) {
    const double denom = denom_sum + l2_reg;
    if (denom <= kDenominatorEpsilon) return 0.0;
    return -learning_rate * grad_sum / denom;
}

double initial_bias(const Dataset& ds, const TrainParams& params) {
    if (params.bias_override) return *params.bias_override;
    double sum_w = 0.0, sum_wy = 0.0;
    for (std::int64_t i = 0; i < ds.rows; ++i) {
        sum_w += ds.weights[i];
        sum_wy += ds.weights[i] * ds.labels[i];
    }
    if (sum_w <= 0.0) return 0.0;
    const double mean = sum_wy / sum_w;
    if (params.loss == LossKind::Squared) return mean;
    if (mean <= 0.0) return -10.0;
    if (mean >= 1.0) return 10.0;
    return std::clamp(std::log(mean / (1.0 - mean)), -10.0, 10.0);
}

// ---------------------------------------------------------------------------
// Structure search
// ---------------------------------------------------------------------------

namespace {

double gain_term(double g, double denom, double l2) {
    const double d = denom + l2;
    return d > kDenominatorEpsilon ? g * g / d : 0.0;
}

// Exact greedy split for one node. Candidates are midpoints between distinct
// consecutive sorted values of each feature restricted to the node's
// members; ties on gain break to the lowest feature, then lowest threshold
// (features and thresholds are scanned in ascending order, so the first
// strictly better candidate wins). Returns a pass-through node when nothing
// separates the members.
SplitNode best_split(const Dataset& ds, std::span<const double> g, std::span<const double> h,
                     const TrainParams& params, const std::vector<std::int64_t>& members) {
    const SplitNode pass_through{0, kPassThroughThreshold};
    const std::size_t m = members.size();
    if (m < 2) return pass_through;

    const bool newton = params.formula == LeafFormula::Newton;
    double total_g = 0.0, total_d = 0.0;
    for (std::int64_t i : members) {
        const double w = ds.weights[i];
        total_g += w * g[i];
        total_d += newton ? w * h[i] : w;
    }
    const double parent_term = gain_term(total_g, total_d, params.l2_reg);

    SplitNode best = pass_through;
    double best_gain = -std::numeric_limits<double>::infinity();
    bool found = false;

    std::vector<std::pair<double, std::int64_t>> order(m);
    for (int f = 0; f < static_cast<int>(ds.cols); ++f) {
        for (std::size_t p = 0; p < m; ++p) {
            order[p] = {ds.feature(members[p], f), members[p]};
        }
        std::sort(order.begin(), order.end());
        if (!(order.front().first < order.back().first)) continue;  // constant feature

        double left_g = 0.0, left_d = 0.0;
        for (std::size_t p = 0; p + 1 < m; ++p) {
            const std::int64_t i = order[p].second;
            const double w = ds.weights[i];
            left_g += w * g[i];
            left_d += newton ? w * h[i] : w;
            const double v1 = order[p].first;
            const double v2 = order[p + 1].first;
            if (!(v1 < v2)) continue;
            const double threshold = v1 + (v2 - v1) / 2.0;
            // Must actually separate: v1 goes left, v2 right.
            if (!(v1 < threshold) || !(threshold <= v2)) continue;
            const double gain = gain_term(left_g, left_d, params.l2_reg) +
                                gain_term(total_g - left_g, total_d - left_d, params.l2_reg) -
                                parent_term;
            if (gain > best_gain) {
                best_gain = gain;
                best = SplitNode{f, threshold};
                found = true;
            }
        }
    }
    return found ? best : pass_through;
}

TreeStructure grow_tree(const Dataset& ds, std::span<const double> g,
                        std::span<const double> h, const TrainParams& params) {
    TreeStructure ts;
    ts.depth = params.depth;
    ts.nodes.assign((1 << params.depth) - 1, SplitNode{});
    if (params.depth == 0) return ts;

    const std::int64_t n = ds.rows;
    std::vector<std::int32_t> node_of(n, 0);
    std::vector<std::vector<std::int64_t>> buckets;
    for (int level = 0; level < params.depth; ++level) {
        const int first = (1 << level) - 1;
        const int count = 1 << level;
        buckets.assign(count, {});
        for (std::int64_t i = 0; i < n; ++i) {
            buckets[node_of[i] - first].push_back(i);
        }
        for (int b = 0; b < count; ++b) {
            ts.nodes[first + b] = best_split(ds, g, h, params, buckets[b]);
        }
        for (std::int64_t i = 0; i < n; ++i) {
            const SplitNode& s = ts.nodes[node_of[i]];
            node_of[i] =
                2 * node_of[i] + (ds.feature(i, s.feature) < s.threshold ? 1 : 2);
        }
    }
    return ts;
}

}  // namespace

TrainedModel fit(const Dataset& ds, const TrainParams& params) {
    params.validate();
    ds.validate();
    if (params.loss == LossKind::Logloss && !ds.labels_binary()) {
        throw std::invalid_argument("fit: logloss requires binary labels in {0,1}");
    }

    const std::int64_t n = ds.rows;
    const int leaves = 1 << params.depth;

    Ensemble ens;
    ens.params = params;
    ens.bias = initial_bias(ds, params);
    ens.n_features = ds.cols;
    ens.feature_names = ds.feature_names;
    ens.trees.reserve(params.trees);

    TrainingTrace trace;
    trace.data = ds;
    trace.steps.reserve(params.trees);

    std::vector<double> a(n, ens.bias);
    std::vector<double> g(n), h(n), k(n);

    for (int t = 0; t < params.trees; ++t) {
        for (std::int64_t i = 0; i < n; ++i) {
            const LossValues lv = loss_derivatives(params.loss, ds.labels[i], a[i]);
            g[i] = lv.grad;
            h[i] = lv.hess;
            k[i] = lv.third;
        }

        Tree tree;
        tree.structure = grow_tree(ds, g, h, params);

        TraceStep step;
        step.a_prev = a;
        step.g = g;
        step.h = h;
        step.k = k;
        step.leaf.resize(n);
        step.members.assign(leaves, {});
        for (std::int64_t i = 0; i < n; ++i) {
            const int l = tree.structure.leaf_for(ds.row(i));
            step.leaf[i] = l;
            step.members[l].push_back(static_cast<std::int32_t>(i));
        }

        step.grad_sum.assign(leaves, 0.0);
        step.weight_sum.assign(leaves, 0.0);
        step.hess_sum.assign(leaves, 0.0);
        for (std::int64_t i = 0; i < n; ++i) {
            const int l = step.leaf[i];
            const double w = ds.weights[i];
            step.grad_sum[l] += w * g[i];
            step.weight_sum[l] += w;
            step.hess_sum[l] += w * h[i];
        }

        tree.leaf_values.resize(leaves);
        for (int l = 0; l < leaves; ++l) {
            tree.leaf_values[l] = leaf_value(step.grad_sum[l],
                                             step.denom_sum(params.formula, l),
                                             params.l2_reg, params.learning_rate);
        }
        for (std::int64_t i = 0; i < n; ++i) {
            a[i] += tree.leaf_values[step.leaf[i]];
        }

        trace.steps.push_back(std::move(step));
        ens.trees.push_back(std::move(tree));
    }

    TrainedModel model;
    model.ensemble = std::move(ens);
    model.trace = std::move(trace);
    return model;
}

}  // namespace treeinf
