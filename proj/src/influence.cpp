#include "treeinfluence/influence.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <functional>
#include <mutex>
#include <numeric>
#include <sstream>
#include <stdexcept>
#include <thread>

#include "treeinfluence/rng.hpp"
#include "treeinfluence/serialize.hpp"

namespace treeinf {

// ---------------------------------------------------------------------------
// Update-set strategies
// ---------------------------------------------------------------------------

UpdateSetStrategy UpdateSetStrategy::single_point() {
    return {UpdateSetKind::SinglePoint, 0, 0, 0};
}
UpdateSetStrategy UpdateSetStrategy::all_points() {
    return {UpdateSetKind::AllPoints, 0, 0, 0};
}
UpdateSetStrategy UpdateSetStrategy::top_k_leaves(int k) {
    return {UpdateSetKind::TopKLeaves, k, 0, 0};
}
UpdateSetStrategy UpdateSetStrategy::sampled_top_k_leaves(int k, int m, std::uint64_t seed) {
    return {UpdateSetKind::SampledTopKLeaves, k, m, seed};
}

UpdateSetStrategy UpdateSetStrategy::parse(const std::string& text, std::uint64_t seed) {
    if (text == "single") return single_point();
    if (text == "all") return all_points();
    auto parse_int = [&](const std::string& part) {
        std::size_t used = 0;
        int value = 0;
        try {
            value = std::stoi(part, &used);
        } catch (const std::exception&) {
            used = 0;
        }
        if (used != part.size()) {
            throw std::invalid_argument("bad strategy '" + text + "'");
        }
        return value;
    };
    if (text.rfind("topk:", 0) == 0) {
        UpdateSetStrategy s = top_k_leaves(parse_int(text.substr(5)));
        s.validate();
        return s;
    }
    if (text.rfind("sampledtopk:", 0) == 0) {
        const std::string rest = text.substr(12);
        const std::size_t colon = rest.find(':');
        if (colon == std::string::npos) {
            throw std::invalid_argument("bad strategy '" + text +
                                        "' (expected sampledtopk:K:M)");
        }
        UpdateSetStrategy s = sampled_top_k_leaves(parse_int(rest.substr(0, colon)),
                                                   parse_int(rest.substr(colon + 1)), seed);
        s.validate();
        return s;
    }
    throw std::invalid_argument("unknown strategy '" + text +
                                "' (expected single|all|topk:K|sampledtopk:K:M)");
}

std::string UpdateSetStrategy::label() const {
    switch (kind) {
        case UpdateSetKind::SinglePoint: return "single";
        case UpdateSetKind::AllPoints: return "all";
        case UpdateSetKind::TopKLeaves: return "topk:" + std::to_string(top_k);
        case UpdateSetKind::SampledTopKLeaves:
            return "sampledtopk:" + std::to_string(top_k) + ":" + std::to_string(sample_size);
    }
    return "?";
}

void UpdateSetStrategy::validate() const {
    if (kind == UpdateSetKind::TopKLeaves && top_k < 0) {
        throw std::invalid_argument("strategy: k must be >= 0");
    }
    if (kind == UpdateSetKind::SampledTopKLeaves) {
        if (top_k < 0) throw std::invalid_argument("strategy: k must be >= 0");
        if (sample_size < 1) throw std::invalid_argument("strategy: m must be >= 1");
    }
}

namespace {

void check_run_inputs(const Ensemble& ens, const TrainingTrace& trace, std::int64_t i0) {
    if (trace.steps.empty()) throw std::invalid_argument("trace is empty");
    if (trace.steps.size() != ens.trees.size()) {
        throw std::invalid_argument("ensemble and trace disagree on tree count");
    }
    const std::int64_t n = trace.data.rows;
    if (i0 < 0 || i0 >= n) {
        throw std::invalid_argument("training index " + std::to_string(i0) +
                                    " out of range [0," + std::to_string(n) + ")");
    }
    if (trace.steps.front().members.empty()) {
        throw std::invalid_argument("trace members not built; call rebuild_members()");
    }
}

// Top-k leaves by score, ties to the lower leaf index; marks their members'
// leaves as selected.
void mark_top_k(const std::vector<double>& scores, int k, std::vector<std::uint8_t>& selected) {
    const int leaves = static_cast<int>(scores.size());
    std::vector<int> order(leaves);
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(),
                     [&](int a, int b) { return scores[a] > scores[b]; });
    std::fill(selected.begin(), selected.end(), 0);
    for (int r = 0; r < std::min(k, leaves); ++r) selected[order[r]] = 1;
}

void select_leaves_for_step(const TraceStep& step, const UpdateSetStrategy& strategy,
                            int step_index, std::span<const double> accumulated,
                            std::vector<std::uint8_t>& selected) {
    const int leaves = static_cast<int>(step.grad_sum.size());
    selected.assign(leaves, 0);
    switch (strategy.kind) {
        case UpdateSetKind::SinglePoint:
            return;
        case UpdateSetKind::AllPoints:
            std::fill(selected.begin(), selected.end(), 1);
            return;
        case UpdateSetKind::TopKLeaves: {
            std::vector<double> scores(leaves, 0.0);
            for (std::size_t i = 0; i < step.leaf.size(); ++i) {
                scores[step.leaf[i]] += std::fabs(accumulated[i]);
            }
            mark_top_k(scores, strategy.top_k, selected);
            return;
        }
        case UpdateSetKind::SampledTopKLeaves: {
            const std::uint64_t n = step.leaf.size();
            // Per-step stream so isolated step selections are reproducible.
            std::mt19937_64 rng(strategy.seed +
                                0x9e3779b97f4a7c15ULL * static_cast<std::uint64_t>(step_index + 1));
            std::vector<double> scores(leaves, 0.0);
            for (int s = 0; s < strategy.sample_size; ++s) {
                const std::uint64_t i = uniform_below(rng, n);
                scores[step.leaf[i]] += std::fabs(accumulated[i]);
            }
            const double scale = static_cast<double>(n) / strategy.sample_size;
            for (double& s : scores) s *= scale;
            mark_top_k(scores, strategy.top_k, selected);
            return;
        }
    }
}

}  // namespace

std::vector<std::uint8_t> select_update_leaves(const TrainingTrace& trace,
                                               const UpdateSetStrategy& strategy,
                                               int step_index,
                                               std::span<const double> accumulated) {
    strategy.validate();
    if (step_index < 0 || step_index >= static_cast<int>(trace.steps.size())) {
        throw std::invalid_argument("step index out of range");
    }
    if (accumulated.size() != static_cast<std::size_t>(trace.data.rows)) {
        throw std::invalid_argument("accumulated vector has wrong length");
    }
    std::vector<std::uint8_t> selected;
    select_leaves_for_step(trace.steps[step_index], strategy, step_index, accumulated, selected);
    return selected;
}

std::vector<std::int64_t> select_update_set(const TrainingTrace& trace,
                                            const UpdateSetStrategy& strategy,
                                            int step_index,
                                            std::span<const double> accumulated) {
    const std::vector<std::uint8_t> selected =
        select_update_leaves(trace, strategy, step_index, accumulated);
    std::vector<std::int64_t> result;
    const TraceStep& step = trace.steps[step_index];
    for (std::size_t i = 0; i < step.leaf.size(); ++i) {
        if (selected[step.leaf[i]]) result.push_back(static_cast<std::int64_t>(i));
    }
    return result;
}

// ---------------------------------------------------------------------------
// Refit engine
// ---------------------------------------------------------------------------

namespace {

// Leaf statistics rebuilt from fresh derivatives at shifted predictions,
// with `skip` excluded. Members are accumulated in ascending index order.
struct LeafStats {
    double grad = 0.0;
    double denom = 0.0;
};

LeafStats scratch_leaf_stats(const Dataset& data, const TraceStep& step, int l,
                             std::int64_t skip, std::span<const double> deltas,
                             LossKind loss, LeafFormula formula) {
    LeafStats s;
    const bool newton = formula == LeafFormula::Newton;
    for (std::int32_t j : step.members[l]) {
        if (j == skip) continue;
        const double w = data.weights[j];
        const LossValues lv =
            loss_derivatives(loss, data.labels[j], step.a_prev[j] + deltas[j]);
        s.grad += w * lv.grad;
        s.denom += newton ? w * lv.hess : w;
    }
    return s;
}

RefitResult refit_engine(const Ensemble& ens, const TrainingTrace& trace, std::int64_t i0,
                         const UpdateSetStrategy& strategy) {
    strategy.validate();
    check_run_inputs(ens, trace, i0);

    const Dataset& data = trace.data;
    const TrainParams& params = ens.params;
    const std::int64_t n = data.rows;
    const int trees = static_cast<int>(ens.trees.size());
    const int leaves = ens.trees.front().structure.leaf_count();
    const bool newton = params.formula == LeafFormula::Newton;

    RefitResult out;
    out.removed_index = i0;
    out.num_trees = trees;
    out.leaf_count = leaves;
    out.leaf_values.resize(static_cast<std::size_t>(trees) * leaves);
    out.deltas.assign(n, 0.0);

    std::vector<double>& deltas = out.deltas;
    std::vector<std::uint8_t> selected;
    std::vector<double> leaf_delta(leaves);

    for (int t = 0; t < trees; ++t) {
        const TraceStep& step = trace.steps[t];
        const Tree& tree = ens.trees[t];
        select_leaves_for_step(step, strategy, t, deltas, selected);
        const std::int32_t removed_leaf = step.leaf[i0];

        for (int l = 0; l < leaves; ++l) {
            const bool holds_removed = l == removed_leaf;
            double grad, denom;
            if (selected[l]) {
                const LeafStats s =
                    scratch_leaf_stats(data, step, l, i0, deltas, params.loss, params.formula);
                grad = s.grad;
                denom = s.denom;
            } else {
                // Cached step sums; only the removed point is corrected.
                grad = step.grad_sum[l];
                denom = step.denom_sum(params.formula, l);
                if (holds_removed) {
                    const double w = data.weights[i0];
                    grad -= w * step.g[i0];
                    denom -= newton ? w * step.h[i0] : w;
                }
            }
            const double refit_value = leaf_value(grad, denom, params.l2_reg,
                                                  params.learning_rate);
            if (holds_removed && denom + params.l2_reg <= kDenominatorEpsilon) {
                out.removed_leaf_emptied = true;
            }
            out.leaf_values[static_cast<std::size_t>(t) * leaves + l] = refit_value;
            leaf_delta[l] = refit_value - tree.leaf_values[l];
        }
        for (std::int64_t i = 0; i < n; ++i) {
            deltas[i] += leaf_delta[step.leaf[i]];
        }
    }
    return out;
}

}  // namespace

RefitResult leaf_refit(const Ensemble& ens, const TrainingTrace& trace, std::int64_t i0) {
    return refit_engine(ens, trace, i0, UpdateSetStrategy::all_points());
}

RefitResult fast_leaf_refit(const Ensemble& ens, const TrainingTrace& trace, std::int64_t i0,
                            const UpdateSetStrategy& strategy) {
    return refit_engine(ens, trace, i0, strategy);
}

double leaf_recalc(const Ensemble& ens, const TrainingTrace& trace, int t, int l,
                   std::int64_t i0, std::span<const std::int64_t> update_members,
                   std::span<const double> deltas) {
    check_run_inputs(ens, trace, i0);
    if (t < 0 || t >= static_cast<int>(trace.steps.size())) {
        throw std::invalid_argument("leaf_recalc: step out of range");
    }
    const TraceStep& step = trace.steps[t];
    if (l < 0 || l >= static_cast<int>(step.grad_sum.size())) {
        throw std::invalid_argument("leaf_recalc: leaf out of range");
    }
    if (deltas.size() != static_cast<std::size_t>(trace.data.rows)) {
        throw std::invalid_argument("leaf_recalc: deltas vector has wrong length");
    }

    const Dataset& data = trace.data;
    const TrainParams& params = ens.params;
    const bool newton = params.formula == LeafFormula::Newton;

    double grad = step.grad_sum[l];
    double denom = step.denom_sum(params.formula, l);
    for (std::int64_t j : update_members) {
        if (j < 0 || j >= data.rows || step.leaf[j] != l) {
            throw std::invalid_argument("leaf_recalc: update member " + std::to_string(j) +
                                        " is not in leaf " + std::to_string(l));
        }
        const double w = data.weights[j];
        const LossValues lv =
            loss_derivatives(params.loss, data.labels[j], step.a_prev[j] + deltas[j]);
        grad += w * (lv.grad - step.g[j]);
        if (newton) denom += w * (lv.hess - step.h[j]);
    }
    if (step.leaf[i0] == l) {
        const double w = data.weights[i0];
        grad -= w * step.g[i0];
        denom -= newton ? w * step.h[i0] : w;
    }
    return leaf_value(grad, denom, params.l2_reg, params.learning_rate);
}

// ---------------------------------------------------------------------------
// Influence engine
// ---------------------------------------------------------------------------

namespace {

InfluenceVector influence_engine(const Ensemble& ens, const TrainingTrace& trace,
                                 std::int64_t i0, const UpdateSetStrategy& strategy) {
    strategy.validate();
    check_run_inputs(ens, trace, i0);

    const Dataset& data = trace.data;
    const TrainParams& params = ens.params;
    const std::int64_t n = data.rows;
    const int trees = static_cast<int>(ens.trees.size());
    const int leaves = ens.trees.front().structure.leaf_count();
    const bool newton = params.formula == LeafFormula::Newton;
    const double lr = params.learning_rate;

    InfluenceVector out;
    out.perturbed_index = i0;
    out.num_trees = trees;
    out.leaf_count = leaves;
    out.leaf_derivatives.resize(static_cast<std::size_t>(trees) * leaves);
    out.jacobian.assign(n, 0.0);

    std::vector<double>& jac = out.jacobian;
    std::vector<std::uint8_t> selected;
    std::vector<double> leaf_der(leaves);

    for (int t = 0; t < trees; ++t) {
        const TraceStep& step = trace.steps[t];
        const Tree& tree = ens.trees[t];
        select_leaves_for_step(step, strategy, t, jac, selected);
        const std::int32_t perturbed_leaf = step.leaf[i0];

        for (int l = 0; l < leaves; ++l) {
            const double denom = step.denom_sum(params.formula, l) + params.l2_reg;
            double der = 0.0;
            if (denom > kDenominatorEpsilon) {
                // Stored leaf values carry the learning rate; the formulas
                // below differentiate the unscaled value, then rescale.
                const double f_unscaled = tree.leaf_values[l] / lr;
                double numer = 0.0;
                if (l == perturbed_leaf) {
                    numer += newton ? step.h[i0] * f_unscaled + step.g[i0]
                                    : f_unscaled + step.g[i0];
                }
                if (selected[l]) {
                    double acc = 0.0;
                    if (newton) {
                        for (std::int32_t j : step.members[l]) {
                            acc += data.weights[j] *
                                   (step.k[j] * f_unscaled + step.h[j]) * jac[j];
                        }
                    } else {
                        for (std::int32_t j : step.members[l]) {
                            acc += data.weights[j] * step.h[j] * jac[j];
                        }
                    }
                    numer += acc;
                }
                der = -lr * numer / denom;
            }
            out.leaf_derivatives[static_cast<std::size_t>(t) * leaves + l] = der;
            leaf_der[l] = der;
        }
        for (std::int64_t j = 0; j < n; ++j) {
            jac[j] += leaf_der[step.leaf[j]];
        }
    }
    return out;
}

}  // namespace

InfluenceVector leaf_influence(const Ensemble& ens, const TrainingTrace& trace,
                               std::int64_t i0) {
    return influence_engine(ens, trace, i0, UpdateSetStrategy::all_points());
}

InfluenceVector fast_leaf_influence(const Ensemble& ens, const TrainingTrace& trace,
                                    std::int64_t i0, const UpdateSetStrategy& strategy) {
    return influence_engine(ens, trace, i0, strategy);
}

// ---------------------------------------------------------------------------
// Influence on test points
// ---------------------------------------------------------------------------

double refit_prediction(const Ensemble& ens, const RefitResult& refit,
                        std::span<const double> x) {
    if (static_cast<std::int64_t>(x.size()) != ens.n_features) {
        throw std::invalid_argument("refit_prediction: feature dimension mismatch");
    }
    if (refit.num_trees != static_cast<int>(ens.trees.size())) {
        throw std::invalid_argument("refit_prediction: tree count mismatch");
    }
    double score = ens.bias;
    for (int t = 0; t < refit.num_trees; ++t) {
        score += refit.leaf_value_at(t, ens.trees[t].structure.leaf_for(x));
    }
    return score;
}

double influence_loo(const RefitResult& refit, const Ensemble& ens,
                     std::span<const double> x, double y, LossKind loss) {
    const double before = loss_derivatives(loss, y, ens.predict(x)).value;
    const double after = loss_derivatives(loss, y, refit_prediction(ens, refit, x)).value;
    return before - after;
}

double prediction_weight_derivative(const InfluenceVector& iv, const Ensemble& ens,
                                    std::span<const double> x) {
    if (static_cast<std::int64_t>(x.size()) != ens.n_features) {
        throw std::invalid_argument("prediction_weight_derivative: feature dimension mismatch");
    }
    if (iv.num_trees != static_cast<int>(ens.trees.size())) {
        throw std::invalid_argument("prediction_weight_derivative: tree count mismatch");
    }
    double der = 0.0;
    for (int t = 0; t < iv.num_trees; ++t) {
        der += iv.leaf_derivative_at(t, ens.trees[t].structure.leaf_for(x));
    }
    return der;
}

double influence_grad(const InfluenceVector& iv, const Ensemble& ens,
                      std::span<const double> x, double y, LossKind loss) {
    const double dloss = loss_derivatives(loss, y, ens.predict(x)).grad;
    return dloss * prediction_weight_derivative(iv, ens, x);
}

// ---------------------------------------------------------------------------
// Batch driver
// ---------------------------------------------------------------------------

InfluenceMethod method_from_string(const std::string& name) {
    if (name == "leafrefit") return InfluenceMethod::LeafRefit;
    if (name == "fastleafrefit") return InfluenceMethod::FastLeafRefit;
    if (name == "leafinfluence") return InfluenceMethod::LeafInfluence;
    if (name == "fastleafinfluence") return InfluenceMethod::FastLeafInfluence;
    throw std::invalid_argument(
        "unknown method '" + name +
        "' (expected leafrefit|fastleafrefit|leafinfluence|fastleafinfluence)");
}

const char* to_string(InfluenceMethod method) noexcept {
    switch (method) {
        case InfluenceMethod::LeafRefit: return "leafrefit";
        case InfluenceMethod::FastLeafRefit: return "fastleafrefit";
        case InfluenceMethod::LeafInfluence: return "leafinfluence";
        case InfluenceMethod::FastLeafInfluence: return "fastleafinfluence";
    }
    return "?";
}

bool is_refit_method(InfluenceMethod method) noexcept {
    return method == InfluenceMethod::LeafRefit || method == InfluenceMethod::FastLeafRefit;
}

namespace {

double mean_influence_on(const Ensemble& ens, const TrainingTrace& trace, const Dataset& test,
                         InfluenceMethod method, const UpdateSetStrategy& strategy,
                         std::int64_t position) {
    const LossKind loss = ens.params.loss;
    double total = 0.0;
    if (is_refit_method(method)) {
        const RefitResult rr = method == InfluenceMethod::LeafRefit
                                   ? leaf_refit(ens, trace, position)
                                   : fast_leaf_refit(ens, trace, position, strategy);
        for (std::int64_t r = 0; r < test.rows; ++r) {
            total += influence_loo(rr, ens, test.row(r), test.labels[r], loss);
        }
    } else {
        const InfluenceVector iv = method == InfluenceMethod::LeafInfluence
                                       ? leaf_influence(ens, trace, position)
                                       : fast_leaf_influence(ens, trace, position, strategy);
        for (std::int64_t r = 0; r < test.rows; ++r) {
            total += influence_grad(iv, ens, test.row(r), test.labels[r], loss);
        }
    }
    return total / static_cast<double>(test.rows);
}

void run_indexed(std::int64_t count, int jobs, const std::function<void(std::int64_t)>& body) {
    if (jobs <= 1 || count <= 1) {
        for (std::int64_t i = 0; i < count; ++i) body(i);
        return;
    }
    std::atomic<std::int64_t> next{0};
    std::exception_ptr error;
    std::mutex error_mutex;
    auto worker = [&] {
        for (;;) {
            const std::int64_t i = next.fetch_add(1);
            if (i >= count) return;
            try {
                body(i);
            } catch (...) {
                std::lock_guard<std::mutex> lock(error_mutex);
                if (!error) error = std::current_exception();
                return;
            }
        }
    };
    std::vector<std::thread> pool;
    const int n_threads = std::min<int>(jobs, static_cast<int>(count));
    pool.reserve(n_threads);
    for (int w = 0; w < n_threads; ++w) pool.emplace_back(worker);
    for (std::thread& th : pool) th.join();
    if (error) std::rethrow_exception(error);
}

}  // namespace

std::vector<BatchRow> influence_batch(const Ensemble& ens, const TrainingTrace& trace,
                                      const Dataset& test, InfluenceMethod method,
                                      const UpdateSetStrategy& strategy,
                                      std::span<const std::int64_t> positions, int jobs) {
    if (test.rows < 1) throw std::invalid_argument("influence_batch: empty test set");
    if (test.cols != ens.n_features) {
        throw std::invalid_argument("influence_batch: test feature dimension mismatch");
    }
    std::vector<BatchRow> rows(positions.size());
    run_indexed(static_cast<std::int64_t>(positions.size()), jobs, [&](std::int64_t idx) {
        const std::int64_t pos = positions[idx];
        const auto start = std::chrono::steady_clock::now();
        const double value = mean_influence_on(ens, trace, test, method, strategy, pos);
        const std::chrono::duration<double> elapsed = std::chrono::steady_clock::now() - start;
        rows[idx] = BatchRow{trace.data.ids[pos], value, elapsed.count()};
    });
    std::sort(rows.begin(), rows.end(),
              [](const BatchRow& a, const BatchRow& b) { return a.train_id < b.train_id; });
    return rows;
}

void write_batch_csv(const std::string& path, InfluenceMethod method,
                     const UpdateSetStrategy& strategy, std::span<const BatchRow> rows) {
    std::ostringstream out;
    out << "train_id,method,strategy,influence_value,seconds\n";
    for (const BatchRow& row : rows) {
        out << row.train_id << ',' << to_string(method) << ',' << strategy.label() << ','
            << format_double(row.influence) << ',' << format_double(row.seconds) << '\n';
    }
    write_text_atomic(path, out.str());
}

}  // namespace treeinf
