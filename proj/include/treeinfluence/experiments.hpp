#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "treeinfluence/dataset.hpp"
#include "treeinfluence/gbdt.hpp"
#include "treeinfluence/influence.hpp"

namespace treeinf {

// One influence method plus its update-set strategy, e.g.
// "fastleafrefit/topk:8". Exact methods ignore the strategy.
struct MethodSpec {
    InfluenceMethod method = InfluenceMethod::LeafInfluence;
    UpdateSetStrategy strategy = UpdateSetStrategy::all_points();

    static MethodSpec parse(const std::string& text, std::uint64_t seed = 0);
    std::string label() const;
};

// ---------------------------------------------------------------------------
// Proxy approximation study: how well does each method rank training points
// compared to the ground-truth proxy, split by whether leave-one-out
// retraining changes the tree structures ("same" vs "changed").
// ---------------------------------------------------------------------------

struct ProxyOptions {
    std::vector<MethodSpec> methods;
    int k_ndcg = 100;
    int sample_per_group = 50;    // candidates kept per structure group
    int candidate_pool = 200;     // training points classified by full retraining
    int n_test_points = 25;
    std::uint64_t seed = 0;
};

struct ProxyGroupRow {
    std::string method;
    std::string strategy;
    bool structure_same = false;
    int effective_k = 0;
    int n_candidates = 0;
    int n_test_points = 0;
    double mean_ndcg = 0.0;
};

struct ProxyReport {
    std::vector<ProxyGroupRow> rows;
    int n_same = 0;     // pool members whose removal keeps every structure
    int n_changed = 0;

    const ProxyGroupRow* find(const std::string& method_label, bool same) const;
    nlohmann::json to_json() const;
    std::string to_csv() const;
};

ProxyReport proxy_approx_experiment(const Dataset& train, const Dataset& test,
                                    const TrainParams& params, const ProxyOptions& options);

// ---------------------------------------------------------------------------
// Label-noise study: detection AUC of every method against the flip mask,
// plus per-test-point batch-removal curves.
// ---------------------------------------------------------------------------

struct NoiseOptions {
    std::vector<MethodSpec> methods;
    double flip_fraction = 0.1;
    bool include_loo_baseline = false;  // full retraining per train point; slow
    bool with_removal_curves = true;
    int n_focus_points = 50;   // worst-degraded test points
    int batch_size = 50;       // training points removed per iteration
    int n_batches = 10;
    MethodSpec removal_method;  // ranking used for targeted removal
    int permutations = 999;
    int jobs = 1;
    std::uint64_t seed = 0;
};

struct NoiseAucRow {
    std::string label;  // method label or baseline name
    std::optional<double> auc;
    double null_sigma = 0.0;  // std dev of the permutation-null AUCs
    bool significant = false; // auc > 0.5 + 3 * null_sigma
};

struct RemovalCurve {
    std::int64_t test_id = -1;
    std::string label;  // removal order: method label or "random"
    std::vector<double> gain_on_point;  // relative logloss reduction per batch
    std::vector<double> gain_on_test;
    double dcg_on_point = 0.0;
    double dcg_on_test = 0.0;
};

struct NoiseReport {
    std::vector<NoiseAucRow> auc_rows;
    std::vector<RemovalCurve> curves;
    std::vector<std::uint8_t> flip_mask;
    int n_flipped = 0;

    const NoiseAucRow* find(const std::string& label) const;
    nlohmann::json to_json() const;
    std::string auc_csv() const;
    std::string curves_csv() const;  // plot data: batch on x, gains on y
};

NoiseReport noise_experiment(const Dataset& train, const Dataset& test,
                             const TrainParams& params, const NoiseOptions& options);

// ---------------------------------------------------------------------------
// Domain-mismatch study: group-average influence on the focus test subset
// after biased filtering of the training data.
// ---------------------------------------------------------------------------

struct MismatchOptions {
    std::vector<MethodSpec> methods;
    BiasFilter bias;             // rows matching this are mostly filtered out
    double keep_fraction = 0.1;
    std::string group_column;    // defaults to bias.column when empty
    int sample_per_group = 100;
    std::uint64_t seed = 0;
};

struct MismatchCell {
    std::string method;
    std::string strategy;
    bool in_range = false;  // group column within [bias.lo, bias.hi)
    int label = 0;
    int n_points = 0;
    double mean_influence = 0.0;
};

struct MismatchReport {
    std::vector<MismatchCell> cells;  // absent groups are omitted
    std::vector<std::int64_t> removed_ids;
    int n_focus_test = 0;

    const MismatchCell* find(const std::string& method_label, bool in_range, int label) const;
    nlohmann::json to_json() const;
    std::string to_csv() const;
};

MismatchReport mismatch_experiment(const Dataset& train, const Dataset& test,
                                   const TrainParams& params, const MismatchOptions& options);

// ---------------------------------------------------------------------------
// Runtime study: single-threaded wall time per training object for each
// method/strategy combination, warm-up excluded.
// ---------------------------------------------------------------------------

struct BenchOptions {
    std::vector<MethodSpec> methods;
    int k_objects = 50;
    int warmup_objects = 3;
    std::uint64_t seed = 0;
};

struct BenchRow {
    std::string method;
    std::string strategy;
    int k_objects = 0;
    double seconds_per_object = 0.0;
};

struct BenchReport {
    std::vector<BenchRow> rows;

    const BenchRow* find(const std::string& method_label) const;
    nlohmann::json to_json() const;
    std::string to_csv() const;
};

BenchReport runtime_bench(const Dataset& train, const TrainParams& params,
                          const BenchOptions& options);

// ---------------------------------------------------------------------------
// Config-driven entry point used by the CLI and the C API: loads the CSVs
// named in the config, runs one driver and writes report files into out_dir.
// Returns the paths written.
// ---------------------------------------------------------------------------
std::vector<std::string> run_experiment_from_config(const std::string& kind,
                                                    const nlohmann::json& config,
                                                    const std::string& out_dir);

}  // namespace treeinf
