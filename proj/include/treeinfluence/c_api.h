/*
 * C interface to the treeinfluence library.
 *
 * All functions return TI_OK (0) on success; on failure they return a
 * nonzero status and leave a human-readable message retrievable with
 * ti_last_error() (thread-local). Out-parameters are untouched on failure.
 * Handles are opaque and must be released with the matching *_free call.
 */
#ifndef TREEINFLUENCE_C_API_H
#define TREEINFLUENCE_C_API_H

#include <stdint.h>

#ifdef __cplusplus
extern "C" {
#endif

typedef struct ti_dataset ti_dataset;
typedef struct ti_model ti_model;

typedef enum {
    TI_OK = 0,
    TI_ERROR_INVALID_ARGUMENT = 1,
    TI_ERROR_IO = 2,
    TI_ERROR_RUNTIME = 3
} ti_status;

const char* ti_status_string(ti_status status);
const char* ti_last_error(void);
const char* ti_version(void);

/* ------------------------------------------------------------------ */
/* Datasets                                                            */
/* ------------------------------------------------------------------ */

/* weight_column may be NULL (all weights 1). */
ti_status ti_dataset_load_csv(const char* path, const char* label_column,
                              const char* weight_column, ti_dataset** out);

/* features is row-major n_rows x n_cols; weights may be NULL. */
ti_status ti_dataset_from_arrays(const double* features, int64_t n_rows, int64_t n_cols,
                                 const double* labels, const double* weights,
                                 ti_dataset** out);

ti_status ti_dataset_num_rows(const ti_dataset* ds, int64_t* out);
ti_status ti_dataset_num_features(const ti_dataset* ds, int64_t* out);

/* mask_out may be NULL; otherwise it must hold num_rows bytes and receives
 * 1 for every flipped row. */
ti_status ti_dataset_flip_labels(const ti_dataset* ds, double fraction, uint64_t seed,
                                 ti_dataset** out, uint8_t* mask_out);

/* Rows with column in [lo, hi) and the given label are kept independently
 * with probability keep_fraction. */
ti_status ti_dataset_filter_bias(const ti_dataset* ds, const char* column, double lo,
                                 double hi, double label, double keep_fraction,
                                 uint64_t seed, ti_dataset** out);

ti_status ti_dataset_save_csv(const ti_dataset* ds, const char* path);

void ti_dataset_free(ti_dataset* ds);

/* ------------------------------------------------------------------ */
/* Models                                                              */
/* ------------------------------------------------------------------ */

/* params_json example (all keys optional):
 *   {"trees":100,"depth":6,"learning_rate":0.2,"l2_reg":0.0,
 *    "loss":"logloss","formula":"newton","seed":0,"bias_override":null}
 */
ti_status ti_train(const ti_dataset* ds, const char* params_json, ti_model** out);

ti_status ti_model_save(const ti_model* model, const char* path, int include_trace);
ti_status ti_model_load(const char* path, ti_model** out);

ti_status ti_model_num_trees(const ti_model* model, int64_t* out);
ti_status ti_model_bias(const ti_model* model, double* out);
ti_status ti_model_predict(const ti_model* model, const double* features, int64_t n_cols,
                           double* out_raw);

void ti_model_free(ti_model* model);

/* ------------------------------------------------------------------ */
/* Influence                                                           */
/* ------------------------------------------------------------------ */

/* Writes (train_id, method, strategy, influence_value, seconds) rows sorted
 * by train id. method: leafrefit | fastleafrefit | leafinfluence |
 * fastleafinfluence; strategy: single | all | topk:K | sampledtopk:K:M.
 * train_ids may be NULL with n_ids = -1 to process every training row.
 * The test CSV's columns are aligned to the training features by name. */
ti_status ti_influence_batch_csv(const ti_model* model, const char* test_csv_path,
                                 const char* method, const char* strategy,
                                 const int64_t* train_ids, int64_t n_ids,
                                 uint64_t strategy_seed, int jobs,
                                 const char* out_csv_path);

/* ------------------------------------------------------------------ */
/* Oracles                                                             */
/* ------------------------------------------------------------------ */

/* mode: "full" | "fixed". Produces the retrained ensemble (no trace) and,
 * via structure_changed_out (may be NULL), whether any split differs from
 * the reference. */
ti_status ti_oracle_retrain_without(const ti_model* model, int64_t train_id,
                                    const char* mode, int* structure_changed_out,
                                    ti_model** out);

/* Central-difference check of the prediction/loss gradients on every row of
 * the test CSV; writes (test_id, fd_dprediction, exact_dprediction, fd_dloss,
 * exact_dloss) to out_csv_path. */
ti_status ti_oracle_fd_check(const ti_model* model, const char* test_csv_path,
                             int64_t train_id, double epsilon,
                             const char* out_csv_path);

/* ------------------------------------------------------------------ */
/* Experiments                                                         */
/* ------------------------------------------------------------------ */

/* kind: "proxy" | "noise" | "mismatch" | "bench". config_json describes the
 * input CSVs, training parameters and driver options; reports are written
 * into out_dir. */
ti_status ti_experiment_run(const char* kind, const char* config_json,
                            const char* out_dir);

#ifdef __cplusplus
} /* extern "C" */
#endif

#endif /* TREEINFLUENCE_C_API_H */
