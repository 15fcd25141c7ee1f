#ifndef POPEST_POPEST_H
#define POPEST_POPEST_H

#include <stddef.h>
#include <stdint.h>

#if defined(_WIN32)
#  if defined(POPEST_BUILDING_LIBRARY)
#    define POPEST_API __declspec(dllexport)
#  else
#    define POPEST_API __declspec(dllimport)
#  endif
#else
#  define POPEST_API __attribute__((visibility("default")))
#endif

#ifdef __cplusplus
extern "C" {
#endif

typedef enum popest_status {
  POPEST_OK = 0,
  POPEST_ERR_USAGE = 1,   /* bad arguments, config or option values */
  POPEST_ERR_DATA = 2,    /* malformed or inconsistent input data */
  POPEST_ERR_IO = 3,      /* file system failures */
  POPEST_ERR_INTERNAL = 4
} popest_status;

/* Message of the last failed call on this thread; "" after a success.
   Valid until the next call on the same thread. */
POPEST_API const char* popest_last_error(void);
POPEST_API const char* popest_version(void);

/* Every char** output is allocated by the library; release it here. */
POPEST_API void popest_string_free(char* s);

/* ---- models ---------------------------------------------------------- */

typedef struct popest_model popest_model;

/* spec_json: {"kind": ..., "task"?: ..., "hyperparameters"?: {...}, "seed"?: n}.
   x is row-major n_rows x n_cols. */
POPEST_API popest_status popest_model_fit(const char* spec_json, const double* x,
                                          size_t n_rows, size_t n_cols, const double* y,
                                          popest_model** out);
POPEST_API popest_status popest_model_load(const char* model_json, popest_model** out);
POPEST_API popest_status popest_model_to_json(const popest_model* model, char** out);
POPEST_API popest_status popest_model_n_features(const popest_model* model, size_t* out);
/* Regression: predictions. Classification: probability of class 1. */
POPEST_API popest_status popest_model_predict(const popest_model* model, const double* x,
                                              size_t n_rows, size_t n_cols, double* out);
POPEST_API popest_status popest_model_classify(const popest_model* model, const double* x,
                                               size_t n_rows, size_t n_cols, double threshold,
                                               int* out);
POPEST_API void popest_model_free(popest_model* model);

/* ---- estimators ------------------------------------------------------ */

/* cells is row-major n_individuals x n_occasions of 0/1. variant is
   "classic" or "bias_corrected". Output: the population estimate CSV. */
POPEST_API popest_status popest_jolly_seber(const uint8_t* cells, size_t n_individuals,
                                            size_t n_occasions, const int* occasions,
                                            const char* variant, char** csv_out);
POPEST_API popest_status popest_lincoln_petersen(int64_t captured_1, int64_t captured_2,
                                                 int64_t recaptured, int chapman,
                                                 double* out);
POPEST_API popest_status popest_rmse(const double* estimates, const double* references,
                                     size_t n, double* out);

/* ---- file-level operations ------------------------------------------- */

/* Writes records.jsonl, survey_labels.csv, truth.json, census.csv and
   config.json into out_dir. seed overrides the config seed when has_seed
   is nonzero. warnings_out may be NULL; otherwise receives one warning
   per line. */
POPEST_API popest_status popest_simulate(const char* config_json, int has_seed, uint64_t seed,
                                         const char* out_dir, char** warnings_out);

/* Validates records (JSONL or CSV, chosen by extension), joins labels when
   labels_path is non-NULL, and writes canonical JSONL. */
POPEST_API popest_status popest_ingest(const char* records_path, const char* labels_path,
                                       const char* out_path);

/* problem: "estimate" (collection rows) or "shareability" (image rows). */
POPEST_API popest_status popest_featurize(const char* records_path, const char* labels_path,
                                          const char* problem, const char* table_out,
                                          const char* schema_out);

/* Fits spec_json on a feature table and writes the model bundle. */
POPEST_API popest_status popest_train(const char* table_path, const char* schema_path,
                                      const char* spec_json, const char* model_out);

/* Repeated k-fold CV on one labeled record set; writes an EvalReport JSON. */
POPEST_API popest_status popest_evaluate_cv(const char* records_path, const char* labels_path,
                                            const char* problem, const char* spec_json,
                                            size_t n_folds, size_t n_repeats, int stratified,
                                            uint64_t seed, char** report_json);

/* Train on one record set, test on another. Label paths may be NULL when
   the records carry their own shared flags. */
POPEST_API popest_status popest_evaluate_cross(const char* train_records,
                                               const char* train_labels,
                                               const char* test_records,
                                               const char* test_labels, const char* problem,
                                               const char* spec_json, uint64_t seed,
                                               char** report_json);

/* Full estimate run. Relative paths in config_json resolve against
   base_dir (may be NULL). summary_out may be NULL. */
POPEST_API popest_status popest_estimate(const char* config_json, const char* base_dir,
                                         char** summary_out);

/* Renders a summary CSV as a fixed-width text table. */
POPEST_API popest_status popest_render_summary(const char* summary_csv, char** table_out);

#ifdef __cplusplus
}
#endif

#endif
