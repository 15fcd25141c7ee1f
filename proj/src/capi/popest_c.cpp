#include "popest/popest.h"

#include <algorithm>
#include <cstdlib>
#include <cstring>
#include <filesystem>
#include <json.hpp>
#include <new>
#include <string>

#include "core/error.hpp"
#include "core/evaluation.hpp"
#include "core/jolly_seber.hpp"
#include "core/pipeline.hpp"
#include "core/synth.hpp"
#include "core/text.hpp"

struct popest_model {
  popest::ml::Model model;
};

namespace {

thread_local std::string g_last_error;

template <typename F>
popest_status guarded(F&& body) {
  try {
    body();
    g_last_error.clear();
    return POPEST_OK;
  } catch (const popest::UsageError& e) {
    g_last_error = e.what();
    return POPEST_ERR_USAGE;
  } catch (const popest::DataError& e) {
    g_last_error = e.what();
    return POPEST_ERR_DATA;
  } catch (const popest::IoError& e) {
    g_last_error = e.what();
    return POPEST_ERR_IO;
  } catch (const nlohmann::json::exception& e) {
    g_last_error = e.what();
    return POPEST_ERR_DATA;
  } catch (const std::filesystem::filesystem_error& e) {
    g_last_error = e.what();
    return POPEST_ERR_IO;
  } catch (const std::exception& e) {
    g_last_error = std::string("internal error: ") + e.what();
    return POPEST_ERR_INTERNAL;
  } catch (...) {
    g_last_error = "internal error";
    return POPEST_ERR_INTERNAL;
  }
}

char* dup_string(const std::string& s) {
  auto* out = static_cast<char*>(std::malloc(s.size() + 1));
  if (!out) throw std::bad_alloc();
  std::memcpy(out, s.data(), s.size() + 1);
  return out;
}

void require(const void* p, const char* what) {
  if (!p) throw popest::UsageError(std::string(what) + " must not be NULL");
}

std::string opt(const char* s) { return s ? std::string(s) : std::string(); }

popest::Matrix to_matrix(const double* x, std::size_t rows, std::size_t cols) {
  if (rows > 0 && cols > 0) require(x, "x");
  return popest::Matrix(rows, cols, std::vector<double>(x, x + rows * cols));
}

popest::ml::LearnerSpec parse_spec(const char* spec_json) {
  require(spec_json, "spec_json");
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(spec_json);
  } catch (const nlohmann::json::exception& e) {
    throw popest::UsageError(std::string("learner spec: invalid JSON: ") + e.what());
  }
  return popest::ml::LearnerSpec::from_json(j);
}

std::vector<popest::eval::Metric> default_metrics(popest::ml::Task task) {
  using popest::eval::Metric;
  if (task == popest::ml::Task::regression) return {Metric::r2, Metric::mse};
  return {Metric::accuracy, Metric::f1};
}

void check_task(const popest::ml::LearnerSpec& spec, popest::pipeline::Problem problem) {
  const bool regression = spec.task == popest::ml::Task::regression;
  if (problem == popest::pipeline::Problem::estimate && !regression) {
    throw popest::UsageError("the estimate problem needs a regression learner");
  }
  if (problem == popest::pipeline::Problem::shareability && regression) {
    throw popest::UsageError("the shareability problem needs a classification learner");
  }
}

}  // namespace

extern "C" {

const char* popest_last_error(void) { return g_last_error.c_str(); }

const char* popest_version(void) { return "1.0.0"; }

void popest_string_free(char* s) { std::free(s); }

popest_status popest_model_fit(const char* spec_json, const double* x, size_t n_rows,
                               size_t n_cols, const double* y, popest_model** out) {
  return guarded([&] {
    require(out, "out");
    *out = nullptr;
    if (n_rows > 0) require(y, "y");
    popest::Dataset data;
    data.x = to_matrix(x, n_rows, n_cols);
    data.y.assign(y, y + n_rows);
    for (std::size_t c = 0; c < n_cols; ++c) data.columns.push_back("x" + std::to_string(c));
    auto model = popest::ml::fit(parse_spec(spec_json), data);
    *out = new popest_model{std::move(model)};
  });
}

popest_status popest_model_load(const char* model_json, popest_model** out) {
  return guarded([&] {
    require(out, "out");
    require(model_json, "model_json");
    *out = nullptr;
    *out = new popest_model{popest::ml::Model::from_json(model_json)};
  });
}

popest_status popest_model_to_json(const popest_model* model, char** out) {
  return guarded([&] {
    require(model, "model");
    require(out, "out");
    *out = dup_string(model->model.to_json());
  });
}

popest_status popest_model_n_features(const popest_model* model, size_t* out) {
  return guarded([&] {
    require(model, "model");
    require(out, "out");
    *out = model->model.n_features();
  });
}

popest_status popest_model_predict(const popest_model* model, const double* x, size_t n_rows,
                                   size_t n_cols, double* out) {
  return guarded([&] {
    require(model, "model");
    if (n_rows > 0) require(out, "out");
    const auto pred = model->model.predict(to_matrix(x, n_rows, n_cols));
    std::copy(pred.begin(), pred.end(), out);
  });
}

popest_status popest_model_classify(const popest_model* model, const double* x, size_t n_rows,
                                    size_t n_cols, double threshold, int* out) {
  return guarded([&] {
    require(model, "model");
    if (n_rows > 0) require(out, "out");
    const auto labels = model->model.classify(to_matrix(x, n_rows, n_cols), threshold);
    std::copy(labels.begin(), labels.end(), out);
  });
}

void popest_model_free(popest_model* model) { delete model; }

popest_status popest_jolly_seber(const uint8_t* cells, size_t n_individuals, size_t n_occasions,
                                 const int* occasions, const char* variant, char** csv_out) {
  return guarded([&] {
    require(csv_out, "csv_out");
    if (n_occasions > 0) require(occasions, "occasions");
    if (n_individuals * n_occasions > 0) require(cells, "cells");
    std::vector<std::string> ids;
    for (std::size_t i = 0; i < n_individuals; ++i) ids.push_back(std::to_string(i));
    popest::data::EncounterMatrix matrix(
        std::move(ids), std::vector<int>(occasions, occasions + n_occasions),
        std::vector<std::uint8_t>(cells, cells + n_individuals * n_occasions));
    const auto v = variant ? popest::js::parse_variant(variant) : popest::js::Variant::classic;
    const auto est =
        popest::js::jolly_seber_estimate(popest::js::occasion_statistics(matrix), v);
    *csv_out = dup_string(est.to_csv());
  });
}

popest_status popest_lincoln_petersen(int64_t captured_1, int64_t captured_2,
                                      int64_t recaptured, int chapman, double* out) {
  return guarded([&] {
    require(out, "out");
    *out = popest::js::lincoln_petersen(captured_1, captured_2, recaptured, chapman != 0);
  });
}

popest_status popest_rmse(const double* estimates, const double* references, size_t n,
                          double* out) {
  return guarded([&] {
    require(out, "out");
    if (n > 0) {
      require(estimates, "estimates");
      require(references, "references");
    }
    *out = popest::pipeline::rmse(std::vector<double>(estimates, estimates + n),
                                  std::vector<double>(references, references + n));
  });
}

popest_status popest_simulate(const char* config_json, int has_seed, uint64_t seed,
                              const char* out_dir, char** warnings_out) {
  return guarded([&] {
    require(config_json, "config_json");
    require(out_dir, "out_dir");
    if (warnings_out) *warnings_out = nullptr;
    auto config = popest::synth::SimConfig::from_json(config_json);
    if (has_seed) config.seed = seed;
    const auto world = popest::synth::generate(config);
    std::filesystem::create_directories(out_dir);
    popest::pipeline::write_outputs(out_dir, popest::synth::export_files(world));
    if (warnings_out) {
      std::string text;
      for (const auto& w : world.warnings) text += w + "\n";
      *warnings_out = dup_string(text);
    }
  });
}

popest_status popest_ingest(const char* records_path, const char* labels_path,
                            const char* out_path) {
  return guarded([&] {
    require(records_path, "records_path");
    require(out_path, "out_path");
    auto records = popest::pipeline::load_labeled_records(records_path, opt(labels_path));
    // Grouping checks per-collection consistency.
    (void)popest::data::group_collections(records);
    popest::text::write_file(out_path, popest::data::to_jsonl(records));
  });
}

popest_status popest_featurize(const char* records_path, const char* labels_path,
                               const char* problem, const char* table_out,
                               const char* schema_out) {
  return guarded([&] {
    require(records_path, "records_path");
    require(table_out, "table_out");
    require(schema_out, "schema_out");
    const auto records = popest::pipeline::load_labeled_records(records_path, opt(labels_path));
    const auto table = popest::pipeline::problem_table(
        records, popest::pipeline::parse_problem(problem ? problem : "estimate"));
    popest::text::write_file(schema_out, table.schema.to_json());
    popest::text::write_file(table_out, table.to_csv());
  });
}

popest_status popest_train(const char* table_path, const char* schema_path,
                           const char* spec_json, const char* model_out) {
  return guarded([&] {
    require(table_path, "table_path");
    require(schema_path, "schema_path");
    require(model_out, "model_out");
    const auto schema =
        popest::features::FeatureSchema::from_json(popest::text::read_file(schema_path));
    const auto table =
        popest::pipeline::FeatureTable::from_csv(popest::text::read_file(table_path), schema);
    const auto bundle = popest::pipeline::train_bundle(table, parse_spec(spec_json));
    popest::text::write_file(model_out, bundle.to_json());
  });
}

popest_status popest_evaluate_cv(const char* records_path, const char* labels_path,
                                 const char* problem, const char* spec_json, size_t n_folds,
                                 size_t n_repeats, int stratified, uint64_t seed,
                                 char** report_json) {
  return guarded([&] {
    require(records_path, "records_path");
    require(report_json, "report_json");
    auto spec = parse_spec(spec_json);
    spec.seed = seed;
    const auto p = popest::pipeline::parse_problem(problem ? problem : "estimate");
    check_task(spec, p);
    const auto records = popest::pipeline::load_labeled_records(records_path, opt(labels_path));
    const auto table = popest::pipeline::problem_table(records, p);
    const auto assembled =
        popest::features::assemble_dataset(table.rows, table.labels, table.schema);
    popest::eval::CvPlan plan{n_folds, n_repeats, stratified != 0, seed};
    const auto report = popest::eval::cross_validate(spec, assembled.dataset, plan,
                                                     default_metrics(spec.task));
    *report_json = dup_string(report.to_json());
  });
}

popest_status popest_evaluate_cross(const char* train_records, const char* train_labels,
                                    const char* test_records, const char* test_labels,
                                    const char* problem, const char* spec_json, uint64_t seed,
                                    char** report_json) {
  return guarded([&] {
    require(train_records, "train_records");
    require(test_records, "test_records");
    require(report_json, "report_json");
    auto spec = parse_spec(spec_json);
    spec.seed = seed;
    const auto p = popest::pipeline::parse_problem(problem ? problem : "estimate");
    check_task(spec, p);
    const auto train = popest::pipeline::problem_table(
        popest::pipeline::load_labeled_records(train_records, opt(train_labels)), p);
    const auto test = popest::pipeline::problem_table(
        popest::pipeline::load_labeled_records(test_records, opt(test_labels)), p,
        train.schema);
    const auto train_data =
        popest::features::assemble_dataset(train.rows, train.labels, train.schema);
    if (test.rows.empty()) throw popest::DataError("test set has no labeled rows");
    popest::Dataset test_data;
    test_data.x = train_data.imputer.apply(test.rows, test.schema);
    test_data.y = test.labels;
    test_data.columns = train_data.dataset.columns;
    const auto report = popest::eval::cross_dataset_eval(spec, train_data.dataset, test_data,
                                                         default_metrics(spec.task));
    *report_json = dup_string(report.to_json());
  });
}

popest_status popest_estimate(const char* config_json, const char* base_dir,
                              char** summary_out) {
  return guarded([&] {
    require(config_json, "config_json");
    if (summary_out) *summary_out = nullptr;
    const auto config = popest::pipeline::RunConfig::from_json(config_json, opt(base_dir));
    const auto out = popest::pipeline::run_estimate_pipeline(config);
    if (summary_out) *summary_out = dup_string(out.summary.to_csv());
  });
}

popest_status popest_render_summary(const char* summary_csv, char** table_out) {
  return guarded([&] {
    require(summary_csv, "summary_csv");
    require(table_out, "table_out");
    *table_out = dup_string(popest::pipeline::Summary::from_csv(summary_csv).render());
  });
}

}  // extern "C"
