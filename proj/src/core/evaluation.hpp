#pragma once

#include <cstdint>
#include <functional>
#include <map>
#include <span>
#include <string>
#include <vector>

#include <json.hpp>

#include "dataset.hpp"
#include "model.hpp"

namespace popest::eval {

double metric_mse(std::span<const double> y, std::span<const double> yhat);
double metric_r2(std::span<const double> y, std::span<const double> yhat);
double metric_accuracy(std::span<const double> y, std::span<const double> yhat);
/// Positive class is 1. Defined as 0 when precision + recall = 0.
double metric_f1(std::span<const double> y, std::span<const double> yhat);

enum class Metric { mse, r2, accuracy, f1 };
std::string_view to_string(Metric m);
Metric parse_metric(std::string_view name);
/// Accuracy and F1 threshold probabilities at 0.5 before scoring.
double score(Metric m, std::span<const double> y, std::span<const double> predictions);

struct CvPlan {
  std::size_t n_folds = 10;
  std::size_t n_repeats = 10;
  bool stratified = false;
  std::uint64_t seed = 0;
};

/// fold_of[repeat][sample] in [0, n_folds).
using FoldAssignment = std::vector<std::vector<std::size_t>>;

/// Shuffled near-equal partition per repeat, seeded by mix_seed(seed,
/// repeat). Stratified plans need binary labels and deal each class
/// round-robin so fold class counts differ by at most one.
FoldAssignment split_folds(std::size_t n_samples, std::span<const double> labels,
                           const CvPlan& plan);

struct MetricSummary {
  double mean = 0.0;
  /// Population standard deviation of the raw scores.
  double std = 0.0;
  std::vector<double> scores;
};

struct EvalReport {
  std::string protocol;  // "cv" or "cross"
  ml::LearnerSpec spec;
  CvPlan plan;
  std::vector<Metric> metrics;
  /// Keyed by metric name; scores ordered by (repeat, fold).
  std::map<std::string, MetricSummary> results;

  std::string to_json() const;
  /// One "metric  mean ± std" line per metric.
  std::string render_table() const;
};

MetricSummary summarize(std::vector<double> scores);

/// Called after each fold's fit with (repeat, fold, model, training rows).
using FoldObserver = std::function<void(std::size_t, std::size_t, const ml::Model&,
                                        const std::vector<std::size_t>&)>;

/// Standardization statistics are fitted inside ml::fit on each training
/// split only.
EvalReport cross_validate(const ml::LearnerSpec& spec, const Dataset& data,
                          const CvPlan& plan, const std::vector<Metric>& metrics,
                          const FoldObserver& observer = {});

/// Single fit on `train`, scored on `test`. Column names must agree.
EvalReport cross_dataset_eval(const ml::LearnerSpec& spec, const Dataset& train,
                              const Dataset& test, const std::vector<Metric>& metrics);

}  // namespace popest::eval
