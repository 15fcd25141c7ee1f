#pragma once

#include <cstdint>
#include <map>
#include <memory>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "dataset.hpp"

namespace popest::ml {

enum class LearnerKind {
  mean_baseline,
  mode_baseline,
  elastic_net,
  logistic_regression,
  knn,
  decision_tree,
  random_forest,
  adaboost,
  gbt_regressor,
  gbt_classifier,
};

enum class Task { regression, classification };

std::string_view to_string(LearnerKind kind);
LearnerKind parse_learner_kind(std::string_view name);
std::string_view to_string(Task task);

/// Learner choice with every hyperparameter filled in.
struct LearnerSpec {
  LearnerKind kind = LearnerKind::mean_baseline;
  Task task = Task::regression;
  std::map<std::string, double> hyperparameters;
  std::uint64_t seed = 0;

  /// Fills defaults, applies overrides and validates names and ranges.
  /// `task` only matters for kinds that support both tasks (knn,
  /// decision_tree, random_forest, mode_baseline; default classification).
  static LearnerSpec make(LearnerKind kind,
                          const std::map<std::string, double>& overrides = {},
                          std::uint64_t seed = 0,
                          std::optional<Task> task = std::nullopt);

  double param(const std::string& name) const;

  nlohmann::ordered_json to_json() const;
  /// Accepts {"kind", "task"?, "hyperparameters"?, "seed"?}.
  static LearnerSpec from_json(const nlohmann::json& j);
};

namespace detail {
class Learner;
}

/// A trained learner. Immutable; copies share state.
class Model {
 public:
  const LearnerSpec& spec() const { return spec_; }
  std::size_t n_features() const { return n_features_; }
  bool is_classifier() const { return spec_.task == Task::classification; }

  /// Regression kinds: raw predictions. Classification kinds: P(class 1).
  std::vector<double> predict(const Matrix& x) const;
  double predict_row(std::span<const double> row) const;
  /// 1 iff P(class 1) >= threshold; threshold must lie in (0, 1).
  std::vector<int> classify(const Matrix& x, double threshold) const;

  /// Column statistics used for standardization, when the kind uses it.
  const std::optional<ColumnStats>& scaler() const { return scaler_; }

  std::string to_json() const;
  static Model from_json(const std::string& text);

 private:
  friend Model fit(const LearnerSpec& spec, const Dataset& data);
  LearnerSpec spec_;
  std::size_t n_features_ = 0;
  std::optional<ColumnStats> scaler_;
  std::shared_ptr<const detail::Learner> learner_;
};

/// Deterministic given (spec.seed, data).
Model fit(const LearnerSpec& spec, const Dataset& data);

/// True for kinds trained on standardized columns.
bool uses_standardization(LearnerKind kind);

}  // namespace popest::ml
