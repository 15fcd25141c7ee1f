#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <vector>

#include <json.hpp>

#include "dataset.hpp"
#include "rng.hpp"

namespace popest::ml {

enum class Impurity { variance, gini };

struct SplitDecision {
  std::size_t column = 0;
  double threshold = 0.0;
  double gain = 0.0;
};

struct SplitOptions {
  std::size_t min_samples_leaf = 1;
  /// Accept the best candidate even when it does not reduce impurity (only
  /// meaningful for impure nodes). Tree growth uses this so that greedy
  /// search can pass through a zero-gain first split, as on XOR.
  bool allow_zero_gain = false;
};

/// Best (column, threshold) over the given rows and candidate columns.
/// Thresholds are midpoints between consecutive distinct values; rows with
/// x <= threshold go left. Ties go to the lowest column, then the lowest
/// threshold. `weights` may be empty (unit weights). `rows` may repeat an
/// index (bootstrap multiplicity). Returns nullopt when the labels are
/// constant or no candidate reduces impurity.
std::optional<SplitDecision> best_split(const Matrix& x, std::span<const double> y,
                                        std::span<const double> weights,
                                        std::span<const std::size_t> rows,
                                        std::span<const std::size_t> columns,
                                        Impurity impurity,
                                        const SplitOptions& options = {});

/// Binary regression/probability tree. Leaves hold the weighted mean label.
struct Tree {
  struct Node {
    int feature = -1;  // -1 marks a leaf
    double threshold = 0.0;
    int left = -1;
    int right = -1;
    double value = 0.0;
  };
  std::vector<Node> nodes;

  double predict(std::span<const double> row) const;
  std::size_t depth() const;
  std::size_t leaf_count() const;

  nlohmann::json to_json() const;
  static Tree from_json(const nlohmann::json& j);
};

struct TreeParams {
  /// <= 0 means unlimited.
  int max_depth = 6;
  std::size_t min_samples_leaf = 1;
  /// Columns examined per node; 0 or >= column count means all of them.
  std::size_t max_features = 0;
  Impurity impurity = Impurity::variance;
};

/// Grows trees on a fixed feature matrix. Column orderings are computed once
/// and reused for every tree, which is what boosting needs.
class TreeGrower {
 public:
  explicit TreeGrower(const Matrix& x);

  /// `rows` lists the training rows (repeats allowed); empty means all rows.
  /// `weights` may be empty. `rng` is required when max_features subsamples.
  Tree grow(std::span<const double> y, std::span<const double> weights,
            std::span<const std::size_t> rows, const TreeParams& params,
            Rng* rng = nullptr) const;

 private:
  const Matrix& x_;
  std::vector<std::vector<std::size_t>> order_;  // per column, all rows sorted
};

}  // namespace popest::ml
