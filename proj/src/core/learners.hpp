#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "cart.hpp"
#include "dataset.hpp"

namespace popest::ml {

/// Mean label of the k nearest stored points (Euclidean, ties by row
/// order). For {0,1} labels this is the positive fraction.
double knn_predict(const Matrix& points, std::span<const double> labels,
                   std::size_t k, std::span<const double> query);

struct ForestParams {
  std::size_t n_trees = 100;
  /// 0 selects floor(sqrt(columns)), at least 1.
  std::size_t max_features = 0;
  bool bootstrap = true;
  int max_depth = 6;
  std::size_t min_samples_leaf = 2;
  Impurity impurity = Impurity::gini;
};

/// Tree i draws from Rng::derive(seed, "forest", i), so the forest does not
/// depend on the order trees are built in.
std::vector<Tree> fit_random_forest(const Dataset& data, const ForestParams& params,
                                    std::uint64_t seed);

/// SAMME for two classes with depth-1 trees.
struct AdaBoostFit {
  std::vector<Tree> stumps;
  std::vector<double> alphas;
  /// Sample weights after each round (only filled when requested).
  std::vector<std::vector<double>> weight_trace;

  /// sigmoid(2 F) where F sums alpha * (+1/-1) stump votes.
  double probability(std::span<const double> row) const;
};

AdaBoostFit fit_adaboost(const Dataset& data, std::size_t n_estimators,
                         bool keep_weight_trace = false);

}  // namespace popest::ml
