#pragma once

#include <span>
#include <vector>

#include "cart.hpp"
#include "dataset.hpp"

namespace popest::ml {

enum class Loss { squared, logistic };

struct GbtParams {
  int n_rounds = 100;
  int max_depth = 3;
  double learning_rate = 0.1;
  std::size_t min_samples_leaf = 1;
};

/// Starting raw score: mean label (squared) or log-odds of the base rate
/// (logistic, clamped away from 0 and 1).
double initial_score(Loss loss, std::span<const double> y);

/// -dL/dF at raw score F.
double negative_gradient(Loss loss, double score, double label);

/// Mean loss of raw scores against labels.
double training_loss(Loss loss, std::span<const double> scores,
                     std::span<const double> y);

struct GbtRoundResult {
  Tree tree;
  std::vector<double> scores;
};

/// One boosting step: fits a depth-limited tree to the negative gradients
/// and moves the raw scores by learning_rate times its output.
GbtRoundResult gbt_round(std::span<const double> scores, const Dataset& data,
                         Loss loss, const GbtParams& params);

struct GbtFit {
  Loss loss = Loss::squared;
  double initial = 0.0;
  double learning_rate = 0.1;
  std::vector<Tree> trees;
  /// training_loss before the first round and after every round.
  std::vector<double> loss_trace;

  double raw_score(std::span<const double> row) const;
};

GbtFit fit_gbt(const Dataset& data, Loss loss, const GbtParams& params);

}  // namespace popest::ml
