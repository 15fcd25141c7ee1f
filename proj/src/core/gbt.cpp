#include "gbt.hpp"

#include <algorithm>
#include <cmath>

#include "error.hpp"
#include "linear.hpp"

namespace popest::ml {

namespace {

constexpr double kProbabilityClamp = 1e-6;

TreeParams tree_params(const GbtParams& p) {
  TreeParams t;
  t.max_depth = p.max_depth;
  t.min_samples_leaf = p.min_samples_leaf;
  t.impurity = Impurity::variance;
  return t;
}

void check(const GbtParams& p) {
  if (p.n_rounds < 0) throw UsageError("gbt: n_rounds must be non-negative");
  if (!(p.learning_rate > 0.0)) throw UsageError("gbt: learning_rate must be positive");
}

}  // namespace

double initial_score(Loss loss, std::span<const double> y) {
  if (y.empty()) throw DataError("gbt: no labels");
  double sum = 0.0;
  for (double v : y) sum += v;
  const double mean = sum / static_cast<double>(y.size());
  if (loss == Loss::squared) return mean;
  const double p = std::clamp(mean, kProbabilityClamp, 1.0 - kProbabilityClamp);
  return std::log(p / (1.0 - p));
}

double negative_gradient(Loss loss, double score, double label) {
  return loss == Loss::squared ? label - score : label - sigmoid(score);
}

double training_loss(Loss loss, std::span<const double> scores,
                     std::span<const double> y) {
  double total = 0.0;
  for (std::size_t i = 0; i < y.size(); ++i) {
    if (loss == Loss::squared) {
      const double r = y[i] - scores[i];
      total += r * r;
    } else {
      const double z = scores[i];
      const double softplus =
          z > 0.0 ? z + std::log1p(std::exp(-z)) : std::log1p(std::exp(z));
      total += softplus - y[i] * z;
    }
  }
  return total / static_cast<double>(y.size());
}

GbtRoundResult gbt_round(std::span<const double> scores, const Dataset& data,
                         Loss loss, const GbtParams& params) {
  check(params);
  data.validate();
  if (scores.size() != data.rows()) throw DataError("gbt_round: score count mismatch");
  std::vector<double> gradient(data.rows());
  for (std::size_t i = 0; i < data.rows(); ++i) {
    gradient[i] = negative_gradient(loss, scores[i], data.y[i]);
  }
  TreeGrower grower(data.x);
  GbtRoundResult out;
  out.tree = grower.grow(gradient, {}, {}, tree_params(params));
  out.scores.assign(scores.begin(), scores.end());
  for (std::size_t i = 0; i < data.rows(); ++i) {
    out.scores[i] += params.learning_rate * out.tree.predict(data.x.row(i));
  }
  return out;
}

double GbtFit::raw_score(std::span<const double> row) const {
  double s = initial;
  for (const auto& t : trees) s += learning_rate * t.predict(row);
  return s;
}

GbtFit fit_gbt(const Dataset& data, Loss loss, const GbtParams& params) {
  check(params);
  data.validate();
  GbtFit fit;
  fit.loss = loss;
  fit.learning_rate = params.learning_rate;
  fit.initial = initial_score(loss, data.y);

  const std::size_t n = data.rows();
  std::vector<double> scores(n, fit.initial);
  std::vector<double> gradient(n);
  fit.loss_trace.push_back(training_loss(loss, scores, data.y));
  TreeGrower grower(data.x);
  const auto tp = tree_params(params);
  for (int round = 0; round < params.n_rounds; ++round) {
    for (std::size_t i = 0; i < n; ++i) {
      gradient[i] = negative_gradient(loss, scores[i], data.y[i]);
    }
    Tree tree = grower.grow(gradient, {}, {}, tp);
    for (std::size_t i = 0; i < n; ++i) {
      scores[i] += params.learning_rate * tree.predict(data.x.row(i));
    }
    fit.trees.push_back(std::move(tree));
    fit.loss_trace.push_back(training_loss(loss, scores, data.y));
  }
  return fit;
}

}  // namespace popest::ml
