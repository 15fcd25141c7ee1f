#include "learners.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "error.hpp"
#include "linear.hpp"
#include "rng.hpp"

namespace popest::ml {

double knn_predict(const Matrix& points, std::span<const double> labels,
                   std::size_t k, std::span<const double> query) {
  const std::size_t n = points.rows();
  if (n == 0) throw DataError("knn: no stored points");
  k = std::clamp<std::size_t>(k, 1, n);
  std::vector<std::pair<double, std::size_t>> dist(n);
  for (std::size_t i = 0; i < n; ++i) {
    const auto row = points.row(i);
    double d = 0.0;
    for (std::size_t c = 0; c < row.size(); ++c) {
      const double diff = row[c] - query[c];
      d += diff * diff;
    }
    dist[i] = {d, i};
  }
  std::partial_sort(dist.begin(), dist.begin() + static_cast<std::ptrdiff_t>(k),
                    dist.end());
  double sum = 0.0;
  for (std::size_t i = 0; i < k; ++i) sum += labels[dist[i].second];
  return sum / static_cast<double>(k);
}

std::vector<Tree> fit_random_forest(const Dataset& data, const ForestParams& params,
                                    std::uint64_t seed) {
  data.validate();
  if (params.n_trees == 0) throw UsageError("random forest: n_trees must be positive");
  const std::size_t n = data.rows();
  TreeParams tp;
  tp.max_depth = params.max_depth;
  tp.min_samples_leaf = params.min_samples_leaf;
  tp.impurity = params.impurity;
  tp.max_features = params.max_features != 0
                        ? params.max_features
                        : std::max<std::size_t>(
                              1, static_cast<std::size_t>(std::floor(
                                     std::sqrt(static_cast<double>(data.cols())))));

  TreeGrower grower(data.x);
  std::vector<Tree> trees;
  trees.reserve(params.n_trees);
  std::vector<std::size_t> rows;
  for (std::size_t t = 0; t < params.n_trees; ++t) {
    Rng rng = Rng::derive(seed, "forest", t);
    rows.clear();
    if (params.bootstrap) {
      for (std::size_t i = 0; i < n; ++i) rows.push_back(static_cast<std::size_t>(rng.below(n)));
    }
    trees.push_back(grower.grow(data.y, {}, rows, tp, &rng));
  }
  return trees;
}

double AdaBoostFit::probability(std::span<const double> row) const {
  double f = 0.0;
  for (std::size_t t = 0; t < stumps.size(); ++t) {
    f += alphas[t] * (stumps[t].predict(row) >= 0.5 ? 1.0 : -1.0);
  }
  return sigmoid(2.0 * f);
}

AdaBoostFit fit_adaboost(const Dataset& data, std::size_t n_estimators,
                         bool keep_weight_trace) {
  data.validate();
  if (n_estimators == 0) throw UsageError("adaboost: n_estimators must be positive");
  const std::size_t n = data.rows();
  std::vector<double> w(n, 1.0 / static_cast<double>(n));
  TreeParams stump;
  stump.max_depth = 1;
  stump.min_samples_leaf = 1;
  stump.impurity = Impurity::gini;
  TreeGrower grower(data.x);

  AdaBoostFit fit;
  for (std::size_t round = 0; round < n_estimators; ++round) {
    Tree tree = grower.grow(data.y, w, {}, stump);
    std::vector<char> miss(n);
    double err = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      const double pred = tree.predict(data.x.row(i)) >= 0.5 ? 1.0 : 0.0;
      miss[i] = pred != data.y[i];
      if (miss[i]) err += w[i];
    }
    if (err >= 0.5) {
      // No better than chance; keep it only if nothing else exists.
      if (fit.stumps.empty()) {
        fit.stumps.push_back(std::move(tree));
        fit.alphas.push_back(0.0);
      }
      break;
    }
    const double eps = std::max(err, 1e-10);
    const double alpha = std::log((1.0 - eps) / eps);
    fit.stumps.push_back(std::move(tree));
    fit.alphas.push_back(alpha);
    if (err <= 0.0) break;

    double total = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      if (miss[i]) w[i] *= std::exp(alpha);
      total += w[i];
    }
    for (double& v : w) v /= total;
    if (keep_weight_trace) fit.weight_trace.push_back(w);
  }
  return fit;
}

}  // namespace popest::ml
