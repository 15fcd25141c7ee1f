#include <doctest.h>

#include <cmath>
#include <numeric>

#include "core/cart.hpp"
#include "core/gbt.hpp"
#include "core/learners.hpp"
#include "support.hpp"

using namespace popest;
using namespace popest::ml;

namespace {

std::vector<std::size_t> iota(std::size_t n) {
  std::vector<std::size_t> v(n);
  std::iota(v.begin(), v.end(), 0);
  return v;
}

Dataset xor_data() {
  Dataset d;
  d.x = Matrix(4, 2, {0, 0, 0, 1, 1, 0, 1, 1});
  d.y = {0, 1, 1, 0};
  d.columns = {"a", "b"};
  return d;
}

// Exhaustive oracle for a single column: enumerate every midpoint.
double brute_gini_gain(const std::vector<double>& x, const std::vector<double>& y, double thr) {
  auto gini = [](double pos, double n) { return n == 0 ? 0 : 2 * (pos / n) * (1 - pos / n); };
  double nl = 0, pl = 0, nr = 0, pr = 0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    if (x[i] <= thr) {
      nl++;
      pl += y[i];
    } else {
      nr++;
      pr += y[i];
    }
  }
  const double n = nl + nr;
  return gini(pl + pr, n) - (nl / n) * gini(pl, nl) - (nr / n) * gini(pr, nr);
}

}  // namespace

TEST_CASE("best split on a clean step") {
  Matrix x(4, 1, {1, 2, 3, 4});
  std::vector<double> y{0, 0, 1, 1};
  const auto rows = iota(4);
  const std::vector<std::size_t> cols{0};
  const auto s = best_split(x, y, {}, rows, cols, Impurity::gini);
  REQUIRE(s);
  CHECK(s->column == 0);
  CHECK(s->threshold == 2.5);
  CHECK(s->gain == doctest::Approx(0.5));
}

TEST_CASE("best split returns none when nothing helps") {
  const std::vector<std::size_t> cols{0};
  Matrix x(3, 1, {1, 2, 3});
  std::vector<double> constant{1, 1, 1};
  CHECK_FALSE(best_split(x, constant, {}, iota(3), cols, Impurity::gini));
  Matrix same(2, 1, {5, 5});
  std::vector<double> y{0, 1};
  CHECK_FALSE(best_split(same, y, {}, iota(2), cols, Impurity::gini));
  // XOR: no single split reduces gini.
  const auto d = xor_data();
  const std::vector<std::size_t> both{0, 1};
  CHECK_FALSE(best_split(d.x, d.y, {}, iota(4), both, Impurity::gini));
  CHECK(best_split(d.x, d.y, {}, iota(4), both, Impurity::gini, {1, true}));
}

TEST_CASE("best split ties go to the lowest column") {
  Matrix x(4, 2, {1, 1, 2, 2, 3, 3, 4, 4});
  std::vector<double> y{0, 0, 1, 1};
  const std::vector<std::size_t> cols{0, 1};
  const auto s = best_split(x, y, {}, iota(4), cols, Impurity::gini);
  REQUIRE(s);
  CHECK(s->column == 0);
}

TEST_CASE("best split agrees with exhaustive enumeration") {
  Rng rng(17);
  for (int trial = 0; trial < 100; ++trial) {
    const std::size_t n = 2 + rng.below(25);
    std::vector<double> xs(n), y(n);
    for (std::size_t i = 0; i < n; ++i) {
      xs[i] = static_cast<double>(rng.below(8));
      y[i] = rng.bernoulli(0.5) ? 1 : 0;
    }
    Matrix x(n, 1, xs);
    const std::vector<std::size_t> cols{0};
    const auto s = best_split(x, y, {}, iota(n), cols, Impurity::gini);
    double best = 0;
    for (double t = 0.5; t < 8; t += 1.0) best = std::max(best, brute_gini_gain(xs, y, t));
    if (best < 1e-12) {
      CHECK_FALSE(s);
    } else {
      REQUIRE(s);
      CHECK(s->gain == doctest::Approx(best).epsilon(1e-9));
      CHECK(brute_gini_gain(xs, y, s->threshold) == doctest::Approx(best).epsilon(1e-9));
    }
  }
}

TEST_CASE("variance split gain") {
  Matrix x(4, 1, {1, 2, 3, 4});
  std::vector<double> y{1, 1, 5, 5};
  const std::vector<std::size_t> cols{0};
  const auto s = best_split(x, y, {}, iota(4), cols, Impurity::variance);
  REQUIRE(s);
  CHECK(s->threshold == 2.5);
  CHECK(s->gain == doctest::Approx(4.0));  // variance 4 -> 0
}

TEST_CASE("tree grower respects depth and memorizes distinct rows") {
  const auto d = testing::random_dataset(3, 40, 3, false);
  TreeGrower g(d.x);
  TreeParams p;
  p.max_depth = 0;
  p.min_samples_leaf = 1;
  const auto deep = g.grow(d.y, {}, {}, p);
  for (std::size_t i = 0; i < d.rows(); ++i) CHECK(deep.predict(d.x.row(i)) == doctest::Approx(d.y[i]));
  p.max_depth = 2;
  const auto shallow = g.grow(d.y, {}, {}, p);
  CHECK(shallow.depth() <= 2);
  CHECK(shallow.leaf_count() <= 4);
  const auto back = Tree::from_json(shallow.to_json());
  for (std::size_t i = 0; i < d.rows(); ++i) CHECK(back.predict(d.x.row(i)) == shallow.predict(d.x.row(i)));
}

TEST_CASE("gbt first-round facts") {
  CHECK(negative_gradient(Loss::logistic, 0.0, 1.0) == 0.5);
  CHECK(negative_gradient(Loss::squared, 1.0, 3.0) == 2.0);
  std::vector<double> y{0, 1, 1, 1};
  CHECK(initial_score(Loss::squared, y) == 0.75);
  CHECK(initial_score(Loss::logistic, y) == doctest::Approx(std::log(3.0)));

  Dataset d = testing::random_dataset(5, 30, 2, false);
  GbtParams p;
  p.n_rounds = 0;
  auto fit = fit_gbt(d, Loss::squared, p);
  CHECK(fit.trees.empty());
  const double mean = std::accumulate(d.y.begin(), d.y.end(), 0.0) / 30.0;
  CHECK(fit.raw_score(d.x.row(0)) == doctest::Approx(mean));

  p.n_rounds = 1;
  p.learning_rate = 1.0;
  p.max_depth = 0;
  fit = fit_gbt(d, Loss::squared, p);
  for (std::size_t i = 0; i < d.rows(); ++i) CHECK(fit.raw_score(d.x.row(i)) == doctest::Approx(d.y[i]));
}

TEST_CASE("gbt solves xor with depth-2 trees") {
  const auto d = xor_data();
  GbtParams p;
  p.n_rounds = 50;
  p.max_depth = 2;
  const auto fit = fit_gbt(d, Loss::logistic, p);
  for (std::size_t i = 0; i < 4; ++i) {
    CHECK((fit.raw_score(d.x.row(i)) > 0) == (d.y[i] == 1.0));
  }
}

TEST_CASE("gbt training loss never increases") {
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    for (auto loss : {Loss::squared, Loss::logistic}) {
      const auto d = testing::random_dataset(seed, 60, 3, loss == Loss::logistic, 0.8);
      GbtParams p;
      p.n_rounds = 30;
      const auto fit = fit_gbt(d, loss, p);
      REQUIRE(fit.loss_trace.size() == 31);
      for (std::size_t r = 1; r < fit.loss_trace.size(); ++r) {
        CHECK(fit.loss_trace[r] <= fit.loss_trace[r - 1] + 1e-12);
      }
    }
  }
}

TEST_CASE("one-tree forest without sampling is a plain tree") {
  const auto d = testing::random_dataset(8, 50, 4, true, 0.5);
  ForestParams fp;
  fp.n_trees = 1;
  fp.max_features = 4;
  fp.bootstrap = false;
  const auto forest = fit_random_forest(d, fp, 99);
  TreeParams tp;
  tp.max_depth = fp.max_depth;
  tp.min_samples_leaf = fp.min_samples_leaf;
  tp.impurity = Impurity::gini;
  const auto tree = TreeGrower(d.x).grow(d.y, {}, {}, tp);
  REQUIRE(forest.size() == 1);
  for (std::size_t i = 0; i < d.rows(); ++i) CHECK(forest[0].predict(d.x.row(i)) == tree.predict(d.x.row(i)));
}

TEST_CASE("forest is deterministic per seed") {
  const auto d = testing::random_dataset(9, 60, 4, true, 0.5);
  ForestParams fp;
  fp.n_trees = 10;
  const auto a = fit_random_forest(d, fp, 1);
  const auto b = fit_random_forest(d, fp, 1);
  const auto c = fit_random_forest(d, fp, 2);
  bool differs = false;
  for (std::size_t t = 0; t < a.size(); ++t) {
    CHECK(a[t].to_json() == b[t].to_json());
    differs = differs || a[t].to_json() != c[t].to_json();
  }
  CHECK(differs);
}

TEST_CASE("adaboost weights stay a distribution") {
  for (std::uint64_t seed = 0; seed < 10; ++seed) {
    const auto d = testing::random_dataset(seed, 50, 3, true, 1.0);
    const auto fit = fit_adaboost(d, 20, true);
    for (const auto& w : fit.weight_trace) {
      double s = 0;
      for (double v : w) {
        CHECK(v >= 0.0);
        s += v;
      }
      CHECK(std::abs(s - 1.0) < 1e-12);
    }
    for (std::size_t i = 0; i < d.rows(); ++i) {
      const double p = fit.probability(d.x.row(i));
      CHECK(p >= 0.0);
      CHECK(p <= 1.0);
    }
  }
}

TEST_CASE("adaboost stops on a perfect stump with capped weight") {
  Dataset d;
  d.x = Matrix(4, 1, {1, 2, 3, 4});
  d.y = {0, 0, 1, 1};
  d.columns = {"a"};
  const auto fit = fit_adaboost(d, 50);
  REQUIRE(fit.alphas.size() == 1);
  CHECK(fit.alphas[0] == doctest::Approx(std::log((1 - 1e-10) / 1e-10)));
}

TEST_CASE("knn facts") {
  Matrix pts(3, 1, {0, 1, 5});
  std::vector<double> labels{1, 0, 1};
  const std::vector<double> q1{1.0};
  CHECK(knn_predict(pts, labels, 1, q1) == 0.0);
  const std::vector<double> far{100.0};
  CHECK(knn_predict(pts, labels, 3, far) == doctest::Approx(2.0 / 3.0));
}
