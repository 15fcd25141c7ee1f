#include <doctest.h>

#include <cmath>
#include <set>

#include "core/error.hpp"
#include "core/evaluation.hpp"
#include "support.hpp"

using namespace popest;
using namespace popest::eval;

TEST_CASE("mse") {
  CHECK(metric_mse(std::vector<double>{1, 2}, std::vector<double>{1, 2}) == 0.0);
  CHECK(metric_mse(std::vector<double>{0, 0}, std::vector<double>{1, 1}) == 1.0);
  CHECK(metric_mse(std::vector<double>{0, 2}, std::vector<double>{1, 1}) == 1.0);
  CHECK_THROWS_AS(metric_mse(std::vector<double>{0}, std::vector<double>{1, 1}), DataError);
}

TEST_CASE("r2") {
  const std::vector<double> y{1, 2, 3, 6};
  CHECK(metric_r2(y, y) == 1.0);
  CHECK(metric_r2(y, std::vector<double>(4, 3.0)) == 0.0);
  CHECK(metric_r2(std::vector<double>{0, 1}, std::vector<double>{1, 0}) == -3.0);
  CHECK_THROWS_AS(metric_r2(std::vector<double>{2, 2}, std::vector<double>{2, 2}), DataError);
}

TEST_CASE("accuracy and f1") {
  const std::vector<double> y{1, 0, 1, 1};
  CHECK(metric_accuracy(y, y) == 1.0);
  CHECK(metric_f1(y, y) == 1.0);
  CHECK(metric_f1(y, std::vector<double>(4, 0.0)) == 0.0);
  // tp = 1, fp = 1, fn = 1
  CHECK(metric_f1(std::vector<double>{1, 0, 1}, std::vector<double>{1, 1, 0}) == 0.5);
  CHECK_THROWS_AS(metric_accuracy(std::vector<double>{2}, std::vector<double>{1}), DataError);
}

TEST_CASE("fold assignment partitions every repeat") {
  CvPlan plan{10, 10, false, 42};
  const auto folds = split_folds(100, {}, plan);
  REQUIRE(folds.size() == 10);
  std::vector<int> tested(100, 0);
  for (const auto& rep : folds) {
    std::vector<int> sizes(10, 0);
    for (std::size_t i = 0; i < 100; ++i) {
      CHECK(rep[i] < 10);
      sizes[rep[i]]++;
      tested[i]++;
    }
    for (int s : sizes) CHECK(s == 10);
  }
  for (int t : tested) CHECK(t == 10);
  CHECK(split_folds(100, {}, plan) == folds);
  CHECK(split_folds(100, {}, CvPlan{10, 10, false, 43}) != folds);
  CHECK_THROWS(split_folds(5, {}, plan));
}

TEST_CASE("uneven folds differ by at most one") {
  Rng rng(1);
  for (int t = 0; t < 50; ++t) {
    const auto k = 2 + rng.below(9);
    const auto n = k + rng.below(60);
    const auto folds = split_folds(n, {}, CvPlan{k, 2, false, rng.next_u64()});
    for (const auto& rep : folds) {
      std::vector<std::size_t> sizes(k, 0);
      for (auto f : rep) sizes[f]++;
      const auto [lo, hi] = std::minmax_element(sizes.begin(), sizes.end());
      CHECK(*hi - *lo <= 1);
    }
  }
}

TEST_CASE("stratified folds keep the class ratio") {
  std::vector<double> labels(100);
  for (std::size_t i = 0; i < 100; ++i) labels[i] = i % 2;
  const auto folds = split_folds(100, labels, CvPlan{10, 3, true, 5});
  for (const auto& rep : folds) {
    std::vector<int> pos(10, 0), neg(10, 0);
    for (std::size_t i = 0; i < 100; ++i) (labels[i] ? pos : neg)[rep[i]]++;
    for (int f = 0; f < 10; ++f) {
      CHECK(pos[f] == 5);
      CHECK(neg[f] == 5);
    }
  }
  Rng rng(6);
  for (int t = 0; t < 30; ++t) {
    const auto n = 20 + rng.below(80);
    std::vector<double> y(n);
    for (auto& v : y) v = rng.bernoulli(0.3) ? 1 : 0;
    for (const auto& rep : split_folds(n, y, CvPlan{5, 1, true, t + 0ULL})) {
      std::vector<int> pos(5, 0);
      for (std::size_t i = 0; i < n; ++i) pos[rep[i]] += static_cast<int>(y[i]);
      const auto [lo, hi] = std::minmax_element(pos.begin(), pos.end());
      CHECK(*hi - *lo <= 1);
    }
  }
}

TEST_CASE("summary uses the population standard deviation") {
  const auto s = summarize({1, 2, 3, 4});
  CHECK(s.mean == 2.5);
  CHECK(s.std == doctest::Approx(std::sqrt(1.25)).epsilon(1e-15));
}

TEST_CASE("cross validation report") {
  const auto d = testing::random_dataset(3, 100, 3, false);
  const auto spec = ml::LearnerSpec::make(ml::LearnerKind::mean_baseline);
  const auto r = cross_validate(spec, d, CvPlan{10, 10, false, 9}, {Metric::r2, Metric::mse});
  for (const auto& [name, m] : r.results) {
    CHECK(m.scores.size() == 100);
    double mean = 0;
    for (double v : m.scores) mean += v / 100.0;
    double var = 0;
    for (double v : m.scores) var += (v - mean) * (v - mean) / 100.0;
    CHECK(std::abs(m.mean - mean) < 1e-12);
    CHECK(std::abs(m.std - std::sqrt(var)) < 1e-12);
  }
  CHECK(r.results.at("r2").mean <= 0.0);
  const auto again = cross_validate(spec, d, CvPlan{10, 10, false, 9}, {Metric::r2, Metric::mse});
  CHECK(again.to_json() == r.to_json());
  CHECK(r.render_table().find("r2") != std::string::npos);

  const auto tiny = testing::random_dataset(4, 4, 1, false);
  const auto t = cross_validate(spec, tiny, CvPlan{2, 1, false, 1}, {Metric::mse});
  CHECK(t.results.at("mse").scores.size() == 2);
}

TEST_CASE("fold scaling statistics come from the training rows only") {
  const auto d = testing::random_dataset(7, 60, 3, true, 0.5);
  const auto spec = ml::LearnerSpec::make(ml::LearnerKind::logistic_regression);
  std::size_t checked = 0;
  cross_validate(spec, d, CvPlan{5, 2, true, 3}, {Metric::accuracy},
                 [&](std::size_t, std::size_t, const ml::Model& model,
                     const std::vector<std::size_t>& train_rows) {
                   REQUIRE(model.scaler());
                   const auto expect = ColumnStats::of(d.x.select_rows(train_rows));
                   CHECK(model.scaler()->mean == expect.mean);
                   CHECK(model.scaler()->sd == expect.sd);
                   ++checked;
                 });
  CHECK(checked == 10);
}

TEST_CASE("fit errors name the fold") {
  // A fold whose training split holds a single class still fits; labels of
  // 2 do not.
  auto d = testing::random_dataset(8, 20, 2, true);
  d.y[3] = 2;
  try {
    cross_validate(ml::LearnerSpec::make(ml::LearnerKind::gbt_classifier), d,
                   CvPlan{2, 1, false, 1}, {Metric::accuracy});
    FAIL("expected an error");
  } catch (const std::exception& e) {
    CHECK(std::string(e.what()).find("repeat 0, fold") != std::string::npos);
  }
}

TEST_CASE("cross-dataset evaluation") {
  const auto a = testing::random_dataset(1, 50, 2, false);
  const auto spec = ml::LearnerSpec::make(ml::LearnerKind::elastic_net);
  const auto same = cross_dataset_eval(spec, a, a, {Metric::mse});
  const auto model = ml::fit(spec, a);
  CHECK(same.results.at("mse").mean == metric_mse(a.y, model.predict(a.x)));
  CHECK(same.results.at("mse").scores.size() == 1);

  // Mean baseline on a disjoint set: R2 = -n (m_train - m_test)^2 / SS_tot.
  auto b = testing::random_dataset(2, 40, 2, false);
  for (auto& y : b.y) y += 1.0;
  const auto base = ml::LearnerSpec::make(ml::LearnerKind::mean_baseline);
  const auto r = cross_dataset_eval(base, a, b, {Metric::r2});
  double ma = 0, mb = 0, ss = 0;
  for (double y : a.y) ma += y / 50.0;
  for (double y : b.y) mb += y / 40.0;
  for (double y : b.y) ss += (y - mb) * (y - mb);
  CHECK(r.results.at("r2").mean == doctest::Approx(-40.0 * (ma - mb) * (ma - mb) / ss));

  auto c = b;
  c.columns = {"x0", "other"};
  CHECK_THROWS(cross_dataset_eval(spec, a, c, {Metric::mse}));
}
