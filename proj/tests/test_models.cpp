#include <doctest.h>

#include <json.hpp>

#include "core/error.hpp"
#include "core/model.hpp"
#include "support.hpp"

using namespace popest;
using namespace popest::ml;

namespace {

const std::vector<LearnerKind> kAll{
    LearnerKind::mean_baseline, LearnerKind::mode_baseline,   LearnerKind::elastic_net,
    LearnerKind::logistic_regression, LearnerKind::knn,      LearnerKind::decision_tree,
    LearnerKind::random_forest, LearnerKind::adaboost,        LearnerKind::gbt_regressor,
    LearnerKind::gbt_classifier};

Dataset column(std::vector<double> x, std::vector<double> y) {
  Dataset d;
  const auto n = x.size();
  d.x = Matrix(n, 1, std::move(x));
  d.y = std::move(y);
  d.columns = {"x"};
  return d;
}

LearnerSpec small_spec(LearnerKind kind, std::uint64_t seed = 0) {
  std::map<std::string, double> over;
  if (kind == LearnerKind::random_forest) over["n_trees"] = 10;
  if (kind == LearnerKind::gbt_regressor || kind == LearnerKind::gbt_classifier) {
    over["n_rounds"] = 20;
  }
  return LearnerSpec::make(kind, over, seed);
}

}  // namespace

TEST_CASE("spec defaults and validation") {
  auto s = LearnerSpec::make(LearnerKind::elastic_net);
  CHECK(s.param("l1") == 0.01);
  CHECK(s.param("l2") == 0.01);
  CHECK(s.param("max_sweeps") == 1000);
  CHECK(s.task == Task::regression);
  s = LearnerSpec::make(LearnerKind::random_forest);
  CHECK(s.param("n_trees") == 100);
  CHECK(s.task == Task::classification);
  CHECK(LearnerSpec::make(LearnerKind::gbt_classifier).param("learning_rate") == 0.1);
  CHECK(LearnerSpec::make(LearnerKind::knn).param("k") == 5);
  CHECK(LearnerSpec::make(LearnerKind::adaboost).param("n_estimators") == 50);
  CHECK_THROWS_AS(LearnerSpec::make(LearnerKind::knn, {{"k", 0}}), UsageError);
  CHECK_THROWS_AS(LearnerSpec::make(LearnerKind::knn, {{"depth", 1}}), UsageError);
  CHECK_THROWS_AS(parse_learner_kind("svr"), UsageError);
  CHECK_THROWS_AS(LearnerSpec::make(LearnerKind::logistic_regression, {}, 0, Task::regression),
                  UsageError);
  for (auto k : kAll) {
    const auto spec = LearnerSpec::make(k, {}, 7);
    const auto back = LearnerSpec::from_json(nlohmann::json::parse(spec.to_json().dump()));
    CHECK(back.kind == spec.kind);
    CHECK(back.task == spec.task);
    CHECK(back.hyperparameters == spec.hyperparameters);
    CHECK(back.seed == 7);
    CHECK(spec.to_json().contains("seed"));
  }
}

TEST_CASE("baselines") {
  auto m = fit(LearnerSpec::make(LearnerKind::mean_baseline), column({0, 0, 0}, {1, 2, 3}));
  CHECK(m.predict(Matrix(3, 1, {9, -4, 0})) == std::vector<double>{2, 2, 2});
  m = fit(LearnerSpec::make(LearnerKind::mode_baseline), column({0, 0, 0}, {0, 0, 1}));
  CHECK(m.predict(Matrix(1, 1, {5}))[0] == 0.0);
  // Ties go to the first label seen.
  m = fit(LearnerSpec::make(LearnerKind::mode_baseline), column({0, 0}, {1, 0}));
  CHECK(m.predict(Matrix(1, 1, {5}))[0] == 1.0);
}

TEST_CASE("elastic net without penalty recovers a line") {
  const auto spec = LearnerSpec::make(LearnerKind::elastic_net,
                                      {{"l1", 0}, {"l2", 0}, {"tolerance", 1e-12}, {"max_sweeps", 100000}});
  const auto m = fit(spec, column({1, 2, 3}, {2, 4, 6}));
  const auto p = m.predict(Matrix(2, 1, {0, 10}));
  CHECK(p[0] == doctest::Approx(0.0).epsilon(1e-6));
  CHECK(p[1] == doctest::Approx(20.0).epsilon(1e-6));
}

TEST_CASE("gbt classifier fits xor") {
  Dataset d;
  d.x = Matrix(4, 2, {0, 0, 0, 1, 1, 0, 1, 1});
  d.y = {0, 1, 1, 0};
  d.columns = {"a", "b"};
  const auto m = fit(LearnerSpec::make(LearnerKind::gbt_classifier, {{"max_depth", 2}, {"n_rounds", 50}}), d);
  CHECK(m.classify(d.x, 0.5) == std::vector<int>{0, 1, 1, 0});
}

TEST_CASE("knn facts") {
  const auto d = testing::random_dataset(4, 30, 2, false);
  auto m = fit(LearnerSpec::make(LearnerKind::knn, {{"k", 1}}, 0, Task::regression), d);
  for (std::size_t i = 0; i < d.rows(); ++i) CHECK(m.predict_row(d.x.row(i)) == d.y[i]);
  m = fit(LearnerSpec::make(LearnerKind::knn, {{"k", 30}}, 0, Task::regression), d);
  double mean = 0;
  for (double y : d.y) mean += y / 30.0;
  const auto q = testing::random_dataset(5, 5, 2, false);
  for (std::size_t i = 0; i < 5; ++i) CHECK(m.predict_row(q.x.row(i)) == doctest::Approx(mean));
}

TEST_CASE("logistic regression with zero coefficients predicts one half") {
  const auto m = fit(LearnerSpec::make(LearnerKind::logistic_regression),
                     column({-1, 1, -1, 1}, {0, 0, 1, 1}));
  for (double p : m.predict(Matrix(3, 1, {-3, 0, 7}))) CHECK(p == 0.5);
}

TEST_CASE("classify thresholds") {
  const auto m = fit(LearnerSpec::make(LearnerKind::logistic_regression),
                     column({-1, 1, -1, 1}, {0, 0, 1, 1}));
  CHECK(m.classify(Matrix(1, 1, {0}), 0.5) == std::vector<int>{1});
  CHECK(m.classify(Matrix(1, 1, {0}), 0.6) == std::vector<int>{0});
  CHECK_THROWS_AS(m.classify(Matrix(1, 1, {0}), 0.0), UsageError);
  CHECK_THROWS_AS(m.classify(Matrix(1, 1, {0}), 1.0), UsageError);
  const auto r = fit(LearnerSpec::make(LearnerKind::mean_baseline), column({0, 1}, {0, 1}));
  CHECK_THROWS_AS(r.classify(Matrix(1, 1, {0}), 0.5), UsageError);
}

TEST_CASE("fit preconditions") {
  Dataset empty;
  empty.x = Matrix(0, 1);
  empty.columns = {"x"};
  CHECK_THROWS_AS(fit(LearnerSpec::make(LearnerKind::mean_baseline), empty), DataError);
  CHECK_THROWS_AS(fit(LearnerSpec::make(LearnerKind::gbt_classifier), column({1, 2}, {0, 2})),
                  DataError);
  const auto m = fit(LearnerSpec::make(LearnerKind::mean_baseline), column({1, 2}, {0, 1}));
  CHECK_THROWS(m.predict(Matrix(1, 2, {1, 2})));
}

TEST_CASE("every learner is deterministic and round-trips through json") {
  const auto reg = testing::random_dataset(11, 60, 3, false);
  const auto cls = testing::random_dataset(12, 60, 3, true, 0.6);
  const auto query = testing::random_dataset(13, 25, 3, false);
  for (auto kind : kAll) {
    CAPTURE(to_string(kind));
    const auto spec = small_spec(kind, 5);
    const auto& data = spec.task == Task::regression ? reg : cls;
    const auto a = fit(spec, data);
    const auto b = fit(spec, data);
    const auto pa = a.predict(query.x);
    CHECK(pa == b.predict(query.x));
    const auto back = Model::from_json(a.to_json());
    CHECK(back.predict(query.x) == pa);
    CHECK(back.to_json() == a.to_json());
    if (spec.task == Task::classification) {
      for (double p : pa) {
        CHECK(p >= 0.0);
        CHECK(p <= 1.0);
      }
    }
  }
}

TEST_CASE("standardization applies to scale-sensitive learners only") {
  const auto d = testing::random_dataset(14, 40, 2, true);
  CHECK(fit(LearnerSpec::make(LearnerKind::knn), d).scaler().has_value());
  CHECK(fit(LearnerSpec::make(LearnerKind::logistic_regression), d).scaler().has_value());
  CHECK_FALSE(fit(small_spec(LearnerKind::random_forest), d).scaler().has_value());
  CHECK_FALSE(fit(LearnerSpec::make(LearnerKind::decision_tree), d).scaler().has_value());
}

TEST_CASE("model json carries version and kind") {
  const auto m = fit(LearnerSpec::make(LearnerKind::mean_baseline), column({1, 2}, {0, 1}));
  const auto j = nlohmann::json::parse(m.to_json());
  CHECK(j.at("version") == "1");
  CHECK(j.at("spec").at("kind") == "mean_baseline");
  CHECK_THROWS(Model::from_json(R"({"version":"2"})"));
}
