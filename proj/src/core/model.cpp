#include "model.hpp"

#include <algorithm>
#include <cmath>
#include <set>

#include "cart.hpp"
#include "error.hpp"
#include "gbt.hpp"
#include "learners.hpp"
#include "linear.hpp"

namespace popest::ml {

namespace {

constexpr std::pair<LearnerKind, std::string_view> kKindNames[] = {
    {LearnerKind::mean_baseline, "mean_baseline"},
    {LearnerKind::mode_baseline, "mode_baseline"},
    {LearnerKind::elastic_net, "elastic_net"},
    {LearnerKind::logistic_regression, "logistic_regression"},
    {LearnerKind::knn, "knn"},
    {LearnerKind::decision_tree, "decision_tree"},
    {LearnerKind::random_forest, "random_forest"},
    {LearnerKind::adaboost, "adaboost"},
    {LearnerKind::gbt_regressor, "gbt_regressor"},
    {LearnerKind::gbt_classifier, "gbt_classifier"},
};

std::map<std::string, double> defaults_for(LearnerKind kind) {
  switch (kind) {
    case LearnerKind::mean_baseline:
    case LearnerKind::mode_baseline:
      return {};
    case LearnerKind::elastic_net:
      return {{"l1", 0.01}, {"l2", 0.01}, {"max_sweeps", 1000}, {"tolerance", 1e-6}};
    case LearnerKind::logistic_regression:
      return {{"step", 0.1}, {"max_iterations", 5000}, {"tolerance", 1e-8}};
    case LearnerKind::knn:
      return {{"k", 5}};
    case LearnerKind::decision_tree:
      return {{"max_depth", 6}, {"min_samples_leaf", 2}};
    case LearnerKind::random_forest:
      return {{"n_trees", 100}, {"max_features", 0}, {"bootstrap", 1},
              {"max_depth", 6}, {"min_samples_leaf", 2}};
    case LearnerKind::adaboost:
      return {{"n_estimators", 50}};
    case LearnerKind::gbt_regressor:
    case LearnerKind::gbt_classifier:
      return {{"n_rounds", 100}, {"max_depth", 3}, {"learning_rate", 0.1},
              {"min_samples_leaf", 1}};
  }
  return {};
}

std::optional<Task> fixed_task(LearnerKind kind) {
  switch (kind) {
    case LearnerKind::mean_baseline:
    case LearnerKind::elastic_net:
    case LearnerKind::gbt_regressor:
      return Task::regression;
    case LearnerKind::logistic_regression:
    case LearnerKind::adaboost:
    case LearnerKind::gbt_classifier:
      return Task::classification;
    default:
      return std::nullopt;
  }
}

bool is_integer(double v) { return std::isfinite(v) && v == std::floor(v); }

void validate_params(const LearnerSpec& s) {
  auto need = [&](const char* name, bool ok, const char* what) {
    if (!ok) {
      throw UsageError(std::string(to_string(s.kind)) + ": hyperparameter '" + name +
                       "' must be " + what);
    }
  };
  for (const auto& [name, v] : s.hyperparameters) {
    if (!std::isfinite(v)) need(name.c_str(), false, "finite");
  }
  const auto& h = s.hyperparameters;
  auto get = [&](const char* n) { return h.at(n); };
  switch (s.kind) {
    case LearnerKind::elastic_net:
      need("l1", get("l1") >= 0, "non-negative");
      need("l2", get("l2") >= 0, "non-negative");
      need("max_sweeps", is_integer(get("max_sweeps")) && get("max_sweeps") >= 1,
           "a positive integer");
      need("tolerance", get("tolerance") > 0, "positive");
      break;
    case LearnerKind::logistic_regression:
      need("step", get("step") > 0, "positive");
      need("max_iterations",
           is_integer(get("max_iterations")) && get("max_iterations") >= 1,
           "a positive integer");
      need("tolerance", get("tolerance") >= 0, "non-negative");
      break;
    case LearnerKind::knn:
      need("k", is_integer(get("k")) && get("k") >= 1, "a positive integer");
      break;
    case LearnerKind::decision_tree:
      need("max_depth", is_integer(get("max_depth")), "an integer (<= 0: unlimited)");
      need("min_samples_leaf",
           is_integer(get("min_samples_leaf")) && get("min_samples_leaf") >= 1,
           "a positive integer");
      break;
    case LearnerKind::random_forest:
      need("n_trees", is_integer(get("n_trees")) && get("n_trees") >= 1,
           "a positive integer");
      need("max_features", is_integer(get("max_features")) && get("max_features") >= 0,
           "a non-negative integer (0: sqrt of the column count)");
      need("bootstrap", get("bootstrap") == 0 || get("bootstrap") == 1, "0 or 1");
      need("max_depth", is_integer(get("max_depth")), "an integer (<= 0: unlimited)");
      need("min_samples_leaf",
           is_integer(get("min_samples_leaf")) && get("min_samples_leaf") >= 1,
           "a positive integer");
      break;
    case LearnerKind::adaboost:
      need("n_estimators", is_integer(get("n_estimators")) && get("n_estimators") >= 1,
           "a positive integer");
      break;
    case LearnerKind::gbt_regressor:
    case LearnerKind::gbt_classifier:
      need("n_rounds", is_integer(get("n_rounds")) && get("n_rounds") >= 0,
           "a non-negative integer");
      need("max_depth", is_integer(get("max_depth")), "an integer (<= 0: unlimited)");
      need("learning_rate", get("learning_rate") > 0, "positive");
      need("min_samples_leaf",
           is_integer(get("min_samples_leaf")) && get("min_samples_leaf") >= 1,
           "a positive integer");
      break;
    default:
      break;
  }
}

nlohmann::json trees_json(const std::vector<Tree>& trees) {
  auto arr = nlohmann::json::array();
  for (const auto& t : trees) arr.push_back(t.to_json());
  return arr;
}

std::vector<Tree> trees_from(const nlohmann::json& j) {
  std::vector<Tree> out;
  for (const auto& t : j) out.push_back(Tree::from_json(t));
  return out;
}

}  // namespace

namespace detail {

class Learner {
 public:
  virtual ~Learner() = default;
  virtual double predict(std::span<const double> row) const = 0;
  virtual nlohmann::json state() const = 0;
};

namespace {

class Constant final : public Learner {
 public:
  explicit Constant(double v) : value_(v) {}
  double predict(std::span<const double>) const override { return value_; }
  nlohmann::json state() const override { return {{"value", value_}}; }

 private:
  double value_;
};

class Linear final : public Learner {
 public:
  Linear(std::vector<double> w, double b, bool logistic)
      : w_(std::move(w)), b_(b), logistic_(logistic) {}
  double predict(std::span<const double> row) const override {
    double z = b_;
    for (std::size_t j = 0; j < w_.size(); ++j) z += w_[j] * row[j];
    return logistic_ ? sigmoid(z) : z;
  }
  nlohmann::json state() const override {
    return {{"weights", w_}, {"intercept", b_}};
  }

 private:
  std::vector<double> w_;
  double b_;
  bool logistic_;
};

class Knn final : public Learner {
 public:
  Knn(Matrix points, std::vector<double> labels, std::size_t k)
      : points_(std::move(points)), labels_(std::move(labels)), k_(k) {}
  double predict(std::span<const double> row) const override {
    return knn_predict(points_, labels_, k_, row);
  }
  nlohmann::json state() const override {
    return {{"rows", points_.rows()},
            {"cols", points_.cols()},
            {"points", points_.data()},
            {"labels", labels_}};
  }

 private:
  Matrix points_;
  std::vector<double> labels_;
  std::size_t k_;
};

class Forest final : public Learner {
 public:
  explicit Forest(std::vector<Tree> trees) : trees_(std::move(trees)) {}
  double predict(std::span<const double> row) const override {
    double s = 0.0;
    for (const auto& t : trees_) s += t.predict(row);
    return s / static_cast<double>(trees_.size());
  }
  nlohmann::json state() const override { return {{"trees", trees_json(trees_)}}; }

 private:
  std::vector<Tree> trees_;
};

class Boosted final : public Learner {
 public:
  explicit Boosted(AdaBoostFit fit) : fit_(std::move(fit)) {}
  double predict(std::span<const double> row) const override {
    return fit_.probability(row);
  }
  nlohmann::json state() const override {
    return {{"stumps", trees_json(fit_.stumps)}, {"alphas", fit_.alphas}};
  }

 private:
  AdaBoostFit fit_;
};

class Gradient final : public Learner {
 public:
  explicit Gradient(GbtFit fit) : fit_(std::move(fit)) {}
  double predict(std::span<const double> row) const override {
    const double s = fit_.raw_score(row);
    return fit_.loss == Loss::logistic ? sigmoid(s) : s;
  }
  nlohmann::json state() const override {
    return {{"initial", fit_.initial},
            {"learning_rate", fit_.learning_rate},
            {"trees", trees_json(fit_.trees)}};
  }

 private:
  GbtFit fit_;
};

double mode_of(std::span<const double> y) {
  // Most frequent value; ties go to the value seen first.
  std::vector<std::pair<double, std::size_t>> counts;
  for (double v : y) {
    auto it = std::find_if(counts.begin(), counts.end(),
                           [&](const auto& p) { return p.first == v; });
    if (it == counts.end()) counts.emplace_back(v, 1);
    else ++it->second;
  }
  auto best = counts.begin();
  for (auto it = counts.begin(); it != counts.end(); ++it) {
    if (it->second > best->second) best = it;
  }
  return best->first;
}

std::shared_ptr<const Learner> train(const LearnerSpec& spec, const Dataset& d) {
  const auto p = [&](const char* n) { return spec.param(n); };
  const auto as_size = [&](const char* n) { return static_cast<std::size_t>(p(n)); };
  switch (spec.kind) {
    case LearnerKind::mean_baseline: {
      double s = 0.0;
      for (double v : d.y) s += v;
      return std::make_shared<Constant>(s / static_cast<double>(d.y.size()));
    }
    case LearnerKind::mode_baseline:
      return std::make_shared<Constant>(mode_of(d.y));
    case LearnerKind::elastic_net: {
      ElasticNetParams ep{p("l1"), p("l2"), static_cast<int>(p("max_sweeps")),
                          p("tolerance")};
      auto f = fit_elastic_net(d.x, d.y, ep);
      return std::make_shared<Linear>(std::move(f.weights), f.intercept, false);
    }
    case LearnerKind::logistic_regression: {
      LogisticParams lp{p("step"), static_cast<int>(p("max_iterations")), p("tolerance")};
      auto f = fit_logistic(d.x, d.y, lp);
      return std::make_shared<Linear>(std::move(f.weights), f.intercept, true);
    }
    case LearnerKind::knn:
      return std::make_shared<Knn>(d.x, d.y, as_size("k"));
    case LearnerKind::decision_tree:
    case LearnerKind::random_forest: {
      ForestParams fp;
      fp.max_depth = static_cast<int>(p("max_depth"));
      fp.min_samples_leaf = as_size("min_samples_leaf");
      fp.impurity = spec.task == Task::classification ? Impurity::gini : Impurity::variance;
      if (spec.kind == LearnerKind::decision_tree) {
        TreeGrower grower(d.x);
        TreeParams tp{fp.max_depth, fp.min_samples_leaf, 0, fp.impurity};
        std::vector<Tree> one;
        one.push_back(grower.grow(d.y, {}, {}, tp));
        return std::make_shared<Forest>(std::move(one));
      }
      fp.n_trees = as_size("n_trees");
      fp.max_features = as_size("max_features");
      fp.bootstrap = p("bootstrap") != 0.0;
      return std::make_shared<Forest>(fit_random_forest(d, fp, spec.seed));
    }
    case LearnerKind::adaboost:
      return std::make_shared<Boosted>(fit_adaboost(d, as_size("n_estimators")));
    case LearnerKind::gbt_regressor:
    case LearnerKind::gbt_classifier: {
      GbtParams gp{static_cast<int>(p("n_rounds")), static_cast<int>(p("max_depth")),
                   p("learning_rate"), as_size("min_samples_leaf")};
      const auto loss =
          spec.kind == LearnerKind::gbt_regressor ? Loss::squared : Loss::logistic;
      return std::make_shared<Gradient>(fit_gbt(d, loss, gp));
    }
  }
  throw UsageError("unknown learner kind");
}

std::shared_ptr<const Learner> restore(const LearnerSpec& spec, const nlohmann::json& s,
                                       std::size_t n_features) {
  switch (spec.kind) {
    case LearnerKind::mean_baseline:
    case LearnerKind::mode_baseline:
      return std::make_shared<Constant>(s.at("value").get<double>());
    case LearnerKind::elastic_net:
    case LearnerKind::logistic_regression: {
      auto w = s.at("weights").get<std::vector<double>>();
      if (w.size() != n_features) throw DataError("model: weight count mismatch");
      return std::make_shared<Linear>(std::move(w), s.at("intercept").get<double>(),
                                      spec.kind == LearnerKind::logistic_regression);
    }
    case LearnerKind::knn: {
      const auto rows = s.at("rows").get<std::size_t>();
      const auto cols = s.at("cols").get<std::size_t>();
      if (cols != n_features) throw DataError("model: knn width mismatch");
      Matrix points(rows, cols, s.at("points").get<std::vector<double>>());
      auto labels = s.at("labels").get<std::vector<double>>();
      if (labels.size() != rows) throw DataError("model: knn label count mismatch");
      return std::make_shared<Knn>(std::move(points), std::move(labels),
                                   static_cast<std::size_t>(spec.param("k")));
    }
    case LearnerKind::decision_tree:
    case LearnerKind::random_forest: {
      auto trees = trees_from(s.at("trees"));
      if (trees.empty()) throw DataError("model: forest without trees");
      return std::make_shared<Forest>(std::move(trees));
    }
    case LearnerKind::adaboost: {
      AdaBoostFit f;
      f.stumps = trees_from(s.at("stumps"));
      f.alphas = s.at("alphas").get<std::vector<double>>();
      if (f.alphas.size() != f.stumps.size()) throw DataError("model: alpha count mismatch");
      return std::make_shared<Boosted>(std::move(f));
    }
    case LearnerKind::gbt_regressor:
    case LearnerKind::gbt_classifier: {
      GbtFit f;
      f.loss = spec.kind == LearnerKind::gbt_regressor ? Loss::squared : Loss::logistic;
      f.initial = s.at("initial").get<double>();
      f.learning_rate = s.at("learning_rate").get<double>();
      f.trees = trees_from(s.at("trees"));
      return std::make_shared<Gradient>(std::move(f));
    }
  }
  throw DataError("model: unknown kind");
}

}  // namespace
}  // namespace detail

std::string_view to_string(LearnerKind kind) {
  for (const auto& [k, name] : kKindNames) {
    if (k == kind) return name;
  }
  return "unknown";
}

LearnerKind parse_learner_kind(std::string_view name) {
  for (const auto& [k, n] : kKindNames) {
    if (n == name) return k;
  }
  throw UsageError("unknown learner kind '" + std::string(name) + "'");
}

std::string_view to_string(Task task) {
  return task == Task::regression ? "regression" : "classification";
}

bool uses_standardization(LearnerKind kind) {
  return kind == LearnerKind::elastic_net || kind == LearnerKind::logistic_regression ||
         kind == LearnerKind::knn;
}

LearnerSpec LearnerSpec::make(LearnerKind kind,
                              const std::map<std::string, double>& overrides,
                              std::uint64_t seed, std::optional<Task> task) {
  LearnerSpec s;
  s.kind = kind;
  s.seed = seed;
  s.hyperparameters = defaults_for(kind);
  for (const auto& [name, value] : overrides) {
    if (!s.hyperparameters.contains(name)) {
      throw UsageError(std::string(to_string(kind)) + ": unknown hyperparameter '" +
                       name + "'");
    }
    s.hyperparameters[name] = value;
  }
  if (auto fixed = fixed_task(kind)) {
    if (task && *task != *fixed) {
      throw UsageError(std::string(to_string(kind)) + " only supports " +
                       std::string(to_string(*fixed)));
    }
    s.task = *fixed;
  } else {
    s.task = task.value_or(Task::classification);
  }
  validate_params(s);
  return s;
}

double LearnerSpec::param(const std::string& name) const {
  auto it = hyperparameters.find(name);
  if (it == hyperparameters.end()) {
    throw UsageError(std::string(to_string(kind)) + ": no hyperparameter '" + name + "'");
  }
  return it->second;
}

nlohmann::ordered_json LearnerSpec::to_json() const {
  nlohmann::ordered_json j;
  j["kind"] = std::string(to_string(kind));
  j["task"] = std::string(to_string(task));
  j["hyperparameters"] = nlohmann::ordered_json::object();
  for (const auto& [name, value] : hyperparameters) j["hyperparameters"][name] = value;
  j["seed"] = seed;
  return j;
}

LearnerSpec LearnerSpec::from_json(const nlohmann::json& j) {
  try {
    if (!j.is_object()) throw UsageError("learner spec must be a JSON object");
    for (auto it = j.begin(); it != j.end(); ++it) {
      static const std::set<std::string> keys = {"kind", "task", "hyperparameters",
                                                 "seed"};
      if (!keys.contains(it.key())) {
        throw UsageError("learner spec: unknown field '" + it.key() + "'");
      }
    }
    const auto kind = parse_learner_kind(j.at("kind").get<std::string>());
    std::optional<Task> task;
    if (j.contains("task")) {
      const auto t = j.at("task").get<std::string>();
      if (t == "regression") task = Task::regression;
      else if (t == "classification") task = Task::classification;
      else throw UsageError("learner spec: unknown task '" + t + "'");
    }
    std::map<std::string, double> overrides;
    if (j.contains("hyperparameters")) {
      for (auto it = j.at("hyperparameters").begin(); it != j.at("hyperparameters").end();
           ++it) {
        overrides[it.key()] = it.value().get<double>();
      }
    }
    const std::uint64_t seed = j.value("seed", std::uint64_t{0});
    return make(kind, overrides, seed, task);
  } catch (const nlohmann::json::exception& e) {
    throw UsageError(std::string("learner spec: ") + e.what());
  }
}

Model fit(const LearnerSpec& spec, const Dataset& data) {
  data.validate();
  if (spec.task == Task::classification) {
    for (double v : data.y) {
      if (v != 0.0 && v != 1.0) {
        throw DataError(std::string(to_string(spec.kind)) +
                        ": classification labels must be 0 or 1");
      }
    }
  }
  Model m;
  m.spec_ = spec;
  m.n_features_ = data.cols();
  if (uses_standardization(spec.kind)) {
    m.scaler_ = ColumnStats::of(data.x);
    Dataset scaled{m.scaler_->standardize(data.x), data.y, data.columns};
    m.learner_ = detail::train(spec, scaled);
  } else {
    m.learner_ = detail::train(spec, data);
  }
  return m;
}

double Model::predict_row(std::span<const double> row) const {
  if (row.size() != n_features_) {
    throw DataError("predict: expected " + std::to_string(n_features_) +
                    " columns, got " + std::to_string(row.size()));
  }
  if (scaler_) {
    std::vector<double> scaled(row.size());
    scaler_->standardize_row(row, scaled);
    return learner_->predict(scaled);
  }
  return learner_->predict(row);
}

std::vector<double> Model::predict(const Matrix& x) const {
  if (x.cols() != n_features_) {
    throw DataError("predict: expected " + std::to_string(n_features_) +
                    " columns, got " + std::to_string(x.cols()));
  }
  std::vector<double> out(x.rows());
  for (std::size_t r = 0; r < x.rows(); ++r) out[r] = predict_row(x.row(r));
  return out;
}

std::vector<int> Model::classify(const Matrix& x, double threshold) const {
  if (!is_classifier()) {
    throw UsageError(std::string(to_string(spec_.kind)) +
                     " is a regression model; classify needs a classifier");
  }
  if (!(threshold > 0.0 && threshold < 1.0)) {
    throw UsageError("classify: threshold must lie in (0, 1)");
  }
  const auto p = predict(x);
  std::vector<int> out(p.size());
  for (std::size_t i = 0; i < p.size(); ++i) out[i] = p[i] >= threshold ? 1 : 0;
  return out;
}

std::string Model::to_json() const {
  nlohmann::ordered_json j;
  j["version"] = "1";
  j["spec"] = spec_.to_json();
  j["n_features"] = n_features_;
  if (scaler_) {
    j["scaler"] = {{"mean", scaler_->mean}, {"sd", scaler_->sd}};
  } else {
    j["scaler"] = nullptr;
  }
  j["state"] = learner_->state();
  return j.dump() + "\n";
}

Model Model::from_json(const std::string& text) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(text);
  } catch (const nlohmann::json::exception& e) {
    throw DataError(std::string("model: ") + e.what());
  }
  try {
    if (j.at("version").get<std::string>() != "1") {
      throw DataError("model: unsupported version");
    }
    Model m;
    try {
      m.spec_ = LearnerSpec::from_json(j.at("spec"));
    } catch (const UsageError& e) {
      throw DataError(e.what());
    }
    m.n_features_ = j.at("n_features").get<std::size_t>();
    if (!j.at("scaler").is_null()) {
      ColumnStats s;
      s.mean = j.at("scaler").at("mean").get<std::vector<double>>();
      s.sd = j.at("scaler").at("sd").get<std::vector<double>>();
      if (s.mean.size() != m.n_features_ || s.sd.size() != m.n_features_) {
        throw DataError("model: scaler width mismatch");
      }
      m.scaler_ = std::move(s);
    }
    m.learner_ = detail::restore(m.spec_, j.at("state"), m.n_features_);
    return m;
  } catch (const nlohmann::json::exception& e) {
    throw DataError(std::string("model: ") + e.what());
  }
}

}  // namespace popest::ml
