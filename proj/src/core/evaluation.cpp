#include "evaluation.hpp"

#include <cmath>
#include <numeric>

#include "error.hpp"
#include "rng.hpp"
#include "text.hpp"

namespace popest::eval {

namespace {

void check_lengths(std::span<const double> y, std::span<const double> yhat,
                   std::size_t min_len, const char* name) {
  if (y.size() != yhat.size()) {
    throw DataError(std::string(name) + ": length mismatch (" + std::to_string(y.size()) +
                    " vs " + std::to_string(yhat.size()) + ")");
  }
  if (y.size() < min_len) {
    throw DataError(std::string(name) + ": needs at least " + std::to_string(min_len) +
                    " values");
  }
}

void check_binary(std::span<const double> v, const char* name) {
  for (double x : v) {
    if (x != 0.0 && x != 1.0) throw DataError(std::string(name) + ": labels must be 0 or 1");
  }
}

std::vector<double> threshold_half(std::span<const double> p) {
  std::vector<double> out(p.size());
  for (std::size_t i = 0; i < p.size(); ++i) out[i] = p[i] >= 0.5 ? 1.0 : 0.0;
  return out;
}

}  // namespace

double metric_mse(std::span<const double> y, std::span<const double> yhat) {
  check_lengths(y, yhat, 1, "mse");
  double s = 0.0;
  for (std::size_t i = 0; i < y.size(); ++i) {
    const double d = y[i] - yhat[i];
    s += d * d;
  }
  return s / static_cast<double>(y.size());
}

double metric_r2(std::span<const double> y, std::span<const double> yhat) {
  check_lengths(y, yhat, 2, "r2");
  const double mean = std::accumulate(y.begin(), y.end(), 0.0) / static_cast<double>(y.size());
  double ss_tot = 0.0;
  double ss_res = 0.0;
  for (std::size_t i = 0; i < y.size(); ++i) {
    ss_tot += (y[i] - mean) * (y[i] - mean);
    ss_res += (y[i] - yhat[i]) * (y[i] - yhat[i]);
  }
  if (ss_tot == 0.0) throw DataError("r2: undefined for constant targets");
  return 1.0 - ss_res / ss_tot;
}

double metric_accuracy(std::span<const double> y, std::span<const double> yhat) {
  check_lengths(y, yhat, 1, "accuracy");
  check_binary(y, "accuracy");
  check_binary(yhat, "accuracy");
  std::size_t correct = 0;
  for (std::size_t i = 0; i < y.size(); ++i) correct += y[i] == yhat[i];
  return static_cast<double>(correct) / static_cast<double>(y.size());
}

double metric_f1(std::span<const double> y, std::span<const double> yhat) {
  check_lengths(y, yhat, 1, "f1");
  check_binary(y, "f1");
  check_binary(yhat, "f1");
  double tp = 0, fp = 0, fn = 0;
  for (std::size_t i = 0; i < y.size(); ++i) {
    if (yhat[i] == 1.0 && y[i] == 1.0) ++tp;
    else if (yhat[i] == 1.0) ++fp;
    else if (y[i] == 1.0) ++fn;
  }
  const double precision = tp + fp > 0 ? tp / (tp + fp) : 0.0;
  const double recall = tp + fn > 0 ? tp / (tp + fn) : 0.0;
  if (precision + recall == 0.0) return 0.0;
  return 2.0 * precision * recall / (precision + recall);
}

std::string_view to_string(Metric m) {
  switch (m) {
    case Metric::mse: return "mse";
    case Metric::r2: return "r2";
    case Metric::accuracy: return "accuracy";
    case Metric::f1: return "f1";
  }
  return "unknown";
}

Metric parse_metric(std::string_view name) {
  if (name == "mse") return Metric::mse;
  if (name == "r2") return Metric::r2;
  if (name == "accuracy") return Metric::accuracy;
  if (name == "f1") return Metric::f1;
  throw UsageError("unknown metric '" + std::string(name) + "'");
}

double score(Metric m, std::span<const double> y, std::span<const double> predictions) {
  switch (m) {
    case Metric::mse: return metric_mse(y, predictions);
    case Metric::r2: return metric_r2(y, predictions);
    case Metric::accuracy: return metric_accuracy(y, threshold_half(predictions));
    case Metric::f1: return metric_f1(y, threshold_half(predictions));
  }
  throw UsageError("unknown metric");
}

FoldAssignment split_folds(std::size_t n_samples, std::span<const double> labels,
                           const CvPlan& plan) {
  if (plan.n_folds < 2) throw UsageError("split_folds: n_folds must be at least 2");
  if (plan.n_repeats < 1) throw UsageError("split_folds: n_repeats must be at least 1");
  if (n_samples < plan.n_folds) {
    throw DataError("split_folds: " + std::to_string(n_samples) + " samples < " +
                    std::to_string(plan.n_folds) + " folds");
  }
  if (plan.stratified) {
    if (labels.size() != n_samples) throw DataError("split_folds: label count mismatch");
    check_binary(labels, "stratified split_folds");
  }

  FoldAssignment out(plan.n_repeats, std::vector<std::size_t>(n_samples));
  for (std::size_t rep = 0; rep < plan.n_repeats; ++rep) {
    Rng rng(mix_seed(plan.seed, rep));
    auto& fold_of = out[rep];
    if (!plan.stratified) {
      std::vector<std::size_t> perm(n_samples);
      std::iota(perm.begin(), perm.end(), std::size_t{0});
      rng.shuffle(std::span(perm));
      for (std::size_t j = 0; j < n_samples; ++j) fold_of[perm[j]] = j % plan.n_folds;
      continue;
    }
    std::size_t offset = 0;
    for (double cls : {0.0, 1.0}) {
      std::vector<std::size_t> members;
      for (std::size_t i = 0; i < n_samples; ++i) {
        if (labels[i] == cls) members.push_back(i);
      }
      rng.shuffle(std::span(members));
      for (std::size_t j = 0; j < members.size(); ++j) {
        fold_of[members[j]] = (offset + j) % plan.n_folds;
      }
      offset = (offset + members.size()) % plan.n_folds;
    }
  }
  return out;
}

MetricSummary summarize(std::vector<double> scores) {
  MetricSummary s;
  s.scores = std::move(scores);
  if (s.scores.empty()) return s;
  const double n = static_cast<double>(s.scores.size());
  s.mean = std::accumulate(s.scores.begin(), s.scores.end(), 0.0) / n;
  double ss = 0.0;
  for (double v : s.scores) ss += (v - s.mean) * (v - s.mean);
  s.std = std::sqrt(ss / n);
  return s;
}

EvalReport cross_validate(const ml::LearnerSpec& spec, const Dataset& data,
                          const CvPlan& plan, const std::vector<Metric>& metrics,
                          const FoldObserver& observer) {
  data.validate();
  if (metrics.empty()) throw UsageError("cross_validate: no metrics requested");
  const auto folds = split_folds(data.rows(), data.y, plan);
  std::vector<std::vector<double>> raw(metrics.size());
  for (std::size_t rep = 0; rep < plan.n_repeats; ++rep) {
    for (std::size_t f = 0; f < plan.n_folds; ++f) {
      std::vector<std::size_t> train_rows, test_rows;
      for (std::size_t i = 0; i < data.rows(); ++i) {
        (folds[rep][i] == f ? test_rows : train_rows).push_back(i);
      }
      try {
        const auto train = data.subset(train_rows);
        const auto test = data.subset(test_rows);
        const auto model = ml::fit(spec, train);
        if (observer) observer(rep, f, model, train_rows);
        const auto pred = model.predict(test.x);
        for (std::size_t m = 0; m < metrics.size(); ++m) {
          raw[m].push_back(score(metrics[m], test.y, pred));
        }
      } catch (const DataError& e) {
        throw DataError("repeat " + std::to_string(rep) + ", fold " + std::to_string(f) +
                        ": " + e.what());
      } catch (const UsageError& e) {
        throw UsageError("repeat " + std::to_string(rep) + ", fold " +
                         std::to_string(f) + ": " + e.what());
      }
    }
  }
  EvalReport report;
  report.protocol = "cv";
  report.spec = spec;
  report.plan = plan;
  report.metrics = metrics;
  for (std::size_t m = 0; m < metrics.size(); ++m) {
    report.results[std::string(to_string(metrics[m]))] = summarize(std::move(raw[m]));
  }
  return report;
}

EvalReport cross_dataset_eval(const ml::LearnerSpec& spec, const Dataset& train,
                              const Dataset& test, const std::vector<Metric>& metrics) {
  train.validate();
  test.validate();
  if (train.columns != test.columns || train.cols() != test.cols()) {
    throw DataError("cross-dataset evaluation: train and test schemas differ");
  }
  if (metrics.empty()) throw UsageError("cross_dataset_eval: no metrics requested");
  const auto model = ml::fit(spec, train);
  const auto pred = model.predict(test.x);
  EvalReport report;
  report.protocol = "cross";
  report.spec = spec;
  report.plan.n_folds = 1;
  report.plan.n_repeats = 1;
  report.metrics = metrics;
  for (auto m : metrics) {
    report.results[std::string(to_string(m))] = summarize({score(m, test.y, pred)});
  }
  return report;
}

std::string EvalReport::to_json() const {
  nlohmann::ordered_json j;
  j["version"] = "1";
  j["protocol"] = protocol;
  j["learner"] = spec.to_json();
  if (protocol == "cv") {
    j["plan"] = {{"n_folds", plan.n_folds},
                 {"n_repeats", plan.n_repeats},
                 {"stratified", plan.stratified},
                 {"seed", plan.seed}};
  }
  j["metrics"] = nlohmann::ordered_json::object();
  for (auto m : metrics) {
    const auto& s = results.at(std::string(to_string(m)));
    j["metrics"][std::string(to_string(m))] = {
        {"mean", s.mean}, {"std", s.std}, {"scores", s.scores}};
  }
  return j.dump(2) + "\n";
}

std::string EvalReport::render_table() const {
  std::string out = "metric      mean       std\n";
  for (auto m : metrics) {
    const auto name = std::string(to_string(m));
    const auto& s = results.at(name);
    std::string line = name;
    line.resize(10, ' ');
    out += line + "  " + text::format_fixed(s.mean, 4) + " ± " +
           text::format_fixed(s.std, 4) + "\n";
  }
  return out;
}

}  // namespace popest::eval
