#include <doctest.h>

#include <Eigen/Dense>
#include <cmath>

#include "core/linear.hpp"
#include "support.hpp"

using namespace popest;
using namespace popest::ml;

namespace {

// Ordinary least squares with intercept via the normal equations.
Eigen::VectorXd normal_equations(const Matrix& x, const std::vector<double>& y) {
  const auto n = static_cast<Eigen::Index>(x.rows());
  const auto p = static_cast<Eigen::Index>(x.cols());
  Eigen::MatrixXd a(n, p + 1);
  Eigen::VectorXd b(n);
  for (Eigen::Index i = 0; i < n; ++i) {
    a(i, 0) = 1.0;
    for (Eigen::Index j = 0; j < p; ++j) a(i, j + 1) = x(static_cast<std::size_t>(i), static_cast<std::size_t>(j));
    b(i) = y[static_cast<std::size_t>(i)];
  }
  return (a.transpose() * a).ldlt().solve(a.transpose() * b);
}

}  // namespace

TEST_CASE("unpenalized elastic net on a line") {
  Matrix x(3, 1, {1, 2, 3});
  std::vector<double> y{2, 4, 6};
  ElasticNetParams p;
  p.l1 = 0;
  p.l2 = 0;
  p.tolerance = 1e-12;
  p.max_sweeps = 100000;
  const auto fit = fit_elastic_net(x, y, p);
  CHECK(fit.weights[0] == doctest::Approx(2.0).epsilon(1e-6));
  CHECK(std::abs(fit.intercept) < 1e-6);
}

TEST_CASE("unpenalized elastic net matches the normal equations") {
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    const auto d = testing::random_dataset(seed, 80, 4, false);
    ElasticNetParams p;
    p.l1 = 0;
    p.l2 = 0;
    p.tolerance = 1e-12;
    p.max_sweeps = 100000;
    const auto fit = fit_elastic_net(d.x, d.y, p);
    const auto beta = normal_equations(d.x, d.y);
    CHECK(std::abs(fit.intercept - beta(0)) < 1e-6);
    for (std::size_t j = 0; j < 4; ++j) {
      CHECK(std::abs(fit.weights[j] - beta(static_cast<Eigen::Index>(j) + 1)) < 1e-6);
    }
  }
}

TEST_CASE("elastic net objective never increases across sweeps") {
  for (std::uint64_t seed = 0; seed < 10; ++seed) {
    const auto d = testing::random_dataset(seed, 50, 6, false, 1.0);
    ElasticNetParams p;
    p.l1 = 0.05;
    p.l2 = 0.1;
    const auto fit = fit_elastic_net(d.x, d.y, p);
    REQUIRE(fit.objective_trace.size() >= 2);
    for (std::size_t i = 1; i < fit.objective_trace.size(); ++i) {
      CHECK(fit.objective_trace[i] <= fit.objective_trace[i - 1] + 1e-12);
    }
    CHECK(fit.objective_trace.back() ==
          doctest::Approx(elastic_net_objective(d.x, d.y, fit.weights, fit.intercept, p)));
  }
}

TEST_CASE("strong l1 zeroes every weight") {
  const auto d = testing::random_dataset(1, 40, 3, false);
  ElasticNetParams p;
  p.l1 = 100;
  const auto fit = fit_elastic_net(d.x, d.y, p);
  for (double w : fit.weights) CHECK(w == 0.0);
}

TEST_CASE("logistic gradient matches central differences") {
  Rng rng(31);
  const auto d = testing::random_dataset(2, 40, 3, true, 1.0);
  for (int point = 0; point < 10; ++point) {
    std::vector<double> w{rng.normal(), rng.normal(), rng.normal()};
    double b = rng.normal();
    std::vector<double> gw(3);
    double gb = 0;
    logistic_gradient(d.x, d.y, w, b, gw, gb);
    const double h = 1e-6;
    auto rel = [](double a, double e) { return std::abs(a - e) / std::max(1e-8, std::abs(e)); };
    for (std::size_t j = 0; j < 3; ++j) {
      auto wp = w, wm = w;
      wp[j] += h;
      wm[j] -= h;
      const double fd = (logistic_loss(d.x, d.y, wp, b) - logistic_loss(d.x, d.y, wm, b)) / (2 * h);
      CHECK(rel(gw[j], fd) < 1e-5);
    }
    const double fd_b = (logistic_loss(d.x, d.y, w, b + h) - logistic_loss(d.x, d.y, w, b - h)) / (2 * h);
    CHECK(rel(gb, fd_b) < 1e-5);
  }
}

TEST_CASE("logistic fit lowers the loss") {
  const auto d = testing::random_dataset(3, 80, 2, true, 0.5);
  const auto fit = fit_logistic(d.x, d.y, {});
  const std::vector<double> zero(2, 0.0);
  CHECK(logistic_loss(d.x, d.y, fit.weights, fit.intercept) < logistic_loss(d.x, d.y, zero, 0.0));
  CHECK(sigmoid(0.0) == 0.5);
  CHECK(sigmoid(-800.0) >= 0.0);
  CHECK(sigmoid(800.0) <= 1.0);
}
