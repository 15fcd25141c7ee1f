#pragma once

#include <span>
#include <vector>

#include "dataset.hpp"

namespace popest::ml {

struct ElasticNetParams {
  double l1 = 0.01;
  double l2 = 0.01;
  int max_sweeps = 1000;
  /// Stop once the largest coefficient change in a sweep falls below this.
  double tolerance = 1e-6;
};

struct LinearFit {
  std::vector<double> weights;
  double intercept = 0.0;
  int iterations = 0;
  /// Objective after each full sweep / iteration, starting with the initial
  /// point.
  std::vector<double> objective_trace;
};

/// 1/(2n) * ||y - b - Xw||^2 + l1 * ||w||_1 + l2/2 * ||w||^2.
double elastic_net_objective(const Matrix& x, std::span<const double> y,
                             std::span<const double> w, double intercept,
                             const ElasticNetParams& params);

/// Cyclic coordinate descent with an unpenalized intercept. Expects
/// standardized columns but does not require them.
LinearFit fit_elastic_net(const Matrix& x, std::span<const double> y,
                          const ElasticNetParams& params);

struct LogisticParams {
  double step = 0.1;
  int max_iterations = 5000;
  /// Stop once the loss changes by less than this between iterations.
  double tolerance = 1e-8;
};

/// Mean log-loss of sigmoid(b + x.w) against {0,1} labels.
double logistic_loss(const Matrix& x, std::span<const double> y,
                     std::span<const double> w, double intercept);

/// Gradient of logistic_loss; grad_w has one entry per column.
void logistic_gradient(const Matrix& x, std::span<const double> y,
                       std::span<const double> w, double intercept,
                       std::span<double> grad_w, double& grad_intercept);

/// Batch gradient descent.
LinearFit fit_logistic(const Matrix& x, std::span<const double> y,
                       const LogisticParams& params);

double sigmoid(double z);

}  // namespace popest::ml
