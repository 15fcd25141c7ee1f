#include "linear.hpp"

#include <cmath>

#include "error.hpp"

namespace popest::ml {

namespace {

double dot(std::span<const double> a, std::span<const double> b) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
  return s;
}

double soft_threshold(double z, double gamma) {
  if (z > gamma) return z - gamma;
  if (z < -gamma) return z + gamma;
  return 0.0;
}

// log(1 + exp(z)) without overflow.
double softplus(double z) {
  return z > 0.0 ? z + std::log1p(std::exp(-z)) : std::log1p(std::exp(z));
}

}  // namespace

double sigmoid(double z) {
  if (z >= 0.0) return 1.0 / (1.0 + std::exp(-z));
  const double e = std::exp(z);
  return e / (1.0 + e);
}

double elastic_net_objective(const Matrix& x, std::span<const double> y,
                             std::span<const double> w, double intercept,
                             const ElasticNetParams& params) {
  const double n = static_cast<double>(x.rows());
  double rss = 0.0;
  for (std::size_t i = 0; i < x.rows(); ++i) {
    const double r = y[i] - intercept - dot(x.row(i), w);
    rss += r * r;
  }
  double l1 = 0.0;
  double l2 = 0.0;
  for (double v : w) {
    l1 += std::abs(v);
    l2 += v * v;
  }
  return rss / (2.0 * n) + params.l1 * l1 + 0.5 * params.l2 * l2;
}

LinearFit fit_elastic_net(const Matrix& x, std::span<const double> y,
                          const ElasticNetParams& params) {
  if (x.rows() == 0) throw DataError("elastic net: empty dataset");
  if (params.l1 < 0.0 || params.l2 < 0.0) {
    throw UsageError("elastic net: penalties must be non-negative");
  }
  const std::size_t n = x.rows();
  const std::size_t p = x.cols();
  const double dn = static_cast<double>(n);

  LinearFit fit;
  fit.weights.assign(p, 0.0);
  double ysum = 0.0;
  for (double v : y) ysum += v;
  fit.intercept = ysum / dn;

  std::vector<double> residual(n);
  for (std::size_t i = 0; i < n; ++i) residual[i] = y[i] - fit.intercept;

  std::vector<double> col_sq(p, 0.0);
  std::vector<double> col_mean(p, 0.0);
  for (std::size_t j = 0; j < p; ++j) {
    for (std::size_t i = 0; i < n; ++i) {
      col_sq[j] += x(i, j) * x(i, j);
      col_mean[j] += x(i, j);
    }
    col_sq[j] /= dn;
    col_mean[j] /= dn;
  }

  fit.objective_trace.push_back(
      elastic_net_objective(x, y, fit.weights, fit.intercept, params));
  for (int sweep = 0; sweep < params.max_sweeps; ++sweep) {
    double max_change = 0.0;
    for (std::size_t j = 0; j < p; ++j) {
      const double denom = col_sq[j] + params.l2;
      if (denom <= 0.0) continue;
      const double old = fit.weights[j];
      double rho = 0.0;
      for (std::size_t i = 0; i < n; ++i) rho += x(i, j) * (residual[i] + x(i, j) * old);
      rho /= dn;
      const double updated = soft_threshold(rho, params.l1) / denom;
      const double delta = updated - old;
      if (delta != 0.0) {
        for (std::size_t i = 0; i < n; ++i) residual[i] -= x(i, j) * delta;
        fit.weights[j] = updated;
      }
      max_change = std::max(max_change, std::abs(delta));
    }
    // Exact intercept update.
    double rmean = 0.0;
    for (double r : residual) rmean += r;
    rmean /= dn;
    if (rmean != 0.0) {
      fit.intercept += rmean;
      for (double& r : residual) r -= rmean;
      max_change = std::max(max_change, std::abs(rmean));
    }
    fit.iterations = sweep + 1;
    fit.objective_trace.push_back(
        elastic_net_objective(x, y, fit.weights, fit.intercept, params));
    if (max_change < params.tolerance) break;
  }
  return fit;
}

double logistic_loss(const Matrix& x, std::span<const double> y,
                     std::span<const double> w, double intercept) {
  double total = 0.0;
  for (std::size_t i = 0; i < x.rows(); ++i) {
    const double z = intercept + dot(x.row(i), w);
    total += softplus(z) - y[i] * z;
  }
  return total / static_cast<double>(x.rows());
}

void logistic_gradient(const Matrix& x, std::span<const double> y,
                       std::span<const double> w, double intercept,
                       std::span<double> grad_w, double& grad_intercept) {
  std::fill(grad_w.begin(), grad_w.end(), 0.0);
  grad_intercept = 0.0;
  const double n = static_cast<double>(x.rows());
  for (std::size_t i = 0; i < x.rows(); ++i) {
    const auto row = x.row(i);
    const double err = sigmoid(intercept + dot(row, w)) - y[i];
    for (std::size_t j = 0; j < row.size(); ++j) grad_w[j] += err * row[j];
    grad_intercept += err;
  }
  for (double& g : grad_w) g /= n;
  grad_intercept /= n;
}

LinearFit fit_logistic(const Matrix& x, std::span<const double> y,
                       const LogisticParams& params) {
  if (x.rows() == 0) throw DataError("logistic regression: empty dataset");
  if (!(params.step > 0.0)) throw UsageError("logistic regression: step must be positive");
  LinearFit fit;
  fit.weights.assign(x.cols(), 0.0);
  std::vector<double> grad(x.cols());
  double grad_b = 0.0;
  double loss = logistic_loss(x, y, fit.weights, fit.intercept);
  fit.objective_trace.push_back(loss);
  for (int it = 0; it < params.max_iterations; ++it) {
    logistic_gradient(x, y, fit.weights, fit.intercept, grad, grad_b);
    for (std::size_t j = 0; j < grad.size(); ++j) fit.weights[j] -= params.step * grad[j];
    fit.intercept -= params.step * grad_b;
    const double next = logistic_loss(x, y, fit.weights, fit.intercept);
    fit.objective_trace.push_back(next);
    fit.iterations = it + 1;
    const bool converged = std::abs(loss - next) < params.tolerance;
    loss = next;
    if (converged) break;
  }
  return fit;
}

}  // namespace popest::ml
