#include "dataset.hpp"

#include <cmath>

#include "error.hpp"

namespace popest {

Matrix::Matrix(std::size_t rows, std::size_t cols, std::vector<double> data)
    : rows_(rows), cols_(cols), data_(std::move(data)) {
  if (data_.size() != rows * cols) {
    throw DataError("matrix data size does not match " + std::to_string(rows) +
                    "x" + std::to_string(cols));
  }
}

Matrix Matrix::select_rows(std::span<const std::size_t> rows) const {
  Matrix out(rows.size(), cols_);
  for (std::size_t i = 0; i < rows.size(); ++i) {
    const auto src = row(rows[i]);
    std::copy(src.begin(), src.end(), out.row(i).begin());
  }
  return out;
}

Dataset Dataset::subset(std::span<const std::size_t> rows) const {
  Dataset out;
  out.x = x.select_rows(rows);
  out.y.reserve(rows.size());
  for (auto r : rows) out.y.push_back(y[r]);
  out.columns = columns;
  return out;
}

void Dataset::validate() const {
  if (x.rows() == 0) throw DataError("dataset is empty");
  if (y.size() != x.rows()) throw DataError("label count does not match row count");
  if (!columns.empty() && columns.size() != x.cols()) {
    throw DataError("column names do not match column count");
  }
  for (double v : x.data()) {
    if (!std::isfinite(v)) throw DataError("dataset contains a non-finite value");
  }
  for (double v : y) {
    if (!std::isfinite(v)) throw DataError("dataset contains a non-finite label");
  }
}

ColumnStats ColumnStats::of(const Matrix& x) {
  ColumnStats s;
  s.mean.assign(x.cols(), 0.0);
  s.sd.assign(x.cols(), 0.0);
  if (x.rows() == 0) return s;
  const double n = static_cast<double>(x.rows());
  for (std::size_t c = 0; c < x.cols(); ++c) {
    double sum = 0.0;
    for (std::size_t r = 0; r < x.rows(); ++r) sum += x(r, c);
    const double mean = sum / n;
    double ss = 0.0;
    for (std::size_t r = 0; r < x.rows(); ++r) {
      const double d = x(r, c) - mean;
      ss += d * d;
    }
    s.mean[c] = mean;
    s.sd[c] = std::sqrt(ss / n);
  }
  return s;
}

void ColumnStats::standardize_row(std::span<const double> in,
                                  std::span<double> out) const {
  for (std::size_t c = 0; c < in.size(); ++c) {
    out[c] = sd[c] > 0.0 ? (in[c] - mean[c]) / sd[c] : 0.0;
  }
}

Matrix ColumnStats::standardize(const Matrix& x) const {
  Matrix out(x.rows(), x.cols());
  for (std::size_t r = 0; r < x.rows(); ++r) standardize_row(x.row(r), out.row(r));
  return out;
}

}  // namespace popest
