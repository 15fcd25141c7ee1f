#pragma once

#include <cstddef>
#include <span>
#include <string>
#include <vector>

namespace popest {

/// Dense row-major matrix of doubles.
class Matrix {
 public:
  Matrix() = default;
  Matrix(std::size_t rows, std::size_t cols, double fill = 0.0)
      : rows_(rows), cols_(cols), data_(rows * cols, fill) {}
  Matrix(std::size_t rows, std::size_t cols, std::vector<double> data);

  std::size_t rows() const { return rows_; }
  std::size_t cols() const { return cols_; }
  double& operator()(std::size_t r, std::size_t c) { return data_[r * cols_ + c]; }
  double operator()(std::size_t r, std::size_t c) const { return data_[r * cols_ + c]; }
  std::span<const double> row(std::size_t r) const {
    return {data_.data() + r * cols_, cols_};
  }
  std::span<double> row(std::size_t r) { return {data_.data() + r * cols_, cols_}; }
  const std::vector<double>& data() const { return data_; }

  Matrix select_rows(std::span<const std::size_t> rows) const;

 private:
  std::size_t rows_ = 0;
  std::size_t cols_ = 0;
  std::vector<double> data_;
};

/// Learnable table: features plus one label per row. No missing entries.
struct Dataset {
  Matrix x;
  std::vector<double> y;
  std::vector<std::string> columns;

  std::size_t rows() const { return x.rows(); }
  std::size_t cols() const { return x.cols(); }
  Dataset subset(std::span<const std::size_t> rows) const;
  /// Throws DataError when dimensions disagree or the table is empty.
  void validate() const;
};

/// Per-column mean and population standard deviation.
struct ColumnStats {
  std::vector<double> mean;
  std::vector<double> sd;

  static ColumnStats of(const Matrix& x);
  /// (x - mean) / sd; constant columns (sd == 0) map to 0.
  Matrix standardize(const Matrix& x) const;
  void standardize_row(std::span<const double> in, std::span<double> out) const;
};

}  // namespace popest
