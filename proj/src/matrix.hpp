#pragma once

#include <cstddef>
#include <vector>

namespace klf {

/// Dense row-major matrix of doubles. Just enough surface for the
/// eigensolver and the sample batches; not a linear-algebra library.
class Matrix {
public:
  Matrix() = default;
  Matrix(std::size_t rows, std::size_t cols, double fill = 0.0)
      : rows_(rows), cols_(cols), data_(rows * cols, fill) {}

  std::size_t rows() const { return rows_; }
  std::size_t cols() const { return cols_; }

  double &operator()(std::size_t i, std::size_t j) { return data_[i * cols_ + j]; }
  double operator()(std::size_t i, std::size_t j) const { return data_[i * cols_ + j]; }

  double *row(std::size_t i) { return data_.data() + i * cols_; }
  const double *row(std::size_t i) const { return data_.data() + i * cols_; }

  double *data() { return data_.data(); }
  const double *data() const { return data_.data(); }

  bool operator==(const Matrix &other) const = default;

private:
  std::size_t rows_ = 0;
  std::size_t cols_ = 0;
  std::vector<double> data_;
};

} // namespace klf
