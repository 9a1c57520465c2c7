#pragma once

#include <cstddef>
#include <functional>
#include <initializer_list>
#include <span>
#include <string>
#include <vector>

namespace emlp {

/// Row-major dense matrix of doubles. Carries batches, weights, activations
/// and PCA components alike.
class DenseMatrix {
 public:
  DenseMatrix() = default;
  DenseMatrix(std::size_t rows, std::size_t cols, double fill = 0.0);
  /// Takes ownership of `data`; throws ShapeError if its length is not rows*cols.
  DenseMatrix(std::size_t rows, std::size_t cols, std::vector<double> data);

  /// Builds a matrix from nested row lists; all rows must have equal length.
  static DenseMatrix from_rows(std::initializer_list<std::initializer_list<double>> rows);
  static DenseMatrix identity(std::size_t n);

  std::size_t rows() const noexcept { return rows_; }
  std::size_t cols() const noexcept { return cols_; }
  std::size_t size() const noexcept { return data_.size(); }
  bool empty() const noexcept { return data_.empty(); }

  double& operator()(std::size_t r, std::size_t c) noexcept { return data_[r * cols_ + c]; }
  double operator()(std::size_t r, std::size_t c) const noexcept { return data_[r * cols_ + c]; }

  std::span<double> row(std::size_t r) noexcept { return {data_.data() + r * cols_, cols_}; }
  std::span<const double> row(std::size_t r) const noexcept {
    return {data_.data() + r * cols_, cols_};
  }

  std::span<double> values() noexcept { return data_; }
  std::span<const double> values() const noexcept { return data_; }
  const std::vector<double>& storage() const noexcept { return data_; }

  /// "(rows x cols)", used in error messages.
  std::string shape_string() const;

  bool all_finite() const noexcept;

  friend bool operator==(const DenseMatrix&, const DenseMatrix&) = default;

 private:
  std::size_t rows_ = 0;
  std::size_t cols_ = 0;
  std::vector<double> data_;
};

enum class Axis {
  Rows,  ///< collapse the row dimension: one result per column
  Cols,  ///< collapse the column dimension: one result per row
};

enum class Reduction { Sum, Mean, Max, Argmax };

/// Matrix product a*b. Each output entry accumulates over k in ascending order,
/// so results match a naive triple loop up to floating-point contraction.
DenseMatrix matmul(const DenseMatrix& a, const DenseMatrix& b);

DenseMatrix transpose(const DenseMatrix& a);

DenseMatrix map_elementwise(const DenseMatrix& a, const std::function<double(double)>& f);

DenseMatrix zip_elementwise(const DenseMatrix& a, const DenseMatrix& b,
                            const std::function<double(double, double)>& f);

/// Reduces along `axis`. Argmax results are indices stored as doubles; ties go
/// to the lowest index.
std::vector<double> reduce_axis(const DenseMatrix& a, Axis axis, Reduction op);

/// Index of the largest entry, lowest index on ties. `values` must be non-empty.
std::size_t argmax(std::span<const double> values);

/// Row-wise argmax as indices.
std::vector<std::size_t> argmax_rows(const DenseMatrix& a);

/// Copies the listed rows, in order, into a new matrix.
DenseMatrix gather_rows(const DenseMatrix& a, std::span<const std::size_t> indices);

/// Adds `bias` to every row in place.
void add_row_vector(DenseMatrix& a, std::span<const double> bias);

}  // namespace emlp
