#include "emlp/matrix.hpp"

#include <algorithm>
#include <cmath>

#include "emlp/error.hpp"

namespace emlp {

DenseMatrix::DenseMatrix(std::size_t rows, std::size_t cols, double fill)
    : rows_(rows), cols_(cols), data_(rows * cols, fill) {}

DenseMatrix::DenseMatrix(std::size_t rows, std::size_t cols, std::vector<double> data)
    : rows_(rows), cols_(cols), data_(std::move(data)) {
  if (data_.size() != rows * cols) {
    throw ShapeError("matrix data length " + std::to_string(data_.size()) +
                     " does not match shape (" + std::to_string(rows) + " x " +
                     std::to_string(cols) + ")");
  }
}

DenseMatrix DenseMatrix::from_rows(std::initializer_list<std::initializer_list<double>> rows) {
  const std::size_t r = rows.size();
  const std::size_t c = r == 0 ? 0 : rows.begin()->size();
  std::vector<double> data;
  data.reserve(r * c);
  for (const auto& row : rows) {
    if (row.size() != c) throw ShapeError("ragged row list in DenseMatrix::from_rows");
    data.insert(data.end(), row.begin(), row.end());
  }
  return DenseMatrix(r, c, std::move(data));
}

DenseMatrix DenseMatrix::identity(std::size_t n) {
  DenseMatrix m(n, n);
  for (std::size_t i = 0; i < n; ++i) m(i, i) = 1.0;
  return m;
}

std::string DenseMatrix::shape_string() const {
  return "(" + std::to_string(rows_) + " x " + std::to_string(cols_) + ")";
}

bool DenseMatrix::all_finite() const noexcept {
  return std::all_of(data_.begin(), data_.end(), [](double v) { return std::isfinite(v); });
}

namespace {

// Keeps a k-slab of b (kBlock rows) hot in cache while sweeping all rows of a.
constexpr std::size_t kBlock = 128;

}  // namespace

DenseMatrix matmul(const DenseMatrix& a, const DenseMatrix& b) {
  if (a.cols() != b.rows()) {
    throw ShapeError("matmul: cannot multiply " + a.shape_string() + " by " + b.shape_string());
  }
  const std::size_t m = a.rows();
  const std::size_t n = b.cols();
  const std::size_t kk = a.cols();
  DenseMatrix c(m, n);
  const double* ap = a.values().data();
  const double* bp = b.values().data();
  double* cp = c.values().data();

  for (std::size_t k0 = 0; k0 < kk; k0 += kBlock) {
    const std::size_t k1 = std::min(kk, k0 + kBlock);
    for (std::size_t i = 0; i < m; ++i) {
      double* __restrict crow = cp + i * n;
      const double* arow = ap + i * kk;
      for (std::size_t k = k0; k < k1; ++k) {
        const double aik = arow[k];
        if (aik == 0.0) continue;
        const double* __restrict brow = bp + k * n;
        for (std::size_t j = 0; j < n; ++j) crow[j] += aik * brow[j];
      }
    }
  }
  return c;
}

DenseMatrix transpose(const DenseMatrix& a) {
  DenseMatrix t(a.cols(), a.rows());
  constexpr std::size_t tile = 32;
  for (std::size_t i0 = 0; i0 < a.rows(); i0 += tile) {
    for (std::size_t j0 = 0; j0 < a.cols(); j0 += tile) {
      const std::size_t i1 = std::min(a.rows(), i0 + tile);
      const std::size_t j1 = std::min(a.cols(), j0 + tile);
      for (std::size_t i = i0; i < i1; ++i)
        for (std::size_t j = j0; j < j1; ++j) t(j, i) = a(i, j);
    }
  }
  return t;
}

DenseMatrix map_elementwise(const DenseMatrix& a, const std::function<double(double)>& f) {
  DenseMatrix out(a.rows(), a.cols());
  std::transform(a.values().begin(), a.values().end(), out.values().begin(), f);
  return out;
}

DenseMatrix zip_elementwise(const DenseMatrix& a, const DenseMatrix& b,
                            const std::function<double(double, double)>& f) {
  if (a.rows() != b.rows() || a.cols() != b.cols()) {
    throw ShapeError("zip_elementwise: shape " + a.shape_string() + " differs from " +
                     b.shape_string());
  }
  DenseMatrix out(a.rows(), a.cols());
  std::transform(a.values().begin(), a.values().end(), b.values().begin(),
                 out.values().begin(), f);
  return out;
}

std::size_t argmax(std::span<const double> values) {
  if (values.empty()) throw DataError("argmax of an empty sequence");
  std::size_t best = 0;
  for (std::size_t i = 1; i < values.size(); ++i) {
    if (values[i] > values[best]) best = i;
  }
  return best;
}

std::vector<double> reduce_axis(const DenseMatrix& a, Axis axis, Reduction op) {
  if (a.empty()) throw DataError("reduce_axis: empty matrix " + a.shape_string());

  if (axis == Axis::Cols) {
    std::vector<double> out(a.rows());
    for (std::size_t i = 0; i < a.rows(); ++i) {
      const auto r = a.row(i);
      switch (op) {
        case Reduction::Sum:
        case Reduction::Mean: {
          double s = 0.0;
          for (double v : r) s += v;
          out[i] = op == Reduction::Mean ? s / static_cast<double>(r.size()) : s;
          break;
        }
        case Reduction::Max:
          out[i] = *std::max_element(r.begin(), r.end());
          break;
        case Reduction::Argmax:
          out[i] = static_cast<double>(argmax(r));
          break;
      }
    }
    return out;
  }

  // Axis::Rows: one result per column, walking rows in order.
  const std::size_t n = a.cols();
  std::vector<double> acc(a.row(0).begin(), a.row(0).end());
  std::vector<std::size_t> best(n, 0);
  for (std::size_t i = 1; i < a.rows(); ++i) {
    const auto r = a.row(i);
    for (std::size_t j = 0; j < n; ++j) {
      switch (op) {
        case Reduction::Sum:
        case Reduction::Mean:
          acc[j] += r[j];
          break;
        case Reduction::Max:
        case Reduction::Argmax:
          if (r[j] > acc[j]) {
            acc[j] = r[j];
            best[j] = i;
          }
          break;
      }
    }
  }
  if (op == Reduction::Mean) {
    for (double& v : acc) v /= static_cast<double>(a.rows());
  } else if (op == Reduction::Argmax) {
    for (std::size_t j = 0; j < n; ++j) acc[j] = static_cast<double>(best[j]);
  }
  return acc;
}

std::vector<std::size_t> argmax_rows(const DenseMatrix& a) {
  std::vector<std::size_t> out(a.rows());
  for (std::size_t i = 0; i < a.rows(); ++i) out[i] = argmax(a.row(i));
  return out;
}

DenseMatrix gather_rows(const DenseMatrix& a, std::span<const std::size_t> indices) {
  DenseMatrix out(indices.size(), a.cols());
  for (std::size_t i = 0; i < indices.size(); ++i) {
    if (indices[i] >= a.rows()) {
      throw ShapeError("gather_rows: index " + std::to_string(indices[i]) + " out of range for " +
                       a.shape_string());
    }
    const auto src = a.row(indices[i]);
    std::copy(src.begin(), src.end(), out.row(i).begin());
  }
  return out;
}

void add_row_vector(DenseMatrix& a, std::span<const double> bias) {
  if (bias.size() != a.cols()) {
    throw ShapeError("add_row_vector: bias length " + std::to_string(bias.size()) +
                     " does not match " + a.shape_string());
  }
  for (std::size_t i = 0; i < a.rows(); ++i) {
    auto r = a.row(i);
    for (std::size_t j = 0; j < r.size(); ++j) r[j] += bias[j];
  }
}

}  // namespace emlp
