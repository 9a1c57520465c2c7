#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <span>
#include <vector>

#include "emlp/matrix.hpp"

namespace emlp {

/// Fitted principal component basis.
///
/// `components` rows are orthonormal and sorted by descending explained
/// variance. `total_variance` is the trace of the sample covariance, i.e. the
/// variance summed over all d directions, not only the k kept ones.
struct PcaModel {
  std::vector<double> mean;
  DenseMatrix components;  // k x d
  std::vector<double> explained_variance;
  double total_variance = 0.0;

  std::size_t dim() const noexcept { return mean.size(); }
  std::size_t k() const noexcept { return components.rows(); }

  friend bool operator==(const PcaModel&, const PcaModel&) = default;
};

/// Every eigenpair of the training covariance; cheap to cut down to any k.
struct PcaDecomposition {
  std::vector<double> mean;
  DenseMatrix components;        // d x d, rows sorted by descending variance
  std::vector<double> spectrum;  // all d eigenvalues, clamped at 0

  /// Leading-k model. Throws ParameterError unless 1 <= k <= d.
  PcaModel model(std::size_t k) const;
};

/// Sample covariance (divided by n-1) of the rows of X, accumulated in row blocks.
DenseMatrix covariance(const DenseMatrix& x, std::span<const double> mean);

/// Eigendecomposition of the sample covariance of X. Each component's
/// largest-magnitude entry is made positive (lowest index on ties).
PcaDecomposition pca_decompose(const DenseMatrix& x);

/// Top-k model; shorthand for pca_decompose(x).model(k).
PcaModel pca_fit(const DenseMatrix& x, std::size_t k);

/// (X - mean) * components^T
DenseMatrix transform(const PcaModel& model, const DenseMatrix& x);
/// Z * components + mean
DenseMatrix inverse_transform(const PcaModel& model, const DenseMatrix& z);

/// Running sums of explained variance over total variance.
std::vector<double> cumulative_evr(const PcaModel& model);
/// Running sums of a full spectrum over its total; the last entry is 1.
std::vector<double> cumulative_evr(std::span<const double> spectrum);

/// Smallest k whose cumulative explained variance reaches `threshold`.
std::size_t choose_k(std::span<const double> spectrum, double threshold);

// Binary model file "PCAM": magic, u16 version, u32 d, u32 k, then mean,
// components (row-major), explained variance and total variance as
// little-endian f64.
inline constexpr std::uint16_t kPcaFormatVersion = 1;

void write_pca(std::ostream& out, const PcaModel& model);
PcaModel read_pca(std::istream& in);
void save_pca(const PcaModel& model, const std::filesystem::path& path);
PcaModel load_pca(const std::filesystem::path& path);

}  // namespace emlp
