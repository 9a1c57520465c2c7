#include "emlp/pca.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <string>

#include "binary_io.hpp"
#include "emlp/eigen.hpp"
#include "emlp/error.hpp"

namespace emlp {

namespace {

constexpr std::size_t kCovarianceBlock = 512;

void orient_components(DenseMatrix& comps) {
  for (std::size_t r = 0; r < comps.rows(); ++r) {
    auto row = comps.row(r);
    std::size_t best = 0;
    for (std::size_t j = 1; j < row.size(); ++j) {
      if (std::abs(row[j]) > std::abs(row[best])) best = j;
    }
    if (row[best] < 0.0) {
      for (double& v : row) v = -v;
    }
  }
}

}  // namespace

DenseMatrix covariance(const DenseMatrix& x, std::span<const double> mean) {
  const std::size_t n = x.rows();
  const std::size_t d = x.cols();
  if (mean.size() != d) throw ShapeError("covariance: mean length does not match " + x.shape_string());
  if (n < 2) throw ParameterError("covariance needs at least two samples");

  DenseMatrix cov(d, d);
  for (std::size_t r0 = 0; r0 < n; r0 += kCovarianceBlock) {
    const std::size_t r1 = std::min(n, r0 + kCovarianceBlock);
    // Centered block stored transposed (d x rows) so the product below reads
    // both operands row-wise.
    DenseMatrix ct(d, r1 - r0);
    for (std::size_t i = r0; i < r1; ++i) {
      const auto row = x.row(i);
      for (std::size_t j = 0; j < d; ++j) ct(j, i - r0) = row[j] - mean[j];
    }
    const DenseMatrix block = matmul(ct, transpose(ct));
    auto cv = cov.values();
    const auto bv = block.values();
    for (std::size_t i = 0; i < cv.size(); ++i) cv[i] += bv[i];
  }
  for (double& v : cov.values()) v /= static_cast<double>(n - 1);
  return cov;
}

PcaDecomposition pca_decompose(const DenseMatrix& x) {
  if (x.rows() < 2) throw ParameterError("PCA needs at least two samples");
  PcaDecomposition out;
  out.mean = reduce_axis(x, Axis::Rows, Reduction::Mean);
  const DenseMatrix cov = covariance(x, out.mean);
  SymmetricEigen eig = symmetric_eigen(cov);
  out.spectrum = std::move(eig.values);
  // Rank-deficient data leaves tiny negative round-off eigenvalues.
  for (double& v : out.spectrum) v = std::max(v, 0.0);
  out.components = std::move(eig.vectors);
  orient_components(out.components);
  return out;
}

PcaModel PcaDecomposition::model(std::size_t k) const {
  const std::size_t d = mean.size();
  if (k < 1 || k > d) {
    throw ParameterError("PCA component count " + std::to_string(k) + " outside 1.." +
                         std::to_string(d));
  }
  PcaModel m;
  m.mean = mean;
  m.components = DenseMatrix(k, d);
  for (std::size_t r = 0; r < k; ++r) {
    const auto src = components.row(r);
    std::copy(src.begin(), src.end(), m.components.row(r).begin());
  }
  m.explained_variance.assign(spectrum.begin(), spectrum.begin() + static_cast<std::ptrdiff_t>(k));
  m.total_variance = 0.0;
  for (double v : spectrum) m.total_variance += v;
  return m;
}

PcaModel pca_fit(const DenseMatrix& x, std::size_t k) {
  if (k < 1 || k > x.cols()) {
    throw ParameterError("PCA component count " + std::to_string(k) + " outside 1.." +
                         std::to_string(x.cols()));
  }
  return pca_decompose(x).model(k);
}

DenseMatrix transform(const PcaModel& model, const DenseMatrix& x) {
  if (x.cols() != model.dim()) {
    throw ShapeError("PCA transform: input " + x.shape_string() + " but model dimension is " +
                     std::to_string(model.dim()));
  }
  DenseMatrix centered = x;
  for (std::size_t i = 0; i < centered.rows(); ++i) {
    auto r = centered.row(i);
    for (std::size_t j = 0; j < r.size(); ++j) r[j] -= model.mean[j];
  }
  return matmul(centered, transpose(model.components));
}

DenseMatrix inverse_transform(const PcaModel& model, const DenseMatrix& z) {
  if (z.cols() != model.k()) {
    throw ShapeError("PCA inverse transform: input " + z.shape_string() + " but model keeps " +
                     std::to_string(model.k()) + " components");
  }
  DenseMatrix out = matmul(z, model.components);
  add_row_vector(out, model.mean);
  return out;
}

std::vector<double> cumulative_evr(const PcaModel& model) {
  std::vector<double> out(model.explained_variance.size());
  double running = 0.0;
  for (std::size_t i = 0; i < out.size(); ++i) {
    running += model.explained_variance[i];
    out[i] = model.total_variance > 0.0 ? running / model.total_variance : 0.0;
  }
  return out;
}

std::vector<double> cumulative_evr(std::span<const double> spectrum) {
  double total = 0.0;
  for (double v : spectrum) total += v;
  std::vector<double> out(spectrum.size());
  double running = 0.0;
  for (std::size_t i = 0; i < spectrum.size(); ++i) {
    running += spectrum[i];
    out[i] = total > 0.0 ? running / total : 0.0;
  }
  if (!out.empty() && total > 0.0) out.back() = 1.0;
  return out;
}

std::size_t choose_k(std::span<const double> spectrum, double threshold) {
  if (!(threshold > 0.0 && threshold <= 1.0)) {
    throw ParameterError("explained-variance threshold must be in (0, 1], got " +
                         std::to_string(threshold));
  }
  if (spectrum.empty()) throw DataError("choose_k: empty spectrum");
  const auto cum = cumulative_evr(spectrum);
  for (std::size_t i = 0; i < cum.size(); ++i) {
    if (cum[i] >= threshold) return i + 1;
  }
  return cum.size();
}

// ---------------------------------------------------------------------------
// Serialization

void write_pca(std::ostream& out, const PcaModel& model) {
  using detail::write_le;
  detail::write_magic(out, "PCAM");
  write_le<std::uint16_t>(out, kPcaFormatVersion);
  write_le<std::uint32_t>(out, static_cast<std::uint32_t>(model.dim()));
  write_le<std::uint32_t>(out, static_cast<std::uint32_t>(model.k()));
  for (double v : model.mean) write_le<double>(out, v);
  for (double v : model.components.values()) write_le<double>(out, v);
  for (double v : model.explained_variance) write_le<double>(out, v);
  write_le<double>(out, model.total_variance);
  if (!out) throw IoError("failed writing PCA model");
}

PcaModel read_pca(std::istream& in) {
  using detail::read_le;
  detail::expect_magic(in, "PCAM", "PCAM model");
  const auto version = read_le<std::uint16_t>(in, "PCA version");
  if (version != kPcaFormatVersion) throw FormatError("unsupported PCAM version " + std::to_string(version));
  const std::size_t d = read_le<std::uint32_t>(in, "PCA dimension");
  const std::size_t k = read_le<std::uint32_t>(in, "PCA component count");
  if (k > d) throw CorruptionError("PCAM header claims more components than dimensions");
  PcaModel m;
  m.mean.resize(d);
  for (double& v : m.mean) v = read_le<double>(in, "PCA mean");
  m.components = DenseMatrix(k, d);
  for (double& v : m.components.values()) v = read_le<double>(in, "PCA components");
  m.explained_variance.resize(k);
  for (double& v : m.explained_variance) v = read_le<double>(in, "PCA explained variance");
  m.total_variance = read_le<double>(in, "PCA total variance");
  detail::expect_eof(in, "PCAM");
  return m;
}

void save_pca(const PcaModel& model, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot open " + path.string() + " for writing");
  write_pca(out, model);
}

PcaModel load_pca(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open " + path.string());
  return read_pca(in);
}

}  // namespace emlp
