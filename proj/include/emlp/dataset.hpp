#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <span>
#include <string>
#include <vector>

#include "emlp/loss.hpp"
#include "emlp/matrix.hpp"

namespace emlp {

inline constexpr std::size_t kNumClasses = 47;
inline constexpr std::size_t kImageSide = 28;
inline constexpr std::size_t kImagePixels = kImageSide * kImageSide;

/// Feature rows plus integer labels.
///
/// `normalized` is false only for raw pixel data straight out of an IDX file
/// (values 0..255); normalize() flips it.
struct Dataset {
  DenseMatrix features;
  std::vector<Label> labels;
  std::string name;
  bool normalized = true;

  std::size_t size() const noexcept { return labels.size(); }
  std::size_t dim() const noexcept { return features.cols(); }

  /// Throws if rows and labels disagree or a label is negative.
  void validate() const;
};

enum class IdxOrientation {
  Transposed,  ///< transpose each image (EMNIST stores images column-major)
  AsStored,    ///< keep the file's row-major pixel order
};

inline constexpr std::uint32_t kIdxImagesMagic = 0x00000803;
inline constexpr std::uint32_t kIdxLabelsMagic = 0x00000801;

/// Parses an uncompressed IDX image/label pair into raw (0..255) features.
Dataset load_idx(const std::filesystem::path& images, const std::filesystem::path& labels,
                 IdxOrientation orientation = IdxOrientation::Transposed);
Dataset read_idx(std::istream& images, std::istream& labels,
                 IdxOrientation orientation = IdxOrientation::Transposed);

/// Divides every pixel by 255. Throws StateError on already-normalized data.
Dataset normalize(Dataset raw);

struct SplitSpec {
  std::size_t train_count = 0;
  std::size_t valid_count = 0;
  std::size_t test_count = 0;
  std::uint64_t seed = 1;
};

struct Splits {
  Dataset train;
  Dataset valid;
  Dataset test;
};

/// Class-stratified three-way split.
///
/// Each split's total is apportioned over classes in proportion to class size
/// (largest remainder). Samples are shuffled within their class before
/// allocation and each split is shuffled afterwards, all from `spec.seed`.
Splits stratified_split(const Dataset& full, const SplitSpec& spec);

/// Seeded Fisher-Yates permutation of rows and labels together.
Dataset shuffle(const Dataset& ds, std::uint64_t seed);

/// Rows `indices`, in the given order.
Dataset subset(const Dataset& ds, std::span<const std::size_t> indices);

/// Rows of `a` followed by rows of `b`. Dimensions and normalization must agree.
Dataset concatenate(const Dataset& a, const Dataset& b);

/// Number of samples per label value, sized max label + 1.
std::vector<std::size_t> class_counts(std::span<const Label> labels);

struct Batch {
  DenseMatrix features;
  std::span<const Label> labels;
};

/// Sequential fixed-size chunks of a dataset; the last one may be short.
class BatchRange {
 public:
  BatchRange(const Dataset& ds, std::size_t batch_size);

  std::size_t size() const noexcept;
  Batch operator[](std::size_t index) const;

  class iterator {
   public:
    using value_type = Batch;
    using difference_type = std::ptrdiff_t;
    iterator(const BatchRange* range, std::size_t index) : range_(range), index_(index) {}
    Batch operator*() const { return (*range_)[index_]; }
    iterator& operator++() {
      ++index_;
      return *this;
    }
    bool operator==(const iterator& o) const { return index_ == o.index_; }

   private:
    const BatchRange* range_;
    std::size_t index_;
  };

  iterator begin() const { return {this, 0}; }
  iterator end() const { return {this, size()}; }

 private:
  const Dataset* ds_;
  std::size_t batch_size_;
};

/// Throws ParameterError if batch_size is 0.
BatchRange batches(const Dataset& ds, std::size_t batch_size);

// Binary dataset file "EMDS": magic, u16 version, u32 n, u32 d, u8 label
// width (1), then n*d little-endian f32 features row-major, then n label bytes.
inline constexpr std::uint16_t kDatasetFormatVersion = 1;
inline constexpr std::size_t kDatasetHeaderBytes = 4 + 2 + 4 + 4 + 1;

void write_dataset(std::ostream& out, const Dataset& ds);
Dataset read_dataset(std::istream& in);
void save_bin(const Dataset& ds, const std::filesystem::path& path);
Dataset load_bin(const std::filesystem::path& path);

/// Size in bytes of the EMDS encoding of an n x d dataset.
constexpr std::uint64_t emds_file_size(std::uint64_t n, std::uint64_t d) {
  return kDatasetHeaderBytes + n * d * 4 + n;
}

}  // namespace emlp
