#include "emlp/dataset.hpp"

#include <algorithm>
#include <fstream>
#include <istream>
#include <cstdio>
#include <cstring>
#include <numeric>
#include <ostream>
#include <string>

#include "binary_io.hpp"
#include "emlp/error.hpp"
#include "emlp/rng.hpp"

namespace emlp {

void Dataset::validate() const {
  if (features.rows() != labels.size()) {
    throw ConsistencyError("dataset '" + name + "': " + std::to_string(features.rows()) +
                           " feature rows but " + std::to_string(labels.size()) + " labels");
  }
  for (Label y : labels) {
    if (y < 0) throw LabelError("dataset '" + name + "': negative label " + std::to_string(y));
  }
}

// ---------------------------------------------------------------------------
// IDX

Dataset read_idx(std::istream& images, std::istream& labels, IdxOrientation orientation) {
  const std::uint32_t img_magic = detail::read_be_u32(images, "IDX image magic");
  if (img_magic != kIdxImagesMagic) {
    throw FormatError("IDX images: bad magic 0x" + [&] {
      char buf[9];
      std::snprintf(buf, sizeof buf, "%08x", img_magic);
      return std::string(buf);
    }() + " (expected 0x00000803)");
  }
  const std::uint32_t n = detail::read_be_u32(images, "IDX image count");
  const std::uint32_t rows = detail::read_be_u32(images, "IDX image rows");
  const std::uint32_t cols = detail::read_be_u32(images, "IDX image cols");

  const std::uint32_t lbl_magic = detail::read_be_u32(labels, "IDX label magic");
  if (lbl_magic != kIdxLabelsMagic) {
    throw FormatError("IDX labels: bad magic (expected 0x00000801)");
  }
  const std::uint32_t n_labels = detail::read_be_u32(labels, "IDX label count");
  if (n_labels != n) {
    throw ConsistencyError("IDX files disagree: " + std::to_string(n) + " images but " +
                           std::to_string(n_labels) + " labels");
  }
  if (rows == 0 || cols == 0) throw FormatError("IDX images: zero image dimension");

  const std::size_t d = std::size_t{rows} * cols;
  Dataset ds;
  ds.normalized = false;
  ds.features = DenseMatrix(n, d);
  ds.labels.resize(n);

  std::vector<unsigned char> pixels(d);
  for (std::size_t i = 0; i < n; ++i) {
    if (!images.read(reinterpret_cast<char*>(pixels.data()), static_cast<std::streamsize>(d))) {
      throw IoError("IDX images: truncated at image " + std::to_string(i) + " of " +
                    std::to_string(n));
    }
    auto out = ds.features.row(i);
    if (orientation == IdxOrientation::AsStored) {
      for (std::size_t j = 0; j < d; ++j) out[j] = pixels[j];
    } else {
      // Stored (r, c) becomes output (c, r); the output image is cols x rows.
      for (std::size_t r = 0; r < rows; ++r)
        for (std::size_t c = 0; c < cols; ++c) out[c * rows + r] = pixels[r * cols + c];
    }
  }
  std::vector<unsigned char> raw_labels(n);
  if (n > 0 && !labels.read(reinterpret_cast<char*>(raw_labels.data()), n)) {
    throw IoError("IDX labels: truncated label payload");
  }
  std::transform(raw_labels.begin(), raw_labels.end(), ds.labels.begin(),
                 [](unsigned char b) { return static_cast<Label>(b); });
  return ds;
}

Dataset load_idx(const std::filesystem::path& images, const std::filesystem::path& labels,
                 IdxOrientation orientation) {
  std::ifstream img(images, std::ios::binary);
  if (!img) throw IoError("cannot open " + images.string());
  std::ifstream lbl(labels, std::ios::binary);
  if (!lbl) throw IoError("cannot open " + labels.string());
  Dataset ds = read_idx(img, lbl, orientation);
  ds.name = images.filename().string();
  return ds;
}

Dataset normalize(Dataset raw) {
  if (raw.normalized) throw StateError("dataset '" + raw.name + "' is already normalized");
  for (double& v : raw.features.values()) {
    if (v < 0.0 || v > 255.0) {
      throw DataError("normalize: pixel value " + std::to_string(v) + " outside 0..255");
    }
    v /= 255.0;
  }
  raw.normalized = true;
  return raw;
}

// ---------------------------------------------------------------------------
// Splitting and shuffling

std::vector<std::size_t> class_counts(std::span<const Label> labels) {
  std::vector<std::size_t> counts;
  for (Label y : labels) {
    if (y < 0) throw LabelError("negative label " + std::to_string(y));
    if (static_cast<std::size_t>(y) >= counts.size()) counts.resize(static_cast<std::size_t>(y) + 1);
    ++counts[static_cast<std::size_t>(y)];
  }
  return counts;
}

namespace {

// Largest-remainder apportionment of `total` over classes in proportion to
// `sizes`, never exceeding `capacity`. Ties go to the lower class index.
std::vector<std::size_t> apportion(std::size_t total, std::span<const std::size_t> sizes,
                                   std::span<const std::size_t> capacity) {
  const std::size_t n_total = std::accumulate(sizes.begin(), sizes.end(), std::size_t{0});
  std::vector<std::size_t> quota(sizes.size(), 0);
  if (total == 0 || n_total == 0) return quota;
  std::vector<std::pair<std::uint64_t, std::size_t>> remainders;  // (numerator remainder, class)
  std::size_t assigned = 0;
  for (std::size_t c = 0; c < sizes.size(); ++c) {
    const std::uint64_t num = static_cast<std::uint64_t>(total) * sizes[c];
    quota[c] = std::min<std::size_t>(num / n_total, capacity[c]);
    assigned += quota[c];
    remainders.emplace_back(num % n_total, c);
  }
  std::stable_sort(remainders.begin(), remainders.end(),
                   [](const auto& a, const auto& b) { return a.first > b.first; });
  while (assigned < total) {
    bool progressed = false;
    for (const auto& [rem, c] : remainders) {
      if (assigned == total) break;
      if (quota[c] < capacity[c]) {
        ++quota[c];
        ++assigned;
        progressed = true;
      }
    }
    if (!progressed) throw ParameterError("split: not enough samples to fill the requested counts");
  }
  return quota;
}

}  // namespace

Splits stratified_split(const Dataset& full, const SplitSpec& spec) {
  full.validate();
  const std::size_t requested = spec.train_count + spec.valid_count + spec.test_count;
  if (requested > full.size()) {
    throw ParameterError("split requests " + std::to_string(requested) + " samples but only " +
                         std::to_string(full.size()) + " are available");
  }

  const auto sizes = class_counts(full.labels);
  std::vector<std::vector<std::size_t>> members(sizes.size());
  for (std::size_t i = 0; i < full.size(); ++i) {
    members[static_cast<std::size_t>(full.labels[i])].push_back(i);
  }
  RngState rng(spec.seed);
  for (auto& m : members) {
    const auto perm = random_permutation(m.size(), rng);
    std::vector<std::size_t> shuffled(m.size());
    for (std::size_t i = 0; i < m.size(); ++i) shuffled[i] = m[perm[i]];
    m = std::move(shuffled);
  }

  std::vector<std::size_t> capacity(sizes.begin(), sizes.end());
  std::vector<std::size_t> cursor(sizes.size(), 0);
  auto take = [&](std::size_t total) {
    const auto quota = apportion(total, sizes, capacity);
    std::vector<std::size_t> picked;
    picked.reserve(total);
    for (std::size_t c = 0; c < sizes.size(); ++c) {
      for (std::size_t j = 0; j < quota[c]; ++j) picked.push_back(members[c][cursor[c] + j]);
      cursor[c] += quota[c];
      capacity[c] -= quota[c];
    }
    const auto perm = random_permutation(picked.size(), rng);
    std::vector<std::size_t> ordered(picked.size());
    for (std::size_t i = 0; i < picked.size(); ++i) ordered[i] = picked[perm[i]];
    return ordered;
  };

  Splits out;
  const auto train_idx = take(spec.train_count);
  const auto valid_idx = take(spec.valid_count);
  const auto test_idx = take(spec.test_count);
  out.train = subset(full, train_idx);
  out.valid = subset(full, valid_idx);
  out.test = subset(full, test_idx);
  out.train.name = "train";
  out.valid.name = "valid";
  out.test.name = "test";
  return out;
}

Dataset shuffle(const Dataset& ds, std::uint64_t seed) {
  RngState rng(seed);
  const auto perm = random_permutation(ds.size(), rng);
  Dataset out = subset(ds, perm);
  out.name = ds.name;
  return out;
}

Dataset subset(const Dataset& ds, std::span<const std::size_t> indices) {
  ds.validate();
  Dataset out;
  out.name = ds.name;
  out.normalized = ds.normalized;
  out.features = gather_rows(ds.features, indices);
  out.labels.reserve(indices.size());
  for (std::size_t i : indices) out.labels.push_back(ds.labels[i]);
  return out;
}

Dataset concatenate(const Dataset& a, const Dataset& b) {
  if (a.dim() != b.dim()) {
    throw ShapeError("concatenate: dimensions " + std::to_string(a.dim()) + " and " +
                     std::to_string(b.dim()) + " differ");
  }
  if (a.normalized != b.normalized) throw StateError("concatenate: mixed normalization state");
  std::vector<double> data;
  data.reserve(a.features.size() + b.features.size());
  data.insert(data.end(), a.features.values().begin(), a.features.values().end());
  data.insert(data.end(), b.features.values().begin(), b.features.values().end());
  Dataset out;
  out.name = a.name;
  out.normalized = a.normalized;
  out.features = DenseMatrix(a.size() + b.size(), a.dim(), std::move(data));
  out.labels = a.labels;
  out.labels.insert(out.labels.end(), b.labels.begin(), b.labels.end());
  return out;
}

// ---------------------------------------------------------------------------
// Batching

BatchRange::BatchRange(const Dataset& ds, std::size_t batch_size) : ds_(&ds), batch_size_(batch_size) {
  if (batch_size == 0) throw ParameterError("batch size must be at least 1");
}

std::size_t BatchRange::size() const noexcept {
  return (ds_->size() + batch_size_ - 1) / batch_size_;
}

Batch BatchRange::operator[](std::size_t index) const {
  const std::size_t begin = index * batch_size_;
  const std::size_t end = std::min(ds_->size(), begin + batch_size_);
  const std::size_t d = ds_->dim();
  const auto src = ds_->features.values().subspan(begin * d, (end - begin) * d);
  Batch b{DenseMatrix(end - begin, d, std::vector<double>(src.begin(), src.end())),
          std::span<const Label>(ds_->labels).subspan(begin, end - begin)};
  return b;
}

BatchRange batches(const Dataset& ds, std::size_t batch_size) { return BatchRange(ds, batch_size); }

// ---------------------------------------------------------------------------
// EMDS

void write_dataset(std::ostream& out, const Dataset& ds) {
  using detail::write_le;
  ds.validate();
  if (ds.size() == 0) throw ParameterError("EMDS files must hold at least one sample");
  if (ds.size() > 0xFFFFFFFFull || ds.dim() > 0xFFFFFFFFull) {
    throw ParameterError("dataset too large for EMDS u32 header fields");
  }
  for (Label y : ds.labels) {
    if (y < 0 || y > 255) throw LabelError("label " + std::to_string(y) + " does not fit one byte");
  }
  detail::write_magic(out, "EMDS");
  write_le<std::uint16_t>(out, kDatasetFormatVersion);
  write_le<std::uint32_t>(out, static_cast<std::uint32_t>(ds.size()));
  write_le<std::uint32_t>(out, static_cast<std::uint32_t>(ds.dim()));
  write_le<std::uint8_t>(out, 1);
  const auto values = ds.features.values();
  std::vector<char> buf(values.size() * 4 + ds.size());
  for (std::size_t i = 0; i < values.size(); ++i) {
    const float f = static_cast<float>(values[i]);
    std::uint32_t bits;
    std::memcpy(&bits, &f, 4);
    for (std::size_t b = 0; b < 4; ++b) buf[4 * i + b] = static_cast<char>((bits >> (8 * b)) & 0xFFu);
  }
  for (std::size_t i = 0; i < ds.size(); ++i) {
    buf[values.size() * 4 + i] = static_cast<char>(static_cast<std::uint8_t>(ds.labels[i]));
  }
  out.write(buf.data(), static_cast<std::streamsize>(buf.size()));
  if (!out) throw IoError("failed writing EMDS dataset");
}

Dataset read_dataset(std::istream& in) {
  using detail::read_le;
  detail::expect_magic(in, "EMDS", "EMDS dataset");
  const auto version = read_le<std::uint16_t>(in, "EMDS version");
  if (version != kDatasetFormatVersion) {
    throw FormatError("unsupported EMDS version " + std::to_string(version));
  }
  const std::size_t n = read_le<std::uint32_t>(in, "EMDS sample count");
  const std::size_t d = read_le<std::uint32_t>(in, "EMDS dimension");
  const auto label_width = read_le<std::uint8_t>(in, "EMDS label width");
  if (label_width != 1) throw FormatError("unsupported EMDS label width " + std::to_string(label_width));
  if (n == 0) throw CorruptionError("EMDS header declares zero samples");
  const std::uint64_t payload = static_cast<std::uint64_t>(n) * d * 4 + n;
  const auto here = in.tellg();
  if (here != std::istream::pos_type(-1)) {
    in.seekg(0, std::ios::end);
    const auto end = in.tellg();
    in.seekg(here);
    if (static_cast<std::uint64_t>(end - here) != payload) {
      throw CorruptionError("EMDS payload is " + std::to_string(end - here) + " bytes but the header declares " +
                            std::to_string(payload));
    }
  }

  Dataset ds;
  ds.normalized = true;
  ds.features = DenseMatrix(n, d);
  // Bulk read then decode; per-value stream reads dominate load time otherwise.
  std::vector<unsigned char> raw(n * d * 4);
  if (!in.read(reinterpret_cast<char*>(raw.data()), static_cast<std::streamsize>(raw.size()))) {
    throw CorruptionError("EMDS payload shorter than its header declares");
  }
  auto values = ds.features.values();
  for (std::size_t i = 0; i < values.size(); ++i) {
    const unsigned char* p = raw.data() + 4 * i;
    const std::uint32_t bits = std::uint32_t{p[0]} | (std::uint32_t{p[1]} << 8) |
                               (std::uint32_t{p[2]} << 16) | (std::uint32_t{p[3]} << 24);
    float f;
    std::memcpy(&f, &bits, 4);
    values[i] = f;
  }
  std::vector<unsigned char> lbl(n);
  if (!in.read(reinterpret_cast<char*>(lbl.data()), static_cast<std::streamsize>(n))) {
    throw CorruptionError("EMDS label block shorter than its header declares");
  }
  detail::expect_eof(in, "EMDS");
  ds.labels.assign(lbl.begin(), lbl.end());
  return ds;
}

void save_bin(const Dataset& ds, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot open " + path.string() + " for writing");
  write_dataset(out, ds);
}

Dataset load_bin(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open " + path.string());
  Dataset ds = read_dataset(in);
  ds.name = path.stem().string();
  return ds;
}

}  // namespace emlp
