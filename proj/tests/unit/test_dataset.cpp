#include <gtest/gtest.h>

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <map>
#include <random>
#include <sstream>

#include "emlp/dataset.hpp"
#include "emlp/error.hpp"
#include "support/oracles.hpp"

using namespace emlp;
namespace fs = std::filesystem;

namespace {

class TempDir {
 public:
  TempDir() {
    path_ = fs::temp_directory_path() /
            ("emlp_ds_" + std::to_string(std::random_device{}()) + "_" +
             ::testing::UnitTest::GetInstance()->current_test_info()->name());
    fs::create_directories(path_);
  }
  ~TempDir() { fs::remove_all(path_); }
  const fs::path& path() const { return path_; }

 private:
  fs::path path_;
};

Dataset toy(std::size_t n, std::size_t d, std::size_t classes, std::uint64_t seed) {
  std::mt19937_64 gen(seed);
  Dataset ds;
  ds.name = "toy";
  ds.features = DenseMatrix(n, d);
  // Values representable in 32-bit floats so the EMDS round trip is exact.
  for (double& v : ds.features.values()) v = static_cast<float>(std::uniform_real_distribution<double>(0, 1)(gen));
  for (std::size_t i = 0; i < n; ++i) ds.labels.push_back(static_cast<Label>(i % classes));
  return ds;
}

std::multiset<std::pair<std::vector<double>, Label>> as_multiset(const Dataset& ds) {
  std::multiset<std::pair<std::vector<double>, Label>> out;
  for (std::size_t i = 0; i < ds.size(); ++i) {
    const auto r = ds.features.row(i);
    out.emplace(std::vector<double>(r.begin(), r.end()), ds.labels[i]);
  }
  return out;
}

}  // namespace

TEST(Idx, SingleZeroImage) {
  TempDir dir;
  oracle::write_idx_images(dir.path() / "i", std::vector<std::uint8_t>(784, 0), 1, 28, 28);
  oracle::write_idx_labels(dir.path() / "l", {7});
  const auto ds = load_idx(dir.path() / "i", dir.path() / "l");
  ASSERT_EQ(ds.size(), 1u);
  ASSERT_EQ(ds.dim(), 784u);
  for (double v : ds.features.values()) EXPECT_EQ(v, 0.0);
  EXPECT_EQ(ds.labels[0], 7);
  EXPECT_FALSE(ds.normalized);
}

TEST(Idx, HandcraftedBytesBothOrientations) {
  TempDir dir;
  // Two 2x3 images with distinct bytes.
  const std::vector<std::uint8_t> px{1, 2, 3, 4, 5, 6, 10, 20, 30, 40, 50, 255};
  oracle::write_idx_images(dir.path() / "i", px, 2, 2, 3);
  oracle::write_idx_labels(dir.path() / "l", {0, 46});
  const auto stored = load_idx(dir.path() / "i", dir.path() / "l", IdxOrientation::AsStored);
  EXPECT_EQ(stored.features, DenseMatrix::from_rows({{1, 2, 3, 4, 5, 6}, {10, 20, 30, 40, 50, 255}}));
  EXPECT_EQ(stored.labels, (std::vector<Label>{0, 46}));
  // Transposed: stored pixel (r, c) lands at c * rows + r.
  const auto flipped = load_idx(dir.path() / "i", dir.path() / "l", IdxOrientation::Transposed);
  EXPECT_EQ(flipped.features, DenseMatrix::from_rows({{1, 4, 2, 5, 3, 6}, {10, 40, 20, 50, 30, 255}}));
}

TEST(Idx, RejectsBadFiles) {
  TempDir dir;
  const auto& d = dir.path();
  const std::vector<std::uint8_t> px(2 * 4, 9);
  oracle::write_idx_images(d / "ok_i", px, 2, 2, 2);
  oracle::write_idx_labels(d / "ok_l", {1, 2});

  // Labels passed as images.
  EXPECT_THROW(load_idx(d / "ok_l", d / "ok_l"), FormatError);
  // Byte-swapped (little-endian) headers.
  oracle::write_idx_images(d / "le_i", px, 2, 2, 2, 0x03080000);
  oracle::write_idx_labels(d / "le_l", {1, 2}, 0x01080000);
  EXPECT_THROW(load_idx(d / "le_i", d / "ok_l"), FormatError);
  EXPECT_THROW(load_idx(d / "ok_i", d / "le_l"), FormatError);
  // Count mismatch.
  oracle::write_idx_labels(d / "three_l", {1, 2, 3});
  EXPECT_THROW(load_idx(d / "ok_i", d / "three_l"), ConsistencyError);
  // Truncated pixel payload.
  oracle::write_idx_images(d / "short_i", std::vector<std::uint8_t>(5, 1), 2, 2, 2);
  EXPECT_THROW(load_idx(d / "short_i", d / "ok_l"), IoError);
  // Missing file.
  EXPECT_THROW(load_idx(d / "nope", d / "ok_l"), IoError);
}

TEST(Normalize, ScalesAndRefusesTwice) {
  Dataset raw{DenseMatrix::from_rows({{0, 255, 51}}), {0}, "raw", false};
  const auto n = normalize(raw);
  EXPECT_EQ(n.features(0, 0), 0.0);
  EXPECT_EQ(n.features(0, 1), 1.0);
  EXPECT_DOUBLE_EQ(n.features(0, 2), 0.2);
  EXPECT_TRUE(n.normalized);
  EXPECT_THROW(normalize(n), StateError);
}

TEST(Split, ProportionalToyExample) {
  auto ds = toy(20, 3, 2, 1);
  const auto s = stratified_split(ds, {12, 4, 4, 7});
  EXPECT_EQ(class_counts(s.train.labels), (std::vector<std::size_t>{6, 6}));
  EXPECT_EQ(class_counts(s.valid.labels), (std::vector<std::size_t>{2, 2}));
  EXPECT_EQ(class_counts(s.test.labels), (std::vector<std::size_t>{2, 2}));
  EXPECT_EQ(s.train.name, "train");
}

TEST(Split, FullAllocationPartitionsInput) {
  auto ds = toy(300, 4, 7, 2);
  const auto s = stratified_split(ds, {200, 50, 50, 3});
  auto all = as_multiset(s.train);
  for (const auto& part : {s.valid, s.test}) {
    const auto m = as_multiset(part);
    all.insert(m.begin(), m.end());
  }
  EXPECT_EQ(all, as_multiset(ds));

  const auto again = stratified_split(ds, {200, 50, 50, 3});
  EXPECT_EQ(again.train.features, s.train.features);
  EXPECT_EQ(again.valid.labels, s.valid.labels);

  const auto train_only = stratified_split(ds, {300, 0, 0, 4});
  EXPECT_EQ(as_multiset(train_only.train), as_multiset(ds));
}

TEST(Split, ValidationProportionsTrackTraining) {
  // Uneven class sizes 40..86.
  Dataset ds;
  ds.features = DenseMatrix(0, 1);
  std::vector<double> vals;
  for (Label c = 0; c < 47; ++c) {
    for (int k = 0; k < 40 + c; ++k) {
      ds.labels.push_back(c);
      vals.push_back(static_cast<double>(c));
    }
  }
  ds.features = DenseMatrix(ds.labels.size(), 1, vals);
  const auto s = stratified_split(ds, {1900, 500, 500, 1});
  const auto tr = class_counts(s.train.labels);
  const auto va = class_counts(s.valid.labels);
  for (std::size_t c = 0; c < 47; ++c) {
    const double pt = static_cast<double>(tr[c]) / 1900.0;
    const double pv = static_cast<double>(va[c]) / 500.0;
    EXPECT_LT(std::abs(pt - pv), 0.01) << "class " << c;
  }
}

TEST(Split, RejectsInfeasibleCounts) {
  auto ds = toy(10, 2, 2, 1);
  EXPECT_THROW(stratified_split(ds, {8, 2, 1, 1}), ParameterError);
}

TEST(Shuffle, Properties) {
  auto one = toy(1, 3, 1, 1);
  EXPECT_EQ(shuffle(one, 5).features, one.features);
  auto ds = toy(50, 4, 5, 2);
  const auto a = shuffle(ds, 9), b = shuffle(ds, 9), c = shuffle(ds, 10);
  EXPECT_EQ(a.features, b.features);
  EXPECT_EQ(a.labels, b.labels);
  EXPECT_NE(a.features, c.features);
  EXPECT_EQ(as_multiset(a), as_multiset(ds));
}

TEST(Batches, ChunkSizesAndOrder) {
  auto ds = toy(250, 2, 3, 1);
  std::vector<std::size_t> sizes;
  std::vector<double> flat;
  std::vector<Label> labels;
  for (const Batch& b : batches(ds, 100)) {
    sizes.push_back(b.features.rows());
    flat.insert(flat.end(), b.features.values().begin(), b.features.values().end());
    labels.insert(labels.end(), b.labels.begin(), b.labels.end());
  }
  EXPECT_EQ(sizes, (std::vector<std::size_t>{100, 100, 50}));
  EXPECT_EQ(flat, ds.features.storage());
  EXPECT_EQ(labels, ds.labels);
  EXPECT_EQ(batches(ds, 250).size(), 1u);
  EXPECT_EQ(batches(ds, 1000).size(), 1u);
  EXPECT_THROW(batches(ds, 0), ParameterError);
}

TEST(Emds, RoundTripIsBitExact) {
  TempDir dir;
  const auto ds = toy(5, 7, 3, 4);
  save_bin(ds, dir.path() / "x.emds");
  const auto back = load_bin(dir.path() / "x.emds");
  EXPECT_EQ(back.features, ds.features);
  EXPECT_EQ(back.labels, ds.labels);
  EXPECT_EQ(back.name, "x");
  EXPECT_EQ(fs::file_size(dir.path() / "x.emds"), emds_file_size(5, 7));
  EXPECT_EQ(emds_file_size(5, 7), 15u + 5 * 7 * 4 + 5);
}

TEST(Emds, StorageArithmetic) {
  EXPECT_EQ(emds_file_size(100000, 78), 15u + 100000ull * 78 * 4 + 100000);
  const double reduction = 1.0 - static_cast<double>(emds_file_size(100000, 78)) /
                                     static_cast<double>(emds_file_size(100000, 784));
  EXPECT_GT(reduction, 0.89);
}

TEST(Emds, RejectsEmptyAndCorruptFiles) {
  Dataset empty;
  empty.features = DenseMatrix(0, 3);
  std::stringstream sink;
  EXPECT_THROW(write_dataset(sink, empty), ParameterError);

  std::stringstream buf;
  write_dataset(buf, toy(4, 3, 2, 1));
  const std::string bytes = buf.str();

  std::string bad_magic = bytes;
  bad_magic[0] = 'X';
  std::stringstream s1(bad_magic);
  EXPECT_THROW(read_dataset(s1), FormatError);

  std::string bad_version = bytes;
  bad_version[4] = 9;
  std::stringstream s2(bad_version);
  EXPECT_THROW(read_dataset(s2), FormatError);

  std::stringstream s3(bytes.substr(0, bytes.size() - 2));
  EXPECT_THROW(read_dataset(s3), CorruptionError);

  std::stringstream s4(bytes + "extra");
  EXPECT_THROW(read_dataset(s4), CorruptionError);
}

TEST(Dataset, HelpersValidate) {
  auto ds = toy(6, 2, 3, 1);
  const std::vector<std::size_t> idx{5, 0};
  const auto sub = subset(ds, idx);
  EXPECT_EQ(sub.labels, (std::vector<Label>{ds.labels[5], ds.labels[0]}));
  const auto both = concatenate(ds, sub);
  EXPECT_EQ(both.size(), 8u);
  auto raw = ds;
  raw.normalized = false;
  EXPECT_THROW(concatenate(ds, raw), StateError);
  EXPECT_THROW(concatenate(ds, toy(2, 3, 1, 1)), ShapeError);
  ds.labels.pop_back();
  EXPECT_THROW(ds.validate(), ConsistencyError);
}
