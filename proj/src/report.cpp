#include <fstream>
#include <istream>
#include <ostream>
#include <sstream>
#include <string>

#include "emlp/csv.hpp"
#include "emlp/error.hpp"
#include "emlp/experiment.hpp"

namespace emlp {

namespace {

constexpr const char* kCurvesHeader = "epoch,train_loss,train_acc,valid_loss,valid_acc,epoch_seconds";

}  // namespace

void write_curves(std::ostream& out, const std::vector<EpochMetrics>& history) {
  out << kCurvesHeader << '\n';
  for (const auto& m : history) {
    out << m.epoch << ',' << format_double(m.train_loss) << ',' << format_double(m.train_acc) << ','
        << format_double(m.valid_loss) << ',' << format_double(m.valid_acc) << ','
        << format_double(m.epoch_seconds) << '\n';
  }
}

void emit_curves(const RunResult& run, const std::filesystem::path& path) {
  if (run.history.empty()) throw DataError("emit_curves: run has no recorded epochs");
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot open " + path.string() + " for writing");
  write_curves(out, run.history);
  if (!out) throw IoError("failed writing " + path.string());
}

std::vector<EpochMetrics> read_curves(std::istream& in) {
  std::string line;
  if (!std::getline(in, line) || line != kCurvesHeader) {
    throw FormatError("curves CSV: missing or unexpected header");
  }
  std::vector<EpochMetrics> history;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    std::vector<std::string> cells;
    std::stringstream ss(line);
    std::string cell;
    while (std::getline(ss, cell, ',')) cells.push_back(cell);
    if (cells.size() != 6) throw FormatError("curves CSV: expected 6 columns in '" + line + "'");
    EpochMetrics m;
    m.epoch = static_cast<std::size_t>(std::stoull(cells[0]));
    m.train_loss = parse_double(cells[1]);
    m.train_acc = parse_double(cells[2]);
    m.valid_loss = parse_double(cells[3]);
    m.valid_acc = parse_double(cells[4]);
    m.epoch_seconds = parse_double(cells[5]);
    history.push_back(m);
  }
  return history;
}

std::vector<EpochMetrics> load_curves(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open " + path.string());
  return read_curves(in);
}

OverfitReport overfit_report(const std::vector<EpochMetrics>& history) {
  if (history.size() < 2) throw DataError("overfit_report needs at least two epochs");
  std::size_t best = 0;
  for (std::size_t i = 1; i < history.size(); ++i) {
    if (history[i].valid_loss < history[best].valid_loss) best = i;
  }
  const EpochMetrics& last = history.back();
  OverfitReport r;
  r.min_valid_loss_epoch = history[best].epoch;
  r.final_generalization_gap = last.valid_loss - last.train_loss;
  r.valid_loss_rebound = last.valid_loss / history[best].valid_loss;
  return r;
}

std::uint64_t flop_count(std::span<const std::size_t> widths) {
  if (widths.size() < 2) throw ParameterError("flop_count needs at least two widths");
  std::uint64_t total = 0;
  for (std::size_t i = 0; i + 1 < widths.size(); ++i) {
    total += static_cast<std::uint64_t>(widths[i]) * widths[i + 1];
  }
  return total;
}

std::size_t conv_out_dim(std::size_t input, std::size_t filter, std::size_t padding,
                         std::size_t stride) {
  if (stride < 1) throw ParameterError("convolution stride must be at least 1");
  if (input + 2 * padding < filter) {
    throw ParameterError("convolution filter " + std::to_string(filter) +
                         " is larger than the padded input " + std::to_string(input + 2 * padding));
  }
  return (input + 2 * padding - filter) / stride + 1;
}

std::uint64_t conv_multiplications(std::size_t input, std::size_t filter, std::size_t padding,
                                   std::size_t stride, std::size_t kernels, std::size_t channels) {
  const std::uint64_t out = conv_out_dim(input, filter, padding, stride);
  return out * out * filter * filter * channels * kernels;
}

}  // namespace emlp
