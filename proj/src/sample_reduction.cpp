#include "emlp/sample_reduction.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <ostream>
#include <string>

#include "emlp/csv.hpp"
#include "emlp/error.hpp"

namespace emlp {

namespace {

void check_rows(const DenseMatrix& x, std::span<const Label> y) {
  if (x.rows() != y.size()) {
    throw ShapeError("sample reduction: " + std::to_string(y.size()) + " labels for features " +
                     x.shape_string());
  }
}

}  // namespace

ClassMeans class_means(const DenseMatrix& x, std::span<const Label> y, std::size_t num_classes) {
  check_rows(x, y);
  ClassMeans out{DenseMatrix(num_classes, x.cols()), std::vector<std::size_t>(num_classes, 0)};
  for (std::size_t i = 0; i < y.size(); ++i) {
    if (y[i] < 0 || static_cast<std::size_t>(y[i]) >= num_classes) {
      throw LabelError("label " + std::to_string(y[i]) + " outside 0.." +
                       std::to_string(num_classes - 1));
    }
    const auto c = static_cast<std::size_t>(y[i]);
    auto acc = out.means.row(c);
    const auto r = x.row(i);
    for (std::size_t j = 0; j < r.size(); ++j) acc[j] += r[j];
    ++out.counts[c];
  }
  for (std::size_t c = 0; c < num_classes; ++c) {
    if (out.counts[c] == 0) throw DataError("class " + std::to_string(c) + " has no samples");
    const double n = static_cast<double>(out.counts[c]);
    for (double& v : out.means.row(c)) v /= n;
  }
  return out;
}

std::vector<double> mean_distances(const DenseMatrix& x, std::span<const Label> y,
                                   const ClassMeans& means) {
  check_rows(x, y);
  if (means.means.cols() != x.cols()) {
    throw ShapeError("mean_distances: means " + means.means.shape_string() + " vs features " +
                     x.shape_string());
  }
  std::vector<double> out(y.size());
  for (std::size_t i = 0; i < y.size(); ++i) {
    if (y[i] < 0 || static_cast<std::size_t>(y[i]) >= means.means.rows()) {
      throw LabelError("label " + std::to_string(y[i]) + " has no class mean");
    }
    const auto mu = means.means.row(static_cast<std::size_t>(y[i]));
    const auto r = x.row(i);
    double s = 0.0;
    for (std::size_t j = 0; j < r.size(); ++j) {
      const double diff = r[j] - mu[j];
      s += diff * diff;
    }
    out[i] = std::sqrt(s);
  }
  return out;
}

std::vector<double> reconstruction_rmse(const DenseMatrix& x, const PcaModel& model) {
  const DenseMatrix recon = inverse_transform(model, transform(model, x));
  std::vector<double> out(x.rows());
  for (std::size_t i = 0; i < x.rows(); ++i) {
    const auto a = x.row(i);
    const auto b = recon.row(i);
    double s = 0.0;
    for (std::size_t j = 0; j < a.size(); ++j) {
      const double diff = a[j] - b[j];
      s += diff * diff;
    }
    out[i] = std::sqrt(s / static_cast<double>(a.size()));
  }
  return out;
}

std::string_view to_string(PruneMethod m) {
  return m == PruneMethod::MeanDistance ? "mean-distance" : "reconstruction-rmse";
}

PruneMethod parse_prune_method(std::string_view text) {
  if (text == "mean-distance") return PruneMethod::MeanDistance;
  if (text == "reconstruction-rmse") return PruneMethod::ReconstructionRmse;
  throw ParameterError("unknown prune method '" + std::string(text) +
                       "' (expected mean-distance or reconstruction-rmse)");
}

std::vector<std::size_t> PruneReport::kept_indices() const {
  std::vector<std::size_t> out;
  for (std::size_t c = 0; c < ranked.size(); ++c) {
    out.insert(out.end(), ranked[c].begin(),
               ranked[c].begin() + static_cast<std::ptrdiff_t>(kept_counts[c]));
  }
  std::sort(out.begin(), out.end());
  return out;
}

std::size_t PruneReport::kept_total() const {
  std::size_t n = 0;
  for (std::size_t k : kept_counts) n += k;
  return n;
}

PruneReport rank_and_keep(PruneMethod method, std::span<const double> scores,
                          std::span<const Label> y, std::size_t keep_k) {
  if (keep_k < 1) throw ParameterError("keep_k must be at least 1");
  if (scores.size() != y.size()) throw ShapeError("rank_and_keep: scores and labels differ in length");
  PruneReport report;
  report.method = method;
  report.keep_k = keep_k;
  report.scores.assign(scores.begin(), scores.end());
  const auto counts = class_counts(y);
  report.ranked.resize(counts.size());
  for (std::size_t c = 0; c < counts.size(); ++c) report.ranked[c].reserve(counts[c]);
  for (std::size_t i = 0; i < y.size(); ++i) report.ranked[static_cast<std::size_t>(y[i])].push_back(i);
  report.kept_counts.resize(counts.size());
  for (std::size_t c = 0; c < counts.size(); ++c) {
    auto& members = report.ranked[c];
    // members is ascending by index, so a stable sort gives the lowest-index tie rule.
    std::stable_sort(members.begin(), members.end(),
                     [&](std::size_t a, std::size_t b) { return scores[a] < scores[b]; });
    report.kept_counts[c] = std::min(keep_k, members.size());
  }
  return report;
}

PruneReport prune_by_mean_distance(const DenseMatrix& x, std::span<const Label> y,
                                   std::size_t keep_k, std::size_t num_classes) {
  if (keep_k < 1) throw ParameterError("keep_k must be at least 1");
  const ClassMeans means = class_means(x, y, num_classes);
  return rank_and_keep(PruneMethod::MeanDistance, mean_distances(x, y, means), y, keep_k);
}

PruneReport prune_by_reconstruction_rmse(const DenseMatrix& x, std::span<const Label> y,
                                         const PcaModel& model, std::size_t keep_k) {
  if (keep_k < 1) throw ParameterError("keep_k must be at least 1");
  check_rows(x, y);
  return rank_and_keep(PruneMethod::ReconstructionRmse, reconstruction_rmse(x, model), y, keep_k);
}

ScoreCurves sorted_score_curve(const PruneReport& report) {
  ScoreCurves curves;
  std::size_t shortest = 0;
  bool any = false;
  for (const auto& members : report.ranked) {
    std::vector<double> seq;
    seq.reserve(members.size());
    for (std::size_t i : members) seq.push_back(report.scores[i]);
    if (!seq.empty()) {
      shortest = any ? std::min(shortest, seq.size()) : seq.size();
      any = true;
    }
    curves.per_class.push_back(std::move(seq));
  }
  curves.average.assign(shortest, 0.0);
  std::size_t contributing = 0;
  for (const auto& seq : curves.per_class) {
    if (seq.empty()) continue;
    ++contributing;
    for (std::size_t r = 0; r < shortest; ++r) curves.average[r] += seq[r];
  }
  for (double& v : curves.average) v /= static_cast<double>(contributing);
  return curves;
}

void write_prune_csv(std::ostream& out, const PruneReport& report) {
  out << "class,rank,sample_index,score,kept\n";
  for (std::size_t c = 0; c < report.ranked.size(); ++c) {
    const auto& members = report.ranked[c];
    for (std::size_t r = 0; r < members.size(); ++r) {
      out << c << ',' << r << ',' << members[r] << ',' << format_double(report.scores[members[r]])
          << ',' << (r < report.kept_counts[c] ? 1 : 0) << '\n';
    }
  }
}

void save_prune_csv(const PruneReport& report, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot open " + path.string() + " for writing");
  write_prune_csv(out, report);
  if (!out) throw IoError("failed writing " + path.string());
}

void write_score_curves_csv(std::ostream& out, const ScoreCurves& curves) {
  std::size_t longest = curves.average.size();
  for (const auto& seq : curves.per_class) longest = std::max(longest, seq.size());
  out << "rank,average";
  for (std::size_t c = 0; c < curves.per_class.size(); ++c) out << ",class_" << c;
  out << '\n';
  for (std::size_t r = 0; r < longest; ++r) {
    out << r << ',';
    if (r < curves.average.size()) out << format_double(curves.average[r]);
    for (const auto& seq : curves.per_class) {
      out << ',';
      if (r < seq.size()) out << format_double(seq[r]);
    }
    out << '\n';
  }
}

}  // namespace emlp
