#pragma once

#include <cstddef>
#include <filesystem>
#include <iosfwd>
#include <span>
#include <string_view>
#include <vector>

#include "emlp/dataset.hpp"
#include "emlp/matrix.hpp"
#include "emlp/pca.hpp"

namespace emlp {

struct ClassMeans {
  DenseMatrix means;                // num_classes x d
  std::vector<std::size_t> counts;  // samples per class
};

/// Exact per-class means. Throws DataError naming the first label in
/// [0, num_classes) with no samples.
ClassMeans class_means(const DenseMatrix& x, std::span<const Label> y,
                       std::size_t num_classes = kNumClasses);

/// Euclidean distance of each sample to the mean of its own class.
std::vector<double> mean_distances(const DenseMatrix& x, std::span<const Label> y,
                                   const ClassMeans& means);

/// Per-sample RMSE between x and its PCA project-then-reconstruct image.
std::vector<double> reconstruction_rmse(const DenseMatrix& x, const PcaModel& model);

enum class PruneMethod { MeanDistance, ReconstructionRmse };

std::string_view to_string(PruneMethod m);
/// Accepts "mean-distance" and "reconstruction-rmse".
PruneMethod parse_prune_method(std::string_view text);

/// Outcome of keeping the best-scoring `keep_k` samples of every class.
///
/// `ranked[c]` lists every sample index of class c sorted by ascending score
/// (ties by lower index); the first `kept_counts[c]` of them are kept.
struct PruneReport {
  PruneMethod method = PruneMethod::MeanDistance;
  std::size_t keep_k = 0;
  std::vector<double> scores;                     // per input sample
  std::vector<std::vector<std::size_t>> ranked;   // per class
  std::vector<std::size_t> kept_counts;           // per class

  /// Kept sample indices of every class, ascending (original order preserved).
  std::vector<std::size_t> kept_indices() const;
  std::size_t kept_total() const;
};

/// Ranks every class by `scores` and keeps the `keep_k` lowest.
PruneReport rank_and_keep(PruneMethod method, std::span<const double> scores,
                          std::span<const Label> y, std::size_t keep_k);

PruneReport prune_by_mean_distance(const DenseMatrix& x, std::span<const Label> y,
                                   std::size_t keep_k, std::size_t num_classes = kNumClasses);

PruneReport prune_by_reconstruction_rmse(const DenseMatrix& x, std::span<const Label> y,
                                         const PcaModel& model, std::size_t keep_k);

struct ScoreCurves {
  std::vector<std::vector<double>> per_class;  // sorted ascending
  std::vector<double> average;                 // mean over classes per rank
};

/// Sorted score sequences per class plus their rank-wise average, truncated to
/// the smallest non-empty class.
ScoreCurves sorted_score_curve(const PruneReport& report);

/// CSV with columns class,rank,sample_index,score,kept.
void write_prune_csv(std::ostream& out, const PruneReport& report);
void save_prune_csv(const PruneReport& report, const std::filesystem::path& path);

/// CSV with columns rank,average,class_0,...; blank cells past a class's size.
void write_score_curves_csv(std::ostream& out, const ScoreCurves& curves);

}  // namespace emlp
