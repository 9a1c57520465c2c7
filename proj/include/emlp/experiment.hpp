#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <iosfwd>
#include <optional>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "emlp/dataset.hpp"
#include "emlp/loss.hpp"
#include "emlp/network.hpp"
#include "emlp/pca.hpp"
#include "emlp/sample_reduction.hpp"

namespace emlp {

enum class OptimizerKind { Sgd, Adam };

struct PruneStage {
  PruneMethod method = PruneMethod::MeanDistance;
  std::size_t keep_k = 2000;
  /// Run mean-distance pruning (with `mean_keep_k`) before an RMSE stage.
  bool chain_after_mean = false;
  std::size_t mean_keep_k = 2000;
};

/// Everything needed to reproduce one training run.
struct ExperimentConfig {
  std::vector<std::size_t> architecture{784, 128, 128, 128, 47};
  std::string activation = "relu";
  /// Keep probability per hidden layer, from the first; missing entries mean no dropout.
  std::vector<double> dropout_keep;
  PenaltyConfig penalty;
  OptimizerKind optimizer = OptimizerKind::Adam;
  double learning_rate = 0.1;
  std::size_t epochs = 100;
  std::size_t batch_size = 100;
  std::uint64_t seed = 1;
  std::optional<std::size_t> pca_components;
  std::optional<PruneStage> prune;
  /// Stop after this many epochs without a new best validation loss.
  std::optional<std::size_t> early_stop_patience;

  /// Throws ParameterError describing the first invalid field.
  void validate() const;
};

/// Sets one field from its text form, e.g. ("dropout_keep", "0.75,0.75").
void apply_setting(ExperimentConfig& cfg, std::string_view key, std::string_view value);
/// Parses key=value lines ('#' comments, blank lines ignored) on top of `base`.
ExperimentConfig parse_config(std::string_view text, ExperimentConfig base = {});
ExperimentConfig load_config(const std::filesystem::path& path, ExperimentConfig base = {});
/// All fields as key=value lines, readable by parse_config.
std::string to_config_text(const ExperimentConfig& cfg);
/// Names accepted by apply_setting.
const std::vector<std::string>& config_keys();

struct EpochMetrics {
  std::size_t epoch = 0;  // 1-based
  double train_loss = 0.0;
  double train_acc = 0.0;
  double valid_loss = 0.0;
  double valid_acc = 0.0;
  double epoch_seconds = 0.0;

  friend bool operator==(const EpochMetrics&, const EpochMetrics&) = default;
};

enum class RunStatus { Completed, EarlyStopped, Diverged, Invalid };
std::string_view to_string(RunStatus s);

struct RunResult {
  ExperimentConfig config;
  RunStatus status = RunStatus::Completed;
  std::string message;
  std::vector<EpochMetrics> history;
  double best_valid_acc = 0.0;
  std::size_t best_epoch = 0;
  std::optional<double> test_acc;
  std::optional<double> test_loss;
  std::string model_path;
  Network model;

  /// Mean training seconds per recorded epoch (0 if none).
  double mean_epoch_seconds() const;
};

struct EvalResult {
  double loss = 0.0;
  double accuracy = 0.0;
};

/// Eval-mode loss (mean cross-entropy, no penalty) and argmax accuracy.
EvalResult evaluate(const Network& model, const Dataset& data);

using EpochCallback = std::function<void(const EpochMetrics&)>;

/// Trains a freshly initialised network.
///
/// Each epoch reshuffles the training set with seed XOR epoch, runs
/// mini-batch updates in train mode, then measures train and validation
/// metrics in a separate eval-mode pass. A non-finite batch loss ends the run
/// with status Diverged. `epoch_seconds` covers the update pass only.
RunResult train(const ExperimentConfig& config, const Dataset& train_set, const Dataset& valid_set,
                const EpochCallback& on_epoch = {});

// ---------------------------------------------------------------------------
// Grid search

struct GridAxis {
  std::string key;
  std::vector<std::string> values;
};
using Grid = std::vector<GridAxis>;

/// One axis per line, "key=v1|v2|v3".
Grid parse_grid(std::string_view text);
Grid load_grid(const std::filesystem::path& path);

struct GridRun {
  std::vector<std::pair<std::string, std::string>> assignment;
  RunResult result;
};

/// Cartesian product over `grid` applied to `base`; every run sees the same
/// data and seed. Sorted by best validation accuracy, descending, grid order
/// on ties. Invalid combinations are recorded with status Invalid.
std::vector<GridRun> grid_search(const ExperimentConfig& base, const Grid& grid,
                                 const Dataset& train_set, const Dataset& valid_set,
                                 const std::function<void(const GridRun&)>& on_run = {});

void write_grid_csv(std::ostream& out, const Grid& grid, const std::vector<GridRun>& runs);

// ---------------------------------------------------------------------------
// Pipeline

struct PipelineResult {
  RunResult run;
  std::optional<PruneReport> mean_prune;  // chained first stage, if any
  std::optional<PruneReport> prune;
  std::optional<PcaModel> pca;
  std::size_t train_samples = 0;
};

/// Optional pruning of the raw train split, optional PCA fitted on the
/// (pruned) train split and applied to all three, training, then one test
/// evaluation. When `out_dir` is given, the model, curves, PCA model and prune
/// reports are written there.
PipelineResult pipeline(const ExperimentConfig& config, const Splits& raw,
                        const std::optional<std::filesystem::path>& out_dir = std::nullopt,
                        const EpochCallback& on_epoch = {});

// ---------------------------------------------------------------------------
// Reporting

/// CSV with columns epoch,train_loss,train_acc,valid_loss,valid_acc,epoch_seconds.
void write_curves(std::ostream& out, const std::vector<EpochMetrics>& history);
void emit_curves(const RunResult& run, const std::filesystem::path& path);
std::vector<EpochMetrics> read_curves(std::istream& in);
std::vector<EpochMetrics> load_curves(const std::filesystem::path& path);

struct OverfitReport {
  std::size_t min_valid_loss_epoch = 0;  // 1-based
  double final_generalization_gap = 0.0;
  double valid_loss_rebound = 0.0;
};

/// Requires at least two epochs.
OverfitReport overfit_report(const std::vector<EpochMetrics>& history);

/// Scalar multiplications of one dense forward pass: sum of consecutive width products.
std::uint64_t flop_count(std::span<const std::size_t> widths);

/// floor((input - filter + 2 * padding) / stride) + 1.
std::size_t conv_out_dim(std::size_t input, std::size_t filter, std::size_t padding,
                         std::size_t stride);

/// Multiplications of one square convolution layer: out^2 * filter^2 * channels * kernels.
std::uint64_t conv_multiplications(std::size_t input, std::size_t filter, std::size_t padding,
                                   std::size_t stride, std::size_t kernels,
                                   std::size_t channels = 1);

}  // namespace emlp
