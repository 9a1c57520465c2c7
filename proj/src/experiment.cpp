#include "emlp/experiment.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <fstream>
#include <limits>
#include <ostream>

#include "emlp/csv.hpp"
#include "emlp/error.hpp"
#include "emlp/optim.hpp"
#include "emlp/rng.hpp"

namespace emlp {

namespace {

constexpr std::size_t kEvalChunk = 1000;

Optimizer make_optimizer(const ExperimentConfig& cfg, const Network& net) {
  if (cfg.optimizer == OptimizerKind::Sgd) return Optimizer::sgd(SgdConfig{cfg.learning_rate});
  AdamConfig adam;
  adam.learning_rate = cfg.learning_rate;
  return Optimizer::adam(adam, net);
}

void check_data(const ExperimentConfig& cfg, const Dataset& ds, const char* which) {
  ds.validate();
  if (ds.dim() != cfg.architecture.front()) {
    throw ShapeError(std::string(which) + " set has " + std::to_string(ds.dim()) +
                     " features but the architecture expects " +
                     std::to_string(cfg.architecture.front()));
  }
  for (Label y : ds.labels) {
    if (static_cast<std::size_t>(y) >= cfg.architecture.back()) {
      throw LabelError(std::string(which) + " set label " + std::to_string(y) +
                       " exceeds output width");
    }
  }
}

}  // namespace

std::string_view to_string(RunStatus s) {
  switch (s) {
    case RunStatus::Completed: return "completed";
    case RunStatus::EarlyStopped: return "early-stopped";
    case RunStatus::Diverged: return "diverged";
    case RunStatus::Invalid: return "invalid";
  }
  return "unknown";
}

double RunResult::mean_epoch_seconds() const {
  if (history.empty()) return 0.0;
  double s = 0.0;
  for (const auto& m : history) s += m.epoch_seconds;
  return s / static_cast<double>(history.size());
}

EvalResult evaluate(const Network& model, const Dataset& data) {
  data.validate();
  if (data.size() == 0) throw DataError("evaluate: empty dataset");
  if (data.dim() != model.input_width()) {
    throw ShapeError("evaluate: dataset has " + std::to_string(data.dim()) +
                     " features but the model expects " + std::to_string(model.input_width()));
  }
  double loss_sum = 0.0;
  std::size_t correct = 0;
  for (const Batch& b : batches(data, kEvalChunk)) {
    const DenseMatrix logits = model.infer(b.features);
    loss_sum += cross_entropy_loss(logits, b.labels) * static_cast<double>(b.labels.size());
    const auto pred = argmax_rows(logits);
    for (std::size_t i = 0; i < pred.size(); ++i) {
      correct += pred[i] == static_cast<std::size_t>(b.labels[i]) ? 1 : 0;
    }
  }
  const double n = static_cast<double>(data.size());
  return {loss_sum / n, static_cast<double>(correct) / n};
}

RunResult train(const ExperimentConfig& config, const Dataset& train_set, const Dataset& valid_set,
                const EpochCallback& on_epoch) {
  config.validate();
  check_data(config, train_set, "training");
  check_data(config, valid_set, "validation");
  if (train_set.size() == 0) throw DataError("training set is empty");

  RunResult result;
  result.config = config;
  RngState model_rng(config.seed);
  result.model = Network::mlp(config.architecture, config.dropout_keep, model_rng);
  Network& net = result.model;
  Optimizer optimizer = make_optimizer(config, net);

  double best_valid_loss = std::numeric_limits<double>::infinity();
  Network best_model;
  std::size_t since_best = 0;
  const std::size_t n = train_set.size();
  const std::size_t bs = config.batch_size;
  std::vector<std::size_t> batch_idx;
  std::vector<Label> batch_labels;

  for (std::size_t epoch = 1; epoch <= config.epochs; ++epoch) {
    const auto start = std::chrono::steady_clock::now();
    RngState shuffle_rng(config.seed ^ static_cast<std::uint64_t>(epoch));
    const auto perm = random_permutation(n, shuffle_rng);

    bool diverged = false;
    double bad_loss = 0.0;
    for (std::size_t b0 = 0; b0 < n; b0 += bs) {
      const std::size_t b1 = std::min(n, b0 + bs);
      batch_idx.assign(perm.begin() + static_cast<std::ptrdiff_t>(b0),
                       perm.begin() + static_cast<std::ptrdiff_t>(b1));
      batch_labels.clear();
      for (std::size_t i : batch_idx) batch_labels.push_back(train_set.labels[i]);

      DenseMatrix logits = net.forward(gather_rows(train_set.features, batch_idx), Mode::Train, model_rng);
      CrossEntropy ce = cross_entropy_softmax(logits, batch_labels);
      const double total = ce.loss + (config.penalty.active() ? penalty_value(net, config.penalty) : 0.0);
      if (!std::isfinite(total)) {
        net.clear_caches();
        diverged = true;
        bad_loss = total;
        break;
      }
      ParamGrads grads = net.backward(ce.grad);
      add_penalty_grad(net, config.penalty, grads);
      optimizer.step(net, grads);
    }
    const double seconds =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();

    EpochMetrics m;
    m.epoch = epoch;
    m.epoch_seconds = seconds;
    if (diverged) {
      const double nan = std::numeric_limits<double>::quiet_NaN();
      m.train_loss = std::isnan(bad_loss) ? nan : bad_loss;
      m.train_acc = m.valid_loss = m.valid_acc = nan;
      result.history.push_back(m);
      result.status = RunStatus::Diverged;
      result.message = "non-finite training loss in epoch " + std::to_string(epoch);
      if (on_epoch) on_epoch(m);
      break;
    }
    const EvalResult tr = evaluate(net, train_set);
    const EvalResult va = evaluate(net, valid_set);
    m.train_loss = tr.loss;
    m.train_acc = tr.accuracy;
    m.valid_loss = va.loss;
    m.valid_acc = va.accuracy;
    result.history.push_back(m);
    if (on_epoch) on_epoch(m);

    if (!std::isfinite(tr.loss) || !std::isfinite(va.loss)) {
      result.status = RunStatus::Diverged;
      result.message = "non-finite evaluation loss after epoch " + std::to_string(epoch);
      break;
    }
    if (va.accuracy > result.best_valid_acc || result.best_epoch == 0) {
      result.best_valid_acc = va.accuracy;
      result.best_epoch = epoch;
    }
    if (config.early_stop_patience) {
      if (va.loss < best_valid_loss) {
        best_valid_loss = va.loss;
        best_model = net;
        since_best = 0;
      } else if (++since_best >= *config.early_stop_patience) {
        net = best_model;
        result.status = RunStatus::EarlyStopped;
        result.message = "validation loss did not improve for " +
                         std::to_string(*config.early_stop_patience) + " epochs";
        break;
      }
    }
  }
  return result;
}

// ---------------------------------------------------------------------------
// Grid search

std::vector<GridRun> grid_search(const ExperimentConfig& base, const Grid& grid,
                                 const Dataset& train_set, const Dataset& valid_set,
                                 const std::function<void(const GridRun&)>& on_run) {
  if (grid.empty()) throw ParameterError("grid is empty");
  for (const auto& axis : grid) {
    if (axis.values.empty()) throw ParameterError("grid axis '" + axis.key + "' has no values");
  }

  std::vector<GridRun> runs;
  std::vector<std::size_t> cursor(grid.size(), 0);
  bool done = false;
  while (!done) {
    GridRun run;
    ExperimentConfig cfg = base;
    for (std::size_t a = 0; a < grid.size(); ++a) {
      run.assignment.emplace_back(grid[a].key, grid[a].values[cursor[a]]);
    }
    try {
      for (const auto& [key, value] : run.assignment) apply_setting(cfg, key, value);
      cfg.validate();
      run.result = train(cfg, train_set, valid_set);
    } catch (const ParameterError& e) {
      run.result = RunResult{};
      run.result.config = cfg;
      run.result.status = RunStatus::Invalid;
      run.result.message = e.what();
    }
    if (on_run) on_run(run);
    runs.push_back(std::move(run));

    // Odometer increment, last axis fastest.
    std::size_t a = grid.size();
    while (true) {
      if (a == 0) {
        done = true;
        break;
      }
      --a;
      if (++cursor[a] < grid[a].values.size()) break;
      cursor[a] = 0;
    }
  }

  auto key = [](const GridRun& r) {
    return r.result.status == RunStatus::Invalid ? -1.0 : r.result.best_valid_acc;
  };
  std::stable_sort(runs.begin(), runs.end(),
                   [&](const GridRun& x, const GridRun& y) { return key(x) > key(y); });
  return runs;
}

void write_grid_csv(std::ostream& out, const Grid& grid, const std::vector<GridRun>& runs) {
  out << "rank";
  for (const auto& axis : grid) out << ',' << axis.key;
  out << ",status,best_valid_acc,best_epoch,final_train_acc,final_valid_acc,final_valid_loss,"
         "mean_epoch_seconds,message\n";
  for (std::size_t i = 0; i < runs.size(); ++i) {
    const auto& r = runs[i].result;
    out << (i + 1);
    for (const auto& [k, v] : runs[i].assignment) {
      // Values such as "0.75,0.75" need quoting.
      if (v.find(',') != std::string::npos) out << ",\"" << v << '"';
      else out << ',' << v;
    }
    const double nan = std::numeric_limits<double>::quiet_NaN();
    const EpochMetrics last = r.history.empty() ? EpochMetrics{0, nan, nan, nan, nan, 0.0}
                                                : r.history.back();
    std::string msg = r.message;
    std::replace(msg.begin(), msg.end(), '"', '\'');
    out << ',' << to_string(r.status) << ',' << format_double(r.best_valid_acc) << ','
        << r.best_epoch << ',' << format_double(last.train_acc) << ','
        << format_double(last.valid_acc) << ',' << format_double(last.valid_loss) << ','
        << format_double(r.mean_epoch_seconds()) << ",\"" << msg << "\"\n";
  }
}

// ---------------------------------------------------------------------------
// Pipeline

PipelineResult pipeline(const ExperimentConfig& config, const Splits& raw,
                        const std::optional<std::filesystem::path>& out_dir,
                        const EpochCallback& on_epoch) {
  config.validate();
  PipelineResult result;
  Dataset train_set = raw.train;
  Dataset valid_set = raw.valid;
  Dataset test_set = raw.test;
  if (out_dir) std::filesystem::create_directories(*out_dir);

  if (config.prune) {
    const PruneStage& stage = *config.prune;
    const std::size_t classes = class_counts(train_set.labels).size();
    if (stage.method == PruneMethod::MeanDistance) {
      result.prune = prune_by_mean_distance(train_set.features, train_set.labels, stage.keep_k, classes);
    } else {
      if (stage.chain_after_mean) {
        result.mean_prune =
            prune_by_mean_distance(train_set.features, train_set.labels, stage.mean_keep_k, classes);
        train_set = subset(train_set, result.mean_prune->kept_indices());
      }
      const PcaModel recon = pca_fit(train_set.features, config.pca_components.value_or(78));
      result.prune = prune_by_reconstruction_rmse(train_set.features, train_set.labels, recon, stage.keep_k);
    }
    train_set = subset(train_set, result.prune->kept_indices());
  }

  if (config.pca_components) {
    result.pca = pca_fit(train_set.features, *config.pca_components);
    auto project = [&](const Dataset& ds) {
      Dataset out;
      out.name = ds.name;
      out.normalized = true;
      out.features = transform(*result.pca, ds.features);
      out.labels = ds.labels;
      return out;
    };
    train_set = project(train_set);
    valid_set = project(valid_set);
    test_set = project(test_set);
  }

  ExperimentConfig run_cfg = config;
  run_cfg.architecture.front() = train_set.dim();
  result.train_samples = train_set.size();
  result.run = train(run_cfg, train_set, valid_set, on_epoch);
  if (result.run.status != RunStatus::Diverged && test_set.size() > 0) {
    const EvalResult te = evaluate(result.run.model, test_set);
    result.run.test_acc = te.accuracy;
    result.run.test_loss = te.loss;
  }

  if (out_dir) {
    const auto model_path = *out_dir / "model.mlpm";
    save_model(result.run.model, model_path);
    result.run.model_path = model_path.string();
    if (!result.run.history.empty()) emit_curves(result.run, *out_dir / "curves.csv");
    if (result.pca) save_pca(*result.pca, *out_dir / "pca.pcam");
    if (result.prune) save_prune_csv(*result.prune, *out_dir / "prune_report.csv");
    if (result.mean_prune) save_prune_csv(*result.mean_prune, *out_dir / "mean_prune_report.csv");
    std::ofstream cfg_out(*out_dir / "config.txt");
    cfg_out << to_config_text(run_cfg);
  }
  return result;
}

}  // namespace emlp
