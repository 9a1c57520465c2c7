// emlp: command-line front end for the training and data-reduction pipeline.

#include <algorithm>
#include <chrono>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "emlp/csv.hpp"
#include "emlp/dataset.hpp"
#include "emlp/error.hpp"
#include "emlp/experiment.hpp"
#include "emlp/network.hpp"
#include "emlp/pca.hpp"
#include "emlp/sample_reduction.hpp"

namespace fs = std::filesystem;
using namespace emlp;

namespace {

std::string dashed(std::string key) {
  std::replace(key.begin(), key.end(), '_', '-');
  return key;
}

std::ofstream open_out(const fs::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot open " + path.string() + " for writing");
  return out;
}

// Per-field overrides shared by train and grid.
struct ConfigFlags {
  std::string config_path;
  std::map<std::string, std::string> values;
  CLI::App* app = nullptr;

  void attach(CLI::App* sub) {
    app = sub;
    sub->add_option("--config", config_path, "key=value config file")->check(CLI::ExistingFile);
    for (const auto& key : config_keys()) {
      sub->add_option("--" + dashed(key), values[key], "override config field " + key);
    }
  }

  ExperimentConfig build() const {
    ExperimentConfig cfg;
    if (!config_path.empty()) cfg = load_config(config_path);
    for (const auto& key : config_keys()) {
      if (app->count("--" + dashed(key)) > 0) apply_setting(cfg, key, values.at(key));
    }
    return cfg;
  }
};

struct DataFlags {
  std::string data_dir;
  std::string train;
  std::string valid;
  std::string test;

  void attach(CLI::App* sub, bool need_test) {
    sub->add_option("--data-dir", data_dir, "directory holding train.emds, valid.emds, test.emds");
    sub->add_option("--train", train, "training EMDS file");
    sub->add_option("--valid", valid, "validation EMDS file");
    if (need_test) sub->add_option("--test", test, "test EMDS file");
  }

  fs::path resolve(const std::string& explicit_path, const char* stem) const {
    if (!explicit_path.empty()) return explicit_path;
    if (data_dir.empty()) {
      throw ParameterError(std::string("no ") + stem + " data: pass --" + stem + " or --data-dir");
    }
    return fs::path(data_dir) / (std::string(stem) + ".emds");
  }

  Dataset load(const std::string& explicit_path, const char* stem) const {
    return load_bin(resolve(explicit_path, stem));
  }
};

void print_epoch(const EpochMetrics& m) {
  std::fprintf(stderr, "epoch %3zu  train_loss %.4f  train_acc %.4f  valid_loss %.4f  valid_acc %.4f  %.2fs\n",
               m.epoch, m.train_loss, m.train_acc, m.valid_loss, m.valid_acc, m.epoch_seconds);
}

void write_summary(std::ostream& out, const PipelineResult& res) {
  const RunResult& run = res.run;
  out << "status=" << to_string(run.status) << '\n';
  if (!run.message.empty()) out << "message=" << run.message << '\n';
  out << "train_samples=" << res.train_samples << '\n';
  out << "epochs_run=" << run.history.size() << '\n';
  out << "best_valid_acc=" << format_double(run.best_valid_acc) << '\n';
  out << "best_epoch=" << run.best_epoch << '\n';
  if (run.test_acc) out << "test_acc=" << format_double(*run.test_acc) << '\n';
  if (run.test_loss) out << "test_loss=" << format_double(*run.test_loss) << '\n';
  out << "mean_epoch_seconds=" << format_double(run.mean_epoch_seconds()) << '\n';
  if (run.history.size() >= 2) {
    const OverfitReport r = overfit_report(run.history);
    out << "min_valid_loss_epoch=" << r.min_valid_loss_epoch << '\n';
    out << "final_generalization_gap=" << format_double(r.final_generalization_gap) << '\n';
    out << "valid_loss_rebound=" << format_double(r.valid_loss_rebound) << '\n';
  }
}

std::vector<std::size_t> parse_widths(const std::string& text) {
  std::vector<std::size_t> widths;
  std::stringstream ss(text);
  std::string part;
  while (std::getline(ss, part, ',')) {
    std::size_t pos = 0;
    unsigned long long v = 0;
    try {
      v = std::stoull(part, &pos);
    } catch (const std::exception&) {
      pos = 0;
    }
    if (pos == 0 || pos != part.size()) throw ParameterError("bad width '" + part + "'");
    widths.push_back(static_cast<std::size_t>(v));
  }
  return widths;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"emlp: MLP training, PCA and sample pruning for 47-class handwritten characters"};
  app.require_subcommand(1);
  app.set_help_all_flag("--help-all", "show help for every subcommand");

  // ingest
  auto* ingest = app.add_subcommand("ingest", "IDX files -> normalized, stratified EMDS splits");
  std::vector<std::string> image_files;
  std::vector<std::string> label_files;
  std::size_t n_train = 100000, n_valid = 15800, n_test = 15800;
  std::uint64_t ingest_seed = 1;
  std::string orientation = "transposed";
  std::string ingest_out = ".";
  ingest->add_option("--images", image_files, "IDX image files (pooled in order)")->required()->check(CLI::ExistingFile);
  ingest->add_option("--labels", label_files, "IDX label files, same order as --images")->required()->check(CLI::ExistingFile);
  ingest->add_option("--train-count", n_train, "training samples")->capture_default_str();
  ingest->add_option("--valid-count", n_valid, "validation samples")->capture_default_str();
  ingest->add_option("--test-count", n_test, "test samples")->capture_default_str();
  ingest->add_option("--seed", ingest_seed, "split seed")->capture_default_str();
  ingest->add_option("--orientation", orientation, "transposed or as-stored")
      ->check(CLI::IsMember({"transposed", "as-stored"}))
      ->capture_default_str();
  ingest->add_option("--out-dir", ingest_out, "output directory")->capture_default_str();

  // train
  auto* train_cmd = app.add_subcommand("train", "train one configuration (with optional prune and PCA stages)");
  ConfigFlags train_cfg;
  DataFlags train_data;
  std::string train_out;
  bool quiet = false;
  train_cfg.attach(train_cmd);
  train_data.attach(train_cmd, true);
  train_cmd->add_option("--out-dir", train_out, "write model.mlpm, curves.csv and stage artifacts here");
  train_cmd->add_flag("--quiet", quiet, "no per-epoch progress on stderr");

  // grid
  auto* grid_cmd = app.add_subcommand("grid", "grid search; results CSV sorted by best validation accuracy");
  ConfigFlags grid_cfg;
  DataFlags grid_data;
  std::string grid_file;
  std::string grid_out = ".";
  grid_cfg.attach(grid_cmd);
  grid_data.attach(grid_cmd, false);
  grid_cmd->add_option("--grid", grid_file, "grid file, one 'key=v1|v2|...' per line")->required()->check(CLI::ExistingFile);
  grid_cmd->add_option("--out-dir", grid_out, "write grid.csv and per-run curves here")->capture_default_str();

  // pca
  auto* pca_cmd = app.add_subcommand("pca", "fit PCA on a training set; EVR curve and optional projection");
  DataFlags pca_data;
  std::size_t pca_k = 78;
  bool pca_transform = false;
  std::string pca_out = ".";
  pca_data.attach(pca_cmd, true);
  pca_cmd->add_option("--components", pca_k, "components kept in pca.pcam")->capture_default_str();
  pca_cmd->add_flag("--transform", pca_transform, "also write projected train/valid/test EMDS files");
  pca_cmd->add_option("--out-dir", pca_out, "output directory")->capture_default_str();

  // prune
  auto* prune_cmd = app.add_subcommand("prune", "per-class training sample pruning");
  std::string prune_train;
  std::string prune_method = "mean-distance";
  std::size_t prune_keep = 2000;
  std::size_t prune_pca_k = 78;
  bool prune_chain = false;
  std::size_t prune_mean_keep = 2000;
  std::string prune_out = ".";
  prune_cmd->add_option("--train", prune_train, "training EMDS file")->required()->check(CLI::ExistingFile);
  prune_cmd->add_option("--method", prune_method, "mean-distance or reconstruction-rmse")
      ->check(CLI::IsMember({"mean-distance", "reconstruction-rmse"}))
      ->capture_default_str();
  prune_cmd->add_option("--keep", prune_keep, "samples kept per class")->capture_default_str();
  prune_cmd->add_option("--pca-components", prune_pca_k, "PCA components for reconstruction-rmse")->capture_default_str();
  prune_cmd->add_flag("--chain-after-mean", prune_chain, "run mean-distance pruning first");
  prune_cmd->add_option("--mean-keep", prune_mean_keep, "per-class keep of the chained mean-distance stage")->capture_default_str();
  prune_cmd->add_option("--out-dir", prune_out, "output directory")->capture_default_str();

  // flops
  auto* flops_cmd = app.add_subcommand("flops", "forward-pass multiplication counts");
  std::string flops_arch;
  std::vector<std::size_t> conv;
  flops_cmd->add_option("--architecture", flops_arch, "comma-separated widths, e.g. 784,128,47");
  flops_cmd->add_option("--conv", conv, "square conv layer: input filter padding stride kernels [channels]")
      ->expected(5, 6);

  // eval
  auto* eval_cmd = app.add_subcommand("eval", "evaluate a saved model on an EMDS dataset");
  std::string eval_model;
  std::string eval_data;
  std::string eval_pca;
  eval_cmd->add_option("--model", eval_model, "model file (.mlpm)")->required()->check(CLI::ExistingFile);
  eval_cmd->add_option("--data", eval_data, "dataset file (.emds)")->required()->check(CLI::ExistingFile);
  eval_cmd->add_option("--pca", eval_pca, "PCA model applied to the data first")->check(CLI::ExistingFile);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e);
  }

  try {
    if (*ingest) {
      if (image_files.size() != label_files.size()) {
        throw ParameterError("--images and --labels need the same number of files");
      }
      const IdxOrientation orient =
          orientation == "as-stored" ? IdxOrientation::AsStored : IdxOrientation::Transposed;
      Dataset pooled;
      for (std::size_t i = 0; i < image_files.size(); ++i) {
        Dataset part = normalize(load_idx(image_files[i], label_files[i], orient));
        pooled = i == 0 ? std::move(part) : concatenate(pooled, part);
      }
      const Splits s = stratified_split(pooled, {n_train, n_valid, n_test, ingest_seed});
      fs::create_directories(ingest_out);
      for (const Dataset* d : {&s.train, &s.valid, &s.test}) {
        if (d->size() == 0) continue;
        save_bin(*d, fs::path(ingest_out) / (d->name + ".emds"));
      }
      std::cout << "pooled=" << pooled.size() << " train=" << s.train.size()
                << " valid=" << s.valid.size() << " test=" << s.test.size() << '\n';
    } else if (*train_cmd) {
      const ExperimentConfig cfg = train_cfg.build();
      cfg.validate();
      Splits raw{train_data.load(train_data.train, "train"), train_data.load(train_data.valid, "valid"),
                 Dataset{}};
      const fs::path test_path = train_data.test.empty() && train_data.data_dir.empty()
                                     ? fs::path()
                                     : train_data.resolve(train_data.test, "test");
      if (!test_path.empty() && fs::exists(test_path)) raw.test = load_bin(test_path);
      std::optional<fs::path> out;
      if (!train_out.empty()) out = train_out;
      EpochCallback cb;
      if (!quiet) cb = print_epoch;
      const PipelineResult res = pipeline(cfg, raw, out, cb);
      write_summary(std::cout, res);
      if (out) {
        auto f = open_out(*out / "summary.txt");
        write_summary(f, res);
      }
      if (res.run.status == RunStatus::Invalid) return 2;
    } else if (*grid_cmd) {
      const ExperimentConfig base = grid_cfg.build();
      const Grid grid = load_grid(grid_file);
      const Dataset tr = grid_data.load(grid_data.train, "train");
      const Dataset va = grid_data.load(grid_data.valid, "valid");
      fs::create_directories(grid_out);
      std::size_t done = 0;
      const auto runs = grid_search(base, grid, tr, va, [&](const GridRun& r) {
        ++done;
        std::string desc;
        for (const auto& [k, v] : r.assignment) desc += " " + k + "=" + v;
        std::fprintf(stderr, "run %zu:%s -> %s best_valid_acc %.4f\n", done, desc.c_str(),
                     std::string(to_string(r.result.status)).c_str(), r.result.best_valid_acc);
      });
      auto f = open_out(fs::path(grid_out) / "grid.csv");
      write_grid_csv(f, grid, runs);
      if (!f) throw IoError("failed writing grid.csv");
      write_grid_csv(std::cout, grid, runs);
    } else if (*pca_cmd) {
      const Dataset tr = pca_data.load(pca_data.train, "train");
      const PcaDecomposition dec = pca_decompose(tr.features);
      if (pca_k == 0 || pca_k > tr.dim()) {
        throw ParameterError("--components must be in 1.." + std::to_string(tr.dim()));
      }
      const PcaModel model = dec.model(pca_k);
      fs::create_directories(pca_out);
      save_pca(model, fs::path(pca_out) / "pca.pcam");
      const auto evr = cumulative_evr(dec.spectrum);
      {
        auto f = open_out(fs::path(pca_out) / "evr.csv");
        f << "components,eigenvalue,cumulative_evr\n";
        for (std::size_t i = 0; i < evr.size(); ++i) {
          f << (i + 1) << ',' << format_double(dec.spectrum[i]) << ',' << format_double(evr[i]) << '\n';
        }
      }
      if (pca_transform) {
        auto project = [&](Dataset d, const char* stem) {
          d.features = transform(model, d.features);
          save_bin(d, fs::path(pca_out) / (std::string(stem) + ".emds"));
        };
        project(tr, "train");
        if (!pca_data.valid.empty() || !pca_data.data_dir.empty()) {
          project(pca_data.load(pca_data.valid, "valid"), "valid");
        }
        if (!pca_data.test.empty() || !pca_data.data_dir.empty()) {
          project(pca_data.load(pca_data.test, "test"), "test");
        }
      }
      std::cout << "components=" << pca_k << " cumulative_evr=" << format_double(evr[pca_k - 1])
                << " total_variance=" << format_double(model.total_variance) << '\n';
    } else if (*prune_cmd) {
      Dataset tr = load_bin(prune_train);
      fs::create_directories(prune_out);
      const PruneMethod method = parse_prune_method(prune_method);
      auto emit = [&](const PruneReport& rep, const std::string& prefix) {
        save_prune_csv(rep, fs::path(prune_out) / (prefix + "prune_report.csv"));
        auto f = open_out(fs::path(prune_out) / (prefix + "score_curves.csv"));
        write_score_curves_csv(f, sorted_score_curve(rep));
      };
      if (method == PruneMethod::ReconstructionRmse && prune_chain) {
        const PruneReport first = prune_by_mean_distance(tr.features, tr.labels, prune_mean_keep);
        emit(first, "mean_");
        const auto idx = first.kept_indices();
        tr = subset(tr, idx);
      }
      PruneReport rep;
      if (method == PruneMethod::MeanDistance) {
        rep = prune_by_mean_distance(tr.features, tr.labels, prune_keep);
      } else {
        const PcaModel model = pca_fit(tr.features, prune_pca_k);
        rep = prune_by_reconstruction_rmse(tr.features, tr.labels, model, prune_keep);
      }
      emit(rep, "");
      const auto idx = rep.kept_indices();
      Dataset kept = subset(tr, idx);
      kept.name = "train";
      save_bin(kept, fs::path(prune_out) / "train.emds");
      std::cout << "method=" << to_string(method) << " input=" << tr.size() << " kept=" << kept.size() << '\n';
    } else if (*flops_cmd) {
      if (flops_arch.empty() && conv.empty()) {
        throw ParameterError("flops needs --architecture and/or --conv");
      }
      if (!flops_arch.empty()) {
        const auto widths = parse_widths(flops_arch);
        std::cout << "dense_multiplications=" << flop_count(widths) << '\n';
      }
      if (!conv.empty()) {
        const std::size_t channels = conv.size() == 6 ? conv[5] : 1;
        std::cout << "conv_out_dim=" << conv_out_dim(conv[0], conv[1], conv[2], conv[3]) << '\n';
        std::cout << "conv_multiplications="
                  << conv_multiplications(conv[0], conv[1], conv[2], conv[3], conv[4], channels) << '\n';
      }
    } else if (*eval_cmd) {
      const Network model = load_model(eval_model);
      Dataset data = load_bin(eval_data);
      if (!eval_pca.empty()) data.features = transform(load_pca(eval_pca), data.features);
      const EvalResult r = evaluate(model, data);
      std::cout << "samples=" << data.size() << " loss=" << format_double(r.loss)
                << " accuracy=" << format_double(r.accuracy) << '\n';
    }
  } catch (const Error& e) {
    std::cerr << "emlp: error: " << e.what() << '\n';
    return 1;
  } catch (const std::exception& e) {
    std::cerr << "emlp: unexpected failure: " << e.what() << '\n';
    return 1;
  }
  return 0;
}
