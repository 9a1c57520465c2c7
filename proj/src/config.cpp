#include <algorithm>
#include <cctype>
#include <charconv>
#include <fstream>
#include <sstream>
#include <string>

#include "emlp/csv.hpp"
#include "emlp/error.hpp"
#include "emlp/experiment.hpp"

namespace emlp {

namespace {

std::string_view trim(std::string_view s) {
  while (!s.empty() && std::isspace(static_cast<unsigned char>(s.front()))) s.remove_prefix(1);
  while (!s.empty() && std::isspace(static_cast<unsigned char>(s.back()))) s.remove_suffix(1);
  return s;
}

std::vector<std::string_view> split(std::string_view s, char sep) {
  std::vector<std::string_view> parts;
  std::size_t start = 0;
  while (true) {
    const std::size_t pos = s.find(sep, start);
    parts.push_back(trim(s.substr(start, pos == std::string_view::npos ? pos : pos - start)));
    if (pos == std::string_view::npos) break;
    start = pos + 1;
  }
  return parts;
}

std::string lower(std::string_view s) {
  std::string out(s);
  std::transform(out.begin(), out.end(), out.begin(),
                 [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
  return out;
}

[[noreturn]] void bad_value(std::string_view key, std::string_view value, std::string_view expected) {
  throw ParameterError("config key '" + std::string(key) + "': cannot use '" + std::string(value) +
                       "' (expected " + std::string(expected) + ")");
}

std::uint64_t parse_uint(std::string_view key, std::string_view value) {
  std::uint64_t v = 0;
  const auto res = std::from_chars(value.data(), value.data() + value.size(), v);
  if (res.ec != std::errc() || res.ptr != value.data() + value.size()) {
    bad_value(key, value, "a non-negative integer");
  }
  return v;
}

double parse_real(std::string_view key, std::string_view value) {
  try {
    return parse_double(std::string(value));
  } catch (const FormatError&) {
    bad_value(key, value, "a number");
  }
}

bool parse_bool(std::string_view key, std::string_view value) {
  const std::string v = lower(value);
  if (v == "true" || v == "1" || v == "yes") return true;
  if (v == "false" || v == "0" || v == "no") return false;
  bad_value(key, value, "true or false");
}

// "none", "off" and "0" switch an optional count off.
std::optional<std::size_t> parse_optional_count(std::string_view key, std::string_view value) {
  const std::string v = lower(value);
  if (v == "none" || v == "off" || v.empty()) return std::nullopt;
  const auto n = parse_uint(key, value);
  if (n == 0) return std::nullopt;
  return static_cast<std::size_t>(n);
}

PruneStage& prune_stage(ExperimentConfig& cfg) {
  if (!cfg.prune) cfg.prune = PruneStage{};
  return *cfg.prune;
}

std::string join_counts(const std::vector<std::size_t>& v) {
  std::string out;
  for (std::size_t i = 0; i < v.size(); ++i) out += (i ? "," : "") + std::to_string(v[i]);
  return out;
}

std::string join_reals(const std::vector<double>& v) {
  std::string out;
  for (std::size_t i = 0; i < v.size(); ++i) out += (i ? "," : "") + format_double(v[i]);
  return out;
}

}  // namespace

void ExperimentConfig::validate() const {
  if (architecture.size() < 2) throw ParameterError("architecture needs at least two widths");
  for (std::size_t w : architecture) {
    if (w == 0) throw ParameterError("architecture widths must be positive");
  }
  if (architecture.back() != kNumClasses) {
    throw ParameterError("output width must be " + std::to_string(kNumClasses) + ", got " +
                         std::to_string(architecture.back()));
  }
  if (activation != "relu") {
    throw ParameterError("activation '" + activation + "' is not implemented (only relu)");
  }
  if (dropout_keep.size() > architecture.size() - 2) {
    throw ParameterError("more dropout keep values than hidden layers");
  }
  for (double p : dropout_keep) check_keep_prob(p);
  penalty.validate();
  if (!(learning_rate > 0.0)) throw ParameterError("learning_rate must be positive");
  if (batch_size == 0) throw ParameterError("batch_size must be at least 1");
  if (pca_components && *pca_components == 0) throw ParameterError("pca_components must be positive");
  if (prune) {
    if (prune->keep_k == 0) throw ParameterError("prune_keep must be at least 1");
    if (prune->chain_after_mean && prune->mean_keep_k == 0) {
      throw ParameterError("prune_mean_keep must be at least 1");
    }
  }
  if (early_stop_patience && *early_stop_patience == 0) {
    throw ParameterError("early_stop_patience must be positive");
  }
}

const std::vector<std::string>& config_keys() {
  static const std::vector<std::string> keys = {
      "architecture", "activation",   "dropout_keep", "penalty",
      "lambda",       "optimizer",    "learning_rate", "epochs",
      "batch_size",   "seed",         "pca_components", "prune_method",
      "prune_keep",   "prune_chain_after_mean", "prune_mean_keep", "early_stop_patience"};
  return keys;
}

void apply_setting(ExperimentConfig& cfg, std::string_view key, std::string_view raw_value) {
  const std::string_view value = trim(raw_value);
  if (key == "architecture") {
    std::vector<std::size_t> widths;
    for (auto part : split(value, ',')) widths.push_back(parse_uint(key, part));
    cfg.architecture = std::move(widths);
  } else if (key == "activation") {
    cfg.activation = lower(value);
  } else if (key == "dropout_keep") {
    cfg.dropout_keep.clear();
    const std::string v = lower(value);
    if (v != "none" && !v.empty()) {
      for (auto part : split(value, ',')) cfg.dropout_keep.push_back(parse_real(key, part));
    }
  } else if (key == "penalty") {
    const std::string v = lower(value);
    if (v == "none") cfg.penalty.kind = PenaltyKind::None;
    else if (v == "l1") cfg.penalty.kind = PenaltyKind::L1;
    else if (v == "l2") cfg.penalty.kind = PenaltyKind::L2;
    else bad_value(key, value, "none, l1 or l2");
  } else if (key == "lambda") {
    cfg.penalty.lambda = parse_real(key, value);
  } else if (key == "optimizer") {
    const std::string v = lower(value);
    if (v == "sgd") cfg.optimizer = OptimizerKind::Sgd;
    else if (v == "adam") cfg.optimizer = OptimizerKind::Adam;
    else bad_value(key, value, "sgd or adam");
  } else if (key == "learning_rate") {
    cfg.learning_rate = parse_real(key, value);
  } else if (key == "epochs") {
    cfg.epochs = parse_uint(key, value);
  } else if (key == "batch_size") {
    cfg.batch_size = parse_uint(key, value);
  } else if (key == "seed") {
    cfg.seed = parse_uint(key, value);
  } else if (key == "pca_components") {
    cfg.pca_components = parse_optional_count(key, value);
  } else if (key == "prune_method") {
    const std::string v = lower(value);
    if (v == "none" || v.empty()) {
      cfg.prune.reset();
    } else {
      prune_stage(cfg).method = parse_prune_method(v);
    }
  } else if (key == "prune_keep") {
    prune_stage(cfg).keep_k = parse_uint(key, value);
  } else if (key == "prune_chain_after_mean") {
    prune_stage(cfg).chain_after_mean = parse_bool(key, value);
  } else if (key == "prune_mean_keep") {
    prune_stage(cfg).mean_keep_k = parse_uint(key, value);
  } else if (key == "early_stop_patience") {
    cfg.early_stop_patience = parse_optional_count(key, value);
  } else {
    throw ParameterError("unknown config key '" + std::string(key) + "'");
  }
}

ExperimentConfig parse_config(std::string_view text, ExperimentConfig base) {
  std::size_t line_no = 0;
  for (auto line : split(text, '\n')) {
    ++line_no;
    const std::size_t hash = line.find('#');
    if (hash != std::string_view::npos) line = trim(line.substr(0, hash));
    if (line.empty()) continue;
    const std::size_t eq = line.find('=');
    if (eq == std::string_view::npos) {
      throw FormatError("config line " + std::to_string(line_no) + ": expected key=value");
    }
    apply_setting(base, trim(line.substr(0, eq)), line.substr(eq + 1));
  }
  return base;
}

ExperimentConfig load_config(const std::filesystem::path& path, ExperimentConfig base) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open config " + path.string());
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_config(ss.str(), std::move(base));
}

std::string to_config_text(const ExperimentConfig& cfg) {
  std::ostringstream out;
  out << "architecture=" << join_counts(cfg.architecture) << '\n';
  out << "activation=" << cfg.activation << '\n';
  out << "dropout_keep=" << (cfg.dropout_keep.empty() ? "none" : join_reals(cfg.dropout_keep)) << '\n';
  out << "penalty="
      << (cfg.penalty.kind == PenaltyKind::None ? "none"
          : cfg.penalty.kind == PenaltyKind::L1 ? "l1"
                                                : "l2")
      << '\n';
  out << "lambda=" << format_double(cfg.penalty.lambda) << '\n';
  out << "optimizer=" << (cfg.optimizer == OptimizerKind::Adam ? "adam" : "sgd") << '\n';
  out << "learning_rate=" << format_double(cfg.learning_rate) << '\n';
  out << "epochs=" << cfg.epochs << '\n';
  out << "batch_size=" << cfg.batch_size << '\n';
  out << "seed=" << cfg.seed << '\n';
  out << "pca_components=" << (cfg.pca_components ? std::to_string(*cfg.pca_components) : "none") << '\n';
  if (cfg.prune) {
    out << "prune_method=" << to_string(cfg.prune->method) << '\n';
    out << "prune_keep=" << cfg.prune->keep_k << '\n';
    out << "prune_chain_after_mean=" << (cfg.prune->chain_after_mean ? "true" : "false") << '\n';
    out << "prune_mean_keep=" << cfg.prune->mean_keep_k << '\n';
  } else {
    out << "prune_method=none\n";
  }
  out << "early_stop_patience="
      << (cfg.early_stop_patience ? std::to_string(*cfg.early_stop_patience) : "none") << '\n';
  return out.str();
}

Grid parse_grid(std::string_view text) {
  Grid grid;
  std::size_t line_no = 0;
  for (auto line : split(text, '\n')) {
    ++line_no;
    const std::size_t hash = line.find('#');
    if (hash != std::string_view::npos) line = trim(line.substr(0, hash));
    if (line.empty()) continue;
    const std::size_t eq = line.find('=');
    if (eq == std::string_view::npos) {
      throw FormatError("grid line " + std::to_string(line_no) + ": expected key=v1|v2|...");
    }
    GridAxis axis;
    axis.key = std::string(trim(line.substr(0, eq)));
    if (std::find(config_keys().begin(), config_keys().end(), axis.key) == config_keys().end()) {
      throw ParameterError("grid line " + std::to_string(line_no) + ": unknown key '" + axis.key + "'");
    }
    for (auto v : split(line.substr(eq + 1), '|')) axis.values.emplace_back(v);
    grid.push_back(std::move(axis));
  }
  if (grid.empty()) throw ParameterError("grid is empty");
  return grid;
}

Grid load_grid(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open grid " + path.string());
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_grid(ss.str());
}

}  // namespace emlp
