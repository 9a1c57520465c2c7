#include "emlp/loss.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "emlp/error.hpp"

namespace emlp {

namespace {

void check_labels(const DenseMatrix& logits, std::span<const Label> labels) {
  if (labels.size() != logits.rows()) {
    throw ShapeError("cross entropy: " + std::to_string(labels.size()) + " labels for logits " +
                     logits.shape_string());
  }
  if (labels.empty()) throw DataError("cross entropy: empty batch");
  for (Label y : labels) {
    if (y < 0 || static_cast<std::size_t>(y) >= logits.cols()) {
      throw LabelError("label " + std::to_string(y) + " outside 0.." +
                       std::to_string(logits.cols() - 1));
    }
  }
}

// log(sum(exp(row))) computed around the row maximum.
double log_sum_exp(std::span<const double> row) {
  const double m = *std::max_element(row.begin(), row.end());
  double s = 0.0;
  for (double v : row) s += std::exp(v - m);
  return m + std::log(s);
}

double sign(double v) { return v > 0.0 ? 1.0 : (v < 0.0 ? -1.0 : 0.0); }

}  // namespace

DenseMatrix softmax(const DenseMatrix& logits) {
  DenseMatrix out(logits.rows(), logits.cols());
  for (std::size_t i = 0; i < logits.rows(); ++i) {
    const auto in = logits.row(i);
    auto o = out.row(i);
    const double m = *std::max_element(in.begin(), in.end());
    double s = 0.0;
    for (std::size_t j = 0; j < in.size(); ++j) {
      o[j] = std::exp(in[j] - m);
      s += o[j];
    }
    for (double& v : o) v /= s;
  }
  return out;
}

CrossEntropy cross_entropy_softmax(const DenseMatrix& logits, std::span<const Label> labels) {
  check_labels(logits, labels);
  const double n = static_cast<double>(labels.size());
  CrossEntropy result;
  result.grad = softmax(logits);
  double total = 0.0;
  for (std::size_t i = 0; i < labels.size(); ++i) {
    const auto row = logits.row(i);
    total += log_sum_exp(row) - row[static_cast<std::size_t>(labels[i])];
    result.grad(i, static_cast<std::size_t>(labels[i])) -= 1.0;
  }
  for (double& g : result.grad.values()) g /= n;
  result.loss = total / n;
  return result;
}

double cross_entropy_loss(const DenseMatrix& logits, std::span<const Label> labels) {
  check_labels(logits, labels);
  double total = 0.0;
  for (std::size_t i = 0; i < labels.size(); ++i) {
    const auto row = logits.row(i);
    total += log_sum_exp(row) - row[static_cast<std::size_t>(labels[i])];
  }
  return total / static_cast<double>(labels.size());
}

void PenaltyConfig::validate() const {
  if (!(lambda >= 0.0) || !std::isfinite(lambda)) {
    throw ParameterError("penalty lambda must be a finite non-negative number, got " +
                         std::to_string(lambda));
  }
}

double penalty_value(std::span<const double> weights, const PenaltyConfig& cfg) {
  cfg.validate();
  if (!cfg.active()) return 0.0;
  double s = 0.0;
  if (cfg.kind == PenaltyKind::L1) {
    for (double w : weights) s += std::abs(w);
  } else {
    for (double w : weights) s += w * w;
  }
  return cfg.lambda * s;
}

double penalty_value(const Network& net, const PenaltyConfig& cfg) {
  double total = 0.0;
  for (std::size_t i = 0; i < net.affine_count(); ++i) {
    total += penalty_value(net.affine(i).weights.values(), cfg);
  }
  return total;
}

std::vector<double> penalty_grad(std::span<const double> weights, const PenaltyConfig& cfg) {
  cfg.validate();
  std::vector<double> g(weights.size(), 0.0);
  if (!cfg.active()) return g;
  if (cfg.kind == PenaltyKind::L1) {
    std::transform(weights.begin(), weights.end(), g.begin(),
                   [&](double w) { return cfg.lambda * sign(w); });
  } else {
    std::transform(weights.begin(), weights.end(), g.begin(),
                   [&](double w) { return 2.0 * cfg.lambda * w; });
  }
  return g;
}

void add_penalty_grad(const Network& net, const PenaltyConfig& cfg, ParamGrads& grads) {
  cfg.validate();
  if (!cfg.active()) return;
  if (grads.weights.size() != net.affine_count()) {
    throw ShapeError("penalty gradient: gradient set does not match network");
  }
  for (std::size_t i = 0; i < net.affine_count(); ++i) {
    const auto w = net.affine(i).weights.values();
    auto g = grads.weights[i].values();
    if (g.size() != w.size()) throw ShapeError("penalty gradient: weight shape mismatch");
    if (cfg.kind == PenaltyKind::L1) {
      for (std::size_t j = 0; j < w.size(); ++j) g[j] += cfg.lambda * sign(w[j]);
    } else {
      for (std::size_t j = 0; j < w.size(); ++j) g[j] += 2.0 * cfg.lambda * w[j];
    }
  }
}

}  // namespace emlp
