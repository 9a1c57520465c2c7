#pragma once

// Whole-network finite-difference gradient checks.

#include <algorithm>
#include <cstdint>
#include <random>
#include <string>
#include <variant>
#include <vector>

#include "emlp/loss.hpp"
#include "emlp/network.hpp"
#include "emlp/rng.hpp"
#include "support/oracles.hpp"

namespace gradcheck {

enum class Variant {
  Plain,          // no dropout layers
  DropoutTrain,   // train-mode dropout with a mask frozen by reseeding
  DropoutEval,    // eval-mode (scaled) dropout, against a folded dropout-free oracle
};

inline const char* name(Variant v) {
  switch (v) {
    case Variant::Plain: return "plain";
    case Variant::DropoutTrain: return "dropout-train";
    case Variant::DropoutEval: return "dropout-eval";
  }
  return "?";
}

struct Case {
  std::vector<std::size_t> widths;
  std::vector<double> keep;
  emlp::PenaltyConfig penalty;
  Variant variant = Variant::Plain;
  std::size_t batch = 4;
  std::uint64_t seed = 1;
};

struct Outcome {
  double max_relative_error = 0.0;  // worst parameter tensor, norm-wise
  std::size_t parameters = 0;
};

// Dropout-free copy where each dropout keep probability is folded into the
// weights of the next affine layer: eval-mode p*h*W == h*(p*W).
inline emlp::Network fold_dropout(const emlp::Network& net, std::vector<double>& scale_per_affine) {
  std::vector<emlp::Layer> layers;
  double pending = 1.0;
  scale_per_affine.clear();
  for (const auto& layer : net.layers()) {
    if (const auto* d = std::get_if<emlp::DropoutLayer>(&layer)) {
      pending *= d->keep_prob;
    } else if (const auto* a = std::get_if<emlp::AffineLayer>(&layer)) {
      emlp::AffineLayer copy(a->weights, a->biases);
      for (double& w : copy.weights.values()) w *= pending;
      scale_per_affine.push_back(pending);
      pending = 1.0;
      layers.emplace_back(std::move(copy));
    } else {
      layers.emplace_back(emlp::ReluLayer{std::get<emlp::ReluLayer>(layer).width, std::nullopt});
    }
  }
  return emlp::Network(std::move(layers));
}

inline Outcome run(const Case& c, double eps = 1e-5) {
  std::mt19937_64 gen(c.seed * 7919 + 13);
  emlp::RngState init(c.seed);
  emlp::Network net = emlp::Network::mlp(c.widths, c.keep, init);
  // Non-zero biases so the bias path is exercised.
  for (std::size_t i = 0; i < net.affine_count(); ++i) {
    for (double& b : net.affine(i).biases) b = std::uniform_real_distribution<double>(-0.3, 0.3)(gen);
  }
  const auto x = oracle::random_matrix(gen, c.batch, c.widths.front());
  std::vector<emlp::Label> y(c.batch);
  for (auto& label : y) {
    label = static_cast<emlp::Label>(std::uniform_int_distribution<std::size_t>(0, c.widths.back() - 1)(gen));
  }
  const std::uint64_t mask_seed = c.seed + 1000;

  auto loss = [&]() {
    double data = 0.0;
    if (c.variant == Variant::DropoutTrain) {
      emlp::RngState r(mask_seed);
      const auto logits = net.forward(x, emlp::Mode::Train, r);
      net.clear_caches();
      data = oracle::mean_cross_entropy(logits, y);
    } else {
      data = oracle::mean_cross_entropy(net.infer(x), y);
    }
    return data + emlp::penalty_value(net, c.penalty);
  };

  emlp::ParamGrads analytic;
  if (c.variant == Variant::DropoutEval) {
    std::vector<double> scale;
    emlp::Network folded = fold_dropout(net, scale);
    emlp::RngState r(mask_seed);
    const auto logits = folded.forward(x, emlp::Mode::Train, r);
    analytic = folded.backward(emlp::cross_entropy_softmax(logits, y).grad);
    for (std::size_t i = 0; i < analytic.weights.size(); ++i) {
      for (double& g : analytic.weights[i].values()) g *= scale[i];
    }
  } else {
    emlp::RngState r(mask_seed);
    const auto logits = net.forward(x, emlp::Mode::Train, r);
    analytic = net.backward(emlp::cross_entropy_softmax(logits, y).grad);
  }
  emlp::add_penalty_grad(net, c.penalty, analytic);

  Outcome out;
  auto params = net.parameters();
  const auto grads = emlp::flatten(static_cast<const emlp::ParamGrads&>(analytic));
  for (std::size_t t = 0; t < params.size(); ++t) {
    const auto numeric = oracle::central_differences(params[t], loss, eps);
    const std::vector<double> a(grads[t].begin(), grads[t].end());
    out.max_relative_error = std::max(out.max_relative_error, oracle::relative_error(a, numeric));
    out.parameters += params[t].size();
  }
  return out;
}

// Six shapes, each with plain, L1, L2 and a dropout variant, plus two deeper dropout cases.
inline std::vector<Case> standard_cases() {
  const std::vector<std::vector<std::size_t>> shapes = {
      {6, 5, 4}, {3, 4, 3}, {5, 8, 6, 4}, {8, 3, 5}, {4, 6, 6, 6, 3}, {7, 2, 8}};
  std::vector<Case> cases;
  std::uint64_t seed = 1;
  bool eval_variant = true;
  for (const auto& w : shapes) {
    const std::size_t hidden = w.size() - 2;
    std::vector<double> keep(hidden, 0.75);
    if (hidden > 1) keep[1] = 0.5;
    cases.push_back({w, {}, {}, Variant::Plain, 4, seed++});
    cases.push_back({w, {}, {emlp::PenaltyKind::L1, 0.01}, Variant::Plain, 3, seed++});
    cases.push_back({w, {}, {emlp::PenaltyKind::L2, 0.05}, Variant::Plain, 2, seed++});
    cases.push_back({w, keep, {emlp::PenaltyKind::L1, 0.001},
                     eval_variant ? Variant::DropoutEval : Variant::DropoutTrain, 4, seed++});
    eval_variant = !eval_variant;
  }
  // Make sure both dropout variants and a penalty-with-dropout-eval case appear.
  cases.push_back({{6, 5, 5, 4}, {0.75, 0.75}, {emlp::PenaltyKind::L2, 0.02}, Variant::DropoutEval, 4, 101});
  cases.push_back({{6, 5, 5, 4}, {0.75, 0.75}, {emlp::PenaltyKind::L2, 0.02}, Variant::DropoutTrain, 4, 102});
  return cases;
}

}  // namespace gradcheck
