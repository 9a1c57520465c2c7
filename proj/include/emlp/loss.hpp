#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "emlp/matrix.hpp"
#include "emlp/network.hpp"

namespace emlp {

using Label = std::int32_t;

/// Row-wise softmax with per-row max subtraction.
DenseMatrix softmax(const DenseMatrix& logits);

struct CrossEntropy {
  double loss = 0.0;   ///< mean over the batch
  DenseMatrix grad;    ///< (softmax - onehot) / N
};

/// Mean softmax cross-entropy and its gradient with respect to the logits.
/// Labels index logit columns; anything outside [0, cols) is a LabelError.
CrossEntropy cross_entropy_softmax(const DenseMatrix& logits, std::span<const Label> labels);

/// Loss only; avoids materializing the gradient.
double cross_entropy_loss(const DenseMatrix& logits, std::span<const Label> labels);

enum class PenaltyKind { None, L1, L2 };

struct PenaltyConfig {
  PenaltyKind kind = PenaltyKind::None;
  double lambda = 0.0;

  /// Throws ParameterError if lambda is negative or not finite.
  void validate() const;
  bool active() const noexcept { return kind != PenaltyKind::None && lambda != 0.0; }
};

struct LossReport {
  double data_loss = 0.0;
  double penalty_loss = 0.0;
  double total = 0.0;
};

/// L1: lambda * sum|w|, L2: lambda * sum w^2, None: 0.
double penalty_value(std::span<const double> weights, const PenaltyConfig& cfg);
/// Penalty over the weights of every affine layer. Biases are not penalized.
double penalty_value(const Network& net, const PenaltyConfig& cfg);

/// L1: lambda * sign(w) with sign(0) = 0, L2: 2 * lambda * w.
std::vector<double> penalty_grad(std::span<const double> weights, const PenaltyConfig& cfg);
/// Adds the penalty gradient of every affine weight matrix into `grads`.
void add_penalty_grad(const Network& net, const PenaltyConfig& cfg, ParamGrads& grads);

}  // namespace emlp
