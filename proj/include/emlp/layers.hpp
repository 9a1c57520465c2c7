#pragma once

#include <cstddef>
#include <optional>
#include <vector>

#include "emlp/matrix.hpp"
#include "emlp/rng.hpp"

namespace emlp {

enum class Mode { Train, Eval };

struct AffineGrads {
  DenseMatrix input;            ///< dL/dx, batch x fan_in
  DenseMatrix weights;          ///< dL/dW, fan_in x fan_out
  std::vector<double> biases;   ///< dL/db, fan_out
};

/// Dense layer y = x*W + b. Train-mode forward caches x for the next backward.
struct AffineLayer {
  DenseMatrix weights;          // fan_in x fan_out
  std::vector<double> biases;   // fan_out
  std::optional<DenseMatrix> cached_input;

  AffineLayer() = default;
  AffineLayer(DenseMatrix w, std::vector<double> b);

  std::size_t fan_in() const noexcept { return weights.rows(); }
  std::size_t fan_out() const noexcept { return weights.cols(); }

  DenseMatrix forward(DenseMatrix x, Mode mode);
  /// Stateless eval-mode forward.
  DenseMatrix infer(const DenseMatrix& x) const;
  /// Consumes the cached input; throws StateError if there is none.
  /// With `input_grad` false the returned input gradient is left empty.
  AffineGrads backward(const DenseMatrix& grad_out, bool input_grad = true);
};

/// max(0, x). The derivative at exactly 0 is taken as 0.
struct ReluLayer {
  std::size_t width = 0;
  std::optional<DenseMatrix> cached_input;

  DenseMatrix forward(DenseMatrix x, Mode mode);
  DenseMatrix infer(const DenseMatrix& x) const;
  DenseMatrix backward(const DenseMatrix& grad_out);
};

/// Dropout with keep probability p, scaled at evaluation time.
///
/// Train: a uniform [0,1) mask is drawn per entry and the entry is kept where
/// mask <= p, unscaled. Eval: the input is multiplied by p and no randomness
/// is used. Backward multiplies by the stored binary keep-mask.
struct DropoutLayer {
  std::size_t width = 0;
  double keep_prob = 1.0;
  std::optional<DenseMatrix> cached_mask;

  DropoutLayer() = default;
  DropoutLayer(std::size_t width, double keep_prob);

  DenseMatrix forward(DenseMatrix x, Mode mode, RngState& rng);
  DenseMatrix infer(const DenseMatrix& x) const;
  DenseMatrix backward(const DenseMatrix& grads);
};

/// Throws ParameterError unless p is in (0, 1].
void check_keep_prob(double p);

}  // namespace emlp
