#include "emlp/layers.hpp"

#include <string>

#include "emlp/error.hpp"

namespace emlp {

void check_keep_prob(double p) {
  if (!(p > 0.0 && p <= 1.0)) {
    throw ParameterError("dropout keep probability must be in (0, 1], got " + std::to_string(p));
  }
}

// ---------------------------------------------------------------------------
// Affine

AffineLayer::AffineLayer(DenseMatrix w, std::vector<double> b)
    : weights(std::move(w)), biases(std::move(b)) {
  if (biases.size() != weights.cols()) {
    throw ShapeError("affine layer: bias length " + std::to_string(biases.size()) +
                     " does not match weights " + weights.shape_string());
  }
}

DenseMatrix AffineLayer::infer(const DenseMatrix& x) const {
  if (x.cols() != fan_in()) {
    throw ShapeError("affine forward: input " + x.shape_string() + " vs weights " +
                     weights.shape_string());
  }
  DenseMatrix out = matmul(x, weights);
  add_row_vector(out, biases);
  return out;
}

DenseMatrix AffineLayer::forward(DenseMatrix x, Mode mode) {
  DenseMatrix out = infer(x);
  if (mode == Mode::Train) cached_input = std::move(x);
  return out;
}

AffineGrads AffineLayer::backward(const DenseMatrix& grad_out, bool input_grad) {
  if (!cached_input) throw StateError("affine backward called without a train-mode forward");
  if (grad_out.cols() != fan_out() || grad_out.rows() != cached_input->rows()) {
    throw ShapeError("affine backward: gradient " + grad_out.shape_string() +
                     " does not match output (" + std::to_string(cached_input->rows()) + " x " +
                     std::to_string(fan_out()) + ")");
  }
  AffineGrads g;
  if (input_grad) g.input = matmul(grad_out, transpose(weights));
  g.weights = matmul(transpose(*cached_input), grad_out);
  g.biases = reduce_axis(grad_out, Axis::Rows, Reduction::Sum);
  cached_input.reset();
  return g;
}

// ---------------------------------------------------------------------------
// ReLU

DenseMatrix ReluLayer::infer(const DenseMatrix& x) const {
  DenseMatrix out = x;
  for (double& v : out.values()) v = v > 0.0 ? v : 0.0;
  return out;
}

DenseMatrix ReluLayer::forward(DenseMatrix x, Mode mode) {
  DenseMatrix out = infer(x);
  if (mode == Mode::Train) cached_input = std::move(x);
  return out;
}

DenseMatrix ReluLayer::backward(const DenseMatrix& grad_out) {
  if (!cached_input) throw StateError("relu backward called without a train-mode forward");
  DenseMatrix g = zip_elementwise(grad_out, *cached_input,
                                  [](double gr, double in) { return in > 0.0 ? gr : 0.0; });
  cached_input.reset();
  return g;
}

// ---------------------------------------------------------------------------
// Dropout

DropoutLayer::DropoutLayer(std::size_t w, double p) : width(w), keep_prob(p) {
  check_keep_prob(p);
}

DenseMatrix DropoutLayer::infer(const DenseMatrix& x) const {
  check_keep_prob(keep_prob);
  DenseMatrix out = x;
  for (double& v : out.values()) v *= keep_prob;
  return out;
}

DenseMatrix DropoutLayer::forward(DenseMatrix x, Mode mode, RngState& rng) {
  if (mode == Mode::Eval) return infer(x);
  check_keep_prob(keep_prob);
  DenseMatrix mask = sample_uniform(rng, x.rows(), x.cols(), 0.0, 1.0);
  for (double& m : mask.values()) m = m <= keep_prob ? 1.0 : 0.0;
  auto xv = x.values();
  const auto mv = mask.values();
  for (std::size_t i = 0; i < xv.size(); ++i) {
    if (mv[i] == 0.0) xv[i] = 0.0;
  }
  cached_mask = std::move(mask);
  return x;
}

DenseMatrix DropoutLayer::backward(const DenseMatrix& grads) {
  if (!cached_mask) throw StateError("dropout backward called without a train-mode forward");
  DenseMatrix g = zip_elementwise(*cached_mask, grads, [](double m, double gr) { return m * gr; });
  cached_mask.reset();
  return g;
}

}  // namespace emlp
