#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <span>
#include <variant>
#include <vector>

#include "emlp/layers.hpp"
#include "emlp/matrix.hpp"
#include "emlp/rng.hpp"

namespace emlp {

using Layer = std::variant<AffineLayer, ReluLayer, DropoutLayer>;

/// Gradients for every affine layer, in layer order.
struct ParamGrads {
  std::vector<DenseMatrix> weights;
  std::vector<std::vector<double>> biases;
};

/// Ordered stack of affine / ReLU / dropout layers.
class Network {
 public:
  Network() = default;
  /// Validates that consecutive layers agree on widths.
  explicit Network(std::vector<Layer> layers);

  /// Builds affine+ReLU hidden blocks for `widths` (input, hidden..., output)
  /// with Glorot-uniform weights and zero biases. `dropout_keep[i]`, when
  /// present, inserts a dropout layer on the output of hidden block i (after
  /// its ReLU, before the next affine layer). The output layer has no ReLU.
  static Network mlp(std::span<const std::size_t> widths, std::span<const double> dropout_keep,
                     RngState& rng);

  DenseMatrix forward(DenseMatrix x, Mode mode, RngState& rng);
  /// Eval-mode forward that leaves the network untouched; safe for concurrent readers.
  DenseMatrix infer(const DenseMatrix& x) const;
  /// Backpropagates through all layers in reverse; consumes every forward cache.
  ParamGrads backward(const DenseMatrix& grad_logits);

  std::size_t input_width() const;
  std::size_t output_width() const;
  /// Widths seen by the affine layers: input, each hidden, output.
  std::vector<std::size_t> architecture() const;

  const std::vector<Layer>& layers() const noexcept { return layers_; }
  std::vector<Layer>& layers() noexcept { return layers_; }

  std::size_t affine_count() const;
  AffineLayer& affine(std::size_t index);
  const AffineLayer& affine(std::size_t index) const;

  /// Parameter views ordered W0, b0, W1, b1, ...; matches ParamGrads::flatten.
  std::vector<std::span<double>> parameters();
  std::size_t parameter_count() const;

  /// Drops every forward cache.
  void clear_caches();

  bool operator==(const Network& other) const;

 private:
  std::vector<Layer> layers_;
};

/// Flattened views over a ParamGrads, ordered like Network::parameters().
std::vector<std::span<const double>> flatten(const ParamGrads& grads);
std::vector<std::span<double>> flatten(ParamGrads& grads);

/// Glorot/Xavier uniform half-width sqrt(6 / (fan_in + fan_out)).
double glorot_limit(std::size_t fan_in, std::size_t fan_out);

// Binary model file "MLPM": magic, u16 version, u16 layer count, then per layer
// a u8 kind tag, u32 dims and little-endian f64 parameters.
inline constexpr std::uint16_t kModelFormatVersion = 1;
enum class LayerTag : std::uint8_t { Affine = 1, Relu = 2, Dropout = 3 };

void write_model(std::ostream& out, const Network& net);
Network read_model(std::istream& in);
void save_model(const Network& net, const std::filesystem::path& path);
Network load_model(const std::filesystem::path& path);

}  // namespace emlp
