#include "emlp/network.hpp"

#include <cmath>
#include <fstream>
#include <string>
#include <utility>

#include "binary_io.hpp"
#include "emlp/error.hpp"

namespace emlp {

namespace {

template <class... Ts>
struct overloaded : Ts... {
  using Ts::operator()...;
};

// Width a layer hands to the next one.
std::size_t output_width_of(const Layer& layer, std::size_t incoming) {
  return std::visit(overloaded{
                        [](const AffineLayer& a) { return a.fan_out(); },
                        [&](const ReluLayer&) { return incoming; },
                        [&](const DropoutLayer&) { return incoming; },
                    },
                    layer);
}

}  // namespace

double glorot_limit(std::size_t fan_in, std::size_t fan_out) {
  return std::sqrt(6.0 / static_cast<double>(fan_in + fan_out));
}

Network::Network(std::vector<Layer> layers) : layers_(std::move(layers)) {
  if (affine_count() == 0) throw ShapeError("network needs at least one affine layer");
  std::size_t width = input_width();
  for (std::size_t i = 0; i < layers_.size(); ++i) {
    auto& layer = layers_[i];
    if (const auto* a = std::get_if<AffineLayer>(&layer)) {
      if (a->fan_in() != width) {
        throw ShapeError("layer " + std::to_string(i) + " expects width " +
                         std::to_string(a->fan_in()) + " but receives " + std::to_string(width));
      }
      if (a->biases.size() != a->fan_out()) {
        throw ShapeError("layer " + std::to_string(i) + " bias length mismatch");
      }
    } else if (auto* r = std::get_if<ReluLayer>(&layer)) {
      if (r->width == 0) r->width = width;
      if (r->width != width) throw ShapeError("relu layer " + std::to_string(i) + " width mismatch");
    } else if (auto* d = std::get_if<DropoutLayer>(&layer)) {
      check_keep_prob(d->keep_prob);
      if (d->width == 0) d->width = width;
      if (d->width != width) {
        throw ShapeError("dropout layer " + std::to_string(i) + " width mismatch");
      }
    }
    width = output_width_of(layer, width);
  }
}

Network Network::mlp(std::span<const std::size_t> widths, std::span<const double> dropout_keep,
                     RngState& rng) {
  if (widths.size() < 2) throw ParameterError("architecture needs at least two widths");
  const std::size_t hidden = widths.size() - 2;
  if (dropout_keep.size() > hidden) {
    throw ParameterError("got " + std::to_string(dropout_keep.size()) +
                         " dropout keep values for " + std::to_string(hidden) + " hidden layers");
  }
  for (std::size_t w : widths) {
    if (w == 0) throw ParameterError("architecture widths must be positive");
  }
  std::vector<Layer> layers;
  for (std::size_t i = 0; i + 1 < widths.size(); ++i) {
    const std::size_t in = widths[i];
    const std::size_t out = widths[i + 1];
    const double limit = glorot_limit(in, out);
    layers.emplace_back(AffineLayer(sample_uniform(rng, in, out, -limit, limit),
                                    std::vector<double>(out, 0.0)));
    if (i < hidden) {
      layers.emplace_back(ReluLayer{out, std::nullopt});
      if (i < dropout_keep.size()) layers.emplace_back(DropoutLayer(out, dropout_keep[i]));
    }
  }
  return Network(std::move(layers));
}

DenseMatrix Network::forward(DenseMatrix x, Mode mode, RngState& rng) {
  if (x.cols() != input_width()) {
    throw ShapeError("network input " + x.shape_string() + " but input width is " +
                     std::to_string(input_width()));
  }
  for (auto& layer : layers_) {
    x = std::visit(overloaded{
                       [&](AffineLayer& a) { return a.forward(std::move(x), mode); },
                       [&](ReluLayer& r) { return r.forward(std::move(x), mode); },
                       [&](DropoutLayer& d) { return d.forward(std::move(x), mode, rng); },
                   },
                   layer);
  }
  return x;
}

DenseMatrix Network::infer(const DenseMatrix& x) const {
  if (x.cols() != input_width()) {
    throw ShapeError("network input " + x.shape_string() + " but input width is " +
                     std::to_string(input_width()));
  }
  DenseMatrix h = x;
  for (const auto& layer : layers_) {
    h = std::visit([&](const auto& l) { return l.infer(h); }, layer);
  }
  return h;
}

ParamGrads Network::backward(const DenseMatrix& grad_logits) {
  const std::size_t n_affine = affine_count();
  ParamGrads grads;
  grads.weights.resize(n_affine);
  grads.biases.resize(n_affine);

  DenseMatrix g = grad_logits;
  std::size_t slot = n_affine;
  try {
    for (auto it = layers_.rbegin(); it != layers_.rend(); ++it) {
      if (auto* a = std::get_if<AffineLayer>(&*it)) {
        --slot;
        // The input gradient of the first layer is discarded.
        AffineGrads ag = a->backward(g, slot > 0);
        grads.weights[slot] = std::move(ag.weights);
        grads.biases[slot] = std::move(ag.biases);
        if (slot > 0) g = std::move(ag.input);
      } else if (auto* r = std::get_if<ReluLayer>(&*it)) {
        g = r->backward(g);
      } else if (auto* d = std::get_if<DropoutLayer>(&*it)) {
        g = d->backward(g);
      }
    }
  } catch (...) {
    clear_caches();
    throw;
  }
  return grads;
}

std::size_t Network::input_width() const {
  for (const auto& layer : layers_) {
    if (const auto* a = std::get_if<AffineLayer>(&layer)) return a->fan_in();
  }
  return 0;
}

std::size_t Network::output_width() const {
  std::size_t width = input_width();
  for (const auto& layer : layers_) width = output_width_of(layer, width);
  return width;
}

std::vector<std::size_t> Network::architecture() const {
  std::vector<std::size_t> widths;
  for (const auto& layer : layers_) {
    if (const auto* a = std::get_if<AffineLayer>(&layer)) {
      if (widths.empty()) widths.push_back(a->fan_in());
      widths.push_back(a->fan_out());
    }
  }
  return widths;
}

std::size_t Network::affine_count() const {
  std::size_t n = 0;
  for (const auto& layer : layers_) n += std::holds_alternative<AffineLayer>(layer) ? 1 : 0;
  return n;
}

AffineLayer& Network::affine(std::size_t index) {
  return const_cast<AffineLayer&>(std::as_const(*this).affine(index));
}

const AffineLayer& Network::affine(std::size_t index) const {
  std::size_t seen = 0;
  for (const auto& layer : layers_) {
    if (const auto* a = std::get_if<AffineLayer>(&layer)) {
      if (seen++ == index) return *a;
    }
  }
  throw ParameterError("affine layer index " + std::to_string(index) + " out of range");
}

std::vector<std::span<double>> Network::parameters() {
  std::vector<std::span<double>> out;
  for (auto& layer : layers_) {
    if (auto* a = std::get_if<AffineLayer>(&layer)) {
      out.push_back(a->weights.values());
      out.push_back(a->biases);
    }
  }
  return out;
}

std::size_t Network::parameter_count() const {
  std::size_t n = 0;
  for (const auto& layer : layers_) {
    if (const auto* a = std::get_if<AffineLayer>(&layer)) n += a->weights.size() + a->biases.size();
  }
  return n;
}

void Network::clear_caches() {
  for (auto& layer : layers_) {
    std::visit(overloaded{
                   [](AffineLayer& a) { a.cached_input.reset(); },
                   [](ReluLayer& r) { r.cached_input.reset(); },
                   [](DropoutLayer& d) { d.cached_mask.reset(); },
               },
               layer);
  }
}

bool Network::operator==(const Network& other) const {
  if (layers_.size() != other.layers_.size()) return false;
  for (std::size_t i = 0; i < layers_.size(); ++i) {
    const auto& x = layers_[i];
    const auto& y = other.layers_[i];
    if (x.index() != y.index()) return false;
    if (const auto* a = std::get_if<AffineLayer>(&x)) {
      const auto& b = std::get<AffineLayer>(y);
      if (!(a->weights == b.weights) || a->biases != b.biases) return false;
    } else if (const auto* r = std::get_if<ReluLayer>(&x)) {
      if (r->width != std::get<ReluLayer>(y).width) return false;
    } else if (const auto* d = std::get_if<DropoutLayer>(&x)) {
      const auto& e = std::get<DropoutLayer>(y);
      if (d->width != e.width || d->keep_prob != e.keep_prob) return false;
    }
  }
  return true;
}

std::vector<std::span<const double>> flatten(const ParamGrads& grads) {
  std::vector<std::span<const double>> out;
  for (std::size_t i = 0; i < grads.weights.size(); ++i) {
    out.push_back(grads.weights[i].values());
    out.push_back(grads.biases[i]);
  }
  return out;
}

std::vector<std::span<double>> flatten(ParamGrads& grads) {
  std::vector<std::span<double>> out;
  for (std::size_t i = 0; i < grads.weights.size(); ++i) {
    out.push_back(grads.weights[i].values());
    out.push_back(grads.biases[i]);
  }
  return out;
}

// ---------------------------------------------------------------------------
// Serialization

void write_model(std::ostream& out, const Network& net) {
  using detail::write_le;
  detail::write_magic(out, "MLPM");
  write_le<std::uint16_t>(out, kModelFormatVersion);
  if (net.layers().size() > 0xFFFF) throw ParameterError("too many layers to serialize");
  write_le<std::uint16_t>(out, static_cast<std::uint16_t>(net.layers().size()));
  for (const auto& layer : net.layers()) {
    std::visit(overloaded{
                   [&](const AffineLayer& a) {
                     write_le<std::uint8_t>(out, static_cast<std::uint8_t>(LayerTag::Affine));
                     write_le<std::uint32_t>(out, static_cast<std::uint32_t>(a.fan_in()));
                     write_le<std::uint32_t>(out, static_cast<std::uint32_t>(a.fan_out()));
                     for (double w : a.weights.values()) write_le<double>(out, w);
                     for (double b : a.biases) write_le<double>(out, b);
                   },
                   [&](const ReluLayer& r) {
                     write_le<std::uint8_t>(out, static_cast<std::uint8_t>(LayerTag::Relu));
                     write_le<std::uint32_t>(out, static_cast<std::uint32_t>(r.width));
                   },
                   [&](const DropoutLayer& d) {
                     write_le<std::uint8_t>(out, static_cast<std::uint8_t>(LayerTag::Dropout));
                     write_le<std::uint32_t>(out, static_cast<std::uint32_t>(d.width));
                     write_le<double>(out, d.keep_prob);
                   },
               },
               layer);
  }
  if (!out) throw IoError("failed writing model");
}

Network read_model(std::istream& in) {
  using detail::read_le;
  detail::expect_magic(in, "MLPM", "MLPM model");
  const auto version = read_le<std::uint16_t>(in, "model version");
  if (version != kModelFormatVersion) {
    throw FormatError("unsupported MLPM version " + std::to_string(version));
  }
  const auto count = read_le<std::uint16_t>(in, "layer count");
  std::vector<Layer> layers;
  layers.reserve(count);
  for (std::uint16_t i = 0; i < count; ++i) {
    const auto tag = static_cast<LayerTag>(read_le<std::uint8_t>(in, "layer tag"));
    switch (tag) {
      case LayerTag::Affine: {
        const std::size_t fan_in = read_le<std::uint32_t>(in, "affine fan_in");
        const std::size_t fan_out = read_le<std::uint32_t>(in, "affine fan_out");
        DenseMatrix w(fan_in, fan_out);
        for (double& v : w.values()) v = read_le<double>(in, "affine weights");
        std::vector<double> b(fan_out);
        for (double& v : b) v = read_le<double>(in, "affine biases");
        layers.emplace_back(AffineLayer(std::move(w), std::move(b)));
        break;
      }
      case LayerTag::Relu:
        layers.emplace_back(ReluLayer{read_le<std::uint32_t>(in, "relu width"), std::nullopt});
        break;
      case LayerTag::Dropout: {
        const std::size_t width = read_le<std::uint32_t>(in, "dropout width");
        const double p = read_le<double>(in, "dropout keep probability");
        layers.emplace_back(DropoutLayer(width, p));
        break;
      }
      default:
        throw FormatError("unknown MLPM layer tag " + std::to_string(static_cast<int>(tag)));
    }
  }
  detail::expect_eof(in, "MLPM");
  return Network(std::move(layers));
}

void save_model(const Network& net, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot open " + path.string() + " for writing");
  write_model(out, net);
}

Network load_model(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open " + path.string());
  return read_model(in);
}

}  // namespace emlp
