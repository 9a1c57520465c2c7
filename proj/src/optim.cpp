#include "emlp/optim.hpp"

#include <cmath>
#include <string>

#include "emlp/error.hpp"

namespace emlp {

namespace {

void check_pairing(std::span<const std::span<double>> params,
                   std::span<const std::span<const double>> grads) {
  if (params.size() != grads.size()) {
    throw ShapeError("optimizer: " + std::to_string(params.size()) + " parameter tensors but " +
                     std::to_string(grads.size()) + " gradient tensors");
  }
  for (std::size_t i = 0; i < params.size(); ++i) {
    if (params[i].size() != grads[i].size()) {
      throw ShapeError("optimizer: tensor " + std::to_string(i) + " has " +
                       std::to_string(params[i].size()) + " parameters but " +
                       std::to_string(grads[i].size()) + " gradients");
    }
  }
}

}  // namespace

void SgdConfig::validate() const {
  if (!(learning_rate > 0.0) || !std::isfinite(learning_rate)) {
    throw ParameterError("learning rate must be positive, got " + std::to_string(learning_rate));
  }
}

void AdamConfig::validate() const {
  if (!(learning_rate > 0.0) || !std::isfinite(learning_rate)) {
    throw ParameterError("learning rate must be positive, got " + std::to_string(learning_rate));
  }
  if (!(beta1 >= 0.0 && beta1 < 1.0) || !(beta2 >= 0.0 && beta2 < 1.0)) {
    throw ParameterError("Adam betas must lie in [0, 1)");
  }
  if (!(epsilon > 0.0)) throw ParameterError("Adam epsilon must be positive");
}

AdamState::AdamState(AdamConfig cfg, std::span<const std::size_t> sizes) : cfg_(cfg) {
  cfg_.validate();
  for (std::size_t n : sizes) {
    m_.emplace_back(n, 0.0);
    v_.emplace_back(n, 0.0);
  }
}

void sgd_step(std::span<const std::span<double>> params,
              std::span<const std::span<const double>> grads, const SgdConfig& cfg) {
  cfg.validate();
  check_pairing(params, grads);
  for (std::size_t i = 0; i < params.size(); ++i) {
    auto p = params[i];
    const auto g = grads[i];
    for (std::size_t j = 0; j < p.size(); ++j) p[j] -= cfg.learning_rate * g[j];
  }
}

void adam_step(std::span<const std::span<double>> params,
               std::span<const std::span<const double>> grads, AdamState& state) {
  check_pairing(params, grads);
  if (params.size() != state.m_.size()) {
    throw ShapeError("adam: state tracks " + std::to_string(state.m_.size()) +
                     " tensors but step received " + std::to_string(params.size()));
  }
  const AdamConfig& c = state.cfg_;
  state.t_ += 1;
  const double t = static_cast<double>(state.t_);
  const double correct1 = 1.0 - std::pow(c.beta1, t);
  const double correct2 = 1.0 - std::pow(c.beta2, t);

  for (std::size_t i = 0; i < params.size(); ++i) {
    auto p = params[i];
    const auto g = grads[i];
    auto& m = state.m_[i];
    auto& v = state.v_[i];
    if (m.size() != p.size()) {
      throw ShapeError("adam: tensor " + std::to_string(i) + " changed size since state creation");
    }
    for (std::size_t j = 0; j < p.size(); ++j) {
      m[j] = c.beta1 * m[j] + (1.0 - c.beta1) * g[j];
      v[j] = c.beta2 * v[j] + (1.0 - c.beta2) * g[j] * g[j];
      const double m_hat = m[j] / correct1;
      const double v_hat = v[j] / correct2;
      p[j] -= c.learning_rate * m_hat / (std::sqrt(v_hat) + c.epsilon);
    }
  }
}

Optimizer Optimizer::sgd(SgdConfig cfg) {
  cfg.validate();
  return Optimizer(cfg);
}

Optimizer Optimizer::adam(AdamConfig cfg, const Network& net) {
  std::vector<std::size_t> sizes;
  for (std::size_t i = 0; i < net.affine_count(); ++i) {
    sizes.push_back(net.affine(i).weights.size());
    sizes.push_back(net.affine(i).biases.size());
  }
  return Optimizer(AdamState(cfg, sizes));
}

void Optimizer::step(Network& net, const ParamGrads& grads) {
  const auto params = net.parameters();
  const auto g = flatten(grads);
  if (auto* sgd = std::get_if<SgdConfig>(&rule_)) {
    sgd_step(params, g, *sgd);
  } else {
    adam_step(params, g, std::get<AdamState>(rule_));
  }
}

}  // namespace emlp
