#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <variant>
#include <vector>

#include "emlp/network.hpp"

namespace emlp {

struct SgdConfig {
  double learning_rate = 0.1;
  void validate() const;
};

struct AdamConfig {
  double learning_rate = 0.001;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
  void validate() const;
};

/// First/second moment buffers for each parameter tensor plus the step count.
class AdamState {
 public:
  /// One moment pair per entry of `sizes`, all zero, t = 0.
  AdamState(AdamConfig cfg, std::span<const std::size_t> sizes);

  const AdamConfig& config() const noexcept { return cfg_; }
  std::uint64_t timestep() const noexcept { return t_; }
  std::span<const double> first_moment(std::size_t i) const { return m_.at(i); }
  std::span<const double> second_moment(std::size_t i) const { return v_.at(i); }

 private:
  friend void adam_step(std::span<const std::span<double>> params,
                        std::span<const std::span<const double>> grads, AdamState& state);
  AdamConfig cfg_;
  std::uint64_t t_ = 0;
  std::vector<std::vector<double>> m_;
  std::vector<std::vector<double>> v_;
};

/// theta <- theta - lr * g, tensor by tensor.
void sgd_step(std::span<const std::span<double>> params,
              std::span<const std::span<const double>> grads, const SgdConfig& cfg);

/// One bias-corrected Adam update of every tensor; increments the timestep once.
void adam_step(std::span<const std::span<double>> params,
               std::span<const std::span<const double>> grads, AdamState& state);

/// Owns whichever update rule a training run uses.
class Optimizer {
 public:
  static Optimizer sgd(SgdConfig cfg);
  static Optimizer adam(AdamConfig cfg, const Network& net);

  void step(Network& net, const ParamGrads& grads);

 private:
  explicit Optimizer(std::variant<SgdConfig, AdamState> rule) : rule_(std::move(rule)) {}
  std::variant<SgdConfig, AdamState> rule_;
};

}  // namespace emlp
