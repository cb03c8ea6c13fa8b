#pragma once

#include <cstddef>
#include <functional>
#include <map>
#include <span>
#include <string>
#include <vector>

#include "compsnn/rng.hpp"
#include "compsnn/tensor.hpp"

namespace compsnn::nn {

// Dense layer: x [B, in], weight [out, in], bias [out] -> [B, out].
Tensor linear_forward(const Tensor& x, const Tensor& weight, const Tensor& bias);

struct LinearGrads {
  Tensor dx;
  Tensor dweight;
  Tensor dbias;
};

LinearGrads linear_backward(const Tensor& x, const Tensor& weight, const Tensor& dy);

/// Same-length 1D correlation: x [C_in, N], kernel [C_out, C_in, k] with k
/// odd, bias [C_out]. Zero padding of (k-1)/2 on both ends.
Tensor conv1d_forward(const Tensor& x, const Tensor& kernel, const Tensor& bias);

struct Conv1dGrads {
  Tensor dx;
  Tensor dkernel;
  Tensor dbias;
};

Conv1dGrads conv1d_backward(const Tensor& x, const Tensor& kernel, const Tensor& dy);

double sigmoid(double v) noexcept;

Tensor relu_forward(const Tensor& x);
/// Takes the forward input.
Tensor relu_backward(const Tensor& x, const Tensor& dy);
Tensor sigmoid_forward(const Tensor& x);
/// Takes the forward output.
Tensor sigmoid_backward(const Tensor& y, const Tensor& dy);
Tensor tanh_forward(const Tensor& x);
/// Takes the forward output.
Tensor tanh_backward(const Tensor& y, const Tensor& dy);

struct Parameter {
  Tensor value;
  Tensor grad;
};

/// Named parameters with gradient accumulators, iterated in name order.
class ParamSet {
 public:
  Parameter& add(const std::string& name, Tensor value);
  [[nodiscard]] Parameter& get(const std::string& name);
  [[nodiscard]] const Parameter& get(const std::string& name) const;
  [[nodiscard]] bool contains(const std::string& name) const { return params_.contains(name); }
  [[nodiscard]] std::size_t size() const noexcept { return params_.size(); }
  [[nodiscard]] std::size_t scalar_count() const noexcept;
  void zero_grad() noexcept;

  [[nodiscard]] auto begin() noexcept { return params_.begin(); }
  [[nodiscard]] auto end() noexcept { return params_.end(); }
  [[nodiscard]] auto begin() const noexcept { return params_.begin(); }
  [[nodiscard]] auto end() const noexcept { return params_.end(); }

  friend bool operator==(const ParamSet& a, const ParamSet& b);

 private:
  std::map<std::string, Parameter> params_;
};

/// p <- p - lr * g for every parameter, then zeroes the gradients. Throws
/// NonFiniteGradient and leaves the set untouched if any gradient is not
/// finite.
void sgd_step(ParamSet& params, double lr);

/// Uniform in +-sqrt(6 / (fan_in + fan_out)).
void glorot_uniform(Tensor& tensor, std::size_t fan_in, std::size_t fan_out, SplitMix64& rng);

/// One block of coordinates to probe: the live values the loss reads, and the
/// analytic gradient for them (filled by the backward callback).
struct GradProbe {
  std::string name;
  std::span<double> values;
  std::span<const double> analytic;
};

struct GradCheckResult {
  double max_error{0.0};
  std::string worst_probe;
  std::size_t coordinates{0};
};

/// Runs `backward` once (it must refresh the buffers behind each probe's
/// `analytic` span in place), then compares each analytic coordinate with the
/// central difference (loss(v + eps) - loss(v - eps)) / (2 eps). The error of
/// a coordinate is |analytic - numeric| / max(1, |numeric|). `epsilon` must
/// lie in [1e-6, 1e-3].
GradCheckResult grad_check(const std::function<double()>& loss, const std::function<void()>& backward,
                           std::span<const GradProbe> probes, double epsilon = 1e-5);

}  // namespace compsnn::nn
