#include "compsnn/layers.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "compsnn/error.hpp"

namespace compsnn::nn {

namespace {

void require(bool ok, const char* message) {
  if (!ok) throw Error(ErrorCode::ShapeMismatch, message);
}

}  // namespace

Tensor linear_forward(const Tensor& x, const Tensor& weight, const Tensor& bias) {
  require(x.rank() == 2 && weight.rank() == 2 && bias.rank() == 1, "linear: expected x [B,in], W [out,in], b [out]");
  const std::size_t batch = x.dim(0), in = x.dim(1), out = weight.dim(0);
  require(weight.dim(1) == in && bias.dim(0) == out, "linear: shape mismatch");
  Tensor y({batch, out});
  for (std::size_t b = 0; b < batch; ++b) {
    const double* xr = &x.values()[b * in];
    for (std::size_t o = 0; o < out; ++o) {
      const double* wr = &weight.values()[o * in];
      double acc = bias[o];
      for (std::size_t i = 0; i < in; ++i) acc += xr[i] * wr[i];
      y.at(b, o) = acc;
    }
  }
  return y;
}

LinearGrads linear_backward(const Tensor& x, const Tensor& weight, const Tensor& dy) {
  require(x.rank() == 2 && weight.rank() == 2 && dy.rank() == 2, "linear backward: expected rank-2 tensors");
  const std::size_t batch = x.dim(0), in = x.dim(1), out = weight.dim(0);
  require(weight.dim(1) == in && dy.dim(0) == batch && dy.dim(1) == out, "linear backward: shape mismatch");
  LinearGrads g{Tensor({batch, in}), Tensor({out, in}), Tensor({out})};
  for (std::size_t b = 0; b < batch; ++b) {
    const double* xr = &x.values()[b * in];
    double* dxr = &g.dx.values()[b * in];
    for (std::size_t o = 0; o < out; ++o) {
      const double d = dy.at(b, o);
      if (d == 0.0) continue;
      const double* wr = &weight.values()[o * in];
      double* dwr = &g.dweight.values()[o * in];
      for (std::size_t i = 0; i < in; ++i) {
        dxr[i] += d * wr[i];
        dwr[i] += d * xr[i];
      }
      g.dbias[o] += d;
    }
  }
  return g;
}

Tensor conv1d_forward(const Tensor& x, const Tensor& kernel, const Tensor& bias) {
  require(x.rank() == 2 && kernel.rank() == 3 && bias.rank() == 1, "conv1d: expected x [C_in,N], K [C_out,C_in,k]");
  const std::size_t cin = x.dim(0), n = x.dim(1), cout = kernel.dim(0), k = kernel.dim(2);
  if (k % 2 == 0) throw Error(ErrorCode::EvenKernel, "conv1d kernel length must be odd");
  require(kernel.dim(1) == cin && bias.dim(0) == cout && n >= 1, "conv1d: shape mismatch");
  const std::size_t half = k / 2;
  Tensor y({cout, n});
  for (std::size_t o = 0; o < cout; ++o) {
    double* yr = &y.values()[o * n];
    for (std::size_t t = 0; t < n; ++t) yr[t] = bias[o];
    for (std::size_t c = 0; c < cin; ++c) {
      const double* xr = &x.values()[c * n];
      const double* kr = &kernel.values()[(o * cin + c) * k];
      for (std::size_t t = 0; t < n; ++t) {
        // Taps j with 0 <= t + j - half < n.
        const std::size_t j_lo = t < half ? half - t : 0;
        const std::size_t j_hi = std::min(k, n + half - t);
        double acc = 0.0;
        for (std::size_t j = j_lo; j < j_hi; ++j) acc += kr[j] * xr[t + j - half];
        yr[t] += acc;
      }
    }
  }
  return y;
}

Conv1dGrads conv1d_backward(const Tensor& x, const Tensor& kernel, const Tensor& dy) {
  require(x.rank() == 2 && kernel.rank() == 3 && dy.rank() == 2, "conv1d backward: bad ranks");
  const std::size_t cin = x.dim(0), n = x.dim(1), cout = kernel.dim(0), k = kernel.dim(2);
  if (k % 2 == 0) throw Error(ErrorCode::EvenKernel, "conv1d kernel length must be odd");
  require(kernel.dim(1) == cin && dy.dim(0) == cout && dy.dim(1) == n, "conv1d backward: shape mismatch");
  const std::size_t half = k / 2;
  Conv1dGrads g{Tensor({cin, n}), Tensor({cout, cin, k}), Tensor({cout})};
  for (std::size_t o = 0; o < cout; ++o) {
    const double* dyr = &dy.values()[o * n];
    for (std::size_t t = 0; t < n; ++t) g.dbias[o] += dyr[t];
    for (std::size_t c = 0; c < cin; ++c) {
      const double* xr = &x.values()[c * n];
      double* dxr = &g.dx.values()[c * n];
      const double* kr = &kernel.values()[(o * cin + c) * k];
      double* dkr = &g.dkernel.values()[(o * cin + c) * k];
      for (std::size_t t = 0; t < n; ++t) {
        const double d = dyr[t];
        if (d == 0.0) continue;
        const std::size_t j_lo = t < half ? half - t : 0;
        const std::size_t j_hi = std::min(k, n + half - t);
        for (std::size_t j = j_lo; j < j_hi; ++j) {
          dkr[j] += d * xr[t + j - half];
          dxr[t + j - half] += d * kr[j];
        }
      }
    }
  }
  return g;
}

double sigmoid(double v) noexcept {
  if (v >= 0.0) return 1.0 / (1.0 + std::exp(-v));
  const double e = std::exp(v);
  return e / (1.0 + e);
}

namespace {

template <typename F>
Tensor map(const Tensor& x, F f) {
  Tensor y(x.shape());
  for (std::size_t i = 0; i < x.size(); ++i) y[i] = f(x[i]);
  return y;
}

template <typename F>
Tensor zip(const Tensor& a, const Tensor& b, F f) {
  require(a.shape() == b.shape(), "activation backward: shape mismatch");
  Tensor y(a.shape());
  for (std::size_t i = 0; i < a.size(); ++i) y[i] = f(a[i], b[i]);
  return y;
}

}  // namespace

Tensor relu_forward(const Tensor& x) {
  return map(x, [](double v) { return v > 0.0 ? v : 0.0; });
}

Tensor relu_backward(const Tensor& x, const Tensor& dy) {
  return zip(x, dy, [](double v, double d) { return v > 0.0 ? d : 0.0; });
}

Tensor sigmoid_forward(const Tensor& x) { return map(x, [](double v) { return sigmoid(v); }); }

Tensor sigmoid_backward(const Tensor& y, const Tensor& dy) {
  return zip(y, dy, [](double s, double d) { return d * s * (1.0 - s); });
}

Tensor tanh_forward(const Tensor& x) {
  return map(x, [](double v) { return std::tanh(v); });
}

Tensor tanh_backward(const Tensor& y, const Tensor& dy) {
  return zip(y, dy, [](double t, double d) { return d * (1.0 - t * t); });
}

Parameter& ParamSet::add(const std::string& name, Tensor value) {
  Tensor grad(value.shape());
  auto [it, inserted] = params_.try_emplace(name, Parameter{std::move(value), std::move(grad)});
  if (!inserted) throw Error(ErrorCode::InvalidArgument, "duplicate parameter '" + name + "'");
  return it->second;
}

Parameter& ParamSet::get(const std::string& name) {
  const auto it = params_.find(name);
  if (it == params_.end()) throw Error(ErrorCode::InvalidArgument, "no parameter '" + name + "'");
  return it->second;
}

const Parameter& ParamSet::get(const std::string& name) const {
  const auto it = params_.find(name);
  if (it == params_.end()) throw Error(ErrorCode::InvalidArgument, "no parameter '" + name + "'");
  return it->second;
}

std::size_t ParamSet::scalar_count() const noexcept {
  std::size_t n = 0;
  for (const auto& [name, p] : params_) n += p.value.size();
  return n;
}

void ParamSet::zero_grad() noexcept {
  for (auto& [name, p] : params_) p.grad.fill(0.0);
}

bool operator==(const ParamSet& a, const ParamSet& b) {
  if (a.params_.size() != b.params_.size()) return false;
  auto ia = a.params_.begin();
  auto ib = b.params_.begin();
  for (; ia != a.params_.end(); ++ia, ++ib) {
    if (ia->first != ib->first || !(ia->second.value == ib->second.value)) return false;
  }
  return true;
}

void sgd_step(ParamSet& params, double lr) {
  if (!(lr >= 0.0) || !std::isfinite(lr)) throw Error(ErrorCode::InvalidArgument, "learning rate must be >= 0");
  for (const auto& [name, p] : params) {
    if (!p.grad.all_finite()) throw Error(ErrorCode::NonFiniteGradient, "gradient of '" + name + "' is not finite");
  }
  for (auto& [name, p] : params) {
    auto v = p.value.values();
    auto g = p.grad.values();
    for (std::size_t i = 0; i < v.size(); ++i) v[i] -= lr * g[i];
    p.grad.fill(0.0);
  }
}

void glorot_uniform(Tensor& tensor, std::size_t fan_in, std::size_t fan_out, SplitMix64& rng) {
  const double limit = std::sqrt(6.0 / static_cast<double>(fan_in + fan_out));
  for (double& v : tensor.values()) v = rng.uniform(-limit, limit);
}

GradCheckResult grad_check(const std::function<double()>& loss, const std::function<void()>& backward,
                           std::span<const GradProbe> probes, double epsilon) {
  if (!(epsilon >= 1e-6 && epsilon <= 1e-3)) {
    throw Error(ErrorCode::InvalidArgument, "grad_check epsilon must lie in [1e-6, 1e-3]");
  }
  backward();
  // Snapshot the analytic gradients: the loss callback may overwrite buffers.
  std::vector<std::vector<double>> analytic;
  analytic.reserve(probes.size());
  for (const GradProbe& p : probes) {
    if (p.values.size() != p.analytic.size()) throw Error(ErrorCode::ShapeMismatch, "probe '" + p.name + "' size");
    analytic.emplace_back(p.analytic.begin(), p.analytic.end());
  }
  GradCheckResult result;
  for (std::size_t pi = 0; pi < probes.size(); ++pi) {
    const GradProbe& p = probes[pi];
    for (std::size_t i = 0; i < p.values.size(); ++i) {
      const double saved = p.values[i];
      p.values[i] = saved + epsilon;
      const double up = loss();
      p.values[i] = saved - epsilon;
      const double down = loss();
      p.values[i] = saved;
      const double numeric = (up - down) / (2.0 * epsilon);
      const double err = std::abs(analytic[pi][i] - numeric) / std::max(1.0, std::abs(numeric));
      if (err > result.max_error || !std::isfinite(err)) {
        result.max_error = std::isfinite(err) ? err : std::numeric_limits<double>::infinity();
        result.worst_probe = p.name;
      }
      ++result.coordinates;
    }
  }
  return result;
}

}  // namespace compsnn::nn
