#include "compsnn/gradcheck.hpp"

#include <algorithm>

#include "compsnn/rng.hpp"

namespace compsnn {

using nn::GradProbe;
using nn::Tensor;

double GradCheckReport::max_error() const noexcept {
  double worst = 0.0;
  for (const auto& e : entries) worst = std::max(worst, e.result.max_error);
  return worst;
}

namespace {

Tensor random_tensor(std::vector<std::size_t> shape, SplitMix64& rng, double lo = -1.0, double hi = 1.0) {
  Tensor t(std::move(shape));
  for (double& v : t.values()) v = rng.uniform(lo, hi);
  return t;
}

// Keeps samples away from the ReLU kink so central differences stay exact.
Tensor away_from_zero(std::vector<std::size_t> shape, SplitMix64& rng) {
  Tensor t(std::move(shape));
  for (double& v : t.values()) {
    const double m = rng.uniform(0.2, 1.5);
    v = rng.uniform() < 0.5 ? -m : m;
  }
  return t;
}

// The probes hold spans into the gradient buffers, so backward passes must
// overwrite them in place rather than move new tensors in.
void copy_into(Tensor& dst, const Tensor& src) { std::ranges::copy(src.values(), dst.values().begin()); }

double dot(const Tensor& a, const Tensor& b) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
  return s;
}

GradCheckEntry check_linear(SplitMix64& rng) {
  Tensor x = random_tensor({3, 4}, rng);
  Tensor w = random_tensor({5, 4}, rng);
  Tensor b = random_tensor({5}, rng);
  const Tensor r = random_tensor({3, 5}, rng);
  nn::LinearGrads g;
  const auto loss = [&] { return dot(r, nn::linear_forward(x, w, b)); };
  g = nn::linear_backward(x, w, r);
  const auto backward = [&] {
    const auto fresh = nn::linear_backward(x, w, r);
    copy_into(g.dx, fresh.dx);
    copy_into(g.dweight, fresh.dweight);
    copy_into(g.dbias, fresh.dbias);
  };
  const GradProbe probes[] = {{"x", x.values(), g.dx.values()},
                              {"weight", w.values(), g.dweight.values()},
                              {"bias", b.values(), g.dbias.values()}};
  return {"linear", nn::grad_check(loss, backward, probes)};
}

GradCheckEntry check_conv(SplitMix64& rng) {
  Tensor x = random_tensor({3, 7}, rng);
  Tensor k = random_tensor({4, 3, 3}, rng);
  Tensor b = random_tensor({4}, rng);
  const Tensor r = random_tensor({4, 7}, rng);
  nn::Conv1dGrads g;
  const auto loss = [&] { return dot(r, nn::conv1d_forward(x, k, b)); };
  g = nn::conv1d_backward(x, k, r);
  const auto backward = [&] {
    const auto fresh = nn::conv1d_backward(x, k, r);
    copy_into(g.dx, fresh.dx);
    copy_into(g.dkernel, fresh.dkernel);
    copy_into(g.dbias, fresh.dbias);
  };
  const GradProbe probes[] = {{"x", x.values(), g.dx.values()},
                              {"kernel", k.values(), g.dkernel.values()},
                              {"bias", b.values(), g.dbias.values()}};
  return {"conv1d", nn::grad_check(loss, backward, probes)};
}

template <typename Fwd, typename Bwd>
GradCheckEntry check_activation(const std::string& name, Tensor x, SplitMix64& rng, Fwd fwd, Bwd bwd) {
  const Tensor r = random_tensor(x.shape(), rng);
  Tensor dx;
  const auto loss = [&] { return dot(r, fwd(x)); };
  dx = bwd(x, r);
  const auto backward = [&] { copy_into(dx, bwd(x, r)); };
  const GradProbe probes[] = {{"x", x.values(), dx.values()}};
  return {name, nn::grad_check(loss, backward, probes)};
}

GradCheckEntry check_loss(SplitMix64& rng) {
  std::vector<double> x(8), u(8), eps(8);
  for (std::size_t i = 0; i < 8; ++i) {
    x[i] = rng.uniform();
    u[i] = rng.uniform();
    eps[i] = rng.uniform(0.2, 1.0);
  }
  LossResult res;
  const auto loss = [&] { return gaussian_loss(x, u, eps).value; };
  res = gaussian_loss(x, u, eps);
  const auto backward = [&] { std::ranges::copy(gaussian_loss(x, u, eps).grad, res.grad.begin()); };
  const GradProbe probes[] = {{"prediction", x, res.grad}};
  return {"gaussian_loss", nn::grad_check(loss, backward, probes)};
}

// Randomises every parameter (biases included) so no gradient is trivially
// zero, then probes all of them through loss(forward(.)).
GradCheckEntry check_model(ModelKind kind, const TinyProblem& tiny, SplitMix64& rng) {
  ModelParams model = init_model(kind, tiny.config, rng());
  for (auto& [name, p] : model.params) {
    for (double& v : p.value.values()) v = rng.uniform(-0.8, 0.8);
  }
  const auto loss = [&] { return sample_loss(model, tiny.input, tiny.spectrum, tiny.target); };
  const auto backward = [&] {
    model.params.zero_grad();
    accumulate_sample_gradient(model, tiny.input, tiny.spectrum, tiny.target);
  };
  backward();
  std::vector<GradProbe> probes;
  for (auto& [name, p] : model.params) probes.push_back({name, p.value.values(), p.grad.values()});
  return {"model:" + std::string(to_string(kind)), nn::grad_check(loss, backward, probes)};
}

}  // namespace

TinyProblem make_tiny_problem(std::uint64_t seed) {
  SplitMix64 rng(seed);
  TinyProblem tiny;
  CompSnnConfig& c = tiny.config;
  c.node_count = 4;
  c.mlp_hidden = 5;
  c.module_out = 3;
  c.cnn_channels = 3;
  c.cnn_kernel = 3;
  c.gcnn_filters = 2;
  c.gcnn_degree = 3;
  c.filter_hidden = 4;
  c.aggregator_hidden = 5;
  c.demographic_dim = 8;
  c.epsilon.resize(8);
  for (double& e : c.epsilon) e = rng.uniform(0.2, 0.5);

  TrajectoryGraph g;
  g.node_count = 4;
  g.adjacency.assign(16, 0);
  for (NodeId i = 0; i + 1 < 4; ++i) {
    g.edges.emplace_back(i, i + 1);
    g.adjacency[i * 4 + i + 1] = g.adjacency[(i + 1) * 4 + i] = 1;
  }
  g.centroids.resize(4);
  tiny.spectrum = eigendecompose(laplacian(g));

  constexpr std::size_t kSamples = 6;
  tiny.input.node_signal.node_count = 4;
  tiny.input.node_signal.values.resize(4 * kNodeChannels);
  for (double& v : tiny.input.node_signal.values) v = rng.uniform(-1.0, 1.0);
  tiny.input.visits.resize(4);
  for (double& v : tiny.input.visits) v = rng.uniform(0.0, 1.0);
  tiny.input.features = FeatureSeries(kSamples);
  for (double& v : tiny.input.features.values()) v = rng.uniform(-1.0, 1.0);
  tiny.target.resize(8);
  for (double& v : tiny.target) v = rng.uniform();
  return tiny;
}

GradCheckReport run_gradcheck_suite(std::uint64_t seed) {
  SplitMix64 rng(seed);
  GradCheckReport report;
  report.entries.push_back(check_linear(rng));
  report.entries.push_back(check_conv(rng));
  report.entries.push_back(check_activation("relu", away_from_zero({4, 5}, rng), rng, nn::relu_forward,
                                            [](const Tensor& x, const Tensor& dy) { return nn::relu_backward(x, dy); }));
  report.entries.push_back(check_activation(
      "sigmoid", random_tensor({4, 5}, rng, -3.0, 3.0), rng, nn::sigmoid_forward,
      [](const Tensor& x, const Tensor& dy) { return nn::sigmoid_backward(nn::sigmoid_forward(x), dy); }));
  report.entries.push_back(check_activation(
      "tanh", random_tensor({4, 5}, rng, -2.0, 2.0), rng, nn::tanh_forward,
      [](const Tensor& x, const Tensor& dy) { return nn::tanh_backward(nn::tanh_forward(x), dy); }));
  report.entries.push_back(check_loss(rng));
  const TinyProblem tiny = make_tiny_problem(rng());
  for (ModelKind kind : kAllModelKinds) report.entries.push_back(check_model(kind, tiny, rng));
  return report;
}

}  // namespace compsnn
