#include "compsnn/model.hpp"

#include <cmath>

#include "compsnn/error.hpp"

namespace compsnn {

using nn::Tensor;

void CompSnnConfig::validate() const {
  const std::size_t dims[] = {node_count,  mlp_hidden,    module_out,        cnn_channels,   cnn_kernel,
                              gcnn_filters, filter_hidden, aggregator_hidden, demographic_dim};
  for (std::size_t d : dims) {
    if (d == 0) throw Error(ErrorCode::InvalidArgument, "model dimensions must be >= 1");
  }
  if (cnn_kernel % 2 == 0) throw Error(ErrorCode::EvenKernel, "cnn kernel length must be odd");
  if (epsilon.size() != demographic_dim) {
    throw Error(ErrorCode::ShapeMismatch, "epsilon needs one entry per demographic dimension");
  }
  for (double e : epsilon) {
    if (!(e > 0.0) || !std::isfinite(e)) throw Error(ErrorCode::NonPositiveEpsilon, "epsilon must be positive");
  }
}

std::string_view to_string(ModelKind kind) noexcept {
  switch (kind) {
    case ModelKind::compsnn: return "compsnn";
    case ModelKind::single_mlp: return "single_mlp";
    case ModelKind::single_gcnn: return "single_gcnn";
    case ModelKind::single_cnn: return "single_cnn";
  }
  return "unknown";
}

ModelKind parse_model_kind(std::string_view name) {
  if (name == "compsnn") return ModelKind::compsnn;
  if (name == "single_mlp" || name == "mlp") return ModelKind::single_mlp;
  if (name == "single_gcnn" || name == "gcnn") return ModelKind::single_gcnn;
  if (name == "single_cnn" || name == "cnn") return ModelKind::single_cnn;
  throw Error(ErrorCode::UnknownKind, "unknown model kind '" + std::string(name) + "'");
}

namespace {

bool uses_graph_mlp(ModelKind k) { return k == ModelKind::compsnn || k == ModelKind::single_mlp; }
bool uses_gcnn(ModelKind k) { return k == ModelKind::compsnn || k == ModelKind::single_gcnn; }
bool uses_cnn(ModelKind k) { return k == ModelKind::compsnn || k == ModelKind::single_cnn; }

void add_linear(nn::ParamSet& ps, const std::string& prefix, std::size_t in, std::size_t out, SplitMix64& rng) {
  Tensor w({out, in});
  nn::glorot_uniform(w, in, out, rng);
  ps.add(prefix + ".weight", std::move(w));
  ps.add(prefix + ".bias", Tensor({out}));
}

void add_conv(nn::ParamSet& ps, const std::string& prefix, std::size_t cin, std::size_t cout, std::size_t k,
              SplitMix64& rng) {
  Tensor w({cout, cin, k});
  nn::glorot_uniform(w, cin * k, cout * k, rng);
  ps.add(prefix + ".weight", std::move(w));
  ps.add(prefix + ".bias", Tensor({cout}));
}

std::string filter_prefix(std::size_t f) { return "gcnn.filter" + std::to_string(f); }

void accumulate(nn::ParamSet& ps, const std::string& name, const Tensor& g) {
  auto dst = ps.get(name).grad.values();
  const auto src = g.values();
  if (dst.size() != src.size()) throw Error(ErrorCode::ShapeMismatch, "gradient size for '" + name + "'");
  for (std::size_t i = 0; i < dst.size(); ++i) dst[i] += src[i];
}

Tensor row(std::span<const double> v) { return Tensor({1, v.size()}, std::vector<double>(v.begin(), v.end())); }

const Tensor& value(const nn::ParamSet& ps, const std::string& name) { return ps.get(name).value; }

}  // namespace

ModelParams init_model(ModelKind kind, const CompSnnConfig& config, std::uint64_t seed) {
  config.validate();
  ModelParams m;
  m.kind = kind;
  m.config = config;
  m.seed = seed;
  SplitMix64 rng(seed);
  nn::ParamSet& ps = m.params;
  const CompSnnConfig& c = config;
  if (uses_graph_mlp(kind)) {
    add_linear(ps, "graph_mlp.fc1", c.node_count * kNodeChannels, c.mlp_hidden, rng);
    add_linear(ps, "graph_mlp.fc2", c.mlp_hidden, c.module_out, rng);
  }
  if (uses_gcnn(kind)) {
    for (std::size_t f = 0; f < c.gcnn_filters; ++f) {
      add_linear(ps, filter_prefix(f) + ".fc1", c.node_count, c.filter_hidden, rng);
      add_linear(ps, filter_prefix(f) + ".fc2", c.filter_hidden, c.gcnn_degree + 1, rng);
    }
    add_linear(ps, "gcnn.readout", c.gcnn_filters * c.node_count, c.module_out, rng);
  }
  if (uses_cnn(kind)) {
    add_conv(ps, "cnn.feature_conv", kFeatureChannels, c.cnn_channels, c.cnn_kernel, rng);
    add_conv(ps, "cnn.attention_conv", kFeatureChannels, 1, c.cnn_kernel, rng);
    add_linear(ps, "cnn.readout", c.cnn_channels, c.module_out, rng);
  }
  if (kind == ModelKind::compsnn) {
    add_linear(ps, "aggregator.fc1", 3 * c.module_out, c.aggregator_hidden, rng);
    add_linear(ps, "aggregator.fc2", c.aggregator_hidden, c.demographic_dim, rng);
  } else {
    add_linear(ps, "head", c.module_out, c.demographic_dim, rng);
  }
  return m;
}

ModelInput make_model_input(const FeatureSeries& features, std::span<const NodeId> node_seq, std::size_t node_count,
                            const InputNormalization& norm) {
  ModelInput in;
  in.node_signal = aggregate_node_signal(features, node_seq, node_count);
  for (std::size_t k = 0; k < node_count; ++k) {
    for (std::size_t ch = 0; ch < kNodeChannels; ++ch) in.node_signal.values[k * kNodeChannels + ch] /= norm.node_scale[ch];
  }
  const VisitSignal visits = visit_signal(node_seq, node_count);
  in.visits.resize(node_count);
  for (std::size_t k = 0; k < node_count; ++k) in.visits[k] = static_cast<double>(visits.counts[k]) / norm.visit_scale;
  in.features = normalize_features(features, norm);
  return in;
}

FeatureSeries normalize_features(const FeatureSeries& features, const InputNormalization& norm) {
  FeatureSeries out = features;
  for (std::size_t ch = 0; ch < kFeatureChannels; ++ch) {
    for (double& v : out.channel(ch)) v = (v - norm.feature_mean[ch]) / norm.feature_scale[ch];
  }
  return out;
}

// --- graph-signal MLP ------------------------------------------------------

GraphMlpTrace trace_graph_mlp(const NodeSignal& signal, const nn::ParamSet& params) {
  const Tensor& w1 = value(params, "graph_mlp.fc1.weight");
  if (signal.values.size() != w1.dim(1) || signal.node_count * kNodeChannels != signal.values.size()) {
    throw Error(ErrorCode::ShapeMismatch, "node signal does not match the graph MLP input size");
  }
  GraphMlpTrace t;
  t.input = row(signal.values);
  t.hidden_pre = nn::linear_forward(t.input, w1, value(params, "graph_mlp.fc1.bias"));
  t.hidden = nn::relu_forward(t.hidden_pre);
  t.output = nn::linear_forward(t.hidden, value(params, "graph_mlp.fc2.weight"), value(params, "graph_mlp.fc2.bias"));
  return t;
}

std::vector<double> forward_graph_mlp(const NodeSignal& signal, const nn::ParamSet& params) {
  const auto trace = trace_graph_mlp(signal, params);
  const auto out = trace.output.values();
  return {out.begin(), out.end()};
}

void backward_graph_mlp(const GraphMlpTrace& trace, std::span<const double> dout, nn::ParamSet& params) {
  const auto g2 = nn::linear_backward(trace.hidden, value(params, "graph_mlp.fc2.weight"), row(dout));
  accumulate(params, "graph_mlp.fc2.weight", g2.dweight);
  accumulate(params, "graph_mlp.fc2.bias", g2.dbias);
  const Tensor dh = nn::relu_backward(trace.hidden_pre, g2.dx);
  const auto g1 = nn::linear_backward(trace.input, value(params, "graph_mlp.fc1.weight"), dh);
  accumulate(params, "graph_mlp.fc1.weight", g1.dweight);
  accumulate(params, "graph_mlp.fc1.bias", g1.dbias);
}

// --- spectral GCNN ----------------------------------------------------------

namespace {

struct FilterBank {
  Tensor eigen_input;
  std::vector<Tensor> hidden;
  Tensor coefficients;
};

FilterBank run_filter_bank(std::span<const double> eigenvalues, const nn::ParamSet& params,
                           const CompSnnConfig& config) {
  FilterBank fb;
  fb.eigen_input = row(eigenvalues);
  const std::size_t terms = config.gcnn_degree + 1;
  fb.coefficients = Tensor({config.gcnn_filters, terms});
  for (std::size_t f = 0; f < config.gcnn_filters; ++f) {
    const std::string p = filter_prefix(f);
    const Tensor& w1 = value(params, p + ".fc1.weight");
    if (w1.dim(1) != eigenvalues.size()) throw Error(ErrorCode::ShapeMismatch, "eigenvalue count mismatch");
    Tensor h = nn::tanh_forward(nn::linear_forward(fb.eigen_input, w1, value(params, p + ".fc1.bias")));
    const Tensor coef = nn::linear_forward(h, value(params, p + ".fc2.weight"), value(params, p + ".fc2.bias"));
    for (std::size_t k = 0; k < terms; ++k) fb.coefficients.at(f, k) = coef[k];
    fb.hidden.push_back(std::move(h));
  }
  return fb;
}

Tensor eigen_powers(std::span<const double> eigenvalues, std::size_t degree) {
  Tensor p({eigenvalues.size(), degree + 1});
  for (std::size_t i = 0; i < eigenvalues.size(); ++i) {
    double acc = 1.0;
    for (std::size_t k = 0; k <= degree; ++k) {
      p.at(i, k) = acc;
      acc *= eigenvalues[i];
    }
  }
  return p;
}

}  // namespace

nn::Tensor spectral_filter_bank(std::span<const double> eigenvalues, const nn::ParamSet& params,
                                const CompSnnConfig& config) {
  return run_filter_bank(eigenvalues, params, config).coefficients;
}

std::vector<double> apply_spectral_filter(std::span<const double> coefficients, std::span<const double> eigenvalues,
                                          std::span<const double> s_hat) {
  if (eigenvalues.size() != s_hat.size() || coefficients.empty()) {
    throw Error(ErrorCode::ShapeMismatch, "spectral filter dimensions do not match");
  }
  std::vector<double> out(s_hat.size());
  for (std::size_t i = 0; i < s_hat.size(); ++i) {
    double response = 0.0;
    double power = 1.0;
    for (double h : coefficients) {
      response += h * power;
      power *= eigenvalues[i];
    }
    out[i] = response * s_hat[i];
  }
  return out;
}

GcnnTrace trace_gcnn(std::span<const double> visits, const Spectrum& spectrum, const nn::ParamSet& params,
                     const CompSnnConfig& config) {
  const std::size_t n = spectrum.size();
  if (visits.size() != n) throw Error(ErrorCode::ShapeMismatch, "visit signal length differs from node count");
  GcnnTrace t;
  t.s_hat = gft(spectrum, visits);
  FilterBank fb = run_filter_bank(spectrum.eigenvalues, params, config);
  t.eigen_input = std::move(fb.eigen_input);
  t.filter_hidden = std::move(fb.hidden);
  t.coefficients = std::move(fb.coefficients);
  t.powers = eigen_powers(spectrum.eigenvalues, config.gcnn_degree);
  t.concat = Tensor({1, config.gcnn_filters * n});
  const std::size_t terms = config.gcnn_degree + 1;
  for (std::size_t f = 0; f < config.gcnn_filters; ++f) {
    const std::span<const double> h(&t.coefficients.values()[f * terms], terms);
    const auto y = apply_spectral_filter(h, spectrum.eigenvalues, t.s_hat);
    std::copy(y.begin(), y.end(), t.concat.values().begin() + static_cast<std::ptrdiff_t>(f * n));
  }
  t.output = nn::linear_forward(t.concat, value(params, "gcnn.readout.weight"), value(params, "gcnn.readout.bias"));
  return t;
}

std::vector<double> forward_gcnn(std::span<const double> visits, const Spectrum& spectrum, const nn::ParamSet& params,
                                 const CompSnnConfig& config) {
  const auto trace = trace_gcnn(visits, spectrum, params, config);
  const auto out = trace.output.values();
  return {out.begin(), out.end()};
}

std::vector<double> forward_gcnn(const VisitSignal& visits, const Spectrum& spectrum, const nn::ParamSet& params,
                                 const CompSnnConfig& config) {
  std::vector<double> v(visits.counts.begin(), visits.counts.end());
  return forward_gcnn(v, spectrum, params, config);
}

void backward_gcnn(const GcnnTrace& trace, std::span<const double> dout, nn::ParamSet& params,
                   const CompSnnConfig& config) {
  const std::size_t n = trace.s_hat.size();
  const std::size_t terms = config.gcnn_degree + 1;
  const auto gr = nn::linear_backward(trace.concat, value(params, "gcnn.readout.weight"), row(dout));
  accumulate(params, "gcnn.readout.weight", gr.dweight);
  accumulate(params, "gcnn.readout.bias", gr.dbias);
  for (std::size_t f = 0; f < config.gcnn_filters; ++f) {
    Tensor dcoef({1, terms});
    for (std::size_t i = 0; i < n; ++i) {
      const double dg = gr.dx[f * n + i] * trace.s_hat[i];
      if (dg == 0.0) continue;
      for (std::size_t k = 0; k < terms; ++k) dcoef[k] += dg * trace.powers.at(i, k);
    }
    const std::string p = filter_prefix(f);
    const auto g2 = nn::linear_backward(trace.filter_hidden[f], value(params, p + ".fc2.weight"), dcoef);
    accumulate(params, p + ".fc2.weight", g2.dweight);
    accumulate(params, p + ".fc2.bias", g2.dbias);
    const Tensor dh = nn::tanh_backward(trace.filter_hidden[f], g2.dx);
    const auto g1 = nn::linear_backward(trace.eigen_input, value(params, p + ".fc1.weight"), dh);
    accumulate(params, p + ".fc1.weight", g1.dweight);
    accumulate(params, p + ".fc1.bias", g1.dbias);
  }
}

// --- attention CNN ----------------------------------------------------------

CnnTrace trace_cnn(const FeatureSeries& features, const nn::ParamSet& params) {
  const std::size_t n = features.length();
  if (n == 0) throw Error(ErrorCode::ShapeMismatch, "feature series is empty");
  CnnTrace t;
  t.input = Tensor({kFeatureChannels, n}, features.values());
  t.features = nn::sigmoid_forward(
      nn::conv1d_forward(t.input, value(params, "cnn.feature_conv.weight"), value(params, "cnn.feature_conv.bias")));
  t.attention = nn::sigmoid_forward(
      nn::conv1d_forward(t.input, value(params, "cnn.attention_conv.weight"), value(params, "cnn.attention_conv.bias")));
  const std::size_t channels = t.features.dim(0);
  double sum = 0.0;
  for (std::size_t s = 0; s < n; ++s) sum += t.attention[s];
  t.attention_sum = sum + kAttentionStabilizer;
  t.pooled = Tensor({1, channels});
  for (std::size_t c = 0; c < channels; ++c) {
    double acc = 0.0;
    for (std::size_t s = 0; s < n; ++s) acc += t.attention[s] * t.features.at(c, s);
    t.pooled[c] = acc / t.attention_sum;
  }
  t.output = nn::linear_forward(t.pooled, value(params, "cnn.readout.weight"), value(params, "cnn.readout.bias"));
  return t;
}

std::vector<double> forward_cnn(const FeatureSeries& features, const nn::ParamSet& params) {
  const auto trace = trace_cnn(features, params);
  const auto out = trace.output.values();
  return {out.begin(), out.end()};
}

void backward_cnn(const CnnTrace& trace, std::span<const double> dout, nn::ParamSet& params) {
  const auto gr = nn::linear_backward(trace.pooled, value(params, "cnn.readout.weight"), row(dout));
  accumulate(params, "cnn.readout.weight", gr.dweight);
  accumulate(params, "cnn.readout.bias", gr.dbias);

  const std::size_t channels = trace.features.dim(0);
  const std::size_t n = trace.features.dim(1);
  Tensor dfeat({channels, n});
  Tensor datt({1, n});
  for (std::size_t c = 0; c < channels; ++c) {
    const double dp = gr.dx[c] / trace.attention_sum;
    if (dp == 0.0) continue;
    for (std::size_t s = 0; s < n; ++s) {
      dfeat.at(c, s) = dp * trace.attention[s];
      datt[s] += dp * (trace.features.at(c, s) - trace.pooled[c]);
    }
  }
  const Tensor dfeat_pre = nn::sigmoid_backward(trace.features, dfeat);
  const Tensor datt_pre = nn::sigmoid_backward(trace.attention, datt);
  const auto gf = nn::conv1d_backward(trace.input, value(params, "cnn.feature_conv.weight"), dfeat_pre);
  accumulate(params, "cnn.feature_conv.weight", gf.dkernel);
  accumulate(params, "cnn.feature_conv.bias", gf.dbias);
  const auto ga = nn::conv1d_backward(trace.input, value(params, "cnn.attention_conv.weight"), datt_pre);
  accumulate(params, "cnn.attention_conv.weight", ga.dkernel);
  accumulate(params, "cnn.attention_conv.bias", ga.dbias);
}

// --- full models ------------------------------------------------------------

ModelTrace trace_model(const ModelParams& model, const ModelInput& input, const Spectrum& spectrum) {
  const nn::ParamSet& ps = model.params;
  const CompSnnConfig& cfg = model.config;
  ModelTrace t;
  std::vector<double> head_in;
  if (uses_graph_mlp(model.kind)) {
    t.graph_mlp = trace_graph_mlp(input.node_signal, ps);
    head_in.insert(head_in.end(), t.graph_mlp->output.values().begin(), t.graph_mlp->output.values().end());
  }
  if (uses_gcnn(model.kind)) {
    t.gcnn = trace_gcnn(input.visits, spectrum, ps, cfg);
    head_in.insert(head_in.end(), t.gcnn->output.values().begin(), t.gcnn->output.values().end());
  }
  if (uses_cnn(model.kind)) {
    t.cnn = trace_cnn(input.features, ps);
    head_in.insert(head_in.end(), t.cnn->output.values().begin(), t.cnn->output.values().end());
  }
  t.head_input = row(head_in);
  Tensor logits;
  if (model.kind == ModelKind::compsnn) {
    t.hidden_pre = nn::linear_forward(t.head_input, value(ps, "aggregator.fc1.weight"), value(ps, "aggregator.fc1.bias"));
    t.hidden = nn::relu_forward(t.hidden_pre);
    logits = nn::linear_forward(t.hidden, value(ps, "aggregator.fc2.weight"), value(ps, "aggregator.fc2.bias"));
  } else {
    logits = nn::linear_forward(t.head_input, value(ps, "head.weight"), value(ps, "head.bias"));
  }
  t.prediction = nn::sigmoid_forward(logits);
  return t;
}

std::vector<double> predict(const ModelParams& model, const ModelInput& input, const Spectrum& spectrum) {
  const auto trace = trace_model(model, input, spectrum);
  const auto p = trace.prediction.values();
  return {p.begin(), p.end()};
}

void backward_model(const ModelTrace& trace, std::span<const double> dprediction, ModelParams& model) {
  nn::ParamSet& ps = model.params;
  const Tensor dlogits = nn::sigmoid_backward(trace.prediction, row(dprediction));
  Tensor dhead;
  if (model.kind == ModelKind::compsnn) {
    const auto g2 = nn::linear_backward(trace.hidden, value(ps, "aggregator.fc2.weight"), dlogits);
    accumulate(ps, "aggregator.fc2.weight", g2.dweight);
    accumulate(ps, "aggregator.fc2.bias", g2.dbias);
    const Tensor dh = nn::relu_backward(trace.hidden_pre, g2.dx);
    auto g1 = nn::linear_backward(trace.head_input, value(ps, "aggregator.fc1.weight"), dh);
    accumulate(ps, "aggregator.fc1.weight", g1.dweight);
    accumulate(ps, "aggregator.fc1.bias", g1.dbias);
    dhead = std::move(g1.dx);
  } else {
    auto g = nn::linear_backward(trace.head_input, value(ps, "head.weight"), dlogits);
    accumulate(ps, "head.weight", g.dweight);
    accumulate(ps, "head.bias", g.dbias);
    dhead = std::move(g.dx);
  }
  const std::size_t width = model.config.module_out;
  std::size_t offset = 0;
  auto slice = [&]() {
    const std::span<const double> s(dhead.values().data() + offset, width);
    offset += width;
    return s;
  };
  if (trace.graph_mlp) backward_graph_mlp(*trace.graph_mlp, slice(), ps);
  if (trace.gcnn) backward_gcnn(*trace.gcnn, slice(), ps, model.config);
  if (trace.cnn) backward_cnn(*trace.cnn, slice(), ps);
}

std::vector<double> forward_compsnn(const NodeSignal& signal, std::span<const double> visits,
                                    const FeatureSeries& features, const Spectrum& spectrum, const ModelParams& model) {
  if (model.kind != ModelKind::compsnn) throw Error(ErrorCode::UnknownKind, "forward_compsnn needs a composite model");
  const ModelInput input{signal, std::vector<double>(visits.begin(), visits.end()), features};
  return predict(model, input, spectrum);
}

std::vector<double> forward_singlenn(const ModelInput& input, const Spectrum& spectrum, const ModelParams& model) {
  if (model.kind == ModelKind::compsnn) throw Error(ErrorCode::UnknownKind, "forward_singlenn needs a SingleNN model");
  return predict(model, input, spectrum);
}

// --- loss -------------------------------------------------------------------

LossResult gaussian_loss(std::span<const double> prediction, std::span<const double> target,
                         std::span<const double> epsilon) {
  if (prediction.size() != target.size() || prediction.size() != epsilon.size()) {
    throw Error(ErrorCode::ShapeMismatch, "loss inputs differ in length");
  }
  LossResult r;
  r.grad.resize(prediction.size());
  for (std::size_t i = 0; i < prediction.size(); ++i) {
    const double e = epsilon[i];
    if (!(e > 0.0)) throw Error(ErrorCode::NonPositiveEpsilon, "epsilon must be positive");
    const double d = prediction[i] - target[i];
    const double inv = 1.0 / (e * e);
    r.value += 0.5 * d * d * inv;
    r.grad[i] = d * inv;
  }
  return r;
}

double accumulate_sample_gradient(ModelParams& model, const ModelInput& input, const Spectrum& spectrum,
                                  std::span<const double> target, double weight) {
  const ModelTrace trace = trace_model(model, input, spectrum);
  LossResult loss = gaussian_loss(trace.prediction.values(), target, model.config.epsilon);
  for (double& g : loss.grad) g *= weight;
  backward_model(trace, loss.grad, model);
  return loss.value;
}

double sample_loss(const ModelParams& model, const ModelInput& input, const Spectrum& spectrum,
                   std::span<const double> target) {
  return gaussian_loss(predict(model, input, spectrum), target, model.config.epsilon).value;
}

}  // namespace compsnn
