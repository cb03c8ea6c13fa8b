#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "compsnn/graph.hpp"
#include "compsnn/layers.hpp"
#include "compsnn/spectrum.hpp"
#include "compsnn/trajectory.hpp"

namespace compsnn {

/// Architecture hyper-parameters. Names match the layer sizes they control.
struct CompSnnConfig {
  std::size_t node_count{0};
  std::size_t mlp_hidden{32};
  std::size_t module_out{16};
  std::size_t cnn_channels{16};
  std::size_t cnn_kernel{9};
  std::size_t gcnn_filters{4};
  std::size_t gcnn_degree{5};
  std::size_t filter_hidden{16};
  std::size_t aggregator_hidden{32};
  std::size_t demographic_dim{8};
  /// Per-dimension width of the Gaussian loss.
  std::vector<double> epsilon = std::vector<double>(8, 1.0);

  void validate() const;
  friend bool operator==(const CompSnnConfig&, const CompSnnConfig&) = default;
};

enum class ModelKind { compsnn, single_mlp, single_gcnn, single_cnn };

inline constexpr std::array<ModelKind, 4> kAllModelKinds = {ModelKind::compsnn, ModelKind::single_cnn,
                                                           ModelKind::single_gcnn, ModelKind::single_mlp};

std::string_view to_string(ModelKind kind) noexcept;
/// Accepts "compsnn", "single_cnn"/"cnn", "single_gcnn"/"gcnn", "single_mlp"/"mlp".
ModelKind parse_model_kind(std::string_view name);

template <std::size_t N>
constexpr std::array<double, N> filled_array(double v) {
  std::array<double, N> a{};
  for (double& x : a) x = v;
  return a;
}

/// Affine preprocessing applied to raw inputs before they reach the network:
/// features are standardised per channel, node signals and visit counts are
/// divided by fixed scales (keeping unvisited nodes at zero).
struct InputNormalization {
  std::array<double, kFeatureChannels> feature_mean{};
  std::array<double, kFeatureChannels> feature_scale = filled_array<kFeatureChannels>(1.0);
  std::array<double, kNodeChannels> node_scale = filled_array<kNodeChannels>(1.0);
  double visit_scale{1.0};

  friend bool operator==(const InputNormalization&, const InputNormalization&) = default;
};

/// All learnable weights of one model plus the metadata a checkpoint carries.
struct ModelParams {
  ModelKind kind{ModelKind::compsnn};
  CompSnnConfig config;
  std::uint64_t seed{0};
  std::size_t epoch{0};
  InputNormalization normalization;
  nn::ParamSet params;
};

/// Weights are Glorot-uniform from a SplitMix64 stream seeded with `seed`;
/// biases start at zero.
ModelParams init_model(ModelKind kind, const CompSnnConfig& config, std::uint64_t seed);

/// The three representations of one trajectory, already normalised.
struct ModelInput {
  NodeSignal node_signal;
  std::vector<double> visits;
  FeatureSeries features;
};

/// Per-channel (v - mean) / scale.
FeatureSeries normalize_features(const FeatureSeries& features, const InputNormalization& norm);

ModelInput make_model_input(const FeatureSeries& features, std::span<const NodeId> node_seq, std::size_t node_count,
                            const InputNormalization& norm);

// --- graph-signal MLP ------------------------------------------------------

struct GraphMlpTrace {
  nn::Tensor input;
  nn::Tensor hidden_pre;
  nn::Tensor hidden;
  nn::Tensor output;
};

GraphMlpTrace trace_graph_mlp(const NodeSignal& signal, const nn::ParamSet& params);
std::vector<double> forward_graph_mlp(const NodeSignal& signal, const nn::ParamSet& params);
void backward_graph_mlp(const GraphMlpTrace& trace, std::span<const double> dout, nn::ParamSet& params);

// --- spectral GCNN ----------------------------------------------------------

/// j x (K+1) polynomial coefficients, one row per filter, each produced by
/// that filter's coefficient MLP (tanh hidden layer) from the eigenvalues.
nn::Tensor spectral_filter_bank(std::span<const double> eigenvalues, const nn::ParamSet& params,
                                const CompSnnConfig& config);

/// out_i = (sum_k h_k lambda_i^k) * s_hat_i.
std::vector<double> apply_spectral_filter(std::span<const double> coefficients, std::span<const double> eigenvalues,
                                          std::span<const double> s_hat);

struct GcnnTrace {
  std::vector<double> s_hat;
  nn::Tensor eigen_input;               // [1, N]
  std::vector<nn::Tensor> filter_hidden;  // per filter, [1, H] after tanh
  nn::Tensor coefficients;              // [j, K+1]
  nn::Tensor powers;                    // [N, K+1], lambda_i^k
  nn::Tensor concat;                    // [1, j*N]
  nn::Tensor output;                    // [1, module_out]
};

GcnnTrace trace_gcnn(std::span<const double> visits, const Spectrum& spectrum, const nn::ParamSet& params,
                     const CompSnnConfig& config);
std::vector<double> forward_gcnn(std::span<const double> visits, const Spectrum& spectrum, const nn::ParamSet& params,
                                 const CompSnnConfig& config);
std::vector<double> forward_gcnn(const VisitSignal& visits, const Spectrum& spectrum, const nn::ParamSet& params,
                                 const CompSnnConfig& config);
void backward_gcnn(const GcnnTrace& trace, std::span<const double> dout, nn::ParamSet& params,
                   const CompSnnConfig& config);

// --- attention CNN ----------------------------------------------------------

inline constexpr double kAttentionStabilizer = 1e-8;

struct CnnTrace {
  nn::Tensor input;         // [10, N]
  nn::Tensor features;      // [C, N], sigmoid outputs
  nn::Tensor attention;     // [1, N], sigmoid outputs
  double attention_sum{0.0};
  nn::Tensor pooled;        // [1, C]
  nn::Tensor output;        // [1, module_out]
};

/// f = sigmoid(conv(x)), a = sigmoid(conv_att(x)),
/// pooled_c = sum_t a_t f_ct / (sum_t a_t + 1e-8), output = linear(pooled).
CnnTrace trace_cnn(const FeatureSeries& features, const nn::ParamSet& params);
std::vector<double> forward_cnn(const FeatureSeries& features, const nn::ParamSet& params);
void backward_cnn(const CnnTrace& trace, std::span<const double> dout, nn::ParamSet& params);

// --- full models ------------------------------------------------------------

struct ModelTrace {
  std::optional<GraphMlpTrace> graph_mlp;
  std::optional<GcnnTrace> gcnn;
  std::optional<CnnTrace> cnn;
  nn::Tensor head_input;    // [1, 48] for the aggregator, [1, 16] for a single head
  nn::Tensor hidden_pre;    // aggregator only
  nn::Tensor hidden;        // aggregator only
  nn::Tensor prediction;    // [1, |u|], sigmoid outputs
};

ModelTrace trace_model(const ModelParams& model, const ModelInput& input, const Spectrum& spectrum);
std::vector<double> predict(const ModelParams& model, const ModelInput& input, const Spectrum& spectrum);
/// Accumulates d(prediction) into the parameter gradients.
void backward_model(const ModelTrace& trace, std::span<const double> dprediction, ModelParams& model);

/// Composite forward: the three module outputs concatenated, then
/// linear(48 -> 32), ReLU, linear(32 -> |u|), sigmoid.
std::vector<double> forward_compsnn(const NodeSignal& signal, std::span<const double> visits,
                                    const FeatureSeries& features, const Spectrum& spectrum, const ModelParams& model);

/// One module followed by linear(16 -> |u|) and a sigmoid. Throws UnknownKind
/// when `model` is a composite.
std::vector<double> forward_singlenn(const ModelInput& input, const Spectrum& spectrum, const ModelParams& model);

// --- loss -------------------------------------------------------------------

struct LossResult {
  double value{0.0};
  std::vector<double> grad;
};

/// -log(PDF(x) / PDF(u)) for the diagonal Gaussian N(u, diag(eps^2)), i.e.
/// sum_i (x_i - u_i)^2 / (2 eps_i^2), with gradient (x_i - u_i) / eps_i^2.
LossResult gaussian_loss(std::span<const double> prediction, std::span<const double> target,
                         std::span<const double> epsilon);

/// Forward, loss and backward for one sample; gradients are accumulated
/// scaled by `weight`. Returns the unscaled loss.
double accumulate_sample_gradient(ModelParams& model, const ModelInput& input, const Spectrum& spectrum,
                                  std::span<const double> target, double weight = 1.0);

double sample_loss(const ModelParams& model, const ModelInput& input, const Spectrum& spectrum,
                   std::span<const double> target);

}  // namespace compsnn
