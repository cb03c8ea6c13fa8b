#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "compsnn/demographics.hpp"
#include "compsnn/density.hpp"
#include "compsnn/graph.hpp"
#include "compsnn/model.hpp"
#include "compsnn/spectrum.hpp"
#include "compsnn/trajectory.hpp"

namespace compsnn {

struct TrainOptions {
  std::size_t epochs{100};
  double lr{0.05};
  std::size_t batch{16};
  std::uint64_t seed{42};
};

struct ExperimentConfig {
  std::uint64_t seed{42};
  double train_fraction{0.8};
  double cell_size{0.0};  // 0 = about 100 cells across the training bounding box
  std::size_t min_separation{3};
  double epsilon_floor{1e-3};
  FeatureConfig features;
  CompSnnConfig model;    // node_count and epsilon are filled in by prepare_experiment
  TrainOptions train;
};

/// Everything derived from a dataset before training. The grid, graph and
/// spectrum come from the training trajectories only.
struct PreparedData {
  std::vector<RawTrajectory> trajectories;  // validated, dataset order
  std::vector<FeatureSeries> features;      // raw (unnormalised) features
  std::vector<std::vector<NodeId>> node_sequences;
  std::vector<std::vector<double>> targets;
  std::vector<std::size_t> train_index;
  std::vector<std::size_t> validation_index;
  DensityGrid grid;
  SegmentLabels labels;
  TrajectoryGraph graph;
  Spectrum spectrum;
  std::vector<double> epsilon;
  CompSnnConfig model_config;
};

/// Seeded split: a shuffled permutation, the first round(n * fraction)
/// entries train (at least one in each part).
void split_indices(std::size_t n, double train_fraction, std::uint64_t seed, std::vector<std::size_t>& train,
                   std::vector<std::size_t>& validation);

PreparedData prepare_experiment(const std::vector<RawTrajectory>& trajectories,
                                const std::vector<DemographicVector>& demographics, const ExperimentConfig& config);

/// Per-dimension population std of the targets, floored.
std::vector<double> demographic_epsilon(const std::vector<std::vector<double>>& targets,
                                        std::span<const std::size_t> index, double floor);

/// Fitted on the training subset: features are z-scored per channel, node
/// signal channels and visit counts are divided by their largest magnitude.
InputNormalization fit_normalization(const PreparedData& data);

struct SampleSet {
  std::vector<std::string> ids;
  std::vector<ModelInput> inputs;
  std::vector<std::vector<double>> targets;
  [[nodiscard]] std::size_t size() const noexcept { return inputs.size(); }
};

SampleSet build_samples(const PreparedData& data, std::span<const std::size_t> index,
                        const InputNormalization& norm);

struct EpochRecord {
  std::size_t epoch{0};
  double train_loss{0.0};
  double val_loss{0.0};
};

struct TrainResult {
  ModelParams best;  // parameters at the best validation epoch
  std::size_t best_epoch{0};
  std::vector<EpochRecord> history;
};

/// Epoch 0 records the losses of the initial parameters. Later epochs
/// shuffle the training set, average gradients over each batch and take one
/// SGD step per batch; train_loss is the mean loss seen during the epoch.
/// Throws DivergedLoss on a non-finite loss.
TrainResult train_model(ModelKind kind, const CompSnnConfig& config, const InputNormalization& norm,
                        const SampleSet& train, const SampleSet& validation, const Spectrum& spectrum,
                        const TrainOptions& options);

std::vector<double> evaluate(const ModelParams& model, const SampleSet& samples, const Spectrum& spectrum);

struct ModelEvaluation {
  std::string name;
  std::vector<std::string> sample_ids;
  std::vector<double> losses;
};

inline constexpr std::size_t kHistogramBins = 30;

struct ModelSummary {
  std::string name;
  double mean{0.0};
  double ci_low{0.0};
  double ci_high{0.0};
  std::vector<std::size_t> histogram;
};

struct EvalReport {
  std::vector<ModelSummary> models;
  double histogram_max{0.0};
  std::vector<std::vector<double>> correlation;  // NaN where undefined
};

double pearson(std::span<const double> a, std::span<const double> b);

/// Throws OrderMismatch if the models were not evaluated on the same
/// samples in the same order.
EvalReport compare_models(const std::vector<ModelEvaluation>& evaluations);

void write_history_csv(const std::vector<std::pair<std::string, std::vector<EpochRecord>>>& histories,
                       const std::filesystem::path& path);
void write_summary_csv(const EvalReport& report, const std::filesystem::path& path);
void write_correlations_csv(const EvalReport& report, const std::filesystem::path& path);
void write_histograms_csv(const EvalReport& report, const std::filesystem::path& path);
void write_losses_csv(const std::vector<ModelEvaluation>& evaluations, const std::filesystem::path& path);

}  // namespace compsnn
