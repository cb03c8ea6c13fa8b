#include "compsnn/experiment.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <numeric>

#include "compsnn/error.hpp"
#include "compsnn/io.hpp"
#include "compsnn/rng.hpp"

namespace compsnn {

namespace {

void shuffle(std::vector<std::size_t>& v, SplitMix64& rng) {
  for (std::size_t i = v.size(); i > 1; --i) {
    const std::size_t j = rng.below(i);
    std::swap(v[i - 1], v[j]);
  }
}

double mean_of(std::span<const double> v) {
  if (v.empty()) return std::numeric_limits<double>::quiet_NaN();
  return std::accumulate(v.begin(), v.end(), 0.0) / static_cast<double>(v.size());
}

std::ofstream open_csv(const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error(ErrorCode::IoError, "cannot write " + path.string());
  return out;
}

std::string csv_number(double v) { return std::isnan(v) ? std::string("n/a") : format_double(v); }

}  // namespace

void split_indices(std::size_t n, double train_fraction, std::uint64_t seed, std::vector<std::size_t>& train,
                   std::vector<std::size_t>& validation) {
  if (n < 2) throw Error(ErrorCode::InvalidArgument, "need at least two trajectories to split");
  if (!(train_fraction > 0.0 && train_fraction < 1.0)) {
    throw Error(ErrorCode::InvalidArgument, "train fraction must lie in (0, 1)");
  }
  std::vector<std::size_t> perm(n);
  std::iota(perm.begin(), perm.end(), std::size_t{0});
  SplitMix64 rng(derive_seed(seed, 0x5b1172));
  shuffle(perm, rng);
  auto n_train = static_cast<std::size_t>(std::llround(static_cast<double>(n) * train_fraction));
  n_train = std::clamp<std::size_t>(n_train, 1, n - 1);
  train.assign(perm.begin(), perm.begin() + static_cast<std::ptrdiff_t>(n_train));
  validation.assign(perm.begin() + static_cast<std::ptrdiff_t>(n_train), perm.end());
  std::sort(train.begin(), train.end());
  std::sort(validation.begin(), validation.end());
}

std::vector<double> demographic_epsilon(const std::vector<std::vector<double>>& targets,
                                        std::span<const std::size_t> index, double floor) {
  if (index.empty()) throw Error(ErrorCode::EmptyInput, "no samples to estimate epsilon from");
  const std::size_t dim = targets[index.front()].size();
  std::vector<double> eps(dim);
  const auto n = static_cast<double>(index.size());
  for (std::size_t d = 0; d < dim; ++d) {
    double mean = 0.0;
    for (std::size_t i : index) mean += targets[i][d];
    mean /= n;
    double var = 0.0;
    for (std::size_t i : index) var += (targets[i][d] - mean) * (targets[i][d] - mean);
    eps[d] = std::max(std::sqrt(var / n), floor);
  }
  return eps;
}

PreparedData prepare_experiment(const std::vector<RawTrajectory>& trajectories,
                                const std::vector<DemographicVector>& demographics, const ExperimentConfig& config) {
  if (trajectories.size() != demographics.size()) {
    throw Error(ErrorCode::LengthMismatch, "one demographic vector per trajectory is required");
  }
  PreparedData data;
  const std::size_t n = trajectories.size();
  split_indices(n, config.train_fraction, config.seed, data.train_index, data.validation_index);

  data.trajectories.reserve(n);
  data.features.reserve(n);
  for (std::size_t i = 0; i < n; ++i) {
    data.trajectories.push_back(validate_trajectory(trajectories[i]));
    data.features.push_back(compute_feature_series(data.trajectories.back(), config.features));
    const auto& u = demographics[i].values;
    data.targets.emplace_back(u.begin(), u.end());
  }

  std::vector<RawTrajectory> train_trajs;
  train_trajs.reserve(data.train_index.size());
  for (std::size_t i : data.train_index) train_trajs.push_back(data.trajectories[i]);
  const double cell = config.cell_size > 0.0 ? config.cell_size : default_cell_size(train_trajs);
  data.grid = build_density_grid(train_trajs, cell);
  data.labels = segment_density(data.grid, config.min_separation);
  const std::size_t nodes = data.labels.node_count();

  // Held-out samples may fall outside the training grid or on cells no
  // training trajectory visited; they snap to the nearest labelled cell.
  const NodeLocator locator(data.grid, data.labels);
  data.node_sequences.resize(n);
  for (std::size_t i = 0; i < n; ++i) {
    auto& seq = data.node_sequences[i];
    seq.reserve(data.trajectories[i].samples.size());
    for (const Sample& s : data.trajectories[i].samples) seq.push_back(locator.locate_clamped(s.x, s.y));
  }
  std::vector<std::vector<NodeId>> train_seqs;
  for (std::size_t i : data.train_index) train_seqs.push_back(data.node_sequences[i]);
  data.graph = build_graph(train_seqs, nodes, node_centroids(data.labels, data.grid));
  data.spectrum = eigendecompose(laplacian(data.graph));

  data.epsilon = demographic_epsilon(data.targets, data.train_index, config.epsilon_floor);
  data.model_config = config.model;
  data.model_config.node_count = nodes;
  data.model_config.demographic_dim = kDemographicDim;
  data.model_config.epsilon = data.epsilon;
  data.model_config.validate();
  return data;
}

InputNormalization fit_normalization(const PreparedData& data) {
  if (data.train_index.empty()) throw Error(ErrorCode::EmptyInput, "no training samples");
  InputNormalization norm;
  const InputNormalization identity;
  std::array<double, kFeatureChannels> sum{};
  std::array<double, kFeatureChannels> sum_sq{};
  double count = 0.0;
  std::array<double, kNodeChannels> node_max{};
  double visit_max = 0.0;
  const std::size_t nodes = data.model_config.node_count;
  for (std::size_t i : data.train_index) {
    const FeatureSeries& f = data.features[i];
    for (std::size_t ch = 0; ch < kFeatureChannels; ++ch) {
      for (double v : f.channel(ch)) {
        sum[ch] += v;
        sum_sq[ch] += v * v;
      }
    }
    count += static_cast<double>(f.length());
    const ModelInput raw = make_model_input(f, data.node_sequences[i], nodes, identity);
    for (std::size_t k = 0; k < nodes; ++k) {
      for (std::size_t ch = 0; ch < kNodeChannels; ++ch) {
        node_max[ch] = std::max(node_max[ch], std::abs(raw.node_signal.at(k, ch)));
      }
      visit_max = std::max(visit_max, raw.visits[k]);
    }
  }
  for (std::size_t ch = 0; ch < kFeatureChannels; ++ch) {
    const double mean = sum[ch] / count;
    const double var = std::max(sum_sq[ch] / count - mean * mean, 0.0);
    norm.feature_mean[ch] = mean;
    norm.feature_scale[ch] = var > 1e-24 ? std::sqrt(var) : 1.0;
  }
  for (std::size_t ch = 0; ch < kNodeChannels; ++ch) norm.node_scale[ch] = node_max[ch] > 0.0 ? node_max[ch] : 1.0;
  norm.visit_scale = visit_max > 0.0 ? visit_max : 1.0;
  return norm;
}

SampleSet build_samples(const PreparedData& data, std::span<const std::size_t> index,
                        const InputNormalization& norm) {
  SampleSet set;
  set.ids.reserve(index.size());
  set.inputs.reserve(index.size());
  for (std::size_t i : index) {
    set.ids.push_back(data.trajectories[i].id);
    set.inputs.push_back(
        make_model_input(data.features[i], data.node_sequences[i], data.model_config.node_count, norm));
    set.targets.push_back(data.targets[i]);
  }
  return set;
}

std::vector<double> evaluate(const ModelParams& model, const SampleSet& samples, const Spectrum& spectrum) {
  std::vector<double> losses(samples.size());
  for (std::size_t i = 0; i < samples.size(); ++i) {
    losses[i] = sample_loss(model, samples.inputs[i], spectrum, samples.targets[i]);
  }
  return losses;
}

TrainResult train_model(ModelKind kind, const CompSnnConfig& config, const InputNormalization& norm,
                        const SampleSet& train, const SampleSet& validation, const Spectrum& spectrum,
                        const TrainOptions& options) {
  if (train.size() == 0) throw Error(ErrorCode::EmptyInput, "training set is empty");
  if (options.batch == 0) throw Error(ErrorCode::InvalidArgument, "batch size must be >= 1");
  const auto salt = static_cast<std::uint64_t>(kind);
  ModelParams model = init_model(kind, config, derive_seed(options.seed, salt + 1));
  model.normalization = norm;
  SplitMix64 order_rng(derive_seed(options.seed, salt + 101));

  const auto check = [](double loss) {
    if (!std::isfinite(loss)) throw Error(ErrorCode::DivergedLoss, "training loss is not finite");
    return loss;
  };
  const auto val_mean = [&](const ModelParams& m) {
    return validation.size() == 0 ? std::numeric_limits<double>::quiet_NaN()
                                  : check(mean_of(evaluate(m, validation, spectrum)));
  };

  // Without a validation set the training loss picks the best epoch.
  const auto score = [&](const EpochRecord& r) { return validation.size() == 0 ? r.train_loss : r.val_loss; };

  TrainResult result;
  result.history.push_back({0, check(mean_of(evaluate(model, train, spectrum))), val_mean(model)});
  result.best = model;
  double best_score = score(result.history.back());

  std::vector<std::size_t> order(train.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  for (std::size_t epoch = 1; epoch <= options.epochs; ++epoch) {
    shuffle(order, order_rng);
    double total = 0.0;
    for (std::size_t start = 0; start < order.size(); start += options.batch) {
      const std::size_t stop = std::min(start + options.batch, order.size());
      const double weight = 1.0 / static_cast<double>(stop - start);
      model.params.zero_grad();
      for (std::size_t b = start; b < stop; ++b) {
        const std::size_t i = order[b];
        total += check(accumulate_sample_gradient(model, train.inputs[i], spectrum, train.targets[i], weight));
      }
      nn::sgd_step(model.params, options.lr);
    }
    model.epoch = epoch;
    result.history.push_back({epoch, total / static_cast<double>(order.size()), val_mean(model)});
    if (score(result.history.back()) < best_score) {
      best_score = score(result.history.back());
      result.best_epoch = epoch;
      result.best = model;
    }
  }
  result.best.params.zero_grad();
  return result;
}

double pearson(std::span<const double> a, std::span<const double> b) {
  if (a.size() != b.size()) throw Error(ErrorCode::LengthMismatch, "pearson inputs differ in length");
  if (a.size() < 2) return std::numeric_limits<double>::quiet_NaN();
  const double ma = mean_of(a);
  const double mb = mean_of(b);
  double sab = 0.0;
  double saa = 0.0;
  double sbb = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    sab += (a[i] - ma) * (b[i] - mb);
    saa += (a[i] - ma) * (a[i] - ma);
    sbb += (b[i] - mb) * (b[i] - mb);
  }
  if (saa == 0.0 || sbb == 0.0) return std::numeric_limits<double>::quiet_NaN();
  return sab / std::sqrt(saa * sbb);
}

EvalReport compare_models(const std::vector<ModelEvaluation>& evaluations) {
  if (evaluations.empty()) throw Error(ErrorCode::EmptyInput, "nothing to compare");
  const auto& ref_ids = evaluations.front().sample_ids;
  for (const auto& e : evaluations) {
    if (e.sample_ids != ref_ids || e.losses.size() != ref_ids.size()) {
      throw Error(ErrorCode::OrderMismatch, "model '" + e.name + "' was evaluated on a different sample order");
    }
  }
  EvalReport report;
  for (const auto& e : evaluations) {
    for (double l : e.losses) report.histogram_max = std::max(report.histogram_max, l);
  }
  for (const auto& e : evaluations) {
    ModelSummary s;
    s.name = e.name;
    const auto n = static_cast<double>(e.losses.size());
    s.mean = mean_of(e.losses);
    double var = 0.0;
    for (double l : e.losses) var += (l - s.mean) * (l - s.mean);
    const double sd = e.losses.size() > 1 ? std::sqrt(var / (n - 1.0)) : 0.0;
    const double half = 1.96 * sd / std::sqrt(n);
    s.ci_low = s.mean - half;
    s.ci_high = s.mean + half;
    s.histogram.assign(kHistogramBins, 0);
    for (double l : e.losses) {
      std::size_t bin = 0;
      if (report.histogram_max > 0.0) {
        bin = static_cast<std::size_t>(l / report.histogram_max * static_cast<double>(kHistogramBins));
        bin = std::min(bin, kHistogramBins - 1);
      }
      ++s.histogram[bin];
    }
    report.models.push_back(std::move(s));
  }
  const std::size_t m = evaluations.size();
  report.correlation.assign(m, std::vector<double>(m));
  for (std::size_t i = 0; i < m; ++i) {
    for (std::size_t j = 0; j < m; ++j) report.correlation[i][j] = pearson(evaluations[i].losses, evaluations[j].losses);
  }
  return report;
}

void write_history_csv(const std::vector<std::pair<std::string, std::vector<EpochRecord>>>& histories,
                       const std::filesystem::path& path) {
  auto out = open_csv(path);
  out << "model,epoch,train_loss,val_loss\n";
  for (const auto& [name, history] : histories) {
    for (const auto& r : history) {
      out << name << ',' << r.epoch << ',' << csv_number(r.train_loss) << ',' << csv_number(r.val_loss) << '\n';
    }
  }
}

void write_summary_csv(const EvalReport& report, const std::filesystem::path& path) {
  auto out = open_csv(path);
  out << "model,mean,ci_low,ci_high\n";
  for (const auto& s : report.models) {
    out << s.name << ',' << csv_number(s.mean) << ',' << csv_number(s.ci_low) << ',' << csv_number(s.ci_high) << '\n';
  }
}

void write_correlations_csv(const EvalReport& report, const std::filesystem::path& path) {
  auto out = open_csv(path);
  out << "model";
  for (const auto& s : report.models) out << ',' << s.name;
  out << '\n';
  for (std::size_t i = 0; i < report.models.size(); ++i) {
    out << report.models[i].name;
    for (double r : report.correlation[i]) out << ',' << csv_number(r);
    out << '\n';
  }
}

void write_histograms_csv(const EvalReport& report, const std::filesystem::path& path) {
  auto out = open_csv(path);
  out << "model,bin,bin_low,bin_high,count\n";
  const double width = report.histogram_max / static_cast<double>(kHistogramBins);
  for (const auto& s : report.models) {
    for (std::size_t b = 0; b < s.histogram.size(); ++b) {
      out << s.name << ',' << b << ',' << csv_number(width * static_cast<double>(b)) << ','
          << csv_number(width * static_cast<double>(b + 1)) << ',' << s.histogram[b] << '\n';
    }
  }
}

void write_losses_csv(const std::vector<ModelEvaluation>& evaluations, const std::filesystem::path& path) {
  auto out = open_csv(path);
  out << "traj_id";
  for (const auto& e : evaluations) out << ',' << e.name;
  out << '\n';
  if (evaluations.empty()) return;
  for (std::size_t i = 0; i < evaluations.front().sample_ids.size(); ++i) {
    out << evaluations.front().sample_ids[i];
    for (const auto& e : evaluations) out << ',' << csv_number(e.losses.at(i));
    out << '\n';
  }
}

}  // namespace compsnn
