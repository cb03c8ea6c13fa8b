#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <numeric>
#include <sstream>

#include "compsnn/error.hpp"
#include "compsnn/experiment.hpp"
#include "compsnn/rng.hpp"
#include "compsnn/synthetic.hpp"

using namespace compsnn;

namespace {

std::vector<double> ranks(const std::vector<double>& v) {
  std::vector<std::size_t> order(v.size());
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return v[a] < v[b]; });
  std::vector<double> r(v.size());
  for (std::size_t i = 0; i < order.size(); ++i) r[order[i]] = static_cast<double>(i);
  return r;
}

double mean_speed(const RawTrajectory& t) {
  double len = 0.0;
  for (std::size_t i = 1; i < t.samples.size(); ++i)
    len += std::hypot(t.samples[i].x - t.samples[i - 1].x, t.samples[i].y - t.samples[i - 1].y);
  return len / (t.samples.back().t - t.samples.front().t);
}

std::string read_file(const std::filesystem::path& p) {
  std::ifstream in(p);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

ExperimentConfig tiny_experiment() {
  ExperimentConfig cfg;
  cfg.seed = 5;
  cfg.model.mlp_hidden = 8;
  cfg.model.module_out = 4;
  cfg.model.cnn_channels = 4;
  cfg.model.cnn_kernel = 3;
  cfg.model.gcnn_filters = 2;
  cfg.model.gcnn_degree = 2;
  cfg.model.filter_hidden = 4;
  cfg.model.aggregator_hidden = 8;
  cfg.cell_size = 5.0;
  return cfg;
}

struct Fixture {
  PreparedData data;
  InputNormalization norm;
  SampleSet train;
  SampleSet val;
};

const Fixture& fixture() {
  static const Fixture f = [] {
    Fixture fx;
    const SyntheticDataset ds = generate_synthetic_dataset(3, 12);
    fx.data = prepare_experiment(ds.trajectories, ds.demographics, tiny_experiment());
    fx.norm = fit_normalization(fx.data);
    fx.train = build_samples(fx.data, fx.data.train_index, fx.norm);
    fx.val = build_samples(fx.data, fx.data.validation_index, fx.norm);
    return fx;
  }();
  return f;
}

}  // namespace

TEST(SyntheticWorld, DefaultIsValidAndChecksPlacement) {
  EXPECT_NO_THROW(default_world().validate());
  SyntheticWorld w = default_world();
  w.checkpoints.push_back({30.0, 20.0});  // inside the first obstacle
  EXPECT_THROW(w.validate(), Error);
  w = default_world();
  w.start = {-5.0, 10.0};
  EXPECT_THROW(w.validate(), Error);
}

TEST(Synthetic, SameSeedIsBitIdentical) {
  const auto a = generate_synthetic_dataset(11, 6);
  const auto b = generate_synthetic_dataset(11, 6);
  ASSERT_EQ(a.trajectories.size(), 6u);
  for (std::size_t i = 0; i < 6; ++i) {
    EXPECT_EQ(a.trajectories[i].id, b.trajectories[i].id);
    EXPECT_EQ(a.demographics[i], b.demographics[i]);
    ASSERT_EQ(a.trajectories[i].samples.size(), b.trajectories[i].samples.size());
    for (std::size_t k = 0; k < a.trajectories[i].samples.size(); ++k) {
      EXPECT_EQ(a.trajectories[i].samples[k].x, b.trajectories[i].samples[k].x);
      EXPECT_EQ(a.trajectories[i].samples[k].y, b.trajectories[i].samples[k].y);
    }
  }
  const auto c = generate_synthetic_dataset(12, 6);
  EXPECT_NE(a.trajectories[0].samples.size() * 1000 + a.trajectories[1].samples.size(),
            c.trajectories[0].samples.size() * 1000 + c.trajectories[1].samples.size());
}

TEST(Synthetic, SampledAtTwoHertzAndInsideArena) {
  const auto ds = generate_synthetic_dataset(1, 5);
  for (const auto& t : ds.trajectories) {
    for (std::size_t k = 1; k < t.samples.size(); ++k) EXPECT_DOUBLE_EQ(t.samples[k].t - t.samples[k - 1].t, 0.5);
    for (const auto& s : t.samples) {
      EXPECT_GE(s.x, 0.0);
      EXPECT_LE(s.x, 100.0);
      EXPECT_GE(s.y, 0.0);
      EXPECT_LE(s.y, 100.0);
    }
  }
  for (const auto& u : ds.demographics)
    for (double v : u.values) {
      EXPECT_GE(v, 0.0);
      EXPECT_LE(v, 1.0);
    }
  // Encoded records reproduce the drawn vectors exactly.
  for (std::size_t i = 0; i < ds.records.size(); ++i)
    EXPECT_EQ(encode_demographics(ds.records[i].fields, ds.schema), ds.demographics[i]);
}

TEST(Synthetic, SpeedRankCorrelatesWithFirstComponent) {
  const SyntheticWorld world = default_world();
  SplitMix64 rng(2024);
  std::vector<double> u0, speed;
  for (int i = 0; i < 100; ++i) {
    DemographicVector u;
    for (double& v : u.values) v = rng.uniform();
    const auto t = simulate_navigator(world, behavior_from_demographics(u), rng(), "s");
    u0.push_back(u.values[0]);
    speed.push_back(mean_speed(t));
  }
  const auto ru = ranks(u0), rs = ranks(speed);
  EXPECT_GT(pearson(ru, rs), 0.9);
}

TEST(Synthetic, NoHeadingNoiseGivesStraightLegs) {
  SyntheticWorld w;
  w.start = {10.0, 10.0};
  w.checkpoints = {{80.0, 60.0}};
  DemographicVector u;
  u.values = {0.5, 0.0, 0.5, 0.0, 0.3, 0.3, 0.3, 0.3};
  const auto t = simulate_navigator(w, behavior_from_demographics(u), 9, "s");
  ASSERT_GT(t.samples.size(), 10u);
  const double x0 = t.samples.front().x, y0 = t.samples.front().y;
  const double dx = 80.0 - x0, dy = 60.0 - y0, len = std::hypot(dx, dy);
  for (const auto& s : t.samples) EXPECT_LT(std::abs((s.x - x0) * dy - (s.y - y0) * dx) / len, 1e-9);
}

TEST(Synthetic, BlockedCheckpointIsUnreachable) {
  SyntheticWorld w;
  w.start = {10.0, 10.0};
  w.checkpoints = {{50.0, 50.0}};
  w.obstacles = {{40, 40, 60, 45}, {40, 55, 60, 60}, {40, 45, 45, 55}, {55, 45, 60, 55}};
  w.max_steps_per_leg = 500;
  DemographicVector u;
  try {
    simulate_navigator(w, behavior_from_demographics(u), 1, "s");
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::UnreachableCheckpoint);
  }
  EXPECT_THROW(generate_synthetic_dataset(1, 1), Error);
}

TEST(Split, DisjointCoveringAndSeeded) {
  std::vector<std::size_t> tr, va, tr2, va2;
  split_indices(200, 0.8, 42, tr, va);
  split_indices(200, 0.8, 42, tr2, va2);
  EXPECT_EQ(tr, tr2);
  EXPECT_EQ(va, va2);
  EXPECT_EQ(tr.size(), 160u);
  EXPECT_EQ(va.size(), 40u);
  std::vector<std::size_t> all = tr;
  all.insert(all.end(), va.begin(), va.end());
  std::sort(all.begin(), all.end());
  for (std::size_t i = 0; i < 200; ++i) EXPECT_EQ(all[i], i);
  split_indices(2, 0.99, 1, tr, va);
  EXPECT_EQ(tr.size(), 1u);
  EXPECT_EQ(va.size(), 1u);
}

TEST(Epsilon, PopulationStdWithFloor) {
  const std::vector<std::vector<double>> t{{0.0, 0.5}, {1.0, 0.5}, {0.5, 0.5}};
  const std::vector<std::size_t> idx{0, 1};
  const auto eps = demographic_epsilon(t, idx, 1e-3);
  EXPECT_DOUBLE_EQ(eps[0], 0.5);
  EXPECT_EQ(eps[1], 1e-3);
}

TEST(Prepare, GraphFromTrainingOnlyAndConsistentShapes) {
  const Fixture& f = fixture();
  const PreparedData& d = f.data;
  EXPECT_EQ(d.train_index.size() + d.validation_index.size(), 12u);
  EXPECT_EQ(d.model_config.node_count, d.labels.node_count());
  EXPECT_EQ(d.spectrum.size(), d.graph.node_count);
  EXPECT_EQ(d.model_config.epsilon, d.epsilon);
  for (std::size_t i : d.train_index) {
    for (const auto& s : d.trajectories[i].samples) {
      EXPECT_GE(s.x, d.grid.bounds.x_min);
      EXPECT_LE(s.x, d.grid.bounds.x_max);
    }
  }
  for (std::size_t i = 0; i < d.trajectories.size(); ++i) {
    EXPECT_EQ(d.node_sequences[i].size(), d.features[i].length());
    for (NodeId n : d.node_sequences[i]) EXPECT_LT(n, d.graph.node_count);
  }
}

TEST(Train, ZeroLearningRateKeepsValidationLossConstant) {
  const Fixture& f = fixture();
  TrainOptions opt;
  opt.epochs = 3;
  opt.lr = 0.0;
  opt.batch = 4;
  for (ModelKind kind : kAllModelKinds) {
    const auto r = train_model(kind, f.data.model_config, f.norm, f.train, f.val, f.data.spectrum, opt);
    ASSERT_EQ(r.history.size(), 4u);
    for (const auto& e : r.history) EXPECT_EQ(e.val_loss, r.history[0].val_loss);
    EXPECT_EQ(r.best_epoch, 0u);
  }
}

TEST(Train, DeterministicAndBestEpochIsArgmin) {
  const Fixture& f = fixture();
  TrainOptions opt;
  opt.epochs = 4;
  opt.batch = 3;
  const auto a = train_model(ModelKind::compsnn, f.data.model_config, f.norm, f.train, f.val, f.data.spectrum, opt);
  const auto b = train_model(ModelKind::compsnn, f.data.model_config, f.norm, f.train, f.val, f.data.spectrum, opt);
  ASSERT_EQ(a.history.size(), b.history.size());
  for (std::size_t i = 0; i < a.history.size(); ++i) {
    EXPECT_EQ(a.history[i].train_loss, b.history[i].train_loss);
    EXPECT_EQ(a.history[i].val_loss, b.history[i].val_loss);
  }
  EXPECT_TRUE(a.best.params == b.best.params);
  double best = a.history[0].val_loss;
  std::size_t arg = 0;
  for (const auto& e : a.history)
    if (e.val_loss < best) {
      best = e.val_loss;
      arg = e.epoch;
    }
  EXPECT_EQ(a.best_epoch, arg);
  EXPECT_EQ(a.best.epoch, arg);
  const auto losses = evaluate(a.best, f.val, f.data.spectrum);
  EXPECT_DOUBLE_EQ(std::accumulate(losses.begin(), losses.end(), 0.0) / static_cast<double>(losses.size()), best);
}

TEST(Train, DivergenceIsReported) {
  const Fixture& f = fixture();
  TrainOptions opt;
  opt.epochs = 5;
  opt.lr = 1e300;
  opt.batch = 1;
  try {
    train_model(ModelKind::single_mlp, f.data.model_config, f.norm, f.train, f.val, f.data.spectrum, opt);
    FAIL();
  } catch (const Error& e) {
    EXPECT_TRUE(e.code() == ErrorCode::DivergedLoss || e.code() == ErrorCode::NonFiniteGradient) << e.what();
  }
}

TEST(Evaluate, ConstantAndPerfectPredictors) {
  const Fixture& f = fixture();
  ModelParams m = init_model(ModelKind::single_mlp, f.data.model_config, 1);
  for (auto& [name, p] : m.params) p.value.fill(0.0);
  const auto eps = f.data.epsilon;
  auto losses = evaluate(m, f.val, f.data.spectrum);
  for (std::size_t i = 0; i < losses.size(); ++i) {
    double expect = 0.0;
    for (std::size_t k = 0; k < 8; ++k) {
      const double d = 0.5 - f.val.targets[i][k];
      expect += d * d / (2 * eps[k] * eps[k]);
    }
    EXPECT_NEAR(losses[i], expect, 1e-12);
  }
  // Head bias at the logit of the first target reproduces it.
  const auto& u = f.val.targets[0];
  for (std::size_t k = 0; k < 8; ++k) {
    const double c = std::clamp(u[k], 1e-6, 1 - 1e-6);
    m.params.get("head.bias").value[k] = std::log(c / (1 - c));
  }
  SampleSet one = f.val;
  one.inputs.resize(1);
  one.targets.resize(1);
  one.ids.resize(1);
  EXPECT_LT(evaluate(m, one, f.data.spectrum)[0], 1e-6);
}

TEST(Pearson, Examples) {
  const std::vector<double> a{1, 2, 3, 4}, b{2, 1, 4, 3}, c{5, 5, 5, 5};
  EXPECT_NEAR(pearson(a, b), 0.6, 1e-15);
  EXPECT_NEAR(pearson(a, a), 1.0, 1e-15);
  EXPECT_TRUE(std::isnan(pearson(a, c)));
}

TEST(CompareModels, StatisticsAndCsv) {
  const std::vector<std::string> ids{"a", "b", "c", "d"};
  const std::vector<ModelEvaluation> evals{{"m1", ids, {1, 2, 3, 4}}, {"m2", ids, {2, 1, 4, 3}}, {"m3", ids, {5, 5, 5, 5}}};
  const EvalReport r = compare_models(evals);
  ASSERT_EQ(r.models.size(), 3u);
  const double half = 1.96 * std::sqrt(5.0 / 3.0) / 2.0;
  EXPECT_DOUBLE_EQ(r.models[0].mean, 2.5);
  EXPECT_NEAR(r.models[0].ci_low, 2.5 - half, 1e-15);
  EXPECT_NEAR(r.models[0].ci_high, 2.5 + half, 1e-15);
  EXPECT_EQ(r.histogram_max, 5.0);
  for (const auto& m : r.models) {
    EXPECT_EQ(m.histogram.size(), kHistogramBins);
    EXPECT_EQ(std::accumulate(m.histogram.begin(), m.histogram.end(), std::size_t{0}), 4u);
  }
  EXPECT_EQ(r.models[2].histogram.back(), 4u);
  EXPECT_NEAR(r.correlation[0][1], 0.6, 1e-15);
  EXPECT_NEAR(r.correlation[0][0], 1.0, 1e-15);
  EXPECT_TRUE(std::isnan(r.correlation[0][2]));

  const auto dir = std::filesystem::temp_directory_path() / "compsnn_compare_test";
  std::filesystem::create_directories(dir);
  write_correlations_csv(r, dir / "c.csv");
  write_summary_csv(r, dir / "s.csv");
  const std::string corr = read_file(dir / "c.csv");
  EXPECT_EQ(corr.substr(0, corr.find('\n')), "model,m1,m2,m3");
  EXPECT_NE(corr.find("n/a"), std::string::npos);
  EXPECT_EQ(read_file(dir / "s.csv").substr(0, 25), "model,mean,ci_low,ci_high");
  write_history_csv({{"m1", {{0, 1.5, 2.5}}}}, dir / "h.csv");
  EXPECT_EQ(read_file(dir / "h.csv"), "model,epoch,train_loss,val_loss\nm1,0,1.5,2.5\n");
  std::filesystem::remove_all(dir);
}

TEST(CompareModels, OrderMismatch) {
  const std::vector<ModelEvaluation> evals{{"m1", {"a", "b"}, {1, 2}}, {"m2", {"b", "a"}, {1, 2}}};
  try {
    compare_models(evals);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::OrderMismatch);
  }
}
