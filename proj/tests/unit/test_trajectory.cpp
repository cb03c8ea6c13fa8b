#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <functional>
#include <limits>
#include <map>
#include <numbers>
#include <set>

#include <nlohmann/json.hpp>

#include "compsnn/demographics.hpp"
#include "compsnn/error.hpp"
#include "compsnn/io.hpp"
#include "compsnn/rng.hpp"
#include "compsnn/trajectory.hpp"

using namespace compsnn;

namespace {

constexpr double kPi = std::numbers::pi;

RawTrajectory from_points(const std::vector<std::pair<double, double>>& pts, double dt = 0.5) {
  RawTrajectory r;
  r.id = "t";
  for (std::size_t i = 0; i < pts.size(); ++i) r.samples.push_back({dt * static_cast<double>(i), pts[i].first, pts[i].second});
  return r;
}

RawTrajectory random_walk(std::uint64_t seed, std::size_t n) {
  SplitMix64 rng(seed);
  RawTrajectory r;
  r.id = "rw";
  double t = 0.0, x = 0.0, y = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    r.samples.push_back({t, x, y});
    t += rng.uniform(0.2, 0.8);
    x += rng.uniform(-1.0, 1.0);
    y += rng.uniform(-1.0, 1.0);
  }
  return r;
}

void expect_code(ErrorCode code, const std::function<void()>& fn) {
  try {
    fn();
    ADD_FAILURE() << "expected " << to_string(code);
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), code) << e.what();
  }
}

}  // namespace

TEST(ValidateTrajectory, CleanSamplesPassThrough) {
  const RawTrajectory r = from_points({{0, 0}, {1, 0}, {2, 0}, {3, 1}, {4, 1}});
  const RawTrajectory v = validate_trajectory(r);
  ASSERT_EQ(v.samples.size(), 5u);
  for (std::size_t i = 0; i < 5; ++i) {
    EXPECT_EQ(v.samples[i].t, r.samples[i].t);
    EXPECT_EQ(v.samples[i].x, r.samples[i].x);
  }
}

TEST(ValidateTrajectory, DropsNonFiniteRow) {
  RawTrajectory r = from_points({{0, 0}, {1, 0}, {2, 0}, {3, 1}, {4, 1}});
  r.samples[2].x = std::numeric_limits<double>::quiet_NaN();
  const RawTrajectory v = validate_trajectory(r);
  ASSERT_EQ(v.samples.size(), 4u);
  EXPECT_EQ(v.samples[2].x, 3.0);
}

TEST(ValidateTrajectory, DropsRepeatedTimestamps) {
  RawTrajectory r = from_points({{0, 0}, {1, 0}, {2, 0}, {3, 0}});
  r.samples[2].t = r.samples[1].t;
  const RawTrajectory v = validate_trajectory(r);
  ASSERT_EQ(v.samples.size(), 3u);
  EXPECT_EQ(v.samples[1].x, 1.0);
}

TEST(ValidateTrajectory, Errors) {
  expect_code(ErrorCode::TooShort, [] { validate_trajectory(from_points({{0, 0}, {1, 0}})); });
  RawTrajectory back = from_points({{0, 0}, {1, 0}, {2, 0}, {3, 0}});
  back.samples[3].t = 0.2;
  expect_code(ErrorCode::NonMonotonicTime, [&] { validate_trajectory(back); });
}

TEST(FiniteDifference, LinearRamp) {
  const std::vector<double> s{0, 1, 2, 3}, dt{1, 1, 1};
  EXPECT_EQ(finite_difference(s, dt), (std::vector<double>{1, 1, 1, 1}));
}

TEST(FiniteDifference, Constant) {
  const std::vector<double> s{5, 5, 5}, dt{0.5, 0.5};
  EXPECT_EQ(finite_difference(s, dt), (std::vector<double>{0, 0, 0}));
}

TEST(FiniteDifference, QuadraticStencils) {
  // forward (1-0)/1, central (4-0)/2, backward (4-1)/1
  const std::vector<double> s{0, 1, 4}, dt{1, 1};
  EXPECT_EQ(finite_difference(s, dt), (std::vector<double>{1, 2, 3}));
}

TEST(FiniteDifference, UsesActualSteps) {
  const std::vector<double> s{0, 1, 3}, dt{1, 3};
  const auto d = finite_difference(s, dt);
  EXPECT_DOUBLE_EQ(d[1], 3.0 / 4.0);
  EXPECT_DOUBLE_EQ(d[2], 2.0 / 3.0);
}

TEST(FiniteDifference, Errors) {
  const std::vector<double> s{0, 1, 2}, short_dt{1}, bad_dt{1, 0};
  expect_code(ErrorCode::LengthMismatch, [&] { finite_difference(s, short_dt); });
  expect_code(ErrorCode::InvalidArgument, [&] { finite_difference(s, bad_dt); });
}

TEST(WrapAngle, RangeIsHalfOpen) {
  EXPECT_DOUBLE_EQ(wrap_angle(kPi), kPi);
  EXPECT_DOUBLE_EQ(wrap_angle(-kPi), kPi);
  EXPECT_NEAR(wrap_angle(3 * kPi / 2), -kPi / 2, 1e-15);
  EXPECT_NEAR(wrap_angle(-5 * kPi / 2), -kPi / 2, 1e-15);
}

TEST(FeatureSeries, UniformMotionAlongX) {
  std::vector<std::pair<double, double>> pts;
  for (int i = 0; i < 12; ++i) pts.emplace_back(i, 0.0);
  const FeatureSeries f = compute_feature_series(from_points(pts));
  ASSERT_EQ(f.length(), 12u);
  for (std::size_t t = 0; t < 12; ++t) {
    EXPECT_DOUBLE_EQ(f.at(2, t), 2.0);
    EXPECT_DOUBLE_EQ(f.at(3, t), 0.0);
    EXPECT_DOUBLE_EQ(f.at(6, t), 0.0);
    EXPECT_DOUBLE_EQ(f.at(7, t), 0.0);
    EXPECT_DOUBLE_EQ(f.at(8, t), 0.0);
    EXPECT_DOUBLE_EQ(f.at(9, t), 0.0);
    EXPECT_DOUBLE_EQ(f.at(0, t), static_cast<double>(t));
  }
}

TEST(FeatureSeries, MotionAlongYIsHalfPi) {
  std::vector<std::pair<double, double>> pts;
  for (int i = 0; i < 6; ++i) pts.emplace_back(3.0, 2.0 * i);
  const FeatureSeries f = compute_feature_series(from_points(pts));
  for (double th : f.channel(Channel::direction)) EXPECT_DOUBLE_EQ(th, kPi / 2);
}

TEST(FeatureSeries, OctagonTurnsByQuarterPiPerStep) {
  // Vertices of a regular octagon with unit edges, traversed twice.
  std::vector<std::pair<double, double>> pts;
  double x = 0.0, y = 0.0, heading = 0.0;
  for (int i = 0; i < 17; ++i) {
    pts.emplace_back(x, y);
    x += std::cos(heading);
    y += std::sin(heading);
    heading += kPi / 4;
  }
  const FeatureSeries f = compute_feature_series(from_points(pts));
  // Central differences of the vertex positions point along the chord
  // between neighbours, which turns by exactly pi/4 per sample.
  for (std::size_t t = 2; t + 2 < f.length(); ++t) EXPECT_NEAR(f.at(7, t), kPi / 4, 1e-12) << t;
  // pi/4 sits on a histogram edge, so only the variance is checked here.
  for (std::size_t t = 6; t + 6 < f.length(); ++t) EXPECT_NEAR(f.at(9, t), 0.0, 1e-20) << t;
}

TEST(FeatureSeries, PositionBearingMode) {
  const RawTrajectory r = from_points({{1, 1}, {2, 0}, {0, 3}, {-1, -1}});
  FeatureConfig cfg;
  cfg.direction_mode = DirectionMode::position_bearing;
  const FeatureSeries f = compute_feature_series(r, cfg);
  for (std::size_t t = 0; t < 4; ++t) EXPECT_DOUBLE_EQ(f.at(6, t), std::atan2(r.samples[t].x, r.samples[t].y));
}

TEST(FeatureSeries, SpeedIsNormOfVelocity) {
  for (std::uint64_t seed = 1; seed <= 20; ++seed) {
    const FeatureSeries f = compute_feature_series(random_walk(seed, 40));
    for (std::size_t t = 0; t < f.length(); ++t) {
      EXPECT_NEAR(f.at(2, t), std::hypot(f.at(4, t), f.at(5, t)), 1e-12);
    }
  }
}

TEST(FeatureSeries, ChannelsFiniteAndStatisticsNonNegative) {
  for (std::uint64_t seed = 1; seed <= 20; ++seed) {
    const FeatureSeries f = compute_feature_series(random_walk(seed, 30));
    for (double v : f.values()) EXPECT_TRUE(std::isfinite(v));
    for (double v : f.channel(Channel::curvature_entropy)) EXPECT_GE(v, 0.0);
    for (double v : f.channel(Channel::curvature_variance)) EXPECT_GE(v, 0.0);
    for (double v : f.channel(Channel::curvature)) {
      EXPECT_GT(v, -kPi);
      EXPECT_LE(v, kPi);
    }
  }
}

TEST(FeatureSeries, ConstantTurnHasZeroEntropy) {
  // Circle sampled at constant angular steps: the heading change is constant.
  std::vector<std::pair<double, double>> pts;
  for (int i = 0; i < 30; ++i) pts.emplace_back(10 * std::cos(0.1 * i), 10 * std::sin(0.1 * i));
  const FeatureSeries f = compute_feature_series(from_points(pts));
  for (std::size_t t = 4; t + 4 < f.length(); ++t) EXPECT_EQ(f.at(8, t), 0.0);
}

TEST(FeatureSeries, ReversalNegatesDirectionModuloPi) {
  const RawTrajectory fwd = from_points({{0, 0}, {1, 1}, {2, 2}, {3, 3}, {4, 4}});
  RawTrajectory rev = fwd;
  std::reverse(rev.samples.begin(), rev.samples.end());
  for (std::size_t i = 0; i < rev.samples.size(); ++i) rev.samples[i].t = fwd.samples[i].t;
  const FeatureSeries a = compute_feature_series(fwd);
  const FeatureSeries b = compute_feature_series(rev);
  for (std::size_t t = 0; t < 5; ++t) {
    EXPECT_NEAR(std::abs(wrap_angle(a.at(6, t) - b.at(6, 4 - t))), kPi, 1e-12);
    EXPECT_NEAR(a.at(2, t), b.at(2, 4 - t), 1e-12);
  }
}

TEST(FeatureSeries, WindowedStatisticsMatchBruteForce) {
  const RawTrajectory r = random_walk(99, 25);
  const FeatureSeries f = compute_feature_series(r);
  const auto curv = f.channel(Channel::curvature);
  const std::size_t half = 4;
  for (std::size_t t = 0; t < f.length(); ++t) {
    const std::size_t lo = t >= half ? t - half : 0;
    const std::size_t hi = std::min(f.length() - 1, t + half);
    std::vector<double> w(curv.begin() + static_cast<std::ptrdiff_t>(lo), curv.begin() + static_cast<std::ptrdiff_t>(hi) + 1);
    double mean = 0.0;
    for (double v : w) mean += v;
    mean /= static_cast<double>(w.size());
    double var = 0.0;
    for (double v : w) var += (v - mean) * (v - mean);
    var /= static_cast<double>(w.size());
    // Independent histogram: 16 bins of width 2pi/16, bin b = (-pi + b w, -pi + (b+1) w].
    std::vector<double> counts(16, 0.0);
    for (double v : w) {
      int b = 0;
      while (b < 15 && v > -kPi + (b + 1) * (2 * kPi / 16)) ++b;
      counts[static_cast<std::size_t>(b)] += 1.0;
    }
    double h = 0.0;
    for (double c : counts) {
      if (c > 0.0) {
        const double p = c / static_cast<double>(w.size());
        h -= p * std::log(p);
      }
    }
    EXPECT_NEAR(f.at(9, t), var, 1e-12) << t;
    EXPECT_NEAR(f.at(8, t), h, 1e-12) << t;
  }
}

TEST(AngleHistogramEntropy, UniformOverBinsIsLogBins) {
  std::vector<double> v;
  for (int b = 0; b < 16; ++b) v.push_back(-kPi + (b + 0.5) * 2 * kPi / 16);
  EXPECT_NEAR(angle_histogram_entropy(v, 16), std::log(16.0), 1e-12);
  EXPECT_EQ(angle_histogram_entropy(std::vector<double>{kPi, kPi}, 16), 0.0);
}

namespace {

DemographicSchema toy_schema() {
  DemographicSchema s;
  const char* names[] = {"age", "gender", "education", "hand", "sleep", "city", "sense", "phone"};
  for (std::size_t i = 0; i < 8; ++i) {
    s.fields[i].name = names[i];
    s.fields[i].kind = i % 2 == 0 ? FieldKind::ordinal : FieldKind::categorical;
    s.fields[i].values = {"a", "b", "c", "d"};
  }
  s.fields[1].values = {"f", "m"};
  s.fields[7].values = {"only"};
  return s;
}

std::map<std::string, std::string> toy_record() {
  return {{"age", "a"},  {"gender", "m"}, {"education", "c"}, {"hand", "b"},
          {"sleep", "d"}, {"city", "a"},   {"sense", "b"},     {"phone", "only"}};
}

}  // namespace

TEST(EncodeDemographics, RegularSpacing) {
  const DemographicVector u = encode_demographics(toy_record(), toy_schema());
  EXPECT_EQ(u.values[0], 0.0);
  EXPECT_EQ(u.values[1], 1.0);
  EXPECT_DOUBLE_EQ(u.values[2], 2.0 / 3.0);
  EXPECT_DOUBLE_EQ(u.values[3], 1.0 / 3.0);
  EXPECT_EQ(u.values[4], 1.0);
  EXPECT_EQ(u.values[7], 0.0);
  EXPECT_EQ(encode_demographics(toy_record(), toy_schema()), u);
}

TEST(EncodeDemographics, InjectiveOverLevels) {
  const DemographicSchema s = toy_schema();
  std::set<std::array<double, 8>> seen;
  auto rec = toy_record();
  for (const auto& a : s.fields[0].values) {
    for (const auto& e : s.fields[2].values) {
      rec["age"] = a;
      rec["education"] = e;
      EXPECT_TRUE(seen.insert(encode_demographics(rec, s).values).second);
    }
  }
}

TEST(EncodeDemographics, Errors) {
  auto rec = toy_record();
  rec.erase("city");
  expect_code(ErrorCode::MissingField, [&] { encode_demographics(rec, toy_schema()); });
  rec = toy_record();
  rec["gender"] = "x";
  expect_code(ErrorCode::UnknownCategory, [&] { encode_demographics(rec, toy_schema()); });
}

TEST(Schema, JsonRoundTrip) {
  const DemographicSchema s = toy_schema();
  const DemographicSchema back = schema_from_json(schema_to_json(s));
  for (std::size_t i = 0; i < 8; ++i) {
    EXPECT_EQ(back.fields[i].name, s.fields[i].name);
    EXPECT_EQ(back.fields[i].kind, s.fields[i].kind);
    EXPECT_EQ(back.fields[i].values, s.fields[i].values);
  }
}

TEST(Io, FormatDoubleRoundTrips) {
  SplitMix64 rng(5);
  for (int i = 0; i < 1000; ++i) {
    const double v = rng.uniform(-1e6, 1e6) * std::pow(10.0, rng.uniform(-20, 20));
    EXPECT_EQ(parse_double(format_double(v)), v);
  }
  EXPECT_EQ(format_sig(1.0 / 3.0), "0.333333");
}

TEST(Io, TrajectoryCsvRoundTrip) {
  const auto dir = std::filesystem::temp_directory_path() / "compsnn_io_test";
  std::filesystem::create_directories(dir);
  std::vector<RawTrajectory> trajs{random_walk(1, 10), random_walk(2, 7)};
  trajs[0].id = "a";
  trajs[1].id = "b";
  write_trajectories_csv(trajs, dir / "t.csv");
  const auto back = read_trajectories_csv(dir / "t.csv");
  ASSERT_EQ(back.size(), 2u);
  for (std::size_t k = 0; k < 2; ++k) {
    EXPECT_EQ(back[k].id, trajs[k].id);
    ASSERT_EQ(back[k].samples.size(), trajs[k].samples.size());
    for (std::size_t i = 0; i < back[k].samples.size(); ++i) {
      EXPECT_EQ(back[k].samples[i].t, trajs[k].samples[i].t);
      EXPECT_EQ(back[k].samples[i].x, trajs[k].samples[i].x);
      EXPECT_EQ(back[k].samples[i].y, trajs[k].samples[i].y);
    }
  }
  std::filesystem::remove_all(dir);
}
