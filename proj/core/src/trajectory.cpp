#include "compsnn/trajectory.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

#include "compsnn/error.hpp"

namespace compsnn {

RawTrajectory validate_trajectory(const RawTrajectory& raw) {
  RawTrajectory out{raw.id, {}};
  out.samples.reserve(raw.samples.size());
  for (const Sample& s : raw.samples) {
    if (!std::isfinite(s.t) || !std::isfinite(s.x) || !std::isfinite(s.y)) continue;
    if (!out.samples.empty()) {
      const double prev = out.samples.back().t;
      if (s.t == prev) continue;
      if (s.t < prev) {
        throw Error(ErrorCode::NonMonotonicTime, "trajectory '" + raw.id + "' goes back in time");
      }
    }
    out.samples.push_back(s);
  }
  if (out.samples.size() < 3) {
    throw Error(ErrorCode::TooShort, "trajectory '" + raw.id + "' has " +
                                         std::to_string(out.samples.size()) + " valid samples, need 3");
  }
  return out;
}

std::vector<double> finite_difference(std::span<const double> series, std::span<const double> dt) {
  const std::size_t n = series.size();
  if (n < 2 || dt.size() + 1 != n) {
    throw Error(ErrorCode::LengthMismatch, "finite_difference needs N >= 2 values and N-1 steps");
  }
  for (double step : dt) {
    if (!(step > 0.0)) throw Error(ErrorCode::InvalidArgument, "time steps must be positive");
  }
  std::vector<double> out(n);
  out[0] = (series[1] - series[0]) / dt[0];
  out[n - 1] = (series[n - 1] - series[n - 2]) / dt[n - 2];
  for (std::size_t i = 1; i + 1 < n; ++i) {
    out[i] = (series[i + 1] - series[i - 1]) / (dt[i - 1] + dt[i]);
  }
  return out;
}

double wrap_angle(double radians) noexcept {
  constexpr double two_pi = 2.0 * std::numbers::pi;
  double r = std::remainder(radians, two_pi);  // [-pi, pi]
  if (r <= -std::numbers::pi) r += two_pi;
  return r;
}

std::vector<double> angular_difference(std::span<const double> angles) {
  const std::size_t n = angles.size();
  if (n < 2) throw Error(ErrorCode::LengthMismatch, "angular_difference needs at least 2 values");
  std::vector<double> out(n);
  out[0] = wrap_angle(angles[1] - angles[0]);
  out[n - 1] = wrap_angle(angles[n - 1] - angles[n - 2]);
  for (std::size_t i = 1; i + 1 < n; ++i) {
    // Mean of the two wrapped one-step changes; wrapping the two-step
    // difference instead would alias turns sharper than pi/2 per step.
    out[i] = 0.5 * (wrap_angle(angles[i + 1] - angles[i]) + wrap_angle(angles[i] - angles[i - 1]));
  }
  return out;
}

double angle_histogram_entropy(std::span<const double> values, std::size_t bins) {
  if (bins == 0) throw Error(ErrorCode::InvalidArgument, "entropy needs at least one bin");
  if (values.empty()) return 0.0;
  std::vector<std::size_t> hist(bins, 0);
  const double width = 2.0 * std::numbers::pi / static_cast<double>(bins);
  for (double v : values) {
    // Bin b covers (-pi + b*w, -pi + (b+1)*w].
    const double pos = (v + std::numbers::pi) / width;
    auto b = static_cast<long long>(std::ceil(pos)) - 1;
    b = std::clamp<long long>(b, 0, static_cast<long long>(bins) - 1);
    ++hist[static_cast<std::size_t>(b)];
  }
  const double total = static_cast<double>(values.size());
  double h = 0.0;
  for (std::size_t count : hist) {
    if (count == 0) continue;
    const double p = static_cast<double>(count) / total;
    h -= p * std::log(p);
  }
  return h <= 0.0 ? 0.0 : h;
}

FeatureSeries::FeatureSeries(std::size_t length) : length_(length), values_(kFeatureChannels * length, 0.0) {}

FeatureSeries::FeatureSeries(std::size_t length, std::vector<double> values)
    : length_(length), values_(std::move(values)) {
  if (values_.size() != kFeatureChannels * length_) {
    throw Error(ErrorCode::ShapeMismatch, "feature series needs 10 x N values");
  }
}

std::span<double> FeatureSeries::channel(std::size_t c) noexcept {
  return {values_.data() + c * length_, length_};
}

std::span<const double> FeatureSeries::channel(std::size_t c) const noexcept {
  return {values_.data() + c * length_, length_};
}

FeatureSeries compute_feature_series(const RawTrajectory& raw, const FeatureConfig& cfg) {
  if (cfg.window == 0) throw Error(ErrorCode::InvalidArgument, "feature window must be >= 1");
  const RawTrajectory traj = validate_trajectory(raw);
  const std::size_t n = traj.samples.size();

  std::vector<double> t(n), x(n), y(n), dt(n - 1);
  for (std::size_t i = 0; i < n; ++i) {
    t[i] = traj.samples[i].t;
    x[i] = traj.samples[i].x;
    y[i] = traj.samples[i].y;
  }
  for (std::size_t i = 0; i + 1 < n; ++i) dt[i] = t[i + 1] - t[i];

  FeatureSeries out(n);
  std::ranges::copy(x, out.channel(Channel::x).begin());
  std::ranges::copy(y, out.channel(Channel::y).begin());

  const std::vector<double> dx = finite_difference(x, dt);
  const std::vector<double> dy = finite_difference(y, dt);
  std::ranges::copy(dx, out.channel(Channel::dx).begin());
  std::ranges::copy(dy, out.channel(Channel::dy).begin());

  std::vector<double> speed(n);
  for (std::size_t i = 0; i < n; ++i) speed[i] = std::sqrt(dx[i] * dx[i] + dy[i] * dy[i]);
  std::ranges::copy(speed, out.channel(Channel::speed).begin());
  std::ranges::copy(finite_difference(speed, dt), out.channel(Channel::acceleration).begin());

  std::vector<double> theta(n);
  for (std::size_t i = 0; i < n; ++i) {
    theta[i] = cfg.direction_mode == DirectionMode::heading ? std::atan2(dy[i], dx[i]) : std::atan2(x[i], y[i]);
  }
  std::ranges::copy(theta, out.channel(Channel::direction).begin());

  const std::vector<double> curvature = angular_difference(theta);
  std::ranges::copy(curvature, out.channel(Channel::curvature).begin());

  auto entropy = out.channel(Channel::curvature_entropy);
  auto variance = out.channel(Channel::curvature_variance);
  const std::size_t half = cfg.window / 2;
  for (std::size_t i = 0; i < n; ++i) {
    const std::size_t lo = i >= half ? i - half : 0;
    const std::size_t hi = std::min(n - 1, i + (cfg.window - 1 - half));
    const std::span<const double> win(curvature.data() + lo, hi - lo + 1);
    entropy[i] = angle_histogram_entropy(win, cfg.entropy_bins);
    double mean = 0.0;
    for (double v : win) mean += v;
    mean /= static_cast<double>(win.size());
    double var = 0.0;
    for (double v : win) var += (v - mean) * (v - mean);
    variance[i] = var / static_cast<double>(win.size());
  }
  return out;
}

}  // namespace compsnn
