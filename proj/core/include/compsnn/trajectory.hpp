#pragma once

#include <array>
#include <cstddef>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace compsnn {

/// One timestamped position. `t` in seconds, `x`/`y` in map units.
struct Sample {
  double t{0.0};
  double x{0.0};
  double y{0.0};
};

/// Samples recorded for one navigator on one level.
struct RawTrajectory {
  std::string id;
  std::vector<Sample> samples;
};

/// Drops non-finite rows and repeated timestamps (first occurrence wins).
/// Throws NonMonotonicTime when timestamps go backwards and TooShort when
/// fewer than three samples survive.
RawTrajectory validate_trajectory(const RawTrajectory& raw);

/// Derivative of `series` with respect to time, preserving its length.
/// `dt[i]` is the step between samples i and i+1. Interior points use the
/// central difference (f[i+1] - f[i-1]) / (dt[i-1] + dt[i]); endpoints use
/// forward/backward differences.
std::vector<double> finite_difference(std::span<const double> series, std::span<const double> dt);

/// Maps an angle to (-pi, pi].
double wrap_angle(double radians) noexcept;

enum class DirectionMode {
  heading,           ///< atan2(dy/dt, dx/dt)
  position_bearing,  ///< atan2(x, y) evaluated on raw positions
};

struct FeatureConfig {
  DirectionMode direction_mode{DirectionMode::heading};
  std::size_t window{9};
  std::size_t entropy_bins{16};
};

/// Channel indices of a FeatureSeries.
enum class Channel : std::size_t {
  x = 0,
  y,
  speed,
  acceleration,
  dx,
  dy,
  direction,
  curvature,
  curvature_entropy,
  curvature_variance,
};

inline constexpr std::size_t kFeatureChannels = 10;

inline constexpr std::array<std::string_view, kFeatureChannels> kChannelNames = {
    "x", "y", "speed", "acceleration", "dx", "dy",
    "direction", "curvature", "curvature_entropy", "curvature_variance"};

/// 10 x N per-sample feature matrix, stored channel-major.
class FeatureSeries {
 public:
  FeatureSeries() = default;
  explicit FeatureSeries(std::size_t length);
  FeatureSeries(std::size_t length, std::vector<double> values);

  [[nodiscard]] std::size_t length() const noexcept { return length_; }
  [[nodiscard]] std::span<double> channel(Channel c) noexcept { return channel(static_cast<std::size_t>(c)); }
  [[nodiscard]] std::span<const double> channel(Channel c) const noexcept {
    return channel(static_cast<std::size_t>(c));
  }
  [[nodiscard]] std::span<double> channel(std::size_t c) noexcept;
  [[nodiscard]] std::span<const double> channel(std::size_t c) const noexcept;
  [[nodiscard]] double at(std::size_t c, std::size_t t) const noexcept { return values_[c * length_ + t]; }
  [[nodiscard]] const std::vector<double>& values() const noexcept { return values_; }
  [[nodiscard]] std::vector<double>& values() noexcept { return values_; }

 private:
  std::size_t length_{0};
  std::vector<double> values_;
};

/// Computes the 10-channel series
/// [x, y, s, ds, dx, dy, theta, dtheta, entropy(dtheta), variance(dtheta)].
///
/// The curvature channel is the wrapped heading change per sample (central
/// difference of theta over two steps halved, one-sided at the ends), so it
/// lives in (-pi, pi] like the histogram used for the entropy channel.
/// Entropy (nats) and population variance are evaluated over a centered
/// window of `cfg.window` samples that shrinks at the boundaries.
FeatureSeries compute_feature_series(const RawTrajectory& raw, const FeatureConfig& cfg = {});

/// Angular finite difference of a heading series, per sample, wrapped.
std::vector<double> angular_difference(std::span<const double> angles);

/// Shannon entropy (nats) of `values` binned into `bins` equal bins over (-pi, pi].
double angle_histogram_entropy(std::span<const double> values, std::size_t bins);

}  // namespace compsnn
