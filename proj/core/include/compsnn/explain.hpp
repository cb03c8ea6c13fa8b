#pragma once

#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

#include "compsnn/density.hpp"
#include "compsnn/graph.hpp"
#include "compsnn/model.hpp"
#include "compsnn/trajectory.hpp"

namespace compsnn {

enum class ActivationKind { attention, feature, a_x_f };

struct ActivationSelector {
  ActivationKind kind{ActivationKind::attention};
  std::size_t channel{0};  // ignored for attention

  /// "attention", "feature_<c>" or "a_x_f_<c>".
  [[nodiscard]] std::string label() const;
};

ActivationSelector parse_activation_selector(std::string_view text);

struct ActivationPoint {
  double x{0.0};
  double y{0.0};
  double value{0.0};
};

struct ActivationMap {
  std::string channel;
  std::vector<ActivationPoint> points;  // one per trajectory sample, in time order
};

/// Runs the CNN module of `model` (composite or single CNN) on the
/// normalised features of `raw` and places the selected activation at each
/// sample position. `features` are the raw features of `raw`.
/// Throws UnknownKind for models without a CNN, ChannelOutOfRange for a bad
/// channel and LengthMismatch if `features` and `raw` differ in length.
ActivationMap export_activation_map(const ModelParams& model, const FeatureSeries& features, const RawTrajectory& raw,
                                    const ActivationSelector& selector);

struct SvgStyle {
  double width{800.0};  // pixels; the height follows the grid aspect ratio
  double r_min{1.0};
  double r_max{6.0};
  double opacity_min{0.15};
  std::string point_color{"#c0392b"};
};

/// Scatter plot over the density grid. Radius grows linearly with the value;
/// opacity is inversely proportional to the number of points sharing a grid
/// cell, rescaled so the sparsest cell is opaque and the densest gets
/// opacity_min. Throws EmptyMap.
std::string render_svg(const ActivationMap& map, const DensityGrid& grid, const SvgStyle& style = {});

/// `x,y,value,channel` rows.
std::string activation_map_csv(const ActivationMap& map);

/// Segment cells coloured by node id, transition edges between centroids.
std::string render_segmentation_svg(const DensityGrid& grid, const SegmentLabels& labels,
                                    const TrajectoryGraph& graph, double width = 800.0);

/// `row,col,count,label` for every cell.
std::string segmentation_csv(const DensityGrid& grid, const SegmentLabels& labels);

void write_text_file(const std::filesystem::path& path, std::string_view content);

}  // namespace compsnn
