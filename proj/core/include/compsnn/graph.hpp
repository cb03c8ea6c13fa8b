#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <utility>
#include <vector>

#include <nlohmann/json_fwd.hpp>

#include "compsnn/density.hpp"
#include "compsnn/trajectory.hpp"

namespace compsnn {

using NodeId = std::uint32_t;

struct Point {
  double x{0.0};
  double y{0.0};
};

/// Undirected, unweighted region graph. `edges` holds (i, j) with i < j in
/// lexicographic order; `adjacency` is the matching symmetric 0/1 matrix.
struct TrajectoryGraph {
  std::size_t node_count{0};
  std::vector<std::pair<NodeId, NodeId>> edges;
  std::vector<std::uint8_t> adjacency;
  std::vector<Point> centroids;

  [[nodiscard]] bool has_edge(NodeId i, NodeId j) const noexcept { return adjacency[i * node_count + j] != 0; }
  [[nodiscard]] std::size_t degree(NodeId i) const noexcept;
};

/// Resolves map positions to node ids. Positions on unlabelled cells snap to
/// the nearest labelled cell (Euclidean distance between cell centres, ties
/// by (row, col)); the snapping table is built once at construction.
class NodeLocator {
 public:
  NodeLocator(const DensityGrid& grid, const SegmentLabels& labels);

  /// Throws OutOfBounds when (x, y) is outside the grid.
  [[nodiscard]] NodeId locate(double x, double y) const;
  /// Same, but positions outside the grid use the nearest border cell.
  [[nodiscard]] NodeId locate_clamped(double x, double y) const;
  [[nodiscard]] NodeId node_of_cell(const Cell& cell) const;

 private:
  DensityGrid grid_;
  std::vector<std::int32_t> resolved_;
};

std::vector<NodeId> map_trajectory_to_nodes(const RawTrajectory& raw, const SegmentLabels& labels,
                                            const DensityGrid& grid);

/// Mean cell-centre position of every node's cells.
std::vector<Point> node_centroids(const SegmentLabels& labels, const DensityGrid& grid);

/// One undirected edge per distinct consecutive transition i -> j, i != j.
TrajectoryGraph build_graph(std::span<const std::vector<NodeId>> node_sequences, std::size_t node_count,
                            std::vector<Point> centroids);

inline constexpr std::size_t kNodeChannels = 8;

/// |N| x 8 per-node aggregate: [mean s, mean ds, circular mean theta,
/// mean dtheta, mean entropy, mean variance, returned flag, visit count].
struct NodeSignal {
  std::size_t node_count{0};
  std::vector<double> values;

  [[nodiscard]] double at(std::size_t node, std::size_t channel) const noexcept {
    return values[node * kNodeChannels + channel];
  }
};

/// Samples spent on each node.
struct VisitSignal {
  std::vector<std::uint32_t> counts;
};

NodeSignal aggregate_node_signal(const FeatureSeries& features, std::span<const NodeId> node_seq,
                                 std::size_t node_count);

VisitSignal visit_signal(std::span<const NodeId> node_seq, std::size_t node_count);

nlohmann::json graph_to_json(const TrajectoryGraph& graph);
TrajectoryGraph graph_from_json(const nlohmann::json& doc);

}  // namespace compsnn
