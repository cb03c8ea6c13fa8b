#include "compsnn/graph.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <set>

#include <nlohmann/json.hpp>

#include "compsnn/error.hpp"

namespace compsnn {

std::size_t TrajectoryGraph::degree(NodeId i) const noexcept {
  std::size_t d = 0;
  for (std::size_t j = 0; j < node_count; ++j) d += adjacency[i * node_count + j];
  return d;
}

NodeLocator::NodeLocator(const DensityGrid& grid, const SegmentLabels& labels) : grid_(grid) {
  if (labels.labels.rows != grid.rows() || labels.labels.cols != grid.cols()) {
    throw Error(ErrorCode::ShapeMismatch, "labels and density grid differ in size");
  }
  const auto& lab = labels.labels;
  std::vector<Cell> labelled;
  for (std::size_t r = 0; r < lab.rows; ++r) {
    for (std::size_t c = 0; c < lab.cols; ++c) {
      if (lab(r, c) != kUnassigned) labelled.push_back({r, c});
    }
  }
  if (labelled.empty()) throw Error(ErrorCode::EmptyInput, "segmentation has no labelled cell");

  resolved_ = lab.values;
  for (std::size_t r = 0; r < lab.rows; ++r) {
    for (std::size_t c = 0; c < lab.cols; ++c) {
      if (lab(r, c) != kUnassigned) continue;
      double best = std::numeric_limits<double>::infinity();
      std::int32_t best_label = kUnassigned;
      // labelled is in row-major order, so strict improvement keeps the
      // lexicographically smallest cell among equidistant ones.
      for (const Cell& cell : labelled) {
        const double dr = static_cast<double>(cell.row) - static_cast<double>(r);
        const double dc = static_cast<double>(cell.col) - static_cast<double>(c);
        const double d2 = dr * dr + dc * dc;
        if (d2 < best) {
          best = d2;
          best_label = lab(cell.row, cell.col);
        }
      }
      resolved_[r * lab.cols + c] = best_label;
    }
  }
}

NodeId NodeLocator::node_of_cell(const Cell& cell) const {
  return static_cast<NodeId>(resolved_[cell.row * grid_.cols() + cell.col]);
}

NodeId NodeLocator::locate(double x, double y) const {
  const auto cell = grid_.cell_of(x, y);
  if (!cell) throw Error(ErrorCode::OutOfBounds, "position outside the density grid");
  return node_of_cell(*cell);
}

NodeId NodeLocator::locate_clamped(double x, double y) const { return node_of_cell(grid_.clamped_cell_of(x, y)); }

std::vector<NodeId> map_trajectory_to_nodes(const RawTrajectory& raw, const SegmentLabels& labels,
                                            const DensityGrid& grid) {
  const NodeLocator locator(grid, labels);
  std::vector<NodeId> out;
  out.reserve(raw.samples.size());
  for (const Sample& s : raw.samples) out.push_back(locator.locate(s.x, s.y));
  return out;
}

std::vector<Point> node_centroids(const SegmentLabels& labels, const DensityGrid& grid) {
  const std::size_t n = labels.node_count();
  std::vector<double> sx(n, 0.0), sy(n, 0.0), cnt(n, 0.0);
  for (std::size_t r = 0; r < labels.labels.rows; ++r) {
    for (std::size_t c = 0; c < labels.labels.cols; ++c) {
      const std::int32_t id = labels.labels(r, c);
      if (id == kUnassigned) continue;
      const auto k = static_cast<std::size_t>(id);
      sx[k] += grid.center_x(c);
      sy[k] += grid.center_y(r);
      cnt[k] += 1.0;
    }
  }
  std::vector<Point> out(n);
  for (std::size_t k = 0; k < n; ++k) {
    if (cnt[k] > 0.0) {
      out[k] = {sx[k] / cnt[k], sy[k] / cnt[k]};
    } else {
      out[k] = {grid.center_x(labels.seeds[k].col), grid.center_y(labels.seeds[k].row)};
    }
  }
  return out;
}

TrajectoryGraph build_graph(std::span<const std::vector<NodeId>> node_sequences, std::size_t node_count,
                            std::vector<Point> centroids) {
  if (!centroids.empty() && centroids.size() != node_count) {
    throw Error(ErrorCode::ShapeMismatch, "need one centroid per node");
  }
  TrajectoryGraph g;
  g.node_count = node_count;
  g.adjacency.assign(node_count * node_count, 0);
  g.centroids = std::move(centroids);
  std::set<std::pair<NodeId, NodeId>> edges;
  for (const auto& seq : node_sequences) {
    for (std::size_t i = 0; i < seq.size(); ++i) {
      if (seq[i] >= node_count) {
        throw Error(ErrorCode::IdOutOfRange, "node id " + std::to_string(seq[i]) + " >= " + std::to_string(node_count));
      }
      if (i == 0 || seq[i] == seq[i - 1]) continue;
      edges.emplace(std::min(seq[i - 1], seq[i]), std::max(seq[i - 1], seq[i]));
    }
  }
  g.edges.assign(edges.begin(), edges.end());
  for (const auto& [i, j] : g.edges) {
    g.adjacency[i * node_count + j] = 1;
    g.adjacency[j * node_count + i] = 1;
  }
  return g;
}

NodeSignal aggregate_node_signal(const FeatureSeries& features, std::span<const NodeId> node_seq,
                                 std::size_t node_count) {
  const std::size_t n = features.length();
  if (node_seq.size() != n) throw Error(ErrorCode::LengthMismatch, "node sequence and features differ in length");

  NodeSignal out{node_count, std::vector<double>(node_count * kNodeChannels, 0.0)};
  std::vector<double> sin_sum(node_count, 0.0), cos_sum(node_count, 0.0);
  std::vector<std::size_t> visits(node_count, 0), runs(node_count, 0);

  const auto speed = features.channel(Channel::speed);
  const auto accel = features.channel(Channel::acceleration);
  const auto theta = features.channel(Channel::direction);
  const auto curv = features.channel(Channel::curvature);
  const auto ent = features.channel(Channel::curvature_entropy);
  const auto var = features.channel(Channel::curvature_variance);

  for (std::size_t t = 0; t < n; ++t) {
    const NodeId id = node_seq[t];
    if (id >= node_count) throw Error(ErrorCode::IdOutOfRange, "node id out of range");
    double* row = &out.values[id * kNodeChannels];
    row[0] += speed[t];
    row[1] += accel[t];
    row[3] += curv[t];
    row[4] += ent[t];
    row[5] += var[t];
    sin_sum[id] += std::sin(theta[t]);
    cos_sum[id] += std::cos(theta[t]);
    ++visits[id];
    if (t == 0 || node_seq[t - 1] != id) ++runs[id];
  }
  for (std::size_t k = 0; k < node_count; ++k) {
    if (visits[k] == 0) continue;
    double* row = &out.values[k * kNodeChannels];
    const double inv = 1.0 / static_cast<double>(visits[k]);
    row[0] *= inv;
    row[1] *= inv;
    row[2] = std::atan2(sin_sum[k], cos_sum[k]);
    row[3] *= inv;
    row[4] *= inv;
    row[5] *= inv;
    row[6] = runs[k] >= 2 ? 1.0 : 0.0;
    row[7] = static_cast<double>(visits[k]);
  }
  return out;
}

VisitSignal visit_signal(std::span<const NodeId> node_seq, std::size_t node_count) {
  VisitSignal out{std::vector<std::uint32_t>(node_count, 0)};
  for (NodeId id : node_seq) {
    if (id >= node_count) throw Error(ErrorCode::IdOutOfRange, "node id out of range");
    ++out.counts[id];
  }
  return out;
}

nlohmann::json graph_to_json(const TrajectoryGraph& graph) {
  nlohmann::json edges = nlohmann::json::array();
  for (const auto& [i, j] : graph.edges) edges.push_back({i, j});
  nlohmann::json centroids = nlohmann::json::array();
  for (const Point& p : graph.centroids) centroids.push_back({p.x, p.y});
  return {{"node_count", graph.node_count}, {"edges", edges}, {"centroids", centroids}};
}

TrajectoryGraph graph_from_json(const nlohmann::json& doc) {
  try {
    const auto n = doc.at("node_count").get<std::size_t>();
    std::vector<Point> centroids;
    for (const auto& c : doc.at("centroids")) centroids.push_back({c.at(0).get<double>(), c.at(1).get<double>()});
    std::vector<std::vector<NodeId>> pairs;
    for (const auto& e : doc.at("edges")) pairs.push_back({e.at(0).get<NodeId>(), e.at(1).get<NodeId>()});
    return build_graph(pairs, n, std::move(centroids));
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::ParseError, std::string("graph json: ") + e.what());
  }
}

}  // namespace compsnn
