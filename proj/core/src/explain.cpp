#include "compsnn/explain.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <map>
#include <sstream>

#include "compsnn/error.hpp"
#include "compsnn/io.hpp"

namespace compsnn {

namespace {

std::string num(double v) { return format_sig(v, 6); }

struct Frame {
  double x_min;
  double y_max;
  double scale;  // pixels per map unit
  double width;
  double height;

  [[nodiscard]] double px(double x) const { return (x - x_min) * scale; }
  [[nodiscard]] double py(double y) const { return (y_max - y) * scale; }
};

Frame frame_of(const DensityGrid& grid, double width) {
  const GridBounds& b = grid.bounds;
  const double span_x = b.x_max - b.x_min;
  const double span_y = b.y_max - b.y_min;
  if (!(span_x > 0.0) || !(span_y > 0.0) || !(width > 0.0)) {
    throw Error(ErrorCode::InvalidArgument, "degenerate plot frame");
  }
  const double scale = width / span_x;
  return {b.x_min, b.y_max, scale, width, span_y * scale};
}

void open_svg(std::ostringstream& out, const Frame& f) {
  out << "<?xml version=\"1.0\" encoding=\"UTF-8\"?>\n"
      << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << num(f.width) << "\" height=\"" << num(f.height)
      << "\" viewBox=\"0 0 " << num(f.width) << ' ' << num(f.height) << "\">\n"
      << "<rect x=\"0\" y=\"0\" width=\"" << num(f.width) << "\" height=\"" << num(f.height)
      << "\" fill=\"#ffffff\"/>\n";
}

// Light grey backdrop of the visited cells.
void draw_density(std::ostringstream& out, const DensityGrid& grid, const Frame& f) {
  double max_count = 0.0;
  for (double c : grid.counts.values) max_count = std::max(max_count, c);
  if (max_count <= 0.0) return;
  const double side = grid.cell_size * f.scale;
  out << "<g id=\"density\" stroke=\"none\" fill=\"#7f8c8d\">\n";
  for (std::size_t r = 0; r < grid.rows(); ++r) {
    for (std::size_t c = 0; c < grid.cols(); ++c) {
      const double count = grid.counts(r, c);
      if (count <= 0.0) continue;
      const double x = f.px(grid.center_x(c)) - side / 2.0;
      const double y = f.py(grid.center_y(r)) - side / 2.0;
      const double alpha = 0.05 + 0.25 * std::log1p(count) / std::log1p(max_count);
      out << "<rect x=\"" << num(x) << "\" y=\"" << num(y) << "\" width=\"" << num(side) << "\" height=\""
          << num(side) << "\" fill-opacity=\"" << num(alpha) << "\"/>\n";
    }
  }
  out << "</g>\n";
}

std::string node_color(std::int32_t id) {
  // Golden-angle hue walk keeps neighbouring ids apart.
  const double hue = std::fmod(static_cast<double>(id) * 137.50776405, 360.0);
  char buf[48];
  std::snprintf(buf, sizeof(buf), "hsl(%.1f,65%%,60%%)", hue);
  return buf;
}

}  // namespace

std::string ActivationSelector::label() const {
  switch (kind) {
    case ActivationKind::attention: return "attention";
    case ActivationKind::feature: return "feature_" + std::to_string(channel);
    case ActivationKind::a_x_f: return "a_x_f_" + std::to_string(channel);
  }
  return "unknown";
}

ActivationSelector parse_activation_selector(std::string_view text) {
  const auto channel_of = [&](std::string_view digits) -> std::size_t {
    if (digits.empty() || !std::all_of(digits.begin(), digits.end(), [](char c) { return c >= '0' && c <= '9'; })) {
      throw Error(ErrorCode::InvalidArgument, "bad activation channel '" + std::string(text) + "'");
    }
    return static_cast<std::size_t>(std::stoul(std::string(digits)));
  };
  if (text == "attention") return {ActivationKind::attention, 0};
  if (text.starts_with("feature_")) return {ActivationKind::feature, channel_of(text.substr(8))};
  if (text.starts_with("a_x_f_")) return {ActivationKind::a_x_f, channel_of(text.substr(6))};
  throw Error(ErrorCode::InvalidArgument, "unknown activation '" + std::string(text) + "'");
}

ActivationMap export_activation_map(const ModelParams& model, const FeatureSeries& features, const RawTrajectory& raw,
                                    const ActivationSelector& selector) {
  if (model.kind != ModelKind::compsnn && model.kind != ModelKind::single_cnn) {
    throw Error(ErrorCode::UnknownKind, "model has no CNN module");
  }
  if (features.length() != raw.samples.size()) {
    throw Error(ErrorCode::LengthMismatch, "features and trajectory differ in length");
  }
  if (selector.kind != ActivationKind::attention && selector.channel >= model.config.cnn_channels) {
    throw Error(ErrorCode::ChannelOutOfRange, "channel " + std::to_string(selector.channel) + " out of range");
  }
  const CnnTrace trace = trace_cnn(normalize_features(features, model.normalization), model.params);
  ActivationMap map;
  map.channel = selector.label();
  map.points.reserve(raw.samples.size());
  for (std::size_t t = 0; t < raw.samples.size(); ++t) {
    double v = 0.0;
    switch (selector.kind) {
      case ActivationKind::attention: v = trace.attention[t]; break;
      case ActivationKind::feature: v = trace.features.at(selector.channel, t); break;
      case ActivationKind::a_x_f: v = trace.attention[t] * trace.features.at(selector.channel, t); break;
    }
    map.points.push_back({raw.samples[t].x, raw.samples[t].y, v});
  }
  return map;
}

std::string render_svg(const ActivationMap& map, const DensityGrid& grid, const SvgStyle& style) {
  if (map.points.empty()) throw Error(ErrorCode::EmptyMap, "activation map has no points");
  if (!(style.r_min >= 0.0) || style.r_max < style.r_min || !(style.opacity_min > 0.0 && style.opacity_min <= 1.0)) {
    throw Error(ErrorCode::InvalidArgument, "invalid SVG style");
  }
  const Frame f = frame_of(grid, style.width);

  std::map<Cell, std::size_t> per_cell;
  std::vector<Cell> cells;
  cells.reserve(map.points.size());
  for (const auto& p : map.points) {
    cells.push_back(grid.clamped_cell_of(p.x, p.y));
    ++per_cell[cells.back()];
  }
  // Sparsest cell -> opacity 1, densest -> opacity_min.
  std::size_t max_count = 1;
  std::size_t min_count = map.points.size();
  for (const auto& [cell, n] : per_cell) {
    max_count = std::max(max_count, n);
    min_count = std::min(min_count, n);
  }
  const double inv_max = 1.0 / static_cast<double>(max_count);
  const double inv_min = 1.0 / static_cast<double>(min_count);

  std::ostringstream out;
  open_svg(out, f);
  draw_density(out, grid, f);
  out << "<g id=\"activation\" data-channel=\"" << map.channel << "\" fill=\"" << style.point_color
      << "\" stroke=\"none\">\n";
  for (std::size_t i = 0; i < map.points.size(); ++i) {
    const auto& p = map.points[i];
    const double v = std::clamp(p.value, 0.0, 1.0);
    const double r = style.r_min + v * (style.r_max - style.r_min);
    double opacity = 1.0;
    if (max_count > min_count) {
      const double inv = 1.0 / static_cast<double>(per_cell[cells[i]]);
      opacity = style.opacity_min + (1.0 - style.opacity_min) * (inv - inv_max) / (inv_min - inv_max);
    }
    out << "<circle cx=\"" << num(f.px(p.x)) << "\" cy=\"" << num(f.py(p.y)) << "\" r=\"" << num(r)
        << "\" fill-opacity=\"" << num(opacity) << "\"/>\n";
  }
  out << "</g>\n</svg>\n";
  return out.str();
}

std::string activation_map_csv(const ActivationMap& map) {
  std::ostringstream out;
  out << "x,y,value,channel\n";
  for (const auto& p : map.points) {
    out << format_double(p.x) << ',' << format_double(p.y) << ',' << format_double(p.value) << ',' << map.channel
        << '\n';
  }
  return out.str();
}

std::string render_segmentation_svg(const DensityGrid& grid, const SegmentLabels& labels,
                                    const TrajectoryGraph& graph, double width) {
  if (labels.labels.rows != grid.rows() || labels.labels.cols != grid.cols()) {
    throw Error(ErrorCode::ShapeMismatch, "labels do not match the grid");
  }
  const Frame f = frame_of(grid, width);
  const double side = grid.cell_size * f.scale;
  std::ostringstream out;
  open_svg(out, f);
  out << "<g id=\"segments\" stroke=\"none\">\n";
  for (std::size_t r = 0; r < grid.rows(); ++r) {
    for (std::size_t c = 0; c < grid.cols(); ++c) {
      const std::int32_t id = labels.labels(r, c);
      if (id == kUnassigned) continue;
      out << "<rect x=\"" << num(f.px(grid.center_x(c)) - side / 2.0) << "\" y=\""
          << num(f.py(grid.center_y(r)) - side / 2.0) << "\" width=\"" << num(side) << "\" height=\"" << num(side)
          << "\" fill=\"" << node_color(id) << "\"/>\n";
    }
  }
  out << "</g>\n<g id=\"edges\" stroke=\"#2c3e50\" stroke-width=\"1\" stroke-opacity=\"0.6\">\n";
  for (const auto& [a, b] : graph.edges) {
    const Point& p = graph.centroids.at(a);
    const Point& q = graph.centroids.at(b);
    out << "<line x1=\"" << num(f.px(p.x)) << "\" y1=\"" << num(f.py(p.y)) << "\" x2=\"" << num(f.px(q.x))
        << "\" y2=\"" << num(f.py(q.y)) << "\"/>\n";
  }
  out << "</g>\n<g id=\"nodes\" fill=\"#2c3e50\">\n";
  for (const Point& p : graph.centroids) {
    out << "<circle cx=\"" << num(f.px(p.x)) << "\" cy=\"" << num(f.py(p.y)) << "\" r=\"2\"/>\n";
  }
  out << "</g>\n</svg>\n";
  return out.str();
}

std::string segmentation_csv(const DensityGrid& grid, const SegmentLabels& labels) {
  std::ostringstream out;
  out << "row,col,count,label\n";
  for (std::size_t r = 0; r < grid.rows(); ++r) {
    for (std::size_t c = 0; c < grid.cols(); ++c) {
      out << r << ',' << c << ',' << format_double(grid.counts(r, c)) << ',' << labels.labels(r, c) << '\n';
    }
  }
  return out.str();
}

void write_text_file(const std::filesystem::path& path, std::string_view content) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error(ErrorCode::IoError, "cannot write " + path.string());
  out << content;
  if (!out) throw Error(ErrorCode::IoError, "write failed for " + path.string());
}

}  // namespace compsnn
