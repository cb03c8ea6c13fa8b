#include "compsnn/density.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <queue>
#include <tuple>

#include <nlohmann/json.hpp>

#include "compsnn/error.hpp"

namespace compsnn {

std::optional<Cell> DensityGrid::cell_of(double x, double y) const noexcept {
  if (!(x >= bounds.x_min && y >= bounds.y_min)) return std::nullopt;
  const double c = std::floor((x - bounds.x_min) / cell_size);
  const double r = std::floor((y - bounds.y_min) / cell_size);
  if (c >= static_cast<double>(cols()) || r >= static_cast<double>(rows())) return std::nullopt;
  return Cell{static_cast<std::size_t>(r), static_cast<std::size_t>(c)};
}

Cell DensityGrid::clamped_cell_of(double x, double y) const noexcept {
  auto clamp_index = [this](double v, double lo, std::size_t n) {
    const double idx = std::floor((v - lo) / cell_size);
    if (!(idx > 0.0)) return std::size_t{0};
    return std::min(n - 1, static_cast<std::size_t>(idx));
  };
  return {clamp_index(y, bounds.y_min, rows()), clamp_index(x, bounds.x_min, cols())};
}

double DensityGrid::center_x(std::size_t col) const noexcept {
  return bounds.x_min + (static_cast<double>(col) + 0.5) * cell_size;
}

double DensityGrid::center_y(std::size_t row) const noexcept {
  return bounds.y_min + (static_cast<double>(row) + 0.5) * cell_size;
}

namespace {

struct Extent {
  double x_min{std::numeric_limits<double>::infinity()};
  double x_max{-std::numeric_limits<double>::infinity()};
  double y_min{std::numeric_limits<double>::infinity()};
  double y_max{-std::numeric_limits<double>::infinity()};
  std::size_t samples{0};
};

Extent extent_of(std::span<const RawTrajectory> trajectories) {
  Extent e;
  for (const auto& traj : trajectories) {
    for (const Sample& s : traj.samples) {
      if (!std::isfinite(s.x) || !std::isfinite(s.y)) {
        throw Error(ErrorCode::InvalidArgument, "non-finite sample in '" + traj.id + "'");
      }
      e.x_min = std::min(e.x_min, s.x);
      e.x_max = std::max(e.x_max, s.x);
      e.y_min = std::min(e.y_min, s.y);
      e.y_max = std::max(e.y_max, s.y);
      ++e.samples;
    }
  }
  if (e.samples == 0) throw Error(ErrorCode::EmptyInput, "no trajectory samples");
  return e;
}

}  // namespace

double default_cell_size(std::span<const RawTrajectory> trajectories, double target_cells) {
  const Extent e = extent_of(trajectories);
  const double span = std::max(e.x_max - e.x_min, e.y_max - e.y_min);
  return span > 0.0 ? span / target_cells : 1.0;
}

DensityGrid build_density_grid(std::span<const RawTrajectory> trajectories, double cell_size) {
  if (!(cell_size > 0.0) || !std::isfinite(cell_size)) {
    throw Error(ErrorCode::InvalidArgument, "cell size must be positive");
  }
  const Extent e = extent_of(trajectories);
  // One padding cell on each side plus enough cells to cover the span.
  const auto span_cells = [cell_size](double lo, double hi) {
    return static_cast<std::size_t>(std::floor((hi - lo) / cell_size)) + 3;
  };
  DensityGrid grid;
  grid.cell_size = cell_size;
  const std::size_t cols = span_cells(e.x_min, e.x_max);
  const std::size_t rows = span_cells(e.y_min, e.y_max);
  grid.bounds.x_min = e.x_min - cell_size;
  grid.bounds.y_min = e.y_min - cell_size;
  grid.bounds.x_max = grid.bounds.x_min + static_cast<double>(cols) * cell_size;
  grid.bounds.y_max = grid.bounds.y_min + static_cast<double>(rows) * cell_size;
  grid.counts = Raster<double>(rows, cols, 0.0);
  for (const auto& traj : trajectories) {
    for (const Sample& s : traj.samples) {
      const Cell cell = grid.clamped_cell_of(s.x, s.y);
      grid.counts(cell.row, cell.col) += 1.0;
    }
  }
  return grid;
}

Raster<double> invert_density(const DensityGrid& grid) {
  Raster<double> out(grid.rows(), grid.cols());
  for (std::size_t i = 0; i < out.values.size(); ++i) out.values[i] = 1.0 / (grid.counts.values[i] + 1.0);
  return out;
}

std::vector<Cell> find_local_maxima(const DensityGrid& grid, std::size_t min_separation) {
  const auto& counts = grid.counts;
  std::vector<Cell> candidates;
  for (std::size_t r = 0; r < counts.rows; ++r) {
    for (std::size_t c = 0; c < counts.cols; ++c) {
      const double v = counts(r, c);
      if (!(v > 0.0)) continue;
      bool is_max = true;
      for (int dr = -1; dr <= 1 && is_max; ++dr) {
        for (int dc = -1; dc <= 1; ++dc) {
          if (dr == 0 && dc == 0) continue;
          const auto nr = static_cast<std::ptrdiff_t>(r) + dr;
          const auto nc = static_cast<std::ptrdiff_t>(c) + dc;
          if (nr < 0 || nc < 0 || nr >= static_cast<std::ptrdiff_t>(counts.rows) ||
              nc >= static_cast<std::ptrdiff_t>(counts.cols)) {
            continue;
          }
          if (counts(static_cast<std::size_t>(nr), static_cast<std::size_t>(nc)) > v) {
            is_max = false;
            break;
          }
        }
      }
      if (is_max) candidates.push_back({r, c});
    }
  }
  if (candidates.empty()) throw Error(ErrorCode::AllZero, "density grid has no positive cell");

  std::stable_sort(candidates.begin(), candidates.end(), [&](const Cell& a, const Cell& b) {
    return counts(a.row, a.col) > counts(b.row, b.col);
  });
  std::vector<Cell> kept;
  for (const Cell& cand : candidates) {
    const bool too_close = std::ranges::any_of(kept, [&](const Cell& k) {
      const std::size_t dr = cand.row > k.row ? cand.row - k.row : k.row - cand.row;
      const std::size_t dc = cand.col > k.col ? cand.col - k.col : k.col - cand.col;
      return std::max(dr, dc) < min_separation;
    });
    if (!too_close) kept.push_back(cand);
  }
  return kept;
}

SegmentLabels watershed(const Raster<double>& surface, std::span<const Cell> seeds, const Raster<std::uint8_t>& mask) {
  if (surface.rows != mask.rows || surface.cols != mask.cols) {
    throw Error(ErrorCode::ShapeMismatch, "surface and mask differ in size");
  }
  if (seeds.empty()) throw Error(ErrorCode::InvalidArgument, "watershed needs at least one seed");

  SegmentLabels out;
  out.labels = Raster<std::int32_t>(surface.rows, surface.cols, kUnassigned);
  out.seeds.assign(seeds.begin(), seeds.end());

  // (value, insertion order, flat index); the queue pops the smallest tuple.
  using Entry = std::tuple<double, std::uint64_t, std::size_t>;
  std::priority_queue<Entry, std::vector<Entry>, std::greater<>> open;
  std::uint64_t order = 0;

  for (std::size_t i = 0; i < seeds.size(); ++i) {
    const Cell& s = seeds[i];
    if (s.row >= mask.rows || s.col >= mask.cols || mask(s.row, s.col) == 0) {
      throw Error(ErrorCode::SeedOutsideMask,
                  "seed (" + std::to_string(s.row) + ", " + std::to_string(s.col) + ") is not on the mask");
    }
    if (out.labels(s.row, s.col) != kUnassigned) {
      throw Error(ErrorCode::InvalidArgument, "duplicate seed cell");
    }
    out.labels(s.row, s.col) = static_cast<std::int32_t>(i);
    open.emplace(surface(s.row, s.col), order++, s.row * surface.cols + s.col);
  }

  constexpr int kDr[4] = {-1, 0, 0, 1};
  constexpr int kDc[4] = {0, -1, 1, 0};
  while (!open.empty()) {
    const auto [value, ord, flat] = open.top();
    open.pop();
    const std::size_t r = flat / surface.cols;
    const std::size_t c = flat % surface.cols;
    const std::int32_t label = out.labels(r, c);
    for (int k = 0; k < 4; ++k) {
      const auto nr = static_cast<std::ptrdiff_t>(r) + kDr[k];
      const auto nc = static_cast<std::ptrdiff_t>(c) + kDc[k];
      if (nr < 0 || nc < 0 || nr >= static_cast<std::ptrdiff_t>(surface.rows) ||
          nc >= static_cast<std::ptrdiff_t>(surface.cols)) {
        continue;
      }
      const auto ur = static_cast<std::size_t>(nr);
      const auto uc = static_cast<std::size_t>(nc);
      if (mask(ur, uc) == 0 || out.labels(ur, uc) != kUnassigned) continue;
      out.labels(ur, uc) = label;
      open.emplace(surface(ur, uc), order++, ur * surface.cols + uc);
    }
  }
  return out;
}

Raster<std::uint8_t> occupancy_mask(const DensityGrid& grid) {
  Raster<std::uint8_t> mask(grid.rows(), grid.cols(), 0);
  for (std::size_t i = 0; i < mask.values.size(); ++i) mask.values[i] = grid.counts.values[i] > 0.0 ? 1 : 0;
  return mask;
}

SegmentLabels segment_density(const DensityGrid& grid, std::size_t min_separation) {
  std::vector<Cell> seeds = find_local_maxima(grid, min_separation);
  const Raster<std::uint8_t> mask = occupancy_mask(grid);

  // 4-connected components of the mask, discovered in row-major order.
  Raster<std::int32_t> component(grid.rows(), grid.cols(), -1);
  std::vector<Cell> best_cell;
  std::vector<Cell> stack;
  for (std::size_t r = 0; r < grid.rows(); ++r) {
    for (std::size_t c = 0; c < grid.cols(); ++c) {
      if (mask(r, c) == 0 || component(r, c) != -1) continue;
      const auto id = static_cast<std::int32_t>(best_cell.size());
      Cell best{r, c};
      component(r, c) = id;
      stack.push_back({r, c});
      while (!stack.empty()) {
        const Cell cur = stack.back();
        stack.pop_back();
        const double v = grid.counts(cur.row, cur.col);
        const double bv = grid.counts(best.row, best.col);
        if (v > bv || (v == bv && cur < best)) best = cur;
        const Cell nbrs[4] = {{cur.row - 1, cur.col}, {cur.row, cur.col - 1}, {cur.row, cur.col + 1}, {cur.row + 1, cur.col}};
        for (const Cell& n : nbrs) {
          // Unsigned wrap-around makes out-of-range indices fail the bound test.
          if (n.row >= grid.rows() || n.col >= grid.cols()) continue;
          if (mask(n.row, n.col) == 0 || component(n.row, n.col) != -1) continue;
          component(n.row, n.col) = id;
          stack.push_back(n);
        }
      }
      best_cell.push_back(best);
    }
  }
  std::vector<bool> seeded(best_cell.size(), false);
  for (const Cell& s : seeds) seeded[static_cast<std::size_t>(component(s.row, s.col))] = true;
  for (std::size_t i = 0; i < best_cell.size(); ++i) {
    if (!seeded[i]) seeds.push_back(best_cell[i]);
  }
  return watershed(invert_density(grid), seeds, mask);
}

nlohmann::json density_to_json(const DensityGrid& grid, const SegmentLabels* labels) {
  nlohmann::json doc;
  doc["bounds"] = {{"x_min", grid.bounds.x_min},
                   {"x_max", grid.bounds.x_max},
                   {"y_min", grid.bounds.y_min},
                   {"y_max", grid.bounds.y_max}};
  doc["cell_size"] = grid.cell_size;
  doc["rows"] = grid.rows();
  doc["cols"] = grid.cols();
  doc["counts"] = grid.counts.values;
  if (labels != nullptr) {
    doc["labels"] = labels->labels.values;
    nlohmann::json seeds = nlohmann::json::array();
    for (const Cell& s : labels->seeds) seeds.push_back({s.row, s.col});
    doc["seeds"] = seeds;
  }
  return doc;
}

DensityGrid density_grid_from_json(const nlohmann::json& doc) {
  try {
    DensityGrid grid;
    const auto& b = doc.at("bounds");
    grid.bounds = {b.at("x_min").get<double>(), b.at("x_max").get<double>(), b.at("y_min").get<double>(),
                   b.at("y_max").get<double>()};
    grid.cell_size = doc.at("cell_size").get<double>();
    grid.counts.rows = doc.at("rows").get<std::size_t>();
    grid.counts.cols = doc.at("cols").get<std::size_t>();
    grid.counts.values = doc.at("counts").get<std::vector<double>>();
    if (grid.counts.values.size() != grid.counts.rows * grid.counts.cols) {
      throw Error(ErrorCode::ParseError, "density counts do not match rows x cols");
    }
    return grid;
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::ParseError, std::string("density json: ") + e.what());
  }
}

SegmentLabels segment_labels_from_json(const nlohmann::json& doc) {
  try {
    SegmentLabels out;
    out.labels.rows = doc.at("rows").get<std::size_t>();
    out.labels.cols = doc.at("cols").get<std::size_t>();
    out.labels.values = doc.at("labels").get<std::vector<std::int32_t>>();
    if (out.labels.values.size() != out.labels.rows * out.labels.cols) {
      throw Error(ErrorCode::ParseError, "labels do not match rows x cols");
    }
    for (const auto& s : doc.at("seeds")) out.seeds.push_back({s.at(0).get<std::size_t>(), s.at(1).get<std::size_t>()});
    return out;
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::ParseError, std::string("labels json: ") + e.what());
  }
}

}  // namespace compsnn
